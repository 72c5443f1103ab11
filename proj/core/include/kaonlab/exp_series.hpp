#pragma once

#include <kaonlab/core.hpp>

#include <vector>

namespace kaonlab {

// f(t) = sum_k Re[c_k exp(-z_k t)], Re z_k >= 0.
// Every closed-form pdf in the library is one of these, so integrals,
// tails, CDFs and derivatives never need quadrature.
struct ExpTerm {
  cplx coeff;
  cplx rate;
};

class ExpSeries {
 public:
  ExpSeries() = default;
  explicit ExpSeries(std::vector<ExpTerm> terms) : terms_(std::move(terms)) {}

  void add(cplx coeff, cplx rate) { terms_.push_back({coeff, rate}); }
  const std::vector<ExpTerm>& terms() const { return terms_; }
  bool empty() const { return terms_.empty(); }

  double operator()(double t) const;
  // sum_k |c_k| e^{-Re z_k t}: the size of the rounding error in operator().
  double magnitude(double t) const;

  ExpSeries derivative() const;
  ExpSeries scaled(double k) const;

  // Integral over [t, inf). Requires Re z > 0 for every nonzero term.
  double tail(double t) const;
  // Integral over [0, t], accurate for small t.
  double head(double t) const;
  double total() const { return tail(0.0); }
  double integral(double a, double b) const;

  // Slowest decay rate among the terms (the tail's asymptotic rate).
  double slowest_rate() const;
  double fastest_rate() const;
  // Largest |Im z|, i.e. the fastest oscillation frequency (0 if none).
  double max_frequency() const;
  // Time after which every oscillating or negative term is below rel * the
  // slowest positive real term; 0 if there are no such terms.
  double oscillation_horizon(double rel = 1e-15) const;

 private:
  std::vector<ExpTerm> terms_;
};

ExpSeries operator+(const ExpSeries& a, const ExpSeries& b);

// g(tl, tr) = sum_k Re[c_k exp(-zl_k tl - zr_k tr)]
struct ExpTerm2 {
  cplx coeff;
  cplx rate_l;
  cplx rate_r;
};

class ExpSeries2D {
 public:
  ExpSeries2D() = default;
  explicit ExpSeries2D(std::vector<ExpTerm2> terms) : terms_(std::move(terms)) {}
  void add(cplx c, cplx zl, cplx zr) { terms_.push_back({c, zl, zr}); }
  const std::vector<ExpTerm2>& terms() const { return terms_; }

  double operator()(double tl, double tr) const;
  double magnitude(double tl, double tr) const;
  ExpSeries2D scaled(double k) const;
  // -(d/dtl + d/dtr)
  ExpSeries2D minus_total_derivative() const;
  double total() const;
  // integral over tr in [0, inf) as a function of tl
  ExpSeries marginal_left() const;
  // g(tl_fixed, tr) as a series in tr
  ExpSeries conditional_right(double tl) const;

 private:
  std::vector<ExpTerm2> terms_;
};

// A coherent sum of modes sum_k a_k e^{-i E_k t}, unnormalized.
struct Mode {
  cplx amplitude;
  ComplexEnergy energy;
};

// |sum a_k e^{-iE_k t}|^2 as an ExpSeries (pairs merged, j<k doubled).
ExpSeries modulus_squared(const std::vector<Mode>& modes);

}  // namespace kaonlab
