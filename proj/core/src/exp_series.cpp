#include <kaonlab/exp_series.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace kaonlab {

namespace {

// e^{w} - 1 for complex w without cancellation when |w| is small.
cplx expm1c(cplx w) {
  const double a = w.real(), b = w.imag();
  const double s = std::sin(0.5 * b);
  return {std::expm1(a) * std::cos(b) - 2.0 * s * s, std::exp(a) * std::sin(b)};
}

bool is_zero(cplx z) { return z.real() == 0.0 && z.imag() == 0.0; }

}  // namespace

double ExpSeries::operator()(double t) const {
  double s = 0.0;
  for (const auto& k : terms_) s += (k.coeff * std::exp(-k.rate * t)).real();
  return s;
}

double ExpSeries::magnitude(double t) const {
  double s = 0.0;
  for (const auto& k : terms_) s += std::abs(k.coeff) * std::exp(-k.rate.real() * t);
  return s;
}

ExpSeries ExpSeries::derivative() const {
  ExpSeries d;
  for (const auto& k : terms_) d.add(-k.rate * k.coeff, k.rate);
  return d;
}

ExpSeries ExpSeries::scaled(double f) const {
  ExpSeries d;
  for (const auto& k : terms_) d.add(f * k.coeff, k.rate);
  return d;
}

double ExpSeries::tail(double t) const {
  double s = 0.0;
  for (const auto& k : terms_) {
    if (is_zero(k.coeff)) continue;
    if (!(k.rate.real() > 0))
      throw DegenerateStateError("series has a non-decaying term; tail integral diverges");
    s += (k.coeff / k.rate * std::exp(-k.rate * t)).real();
  }
  return s;
}

double ExpSeries::head(double t) const {
  double s = 0.0;
  for (const auto& k : terms_) {
    if (is_zero(k.coeff)) continue;
    if (is_zero(k.rate)) {
      s += k.coeff.real() * t;
      continue;
    }
    s += (-k.coeff / k.rate * expm1c(-k.rate * t)).real();
  }
  return s;
}

double ExpSeries::integral(double a, double b) const {
  if (b == std::numeric_limits<double>::infinity()) return tail(a);
  // difference of heads keeps precision near 0; difference of tails far out
  double s = 0.0;
  for (const auto& k : terms_) {
    if (is_zero(k.coeff)) continue;
    if (is_zero(k.rate)) {
      s += k.coeff.real() * (b - a);
      continue;
    }
    // c/z e^{-za} (1 - e^{-z(b-a)})
    s += (-k.coeff / k.rate * std::exp(-k.rate * a) * expm1c(-k.rate * (b - a))).real();
  }
  return s;
}

double ExpSeries::slowest_rate() const {
  double r = std::numeric_limits<double>::infinity();
  for (const auto& k : terms_)
    if (!is_zero(k.coeff)) r = std::min(r, k.rate.real());
  return r;
}

double ExpSeries::fastest_rate() const {
  double r = 0.0;
  for (const auto& k : terms_)
    if (!is_zero(k.coeff)) r = std::max(r, k.rate.real());
  return r;
}

double ExpSeries::max_frequency() const {
  double w = 0.0;
  for (const auto& k : terms_)
    if (!is_zero(k.coeff)) w = std::max(w, std::abs(k.rate.imag()));
  return w;
}

double ExpSeries::oscillation_horizon(double rel) const {
  // Terms that can pull f below zero: oscillating or negative. Reference is
  // the slowest positive non-oscillating term, which eventually dominates.
  auto benign = [](const ExpTerm& k) { return k.rate.imag() == 0.0 && k.coeff.real() >= 0; };
  double g_ref = std::numeric_limits<double>::infinity(), c_ref = 0.0;
  for (const auto& k : terms_) {
    if (!benign(k) || k.coeff.real() == 0) continue;
    if (k.rate.real() < g_ref) {
      g_ref = k.rate.real();
      c_ref = k.coeff.real();
    }
  }
  double horizon = 0.0;
  for (const auto& k : terms_) {
    if (benign(k) || is_zero(k.coeff)) continue;
    const double g = k.rate.real();
    if (c_ref == 0.0 || !(g > g_ref)) {
      horizon = std::max(horizon, g > 0 ? 80.0 / g : std::numeric_limits<double>::infinity());
      continue;
    }
    const double t = std::log(std::abs(k.coeff) / (rel * c_ref)) / (g - g_ref);
    horizon = std::max(horizon, t);
  }
  return horizon;
}

ExpSeries operator+(const ExpSeries& a, const ExpSeries& b) {
  auto t = a.terms();
  t.insert(t.end(), b.terms().begin(), b.terms().end());
  return ExpSeries(std::move(t));
}

double ExpSeries2D::operator()(double tl, double tr) const {
  double s = 0.0;
  for (const auto& k : terms_) s += (k.coeff * std::exp(-k.rate_l * tl - k.rate_r * tr)).real();
  return s;
}

double ExpSeries2D::magnitude(double tl, double tr) const {
  double s = 0.0;
  for (const auto& k : terms_)
    s += std::abs(k.coeff) * std::exp(-k.rate_l.real() * tl - k.rate_r.real() * tr);
  return s;
}

ExpSeries2D ExpSeries2D::scaled(double f) const {
  ExpSeries2D d;
  for (const auto& k : terms_) d.add(f * k.coeff, k.rate_l, k.rate_r);
  return d;
}

ExpSeries2D ExpSeries2D::minus_total_derivative() const {
  ExpSeries2D d;
  for (const auto& k : terms_) d.add((k.rate_l + k.rate_r) * k.coeff, k.rate_l, k.rate_r);
  return d;
}

double ExpSeries2D::total() const {
  double s = 0.0;
  for (const auto& k : terms_) {
    if (is_zero(k.coeff)) continue;
    if (!(k.rate_l.real() > 0 && k.rate_r.real() > 0))
      throw DegenerateStateError("joint series has a non-decaying term");
    s += (k.coeff / (k.rate_l * k.rate_r)).real();
  }
  return s;
}

ExpSeries ExpSeries2D::marginal_left() const {
  ExpSeries m;
  for (const auto& k : terms_) {
    if (is_zero(k.coeff)) continue;
    if (!(k.rate_r.real() > 0)) throw DegenerateStateError("joint series has a non-decaying term");
    m.add(k.coeff / k.rate_r, k.rate_l);
  }
  return m;
}

ExpSeries ExpSeries2D::conditional_right(double tl) const {
  ExpSeries m;
  for (const auto& k : terms_) m.add(k.coeff * std::exp(-k.rate_l * tl), k.rate_r);
  return m;
}

ExpSeries modulus_squared(const std::vector<Mode>& modes) {
  // a_j conj(a_k) e^{-i(E_j - conj E_k) t};  i(E_j - conj E_k) = (G_j+G_k)/2 + i(m_j - m_k)
  ExpSeries s;
  for (std::size_t j = 0; j < modes.size(); ++j) {
    for (std::size_t k = j; k < modes.size(); ++k) {
      const auto& a = modes[j];
      const auto& b = modes[k];
      const cplx z{0.5 * (a.energy.width + b.energy.width), a.energy.mass - b.energy.mass};
      const cplx c = a.amplitude * std::conj(b.amplitude) * (j == k ? 1.0 : 2.0);
      if (c != cplx{}) s.add(c, z);
    }
  }
  return s;
}

}  // namespace kaonlab
