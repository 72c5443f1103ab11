#include <kaonlab/entangled.hpp>
#include <kaonlab/parallel.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace kaonlab {

namespace {

void require_times(double tl, double tr) {
  if (!(tl >= 0) || !(tr >= 0) || !std::isfinite(tl) || !std::isfinite(tr))
    throw std::invalid_argument("tl and tr must be finite and >= 0");
}

std::vector<PairTerm> twfo_terms(std::vector<PairTerm> t) {
  for (auto& x : t) x.coeff *= std::sqrt(x.left.width * x.right.width);
  return t;
}

cplx amplitude(const std::vector<PairTerm>& terms, double tl, double tr) {
  cplx a = 0;
  for (const auto& k : terms) a += k.coeff * k.left.phase_factor(tl) * k.right.phase_factor(tr);
  return a;
}

// -(d/dtl + d/dtr)|A|^2 = 2 Re(conj(A) sum_k c_k i(El_k + Er_k) e_k)
double minus_total_derivative(const std::vector<PairTerm>& terms, double tl, double tr) {
  cplx a = 0, b = 0;
  for (const auto& k : terms) {
    const cplx e = k.coeff * k.left.phase_factor(tl) * k.right.phase_factor(tr);
    a += e;
    b += cplx(0, 1) * (k.left.value() + k.right.value()) * e;
  }
  return 2.0 * (std::conj(a) * b).real();
}

ExpSeries2D modulus_squared_2d(const std::vector<PairTerm>& terms) {
  ExpSeries2D s;
  for (std::size_t j = 0; j < terms.size(); ++j) {
    for (std::size_t k = j; k < terms.size(); ++k) {
      const auto& a = terms[j];
      const auto& b = terms[k];
      const cplx zl{0.5 * (a.left.width + b.left.width), a.left.mass - b.left.mass};
      const cplx zr{0.5 * (a.right.width + b.right.width), a.right.mass - b.right.mass};
      const cplx c = a.coeff * std::conj(b.coeff) * (j == k ? 1.0 : 2.0);
      if (c != cplx{}) s.add(c, zl, zr);
    }
  }
  return s;
}

bool all_zero(const std::vector<PairTerm>& t) {
  return std::all_of(t.begin(), t.end(), [](const PairTerm& x) { return x.coeff == cplx{}; });
}

}  // namespace

BipartiteState BipartiteState::alpha(double phase, const KaonParams& p) {
  BipartiteState s;
  s.family = PairFamily::Alpha;
  s.phase = phase;
  s.params = p;
  s.validate();
  return s;
}

BipartiteState BipartiteState::beta(double phase, const KaonParams& p) {
  BipartiteState s;
  s.family = PairFamily::Beta;
  s.phase = phase;
  s.params = p;
  s.validate();
  return s;
}

void BipartiteState::validate() const {
  params.validate();
  require_finite(phase, "phase");
  if (!(phase > -pi && phase <= pi)) throw std::invalid_argument("phase must lie in (-pi, pi]");
  require_finite(calibration, "calibration");
  if (calibration < 0) throw std::invalid_argument("calibration must be >= 0");
  if (std::abs(1.0 - params.epsilon * params.epsilon) == 0)
    throw std::invalid_argument("epsilon^2 = 1 makes the pair normalization singular");
}

std::vector<PairTerm> pair_terms_11(const BipartiteState& s) {
  s.validate();
  const auto& p = s.params;
  const cplx eps = p.epsilon;
  const cplx pref = 1.0 / (std::sqrt(2.0) * (1.0 - eps * eps));
  const cplx ph = std::polar(1.0, s.phase);
  const ComplexEnergy S = p.short_energy(), L = p.long_energy();
  if (s.family == PairFamily::Alpha) return {{eps * pref, L, S}, {-ph * eps * pref, S, L}};
  if (s.beta_weights == BetaWeights::strict) return {{eps * eps * pref, L, L}, {-ph * pref, S, S}};
  return {{eps * pref, L, L}, {-ph * eps * pref, S, S}};
}

double joint_survival_11(const BipartiteState& s, double tl, double tr) {
  require_times(tl, tr);
  return std::norm(amplitude(pair_terms_11(s), tl, tr));
}

ExpSeries2D joint_survival_series(const BipartiteState& s) { return modulus_squared_2d(pair_terms_11(s)); }

ExpSeries2D joint_pdf_series(DecayModel model, const BipartiteState& s, bool normalized) {
  const auto terms = pair_terms_11(s);
  ExpSeries2D g;
  switch (model) {
    case DecayModel::Standard: g = modulus_squared_2d(terms).minus_total_derivative(); break;
    case DecayModel::Hybrid: g = modulus_squared_2d(terms); normalized = true; break;
    case DecayModel::TimeOperator: g = modulus_squared_2d(twfo_terms(terms)); normalized = true; break;
  }
  if (normalized) {
    if (all_zero(terms)) throw DegenerateStateError("joint pdf vanishes identically (epsilon = 0)");
    const double tot = g.total();
    if (!(tot > 0)) throw DegenerateStateError("joint pdf has non-positive quadrant integral");
    g = g.scaled(1.0 / tot);
  }
  return g.scaled(s.calibration);
}

double joint_pdf_11(DecayModel model, const BipartiteState& s, double tl, double tr) {
  require_times(tl, tr);
  const auto terms = pair_terms_11(s);
  if (all_zero(terms)) return 0.0;
  switch (model) {
    case DecayModel::Standard:
      return s.calibration * minus_total_derivative(terms, tl, tr);
    case DecayModel::Hybrid: {
      const double tot = modulus_squared_2d(terms).total();
      return s.calibration * std::norm(amplitude(terms, tl, tr)) / tot;
    }
    case DecayModel::TimeOperator: {
      const auto tw = twfo_terms(terms);
      const double tot = modulus_squared_2d(tw).total();
      return s.calibration * std::norm(amplitude(tw, tl, tr)) / tot;
    }
  }
  throw std::invalid_argument("bad model");
}

JointGrid evaluate_joint(JointQuantity q, DecayModel model, const BipartiteState& s,
                         const std::vector<double>& tl, const std::vector<double>& tr) {
  for (const auto* g : {&tl, &tr})
    for (std::size_t i = 0; i < g->size(); ++i) {
      if (!((*g)[i] >= 0)) throw std::invalid_argument("joint grid contains negative times");
      if (i > 0 && !((*g)[i] > (*g)[i - 1])) throw std::invalid_argument("joint grid must be strictly increasing");
    }
  JointGrid out{tl, tr, std::vector<double>(tl.size() * tr.size())};
  parallel_for(tl.size(), [&](std::size_t i) {
    for (std::size_t j = 0; j < tr.size(); ++j)
      out.values[i * tr.size() + j] =
          q == JointQuantity::survival ? joint_survival_11(s, tl[i], tr[j]) : joint_pdf_11(model, s, tl[i], tr[j]);
  });
  return out;
}

DiscriminatorReport family_discriminator(const BipartiteState& s, const std::vector<double>& tl,
                                         const std::vector<double>& tr, double tolerance) {
  if (tl.empty() || tr.empty()) throw std::invalid_argument("grid must be nonempty");
  for (double t : tl)
    if (!(t >= 0)) throw std::invalid_argument("grid contains negative times");
  for (double t : tr)
    if (!(t >= 0)) throw std::invalid_argument("grid contains negative times");
  DiscriminatorReport r;
  const auto terms = pair_terms_11(s);
  if (all_zero(terms)) {
    r.empty_signal = true;
    r.points_excluded = tl.size() * tr.size();
    return r;
  }
  double lo = std::numeric_limits<double>::infinity(), hi = -lo, sum = 0;
  for (double a : tl)
    for (double b : tr) {
      const double P = std::norm(amplitude(terms, a, b));
      double scale = 0;
      for (const auto& k : terms)
        scale += std::norm(k.coeff) * std::exp(-(k.left.width * a + k.right.width * b));
      if (!(P > 1e-14 * scale)) {
        ++r.points_excluded;
        continue;
      }
      const double ratio = s.calibration * minus_total_derivative(terms, a, b) / P;
      lo = std::min(lo, ratio);
      hi = std::max(hi, ratio);
      sum += ratio;
      ++r.points_used;
    }
  if (r.points_used == 0) {
    r.empty_signal = true;
    return r;
  }
  r.ratio_mean = sum / double(r.points_used);
  r.ratio_relative_spread = (hi - lo) / std::abs(r.ratio_mean);
  r.is_ratio_constant = r.ratio_relative_spread < tolerance;
  return r;
}

}  // namespace kaonlab
