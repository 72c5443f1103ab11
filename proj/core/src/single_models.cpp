#include <kaonlab/single_models.hpp>
#include <kaonlab/parallel.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace kaonlab {

namespace {

void require_time(double t) {
  if (!(t >= 0) || !std::isfinite(t)) throw std::invalid_argument("t must be finite and >= 0");
}

double psi0_norm2(const SuperpositionState& s) { return std::norm(s.amplitude_at(0.0)); }

// -d/dt |psi|^2 written with the interference weights R e^{i psi}.
ExpSeries standard_rate(const std::vector<Mode>& modes, bool coherent) {
  ExpSeries s;
  for (std::size_t j = 0; j < modes.size(); ++j) {
    const auto& a = modes[j];
    if (a.amplitude != cplx{}) s.add(std::norm(a.amplitude) * a.energy.width, a.energy.width);
    if (!coherent) continue;
    for (std::size_t k = j + 1; k < modes.size(); ++k) {
      const auto& b = modes[k];
      const auto w = interference_weights(a.energy, b.energy);
      const cplx z{0.5 * (a.energy.width + b.energy.width), a.energy.mass - b.energy.mass};
      const cplx c = 2.0 * a.amplitude * std::conj(b.amplitude) * std::polar(w.r_mod, w.psi_phase);
      if (c != cplx{}) s.add(c, z);
    }
  }
  return s;
}

std::vector<Mode> twfo_modes(const std::vector<Mode>& modes) {
  auto m = modes;
  for (auto& x : m) x.amplitude *= std::sqrt(x.energy.width);
  return m;
}

ExpSeries diagonal_only(const std::vector<Mode>& modes) {
  ExpSeries s;
  for (const auto& m : modes)
    if (m.amplitude != cplx{}) s.add(std::norm(m.amplitude), m.energy.width);
  return s;
}

ExpSeries normalize(const ExpSeries& s, const char* what) {
  const double tot = s.total();
  if (!(tot > 0) || !std::isfinite(tot))
    throw DegenerateStateError(std::string(what) + ": normalization integral is not positive");
  return s.scaled(1.0 / tot);
}

}  // namespace

ExpSeries survival_series_standard(const SuperpositionState& state) {
  const double p0 = psi0_norm2(state);
  if (!(p0 > 0)) throw std::invalid_argument("|psi(0)|^2 = 0 (destructive initial interference)");
  return modulus_squared(state.modes()).scaled(1.0 / p0);
}

ExpSeries pdf_series(DecayModel model, const SuperpositionState& state) {
  switch (model) {
    case DecayModel::Standard: {
      const double p0 = psi0_norm2(state);
      if (!(p0 > 0)) throw std::invalid_argument("|psi(0)|^2 = 0 (destructive initial interference)");
      return standard_rate(state.modes(), true).scaled(1.0 / p0);
    }
    case DecayModel::Hybrid:
      return normalize(modulus_squared(state.modes()), "hybrid pdf");
    case DecayModel::TimeOperator:
      return normalize(modulus_squared(twfo_modes(state.modes())), "time-operator pdf");
  }
  throw std::invalid_argument("bad model");
}

ExpSeries pdf_series_decohered(DecayModel model, const SuperpositionState& state) {
  switch (model) {
    case DecayModel::Standard:
    case DecayModel::TimeOperator:
      return normalize(standard_rate(state.modes(), false), "decohered pdf");
    case DecayModel::Hybrid:
      return normalize(diagonal_only(state.modes()), "decohered hybrid pdf");
  }
  throw std::invalid_argument("bad model");
}

double survival_standard(const SuperpositionState& state, double t) {
  require_time(t);
  return survival_series_standard(state)(t);
}

double pdf(DecayModel model, const SuperpositionState& state, double t) {
  require_time(t);
  return pdf_series(model, state)(t);
}

double pdf_decohered(DecayModel model, const SuperpositionState& state, double t) {
  require_time(t);
  return pdf_series_decohered(model, state)(t);
}

double survival(DecayModel model, const SuperpositionState& state, double t) {
  require_time(t);
  return pdf_series(model, state).tail(t);
}

PdfCurve evaluate(const ExpSeries& s, const std::vector<double>& times) {
  for (std::size_t i = 1; i < times.size(); ++i)
    if (!(times[i] > times[i - 1])) throw std::invalid_argument("time grid must be strictly increasing");
  PdfCurve c{times, std::vector<double>(times.size())};
  parallel_for(times.size(), [&](std::size_t i) { c.values[i] = s(times[i]); });
  return c;
}

PositivityReport scan_positivity(const ExpSeries& s) {
  PositivityReport r;
  const double horizon = s.oscillation_horizon();
  if (!(horizon > 0)) return r;
  double h = 1.0 / (8.0 * std::max(s.fastest_rate(), 1e-300));
  if (const double w = s.max_frequency(); w > 0) h = std::min(h, 2 * pi / w / 32.0);
  const std::size_t n = static_cast<std::size_t>(std::min(std::ceil(horizon / h), 2.0e6)) + 1;
  h = horizon / double(n - 1);
  auto tol = [&](double t) { return 1e-12 * s.magnitude(t); };
  // far down the tail the terms are subnormal and their sum is noise
  const double floor = 1e-250 * s.magnitude(0.0);

  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = s(i * h);
  std::size_t neg = 0;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo, vmin = std::numeric_limits<double>::infinity();
  auto mark = [&](double t, double val) {
    vmin = std::min(vmin, val);
    if (val < -tol(t) && s.magnitude(t) >= floor) {
      lo = std::min(lo, t);
      hi = std::max(hi, t);
      return true;
    }
    return false;
  };
  for (std::size_t i = 0; i < n; ++i) {
    if (mark(i * h, v[i])) ++neg;
    // a dip between grid points: golden-section polish
    if (i > 0 && i + 1 < n && v[i] <= v[i - 1] && v[i] <= v[i + 1] && v[i] >= -tol(i * h)) {
      double a = (i - 1) * h, b = (i + 1) * h;
      const double g = 0.5 * (std::sqrt(5.0) - 1.0);
      double c = b - g * (b - a), d = a + g * (b - a);
      double fc = s(c), fd = s(d);
      for (int it = 0; it < 60; ++it) {
        if (fc < fd) {
          b = d, d = c, fd = fc, c = b - g * (b - a), fc = s(c);
        } else {
          a = c, c = d, fc = fd, d = a + g * (b - a), fd = s(d);
        }
      }
      mark(0.5 * (a + b), s(0.5 * (a + b)));
    }
  }
  r.grid_points = n;
  r.min_value = vmin;
  if (hi >= lo) {
    r.negative = true;
    r.negative_fraction = double(neg) / double(n);
    r.t_lo = std::max(0.0, lo - h);
    r.t_hi = hi + h;
  }
  return r;
}

double negative_fraction(DecayModel model, const SuperpositionState& state, const std::vector<double>& times) {
  if (times.empty()) return 0.0;
  const auto s = pdf_series(model, state);
  std::size_t neg = 0;
  for (double t : times) {
    require_time(t);
    if (s(t) < -1e-12 * s.magnitude(t)) ++neg;
  }
  return double(neg) / double(times.size());
}

ExpSeries cronin_fitch_series(DecayModel model, const KaonParams& p, double i0, IntensityForm form) {
  p.validate();
  require_finite(i0, "i0");
  const ComplexEnergy es = p.short_energy(), el = p.long_energy();
  const cplx eps = p.epsilon;
  ExpSeries g;
  switch (model) {
    case DecayModel::Hybrid:
      g = modulus_squared({{1.0, es}, {eps, el}});
      break;
    case DecayModel::TimeOperator:
      g = modulus_squared({{std::sqrt(p.gamma_s), es}, {eps * std::sqrt(p.gamma_l), el}}).scaled(1.0 / p.gamma_s);
      break;
    case DecayModel::Standard:
      if (form == IntensityForm::exact) {
        g = standard_rate({{1.0, es}, {eps, el}}, true).scaled(1.0 / p.gamma_s);
      } else {
        // short + |eps|^2 (G_L/G_S) long + (|eps|/sqrt 2) cos(dm t - arg eps + psi)
        const auto w = interference_weights(es, el);
        const cplx z{0.5 * (p.gamma_s + p.gamma_l), es.mass - el.mass};
        g.add(1.0, p.gamma_s);
        if (eps != cplx{}) {
          g.add(std::norm(eps) * p.gamma_l / p.gamma_s, p.gamma_l);
          g.add(std::abs(eps) / std::sqrt(2.0) * std::polar(1.0, -std::arg(eps) + w.psi_phase), z);
        }
      }
      break;
  }
  return g.scaled(i0);
}

double cronin_fitch_intensity(DecayModel model, const KaonParams& p, double t, double i0, IntensityForm form) {
  require_time(t);
  return cronin_fitch_series(model, p, i0, form)(t);
}

IntensityWeights intensity_weights(DecayModel model, const KaonParams& p, IntensityForm form) {
  const auto g = cronin_fitch_series(model, p, 1.0, form);
  IntensityWeights w;
  for (const auto& k : g.terms()) {
    if (k.rate.imag() != 0.0 || (k.rate.real() != p.gamma_s && k.rate.real() != p.gamma_l)) {
      w.w_int += std::abs(k.coeff);
      w.int_phase = std::arg(k.coeff);
    } else if (k.rate.real() == p.gamma_s) {
      w.w_short += k.coeff.real();
    } else {
      w.w_long += k.coeff.real();
    }
  }
  // with dm = 0 and G_S = G_L the three structures are not separable
  return w;
}

double weight_ratio_signature(DecayModel model, const KaonParams& p, IntensityForm form) {
  p.validate();
  if (std::abs(p.epsilon) == 0)
    throw UndefinedSignatureError("weight-ratio signature is undefined for epsilon = 0");
  if (p.gamma_s == p.gamma_l)
    throw UndefinedSignatureError("weight-ratio signature needs gamma_s != gamma_l");
  const auto w = intensity_weights(model, p, form);
  return std::sqrt(w.w_long / w.w_short) / (w.w_int / w.w_short);
}

TwoChannelLaw two_channel_law(DecayModel model, const QuasiSpinor& initial, const KaonParams& p) {
  const auto ch = channel_modes(initial, p);
  ExpSeries a, b;
  switch (model) {
    case DecayModel::Standard:
      a = standard_rate(ch.cp_plus, true);
      b = standard_rate(ch.cp_minus, true);
      break;
    case DecayModel::Hybrid:
      a = modulus_squared(ch.cp_plus);
      b = modulus_squared(ch.cp_minus);
      break;
    case DecayModel::TimeOperator:
      a = modulus_squared(twfo_modes(ch.cp_plus));
      b = modulus_squared(twfo_modes(ch.cp_minus));
      break;
  }
  const double ta = a.empty() ? 0.0 : a.total(), tb = b.empty() ? 0.0 : b.total();
  const double tot = ta + tb;
  if (!(tot > 0)) throw DegenerateStateError("two-channel law has zero total rate");
  return {a.scaled(1.0 / tot), b.scaled(1.0 / tot), ta / tot};
}

}  // namespace kaonlab
