#include <kaonlab/evolution.hpp>

#include <algorithm>
#include <cmath>

namespace kaonlab {

namespace {

void require_time(double t) {
  if (!(t >= 0) || !std::isfinite(t)) throw std::invalid_argument("t must be finite and >= 0");
}

void require_eps_not_minus_one(cplx eps) {
  if (std::abs(1.0 + eps) < 1e-300) throw std::invalid_argument("epsilon = -1 makes the K0 normalization singular");
}

}  // namespace

void MassDecayMatrix::validate() const {
  require_finite(m11, "m11");
  require_finite(m12, "m12");
  require_finite(m21, "m21");
  require_finite(m22, "m22");
  // Gamma = i(H - H^dagger) must be positive semidefinite.
  const cplx g11 = cplx(0, 1) * (m11 - std::conj(m11));
  const cplx g22 = cplx(0, 1) * (m22 - std::conj(m22));
  const cplx g12 = cplx(0, 1) * (m12 - std::conj(m21));
  const double a = g11.real(), d = g22.real();
  const double tr = a + d, det = a * d - std::norm(g12);
  const double scale = std::max({std::abs(a), std::abs(d), std::abs(g12), 1e-300});
  if (tr < -1e-12 * scale || det < -1e-12 * scale * scale)
    throw std::invalid_argument("mass-decay matrix has a negative decay width");
}

MassDecayMatrix MassDecayMatrix::from_kaon(const KaonParams& p) {
  p.validate();
  const cplx eps = p.epsilon;
  const cplx es = p.short_energy().value(), el = p.long_energy().value();
  // H = V diag(es, el) V^{-1}, V = [[1, eps], [eps, 1]]/n
  const cplx det = 1.0 - eps * eps;
  MassDecayMatrix h;
  h.m11 = (es - eps * eps * el) / det;
  h.m12 = eps * (el - es) / det;
  h.m21 = eps * (es - el) / det;
  h.m22 = (el - eps * eps * es) / det;
  return h;
}

std::pair<cplx, cplx> MassDecayMatrix::eigenvalues() const {
  const cplx half_tr = 0.5 * (m11 + m22);
  const cplx disc = std::sqrt(0.25 * (m11 - m22) * (m11 - m22) + m12 * m21);
  const double scale = std::max({std::abs(m11), std::abs(m22), std::abs(m12), std::abs(m21), 1e-300});
  if (std::abs(disc) < 1e-13 * scale)
    throw NumericalError("mass-decay matrix has degenerate eigenvalues (non-diagonalizable case unsupported)");
  return {half_tr + disc, half_tr - disc};
}

QuasiSpinor evolve(const MassDecayMatrix& h, const QuasiSpinor& s, double t) {
  require_time(t);
  h.validate();
  const auto [l1, l2] = h.eigenvalues();
  // P1 = (H - l2)/(l1 - l2), P2 = (H - l1)/(l2 - l1)
  const cplx e1 = std::exp(cplx(0, -1) * l1 * t), e2 = std::exp(cplx(0, -1) * l2 * t);
  const cplx d = l1 - l2;
  auto apply = [&](cplx lam, cplx scale) {
    return QuasiSpinor{scale * ((h.m11 - lam) * s.psi1 + h.m12 * s.psi2),
                       scale * (h.m21 * s.psi1 + (h.m22 - lam) * s.psi2)};
  };
  const QuasiSpinor a = apply(l2, e1 / d);
  const QuasiSpinor b = apply(l1, -e2 / d);
  return {a.psi1 + b.psi1, a.psi2 + b.psi2};
}

SuperpositionState::SuperpositionState(std::vector<Mode> modes) : modes_(std::move(modes)) {
  if (modes_.empty()) throw std::invalid_argument("superposition needs at least one mode");
  double n2 = 0;
  for (const auto& m : modes_) {
    require_finite(m.amplitude, "mode amplitude");
    if (m.energy.width < 0) throw std::invalid_argument("width must be >= 0");
    n2 += std::norm(m.amplitude);
  }
  if (!(n2 > 0)) throw std::invalid_argument("superposition has zero norm");
  const double s = 1.0 / std::sqrt(n2);
  for (auto& m : modes_) m.amplitude *= s;
}

SuperpositionState SuperpositionState::two_mode(cplx a1, ComplexEnergy e1, cplx a2, ComplexEnergy e2) {
  return SuperpositionState({{a1, e1}, {a2, e2}});
}

cplx SuperpositionState::amplitude_at(double t) const {
  cplx s = 0;
  for (const auto& m : modes_) s += m.amplitude * m.energy.phase_factor(t);
  return s;
}

QuasiSpinor evolve_diagonal(const QuasiSpinor& s, const KaonParams& p, double t) {
  require_time(t);
  p.validate();
  return {s.psi1 * p.short_energy().phase_factor(t), s.psi2 * p.long_energy().phase_factor(t)};
}

QuasiSpinor cronin_fitch_amplitudes(const KaonParams& p, double t) {
  require_time(t);
  require_eps_not_minus_one(p.epsilon);
  p.validate();
  const cplx es = p.short_energy().phase_factor(t), el = p.long_energy().phase_factor(t);
  const cplx k = 1.0 / (std::sqrt(2.0) * (1.0 + p.epsilon));
  return {k * (es + p.epsilon * el), k * (p.epsilon * es + el)};
}

QuasiSpinor long_time_projection(const KaonParams& p, double t) {
  require_time(t);
  require_eps_not_minus_one(p.epsilon);
  p.validate();
  const cplx el = p.long_energy().phase_factor(t);
  const cplx k = el / (std::sqrt(2.0) * (1.0 + p.epsilon));
  return {k * p.epsilon, k};
}

ChannelModes channel_modes(const QuasiSpinor& initial, const KaonParams& p) {
  p.validate();
  const auto [as, al] = sl_basis_from_cp(initial, p.epsilon);
  const double n = std::sqrt(1.0 + std::norm(p.epsilon));
  const ComplexEnergy es = p.short_energy(), el = p.long_energy();
  ChannelModes c;
  c.cp_plus = {{as / n, es}, {al * p.epsilon / n, el}};
  c.cp_minus = {{as * p.epsilon / n, es}, {al / n, el}};
  return c;
}

SuperpositionState cp_plus_state(const QuasiSpinor& initial, const KaonParams& p) {
  return SuperpositionState(channel_modes(initial, p).cp_plus);
}

}  // namespace kaonlab
