#include <kaonlab/core.hpp>

#include <cmath>

namespace kaonlab {

void require_finite(double x, const char* what) {
  if (!std::isfinite(x)) throw std::invalid_argument(std::string(what) + " must be finite");
}

void require_finite(cplx x, const char* what) {
  if (!std::isfinite(x.real()) || !std::isfinite(x.imag()))
    throw std::invalid_argument(std::string(what) + " must be finite");
}

ComplexEnergy::ComplexEnergy(double m, double g) : mass(m), width(g) {
  require_finite(m, "mass");
  require_finite(g, "width");
  if (g < 0) throw std::invalid_argument("width must be >= 0");
}

cplx ComplexEnergy::phase_factor(double t) const {
  // e^{-i(m - i g/2) t} = e^{-g t/2} e^{-i m t}
  return std::polar(std::exp(-0.5 * width * t), -mass * t);
}

KaonParams KaonParams::make(double gamma_s, double gamma_l, double delta_m, cplx epsilon) {
  KaonParams p;
  p.gamma_s = gamma_s;
  p.gamma_l = gamma_l;
  p.delta_m = delta_m;
  p.epsilon = epsilon;
  p.validate();
  return p;
}

void KaonParams::validate() const {
  require_finite(gamma_s, "gamma_s");
  require_finite(gamma_l, "gamma_l");
  require_finite(delta_m, "delta_m");
  require_finite(epsilon, "epsilon");
  if (!(gamma_l > 0)) throw std::invalid_argument("gamma_l must be > 0");
  if (gamma_s < gamma_l) throw std::invalid_argument("gamma_s must be >= gamma_l");
  if (delta_m < 0) throw std::invalid_argument("delta_m must be >= 0");
  if (!(std::abs(epsilon) < 1)) throw std::invalid_argument("|epsilon| must be < 1");
}

std::string_view to_string(DecayModel m) {
  switch (m) {
    case DecayModel::Standard: return "standard";
    case DecayModel::Hybrid: return "hybrid";
    case DecayModel::TimeOperator: return "twfo";
  }
  return "?";
}

DecayModel parse_model(std::string_view name) {
  if (name == "standard") return DecayModel::Standard;
  if (name == "hybrid") return DecayModel::Hybrid;
  if (name == "twfo" || name == "timeoperator" || name == "time_operator")
    return DecayModel::TimeOperator;
  throw std::invalid_argument("unknown model '" + std::string(name) +
                              "' (expected standard|hybrid|twfo)");
}

QuasiSpinor cp_basis_from_strangeness(cplx k0, cplx k0bar) {
  require_finite(k0, "k0 amplitude");
  require_finite(k0bar, "k0bar amplitude");
  const double s = 1.0 / std::sqrt(2.0);
  return {(k0 - k0bar) * s, (k0 + k0bar) * s};
}

std::pair<cplx, cplx> sl_basis_from_cp(const QuasiSpinor& sp, cplx eps) {
  require_finite(sp.psi1, "psi1");
  require_finite(sp.psi2, "psi2");
  require_finite(eps, "epsilon");
  if (!(std::abs(eps) < 1)) throw std::invalid_argument("|epsilon| must be < 1");
  // [psi1; psi2] = (1/n) [[1, eps], [eps, 1]] [aS; aL]
  const double n = std::sqrt(1.0 + std::norm(eps));
  const cplx det = 1.0 - eps * eps;
  return {n * (sp.psi1 - eps * sp.psi2) / det, n * (sp.psi2 - eps * sp.psi1) / det};
}

QuasiSpinor cp_from_sl(cplx as, cplx al, cplx eps) {
  if (!(std::abs(eps) < 1)) throw std::invalid_argument("|epsilon| must be < 1");
  const double n = std::sqrt(1.0 + std::norm(eps));
  return {(as + eps * al) / n, (eps * as + al) / n};
}

InterferenceWeights interference_weights(const ComplexEnergy& e1, const ComplexEnergy& e2) {
  const double re = 0.5 * (e1.width + e2.width);
  const double im = -(e2.mass - e1.mass);
  InterferenceWeights w;
  w.r_mod = std::hypot(re, im);
  w.psi_phase = (re == 0 && im == 0) ? 0.0 : wrap_phase(std::atan2(im, re));
  return w;
}

double wrap_phase(double phi) {
  double r = std::remainder(phi, 2 * pi);  // [-pi, pi]
  if (r <= -pi) r += 2 * pi;
  return r;
}

}  // namespace kaonlab
