#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace kaonlab {

using cplx = std::complex<double>;

inline constexpr double pi = 3.14159265358979323846;

// ---- errors -------------------------------------------------------------
// Bad arguments use std::invalid_argument. Everything else derives from Error.

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A model prediction that cannot be a probability density (negative pdf).
class ModelPathologyError : public Error {
 public:
  ModelPathologyError(const std::string& what, double t_lo, double t_hi)
      : Error(what), t_lo_(t_lo), t_hi_(t_hi) {}
  double t_lo() const noexcept { return t_lo_; }
  double t_hi() const noexcept { return t_hi_; }

 private:
  double t_lo_, t_hi_;
};

// Total destructive interference or otherwise unnormalizable state.
class DegenerateStateError : public Error {
 public:
  using Error::Error;
};

class UndefinedSignatureError : public Error {
 public:
  using Error::Error;
};

class UnsupportedRegimeError : public Error {
 public:
  using Error::Error;
};

class DegenerateComparisonError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

// ---- domain types -------------------------------------------------------

struct ComplexEnergy {
  double mass = 0.0;   // s^-1
  double width = 0.0;  // s^-1

  ComplexEnergy() = default;
  ComplexEnergy(double m, double g);
  // E = m - i*width/2
  cplx value() const { return {mass, -0.5 * width}; }
  // the time-evolution factor e^{-iEt}
  cplx phase_factor(double t) const;
};

struct KaonParams {
  double gamma_s = 1.0 / 8.92e-11;
  double gamma_l = 1.0 / 5.17e-8;
  double delta_m = 0.5 * (1.0 / 8.92e-11 + 1.0 / 5.17e-8);
  cplx epsilon = std::polar(2.27e-3, 43.37 * pi / 180.0);

  static KaonParams defaults() { return {}; }
  static KaonParams make(double gamma_s, double gamma_l, double delta_m, cplx epsilon);

  // Throws std::invalid_argument when an invariant is broken.
  void validate() const;

  double tau_s() const { return 1.0 / gamma_s; }
  double tau_l() const { return 1.0 / gamma_l; }
  // m_S = 0, m_L = delta_m
  ComplexEnergy short_energy() const { return {0.0, gamma_s}; }
  ComplexEnergy long_energy() const { return {delta_m, gamma_l}; }
};

struct QuasiSpinor {
  cplx psi1;  // CP = +1
  cplx psi2;  // CP = -1

  double norm2() const { return std::norm(psi1) + std::norm(psi2); }
};

enum class DecayModel { Standard, Hybrid, TimeOperator };

inline constexpr std::array<DecayModel, 3> all_models = {DecayModel::Standard, DecayModel::Hybrid,
                                                         DecayModel::TimeOperator};

std::string_view to_string(DecayModel m);
// Accepts "standard", "hybrid", "twfo" (also "timeoperator").
DecayModel parse_model(std::string_view name);

struct InterferenceWeights {
  double r_mod = 0.0;
  double psi_phase = 0.0;
};

// ---- operations ---------------------------------------------------------

QuasiSpinor cp_basis_from_strangeness(cplx k0_amp, cplx k0bar_amp);

// Inverse of K_S = (K1 + eps K2)/n, K_L = (eps K1 + K2)/n.
std::pair<cplx, cplx> sl_basis_from_cp(const QuasiSpinor& spinor, cplx epsilon);
QuasiSpinor cp_from_sl(cplx amp_s, cplx amp_l, cplx epsilon);

// r e^{i psi} = (G1 + G2)/2 - i (m2 - m1)
InterferenceWeights interference_weights(const ComplexEnergy& e1, const ComplexEnergy& e2);

// Wraps any angle into (-pi, pi].
double wrap_phase(double phi);

void require_finite(double x, const char* what);
void require_finite(cplx x, const char* what);

}  // namespace kaonlab
