#pragma once

#include <kaonlab/core.hpp>
#include <kaonlab/rng.hpp>

#include <string>
#include <vector>

namespace kaonlab {

// Breit-Wigner density on [e_min, e_max], normalized there. The grid is a
// tabulation; quadratures use the closed form through mass/width/norm.
struct EnergySpectrum {
  std::vector<double> energies;
  std::vector<double> density;
  double e_min = 0, e_max = 0;
  double mass = 0, width = 0, norm = 0;

  double density_at(double e) const;
  double trapezoid_mass() const;
};

// Cutoffs in units of the width, symmetric around the mass by default.
EnergySpectrum lorentzian_spectrum(const ComplexEnergy& e, double e_min, double e_max, std::size_t points = 100001);
EnergySpectrum lorentzian_spectrum_symmetric(const ComplexEnergy& e, double cutoff_widths,
                                             std::size_t points = 100001);

// Fraction of the untruncated Lorentzian inside [e_min, e_max].
double captured_mass(const ComplexEnergy& e, double e_min, double e_max);

enum class SurvivalConvention { autocorrelation, time_operator };
std::string_view to_string(SurvivalConvention c);
SurvivalConvention parse_convention(std::string_view s);

double survival_from_spectrum(const EnergySpectrum& spec, double t, SurvivalConvention c);

// psi_hat(E) = int_0^inf sqrt(G) e^{-i(m - iG/2)t} e^{iEt} dt, by quadrature in t.
cplx fourier_amplitude(const ComplexEnergy& e, double energy);
// The closed form sqrt(G) / (G/2 - i(E - m)).
cplx fourier_amplitude_exact(const ComplexEnergy& e, double energy);

struct MeasurementSchedule {
  std::vector<double> times;
  double readout = 0;

  void validate() const;
};

enum class ZenoMode { analytic, monte_carlo };

struct ZenoOutcome {
  ZenoMode mode = ZenoMode::analytic;
  long long trials = 0;
  double p_plus = 0, p_minus = 0, p_survival = 0;
  double se_plus = 0, se_minus = 0, se_survival = 0;  // binomial, MC only
};

// Survival and CP outcome at readout with instantaneous CP measurements
// interposed. Only the decoupled case eps = 0 is defined.
ZenoOutcome zeno_sequence(const QuasiSpinor& initial, const KaonParams& p, const MeasurementSchedule& schedule,
                          ZenoMode mode, long long trials = 0, RunSeed seed = {});

std::string to_text(const ZenoOutcome& z);
std::string to_record(const ZenoOutcome& z);

}  // namespace kaonlab
