#pragma once

#include <kaonlab/core.hpp>
#include <kaonlab/evolution.hpp>
#include <kaonlab/rng.hpp>
#include <kaonlab/sampler.hpp>
#include <kaonlab/single_models.hpp>

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace kaonlab {

struct EpsilonExtraction {
  double r_ratio = 0;
  double r_t = 0;
  bool apply_tau_factor = true;
  double epsilon_abs = 0;
};

// |eps|^2 = (3/2) R tau_S/tau_L, or (3/2) R without the lifetime factor.
EpsilonExtraction extract_epsilon(long long pairs, long long decays, const KaonParams& p,
                                  bool apply_tau_factor = true);

enum FitParam : int { kEpsAbs = 0, kEpsArg = 1, kDeltaM = 2, kI0 = 3 };
inline constexpr std::array<const char*, 4> fit_param_names = {"epsilon_abs", "epsilon_arg", "delta_m", "i0"};

struct FitOptions {
  std::array<bool, 4> free{true, true, false, true};
  IntensityForm form = IntensityForm::published;
  int starts = 8;
  int max_iterations = 20000;  // per start
  double i0_init = 0;          // 0: estimated from the data
};

struct FitResult {
  DecayModel model = DecayModel::Standard;
  double epsilon_abs = 0, epsilon_arg = 0, delta_m = 0, i0 = 0;
  double neg_log_likelihood = 0;
  std::array<std::array<double, 4>, 4> covariance{};  // fixed parameters have zero rows
  std::array<bool, 4> free{};
  bool converged = false;
  long evaluations = 0;

  double sigma(FitParam p) const;
  KaonParams params(const KaonParams& base) const;
};

class FitFailure : public NumericalError {
 public:
  FitFailure(const std::string& what, FitResult last) : NumericalError(what), last_(std::move(last)) {}
  const FitResult& last_iterate() const { return last_; }

 private:
  FitResult last_;
};

// Poisson -log L of the pair counts under an intensity (counts per second).
// +inf if any bin has a negative or (with counts) zero expectation.
double binned_nll(const BinnedCounts& data, const ExpSeries& intensity);

FitResult fit_intensity(const BinnedCounts& data, DecayModel model, const KaonParams& init,
                        const FitOptions& opt = {});

struct WeightRatioEstimate {
  double value = 0;
  double sigma = 0;
  bool infinite = false;       // interference weight consistent with zero
  bool long_nonpositive = false;
  double w_short = 0, w_long = 0, w_int = 0, int_phase = 0;  // counts / s
  double sigma_short = 0, sigma_long = 0, sigma_int = 0;
  double min_expected = 0;  // smallest fitted bin expectation
};

WeightRatioEstimate weight_ratio_estimate(const BinnedCounts& data, const KaonParams& p);

struct PowerOptions {
  std::vector<std::size_t> n_grid;   // empty: quarter decades from 10 to n_max
  std::size_t n_max = 1000000;
  double target_power = 0.95;
  std::size_t null_toys = 2000;      // bin-level toys for the critical value
  std::vector<double> edges;         // empty: automatic
};

struct PowerPoint {
  std::size_t n = 0;
  double power = 0, power_se = 0, critical_value = 0;
};

struct PowerReport {
  DecayModel model_a{}, model_b{};
  double alpha = 0;
  int trials = 0;
  PowerPoint at_n;                   // at the requested n_events
  std::vector<PowerPoint> grid;
  std::optional<std::size_t> n_required;
  std::size_t bins_used = 0;
  double kl_per_event = 0;           // KL(a || b) of the merged binning
};

// Edges resolving the short, interference and long regimes of a series.
std::vector<double> discrimination_edges(const ExpSeries& a, const ExpSeries& b);

PowerReport discrimination_power(DecayModel model_a, DecayModel model_b, const SuperpositionState& state,
                                 std::size_t n_events, double alpha, int trials, RunSeed seed,
                                 const PowerOptions& opt = {});

std::string to_text(const FitResult& r);
std::string to_record(const FitResult& r);
std::string to_text(const PowerReport& r);
std::string to_record(const PowerReport& r);
std::string to_text(const EpsilonExtraction& r);
std::string to_record(const EpsilonExtraction& r);

}  // namespace kaonlab
