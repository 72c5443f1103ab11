#pragma once

#include <kaonlab/core.hpp>
#include <kaonlab/entangled.hpp>
#include <kaonlab/evolution.hpp>
#include <kaonlab/exp_series.hpp>
#include <kaonlab/rng.hpp>

#include <cstdint>
#include <iosfwd>
#include <utility>
#include <vector>

namespace kaonlab {

enum class Side { single, left, right };
enum class Channel { pair, triplet };  // CP=+1 -> pi pi, CP=-1 -> 3 pi

std::string_view to_string(Side s);
std::string_view to_string(Channel c);

struct DecayEvent {
  std::uint64_t event_id = 0;
  Side side = Side::single;
  Channel channel = Channel::pair;
  double time = 0.0;
};

struct DetectorConfig {
  double window_tau = 0.0;
  double t_min = 0.0;
  double t_max = 1e-9;
  int n_bins = 100;
  double background_rate = 0.0;  // per second per channel
  double efficiency = 1.0;
  double branching_charged = 2.0 / 3.0;

  void validate() const;
};

struct BinnedCounts {
  std::vector<double> edges;  // n+1 strictly increasing
  std::vector<double> pair;   // counts (integers stored as double)
  std::vector<double> triplet;

  std::size_t bins() const { return pair.size(); }
  void validate() const;
};

struct DetectionSummary {
  std::uint64_t detected = 0;  // pair + triplet signal counts
  std::uint64_t out_of_window = 0;
  std::uint64_t inefficient = 0;
  std::uint64_t neutral = 0;   // CP=+1 decays into neutral pions
};

// Inverse CDF of a nonnegative exponential-series density. The table gives
// the starting point; the returned quantile solves CDF(t) = u to rounding.
class InverseCdfSampler {
 public:
  static constexpr std::size_t kKnots = 1u << 14;

  // Throws ModelPathologyError if the density goes negative.
  explicit InverseCdfSampler(ExpSeries density);

  double quantile(double u) const;
  double cdf(double t) const;
  double density(double t) const { return pdf_(t) / total_; }
  const ExpSeries& series() const { return pdf_; }
  std::size_t knot_count() const { return t_.size(); }

 private:
  double solve(double u, double lo, double hi, double guess) const;
  double g(double t, double u) const;  // CDF(t) - u, computed without cancellation

  ExpSeries pdf_;
  double total_ = 1.0;
  std::vector<double> t_, F_, f_;
};

// Solve CDF(t) = u for an arbitrary positive series on [0, inf).
double solve_cdf(const ExpSeries& s, double total, double u);

std::vector<DecayEvent> sample_decay_times(DecayModel model, const SuperpositionState& state, std::size_t n,
                                           RunSeed seed, Channel channel = Channel::pair);
// Events from a sampler that was already built (reuses the table).
std::vector<DecayEvent> sample_from(const InverseCdfSampler& s, std::size_t n, RunSeed seed,
                                    Channel channel = Channel::pair, std::uint64_t first_id = 0);

// Both CP channels of a beam prepared as `initial` (K0 by default).
std::vector<DecayEvent> sample_two_channel(DecayModel model, const QuasiSpinor& initial, const KaonParams& p,
                                           std::size_t n, RunSeed seed);

struct EventPair {
  DecayEvent left, right;
};
std::vector<EventPair> sample_joint(DecayModel model, const BipartiteState& state, std::size_t n, RunSeed seed);

std::vector<double> uniform_edges(double t_min, double t_max, int n_bins);
BinnedCounts histogram(const std::vector<DecayEvent>& events, const std::vector<double>& edges);
BinnedCounts detect(const std::vector<DecayEvent>& events, const DetectorConfig& det, RunSeed seed,
                    DetectionSummary* summary = nullptr);

// CSV formats: `event_id,side,channel,time_s` and `bin_lo_s,bin_hi_s,pair_count,triplet_count`.
std::string format_double(double x);
void write_events(std::ostream& os, const std::vector<DecayEvent>& events);
std::vector<DecayEvent> read_events(std::istream& is);
void write_binned(std::ostream& os, const BinnedCounts& b);
BinnedCounts read_binned(std::istream& is);

}  // namespace kaonlab
