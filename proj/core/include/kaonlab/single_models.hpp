#pragma once

#include <kaonlab/core.hpp>
#include <kaonlab/evolution.hpp>
#include <kaonlab/exp_series.hpp>

#include <vector>

namespace kaonlab {

struct PdfCurve {
  std::vector<double> times;
  std::vector<double> values;
};

// Closed-form laws as exponential series. Normalized: pdf integrates to 1
// (Standard: divided by P_s(0), which is the same thing when all widths > 0).
ExpSeries survival_series_standard(const SuperpositionState& state);
ExpSeries pdf_series(DecayModel model, const SuperpositionState& state);
ExpSeries pdf_series_decohered(DecayModel model, const SuperpositionState& state);

double survival_standard(const SuperpositionState& state, double t);
double pdf(DecayModel model, const SuperpositionState& state, double t);
double pdf_decohered(DecayModel model, const SuperpositionState& state, double t);
// Integral of the model pdf from t to infinity.
double survival(DecayModel model, const SuperpositionState& state, double t);

// Evaluates a series on a grid; parallel over points, schedule-independent.
PdfCurve evaluate(const ExpSeries& s, const std::vector<double>& times);

struct PositivityReport {
  bool negative = false;
  double negative_fraction = 0.0;  // of the scan grid
  double min_value = 0.0;
  double t_lo = 0.0, t_hi = 0.0;   // hull of the negative region(s)
  std::size_t grid_points = 0;
};

// Scans [0, horizon] finely enough to resolve every oscillation and
// polishes local minima. Values above -1e-12 * (term magnitude) count as zero.
PositivityReport scan_positivity(const ExpSeries& s);
// Fraction of a user grid where the model pdf is negative.
double negative_fraction(DecayModel model, const SuperpositionState& state, const std::vector<double>& times);

// Standard Cronin-Fitch form: `published` is the conventional short/long/interference
// approximation (interference weight |eps|/sqrt 2); `exact` is -dP/dt itself.
enum class IntensityForm { published, exact };

// Pion-pair (CP=+1) intensity of a K0 beam: i0 * g(t) with g's e^{-G_S t}
// coefficient equal to 1.
ExpSeries cronin_fitch_series(DecayModel model, const KaonParams& p, double i0 = 1.0,
                              IntensityForm form = IntensityForm::published);
double cronin_fitch_intensity(DecayModel model, const KaonParams& p, double t, double i0 = 1.0,
                              IntensityForm form = IntensityForm::published);

// Weights of the three structures relative to the e^{-G_S t} coefficient.
struct IntensityWeights {
  double w_short = 0, w_long = 0, w_int = 0;
  double int_phase = 0;  // cos(dm t + int_phase)
};
IntensityWeights intensity_weights(DecayModel model, const KaonParams& p,
                                   IntensityForm form = IntensityForm::published);

// sqrt(w_L)/w_int
double weight_ratio_signature(DecayModel model, const KaonParams& p,
                              IntensityForm form = IntensityForm::published);

// Both CP channels of a state prepared as `initial`, jointly normalized so
// that the two densities integrate to 1 together.
struct TwoChannelLaw {
  ExpSeries cp_plus;
  ExpSeries cp_minus;
  double p_plus = 0;  // total probability of the CP=+1 channel
};
TwoChannelLaw two_channel_law(DecayModel model, const QuasiSpinor& initial, const KaonParams& p);

}  // namespace kaonlab
