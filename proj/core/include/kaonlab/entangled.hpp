#pragma once

#include <kaonlab/core.hpp>
#include <kaonlab/exp_series.hpp>

#include <vector>

namespace kaonlab {

enum class PairFamily { Alpha, Beta };

// `published` keeps equal eps weights on both beta-family terms;
// `strict` is the exact K1 x K1 projection (eps^2 on LL, 1 on SS).
enum class BetaWeights { published, strict };

struct BipartiteState {
  PairFamily family = PairFamily::Alpha;
  double phase = 0.0;  // alpha or beta, in (-pi, pi]
  KaonParams params{};
  double calibration = 1.0;  // |<pi pi|K1>|^4, scales detection rates only
  BetaWeights beta_weights = BetaWeights::published;

  static BipartiteState alpha(double phase, const KaonParams& p = {});
  static BipartiteState beta(double phase, const KaonParams& p = {});
  void validate() const;
};

// psi_11(tl, tr) = sum_k c_k e^{-i El_k tl} e^{-i Er_k tr}
struct PairTerm {
  cplx coeff;
  ComplexEnergy left;
  ComplexEnergy right;
};
std::vector<PairTerm> pair_terms_11(const BipartiteState& s);

double joint_survival_11(const BipartiteState& s, double tl, double tr);
double joint_pdf_11(DecayModel model, const BipartiteState& s, double tl, double tr);

// Series forms (used for normalization, marginals and sampling).
ExpSeries2D joint_survival_series(const BipartiteState& s);
// Normalized over the quadrant when `normalized`; Standard is otherwise raw.
ExpSeries2D joint_pdf_series(DecayModel model, const BipartiteState& s, bool normalized);

struct JointGrid {
  std::vector<double> tl_grid, tr_grid;
  std::vector<double> values;  // row-major, tl index major
  double at(std::size_t i, std::size_t j) const { return values[i * tr_grid.size() + j]; }
};

enum class JointQuantity { survival, pdf };
JointGrid evaluate_joint(JointQuantity q, DecayModel model, const BipartiteState& s,
                         const std::vector<double>& tl, const std::vector<double>& tr);

struct DiscriminatorReport {
  bool is_ratio_constant = false;
  double ratio_mean = 0.0;
  double ratio_relative_spread = 0.0;  // (max - min)/|mean|
  bool empty_signal = false;
  std::size_t points_used = 0;
  std::size_t points_excluded = 0;  // P11 at the rounding floor (zero line)
};

// Standard p11 / P11 over the grid.
DiscriminatorReport family_discriminator(const BipartiteState& s, const std::vector<double>& tl,
                                         const std::vector<double>& tr, double tolerance = 1e-9);

}  // namespace kaonlab
