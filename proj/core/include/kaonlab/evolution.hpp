#pragma once

#include <kaonlab/core.hpp>
#include <kaonlab/exp_series.hpp>

#include <vector>

namespace kaonlab {

// H = M - i Gamma/2 in the CP basis.
struct MassDecayMatrix {
  cplx m11, m12, m21, m22;

  void validate() const;
  // Matrix whose eigenvectors are K_S, K_L with energies m_S - i G_S/2, m_L - i G_L/2.
  static MassDecayMatrix from_kaon(const KaonParams& p);
  // Eigenvalues of H (the complex energies); throws on degeneracy.
  std::pair<cplx, cplx> eigenvalues() const;
};

// Exact exp(-iHt) psi via the two spectral projectors.
QuasiSpinor evolve(const MassDecayMatrix& h, const QuasiSpinor& initial, double t);

class SuperpositionState {
 public:
  // Amplitudes are renormalized so that sum |a_k|^2 = 1.
  explicit SuperpositionState(std::vector<Mode> modes);
  static SuperpositionState two_mode(cplx a1, ComplexEnergy e1, cplx a2, ComplexEnergy e2);
  static SuperpositionState single(ComplexEnergy e) { return SuperpositionState({{1.0, e}}); }

  const std::vector<Mode>& modes() const { return modes_; }
  std::size_t size() const { return modes_.size(); }
  cplx amplitude_at(double t) const;

 private:
  std::vector<Mode> modes_;
};

QuasiSpinor evolve_diagonal(const QuasiSpinor& initial, const KaonParams& p, double t);
QuasiSpinor cronin_fitch_amplitudes(const KaonParams& p, double t);
QuasiSpinor long_time_projection(const KaonParams& p, double t);

// Mode decomposition of the two CP channels for a state prepared as `initial`
// (CP basis) at t=0. Channel 1 is CP=+1 (pions pairs), channel 2 CP=-1.
struct ChannelModes {
  std::vector<Mode> cp_plus;
  std::vector<Mode> cp_minus;
};
ChannelModes channel_modes(const QuasiSpinor& initial, const KaonParams& p);

// Normalized CP=+1 channel of a beam prepared as `initial`.
SuperpositionState cp_plus_state(const QuasiSpinor& initial, const KaonParams& p);

// The K0 preparation used by every Cronin-Fitch observable.
inline QuasiSpinor k0_spinor() { return cp_basis_from_strangeness(1.0, 0.0); }

}  // namespace kaonlab
