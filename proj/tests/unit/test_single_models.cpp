#include <doctest.h>
#include <kaonlab/single_models.hpp>

#include <cmath>

using namespace kaonlab;
using doctest::Approx;

namespace {
KaonParams no_cp() {
  KaonParams p;
  p.epsilon = 0;
  return p;
}
}  // namespace

TEST_CASE("Standard survival of an equal superposition is not monotone") {
  // |psi|^2 for equal widths: e^{-Gt}(1 + cos dm t)/2
  const double g = 1.0, dm = 5.0;
  auto s = SuperpositionState::two_mode(1.0, {0.0, g}, 1.0, {dm, g});
  for (double t : {0.0, 0.2, 0.63, 1.1, 2.0})
    CHECK(survival_standard(s, t) == Approx(std::exp(-g * t) * (1 + std::cos(dm * t)) / 2).epsilon(1e-13));
  CHECK(survival_standard(s, 1.0) > survival_standard(s, 0.7));
  // its rate goes negative, so the Standard pdf is flagged
  CHECK(scan_positivity(pdf_series(DecayModel::Standard, s)).negative);
}

TEST_CASE("pdfs integrate to one") {
  const KaonParams p;
  const auto s = cp_plus_state(k0_spinor(), p);
  for (auto m : all_models) {
    CAPTURE(to_string(m));
    CHECK(pdf_series(m, s).total() == Approx(1.0).epsilon(1e-12));
    CHECK(survival(m, s, 0.0) == Approx(1.0).epsilon(1e-12));
  }
  CHECK_FALSE(scan_positivity(pdf_series(DecayModel::Hybrid, s)).negative);
  CHECK_FALSE(scan_positivity(pdf_series(DecayModel::TimeOperator, s)).negative);
}

TEST_CASE("Standard pdf of the K0 pion-pair channel goes negative") {
  const KaonParams p;
  const auto r = scan_positivity(pdf_series(DecayModel::Standard, cp_plus_state(k0_spinor(), p)));
  REQUIRE(r.negative);
  CHECK(r.t_lo * p.gamma_s == Approx(18.9).epsilon(0.02));
  CHECK(r.t_hi * p.gamma_s == Approx(24.1).epsilon(0.02));
  CHECK(r.min_value < 0);
}

TEST_CASE("decohered laws") {
  const KaonParams p;
  const auto s = cp_plus_state(k0_spinor(), p);
  const auto sd = pdf_series_decohered(DecayModel::Standard, s), td = pdf_series_decohered(DecayModel::TimeOperator, s);
  for (double x : {0.0, 1.0, 10.0, 30.0}) CHECK(sd(x * p.tau_s()) == Approx(td(x * p.tau_s())).epsilon(1e-14));
  // long/short weight ratio: hybrid lacks the width factor
  auto ratio = [&](const ExpSeries& e) {
    double ws = 0, wl = 0;
    for (auto& k : e.terms()) (k.rate.real() == p.gamma_s ? ws : wl) += k.coeff.real();
    return wl / ws;
  };
  const auto hd = pdf_series_decohered(DecayModel::Hybrid, s);
  CHECK(ratio(hd) * p.gamma_l / p.gamma_s == Approx(ratio(td)).epsilon(1e-12));
  CHECK(ratio(td) / ratio(hd) == Approx(p.tau_s() / p.tau_l()).epsilon(1e-12));
}

TEST_CASE("pion-pair intensity at eps = 0 is model independent") {
  const auto p = no_cp();
  for (double x : {0.0, 0.5, 3.0, 12.0}) {
    const double t = x * p.tau_s(), ref = std::exp(-p.gamma_s * t);
    for (auto m : all_models) CHECK(cronin_fitch_intensity(m, p, t) == Approx(ref).epsilon(1e-14));
    CHECK(cronin_fitch_intensity(DecayModel::Standard, p, t, 1.0, IntensityForm::exact) == Approx(ref).epsilon(1e-14));
  }
}

TEST_CASE("intensity weights") {
  const KaonParams p;
  const double e = std::abs(p.epsilon), r = p.gamma_l / p.gamma_s, ep = e * std::sqrt(r);

  auto tw = intensity_weights(DecayModel::TimeOperator, p);
  CHECK(tw.w_short == Approx(1.0));
  CHECK(tw.w_long == Approx(ep * ep).epsilon(1e-12));
  CHECK(tw.w_int == Approx(2 * ep).epsilon(1e-12));

  auto hy = intensity_weights(DecayModel::Hybrid, p);
  CHECK(hy.w_long == Approx(e * e).epsilon(1e-12));
  CHECK(hy.w_int == Approx(2 * e).epsilon(1e-12));

  auto st = intensity_weights(DecayModel::Standard, p);
  CHECK(st.w_long == Approx(e * e * r).epsilon(1e-12));
  CHECK(st.w_int == Approx(e / std::sqrt(2.0)).epsilon(1e-12));

  // exact -dP/dt: interference weight 2|eps| R / G_S, phase shifted by -pi/4
  auto ex = intensity_weights(DecayModel::Standard, p, IntensityForm::exact);
  const double R = std::hypot(0.5 * (p.gamma_s + p.gamma_l), p.delta_m);
  CHECK(ex.w_int == Approx(2 * e * R / p.gamma_s).epsilon(1e-12));
  CHECK(wrap_phase(ex.int_phase + std::arg(p.epsilon)) == Approx(-pi / 4).epsilon(1e-12));

  // the long-time plateau relative to the short amplitude
  const double t = 40 * p.tau_s();
  const double plateau = std::exp(-p.gamma_l * t) * e * e * r;
  CHECK(cronin_fitch_intensity(DecayModel::TimeOperator, p, t) == Approx(plateau).epsilon(1e-6));
  // a hybrid reading of the same plateau infers |eps'| = |eps| sqrt(G_L/G_S)
  CHECK(e / ep == Approx(24.08).epsilon(1e-3));
}

TEST_CASE("weight-ratio signatures") {
  const KaonParams p;
  CHECK(weight_ratio_signature(DecayModel::Standard, p) == Approx(0.0587424631982).epsilon(1e-10));
  CHECK(weight_ratio_signature(DecayModel::Hybrid, p) == Approx(0.5).epsilon(1e-12));
  CHECK(weight_ratio_signature(DecayModel::TimeOperator, p) == Approx(0.5).epsilon(1e-12));
  CHECK_THROWS_AS(weight_ratio_signature(DecayModel::Hybrid, no_cp()), UndefinedSignatureError);
  CHECK_THROWS_AS(weight_ratio_signature(DecayModel::Hybrid, KaonParams::make(1, 1, 1, 0.1)), UndefinedSignatureError);
}

TEST_CASE("two-channel law") {
  const KaonParams p;
  for (auto m : {DecayModel::Hybrid, DecayModel::TimeOperator}) {
    auto law = two_channel_law(m, k0_spinor(), p);
    CHECK(law.cp_plus.total() + law.cp_minus.total() == Approx(1.0).epsilon(1e-12));
    CHECK(law.p_plus == Approx(law.cp_plus.total()).epsilon(1e-12));
  }
  // TWF-O keeps the preparation weights; the hybrid law weights them by lifetime
  auto tw = two_channel_law(DecayModel::TimeOperator, k0_spinor(), no_cp());
  CHECK(tw.p_plus == Approx(0.5).epsilon(1e-12));
  auto hy = two_channel_law(DecayModel::Hybrid, k0_spinor(), no_cp());
  CHECK(hy.p_plus == Approx(p.gamma_l / (p.gamma_s + p.gamma_l)).epsilon(1e-12));
}

TEST_CASE("argument checks") {
  const KaonParams p;
  const auto s = cp_plus_state(k0_spinor(), p);
  CHECK_THROWS_AS(pdf(DecayModel::Hybrid, s, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(evaluate(pdf_series(DecayModel::Hybrid, s), {1.0, 0.5}), std::invalid_argument);
  CHECK(negative_fraction(DecayModel::Hybrid, s, {0.0, 1e-10}) == 0.0);
}
