#include <doctest.h>
#include <kaonlab/entangled.hpp>

#include <cmath>

using namespace kaonlab;
using doctest::Approx;

namespace {
std::vector<double> grid(double hi, int n) {
  std::vector<double> g;
  for (int i = 0; i < n; ++i) g.push_back(hi * i / (n - 1));
  return g;
}
}  // namespace

TEST_CASE("alpha family: no simultaneous pion-pair decays") {
  const KaonParams p;
  const auto s = BipartiteState::alpha(0.0, p);
  for (double x : {0.0, 1.0, 7.5}) CHECK(joint_survival_11(s, x * p.tau_s(), x * p.tau_s()) < 1e-30);
}

TEST_CASE("closed forms of the joint survival") {
  const KaonParams p;
  const double e2 = std::norm(p.epsilon), pref = e2 / (2 * std::norm(1.0 - p.epsilon * p.epsilon));
  const double gb = 0.5 * (p.gamma_s + p.gamma_l);
  const double tl = 1.3 * p.tau_s(), tr = 4.1 * p.tau_s(), T = tl + tr;
  for (double ph : {0.0, 0.7, -2.0, pi}) {
    CAPTURE(ph);
    const double a = pref * (std::exp(-p.gamma_l * tl - p.gamma_s * tr) + std::exp(-p.gamma_s * tl - p.gamma_l * tr) -
                             2 * std::exp(-gb * T) * std::cos(p.delta_m * (tl - tr) + ph));
    CHECK(joint_survival_11(BipartiteState::alpha(ph, p), tl, tr) == Approx(a).epsilon(1e-12));
    const double b = pref * (std::exp(-p.gamma_l * T) + std::exp(-p.gamma_s * T) -
                             2 * std::exp(-gb * T) * std::cos(p.delta_m * T + ph));
    CHECK(joint_survival_11(BipartiteState::beta(ph, p), tl, tr) == Approx(b).epsilon(1e-12));
  }
  auto s = BipartiteState::beta(0.3, p);
  const auto ser = joint_survival_series(s);
  CHECK(ser(tl, tr) == Approx(joint_survival_11(s, tl, tr)).epsilon(1e-12));
}

TEST_CASE("Standard joint pdf against survival") {
  const KaonParams p;
  const auto tl = grid(10 * p.tau_s(), 9), tr = grid(10 * p.tau_s(), 9);
  auto a = family_discriminator(BipartiteState::alpha(0.4, p), tl, tr);
  CHECK(a.is_ratio_constant);
  CHECK(a.ratio_mean == Approx(p.gamma_s + p.gamma_l).epsilon(1e-9));
  auto b = family_discriminator(BipartiteState::beta(0.4, p), tl, tr);
  CHECK_FALSE(b.is_ratio_constant);
  CHECK(b.ratio_relative_spread > 0.1);

  KaonParams z = p;
  z.epsilon = 0;
  auto e = family_discriminator(BipartiteState::alpha(0.0, z), tl, tr);
  CHECK(e.empty_signal);
  CHECK(joint_pdf_11(DecayModel::Hybrid, BipartiteState::alpha(0.0, z), 1e-10, 1e-10) == 0.0);
  CHECK_THROWS_AS(joint_pdf_series(DecayModel::Hybrid, BipartiteState::alpha(0.0, z), true), DegenerateStateError);
}

TEST_CASE("normalized joint pdfs") {
  const KaonParams p;
  for (auto m : {DecayModel::Hybrid, DecayModel::TimeOperator}) {
    for (auto s : {BipartiteState::alpha(0.0, p), BipartiteState::beta(1.0, p)}) {
      const auto g = joint_pdf_series(m, s, true);
      CHECK(g.total() == Approx(1.0).epsilon(1e-10));
      const double tl = 2 * p.tau_s(), tr = 0.5 * p.tau_s();
      CHECK(joint_pdf_11(m, s, tl, tr) == Approx(g(tl, tr)).epsilon(1e-10));
    }
  }
  // calibration only rescales
  auto s = BipartiteState::beta(1.0, p);
  auto c = s;
  c.calibration = 0.25;
  CHECK(joint_pdf_11(DecayModel::Standard, c, 1e-10, 2e-10) ==
        Approx(0.25 * joint_pdf_11(DecayModel::Standard, s, 1e-10, 2e-10)));
}

TEST_CASE("strict beta weights") {
  const KaonParams p;
  auto s = BipartiteState::beta(0.0, p);
  s.beta_weights = BetaWeights::strict;
  const auto t = pair_terms_11(s);
  REQUIRE(t.size() == 2);
  CHECK(std::abs(t[0].coeff / t[1].coeff) == Approx(std::norm(p.epsilon)).epsilon(1e-12));
}

TEST_CASE("state validation") {
  CHECK_THROWS_AS(BipartiteState::alpha(4.0), std::invalid_argument);
  CHECK_THROWS_AS(BipartiteState::alpha(-pi), std::invalid_argument);
  CHECK_NOTHROW(BipartiteState::alpha(pi));
  auto s = BipartiteState::alpha(0.0);
  s.calibration = -1;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  CHECK_THROWS_AS(joint_survival_11(BipartiteState::alpha(0.0), -1, 0), std::invalid_argument);
}
