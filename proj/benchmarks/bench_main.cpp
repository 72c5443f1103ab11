#include <kaonlab/kaonlab.hpp>

#include <benchmark/benchmark.h>

using namespace kaonlab;

namespace {

void BM_Philox(benchmark::State& st) {
  CounterRng r({1, 0}, 0, RngDomain::sample);
  for (auto _ : st) benchmark::DoNotOptimize(r.uniform());
}
BENCHMARK(BM_Philox);

void BM_PdfEval(benchmark::State& st) {
  const auto s = pdf_series(DecayModel::TimeOperator, cp_plus_state(k0_spinor(), KaonParams{}));
  double t = 0;
  for (auto _ : st) {
    benchmark::DoNotOptimize(s(t));
    t += 1e-12;
  }
}
BENCHMARK(BM_PdfEval);

void BM_SamplerBuild(benchmark::State& st) {
  const auto s = pdf_series(DecayModel::TimeOperator, cp_plus_state(k0_spinor(), KaonParams{}));
  for (auto _ : st) benchmark::DoNotOptimize(InverseCdfSampler(s));
}
BENCHMARK(BM_SamplerBuild)->Unit(benchmark::kMillisecond);

void BM_Sample(benchmark::State& st) {
  const InverseCdfSampler s(pdf_series(DecayModel::TimeOperator, cp_plus_state(k0_spinor(), KaonParams{})));
  for (auto _ : st) benchmark::DoNotOptimize(sample_from(s, std::size_t(st.range(0)), {3, 0}));
  st.SetItemsProcessed(st.iterations() * st.range(0));
}
BENCHMARK(BM_Sample)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);

void BM_SpectrumSurvival(benchmark::State& st) {
  const KaonParams p;
  const auto spec = lorentzian_spectrum_symmetric(p.short_energy(), 1000);
  for (auto _ : st)
    benchmark::DoNotOptimize(survival_from_spectrum(spec, 2 * p.tau_s(), SurvivalConvention::autocorrelation));
}
BENCHMARK(BM_SpectrumSurvival)->Unit(benchmark::kMillisecond);

void BM_JointPdf(benchmark::State& st) {
  const auto s = BipartiteState::beta(0.5);
  double t = 0;
  for (auto _ : st) {
    benchmark::DoNotOptimize(joint_pdf_11(DecayModel::Standard, s, t, 2 * t));
    t += 1e-13;
  }
}
BENCHMARK(BM_JointPdf);

}  // namespace

BENCHMARK_MAIN();
