#include <benchmark/benchmark.h>

#include "scma/harness.hpp"

namespace {

using namespace scma;

struct Fixture {
  SystemConfig cfg;
  TrialData data;
  Priors priors;
  BigAmpOptions opts;

  Fixture(double gamma, int I, double snr_db) {
    cfg = make_config(gamma, 2, 3, I, 4);
    Rng rng(99);
    data = build_trial(cfg, snr_to_sigma2(snr_db, cfg.P), rng);
    priors.gamma = cfg.gamma();
    priors.constellation = data.constellation;
    priors.beta_bar = cfg.beta_bar;
    priors.sigma2 = data.rx.sigma2;
    priors.n_users = cfg.N;
    priors.d_f = cfg.d_f;
    priors.layout = cfg.layout();
  }
};

void BM_iterate(benchmark::State& state) {
  const double gamma = state.range(0) / 100.0;
  const int I = static_cast<int>(state.range(1));
  Fixture f(gamma, I, 17.5);
  Rng rng(7);
  BigAmpState st = initialize(f.data.rx.Y, f.priors, f.opts, rng);
  for (auto _ : state) {
    iterate(st, f.data.rx.Y, f.priors, f.opts);
    benchmark::DoNotOptimize(st.x_hat.data());
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_iterate)->Args({25, 100})->Args({10, 100})->Args({10, 1000})
    ->Unit(benchmark::kMillisecond);

void BM_discrete_posterior(benchmark::State& state) {
  Fixture f(0.25, 100, 17.5);
  Rng rng(11);
  const int n = 4096;
  std::vector<cplx> r(n);
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) {
    r[i] = rng.cnormal(1.0);
    v[i] = 0.05 + rng.uniform();
  }
  size_t k = 0;
  for (auto _ : state) {
    cplx mean;
    double var;
    discrete_posterior(r[k & (n - 1)], v[k & (n - 1)], f.priors, mean, var);
    benchmark::DoNotOptimize(mean);
    benchmark::DoNotOptimize(var);
    ++k;
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_discrete_posterior);

void BM_detect(benchmark::State& state) {
  Fixture f(0.25, 200, 17.5);
  for (auto _ : state) {
    DetectionResult d = detect(f.data.X.entries, f.cfg, f.data.constellation,
                               f.data.signatures);
    benchmark::DoNotOptimize(d.bits.data());
  }
}
BENCHMARK(BM_detect)->Unit(benchmark::kMillisecond);

void BM_trial(benchmark::State& state) {
  SystemConfig cfg = make_config(0.25, 2, 3, 50, 4);
  BigAmpOptions opts;
  DetectorOptions det;
  std::uint64_t seed = 1000;
  for (auto _ : state) {
    TrialResult t = run_trial(cfg, 17.5, seed++, opts, det);
    benchmark::DoNotOptimize(t.ber);
  }
}
BENCHMARK(BM_trial)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
