#include <benchmark/benchmark.h>

#include <cmath>

#include "vampce/vampce.hpp"

using namespace vampce;

namespace {

struct Fixture {
    PilotSystem sys;
    CVector y;
};

// One hydrophone of an N=2 link with L taps, K_p = 256 pilots at 15 dB.
Fixture make_fixture(std::size_t L, PilotScheme scheme) {
    SeedStream s(7);
    const OfdmConfig cfg = OfdmConfig::make(1024, 256, 2, 1, L, L);
    const PilotBook book = make_pilot_book(2, 256, L, scheme, s);
    Fixture f{build_pilot_system(cfg, book), {}};
    const CVector h = sample_bg_channel(cfg.channel_dims(), {0.1, 100.0}, s, {false, true}).stacked(0);
    const CVector clean = f.sys.W * h;
    const double noise = clean.squaredNorm() / double(clean.size()) / std::pow(10.0, 1.5);
    f.y = clean + sample_cgauss(std::size_t(clean.size()), noise, s);
    return f;
}

PilotScheme scheme_of(const benchmark::State& st) {
    return st.range(1) != 0 ? PilotScheme::random_qpsk : PilotScheme::orthogonal;
}

void BM_Denoiser(benchmark::State& st) {
    SeedStream s(1);
    const CVector r = sample_cgauss(std::size_t(st.range(0)), 0.05, s);
    for (auto _ : st) {
        benchmark::DoNotOptimize(bg_posterior(r, 20.0, {0.1, 100.0}));
    }
    st.SetItemsProcessed(st.iterations() * st.range(0));
}
BENCHMARK(BM_Denoiser)->Arg(200)->Arg(2000);

void BM_LmmseStage(benchmark::State& st) {
    const Fixture f = make_fixture(std::size_t(st.range(0)), PilotScheme::random_qpsk);
    SeedStream s(2);
    const CVector r2 = sample_cgauss(std::size_t(f.sys.W.cols()), 0.01, s);
    for (auto _ : st) {
        benchmark::DoNotOptimize(lmmse_stage(r2, 50.0, 100.0, f.sys.svd, f.y));
    }
}
BENCHMARK(BM_LmmseStage)->Arg(50)->Arg(100);

void BM_EmVamp(benchmark::State& st) {
    const Fixture f = make_fixture(std::size_t(st.range(0)), scheme_of(st));
    int iters = 0;
    for (auto _ : st) {
        const VampResult r = run_em_vamp(f.y, f.sys.svd, {});
        iters = r.iterations;
        benchmark::DoNotOptimize(r.h_hat.data());
    }
    st.counters["iterations"] = iters;
}
BENCHMARK(BM_EmVamp)->Args({50, 0})->Args({100, 0})->Args({50, 1})->Args({100, 1})->Unit(benchmark::kMillisecond);

void BM_Svd(benchmark::State& st) {
    const Fixture f = make_fixture(std::size_t(st.range(0)), PilotScheme::random_qpsk);
    for (auto _ : st) {
        benchmark::DoNotOptimize(thin_svd(f.sys.W));
    }
}
BENCHMARK(BM_Svd)->Arg(50)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_Sbl(benchmark::State& st) {
    const Fixture f = make_fixture(std::size_t(st.range(0)), scheme_of(st));
    const SblSystem sys(f.sys.W);
    int iters = 0;
    for (auto _ : st) {
        const EstimatorResult r = sbl_estimate(f.y, sys, SblConfig{});
        iters = r.iterations;
        benchmark::DoNotOptimize(r.h_hat.data());
    }
    st.counters["iterations"] = iters;
}
BENCHMARK(BM_Sbl)->Args({50, 0})->Args({100, 0})->Args({50, 1})->Args({100, 1})->Unit(benchmark::kMillisecond);

void BM_Omp(benchmark::State& st) {
    const Fixture f = make_fixture(std::size_t(st.range(0)), scheme_of(st));
    const OmpConfig cfg = OmpConfig::for_channel(2, std::size_t(st.range(0)), 256, 0.25, 0.0);
    for (auto _ : st) {
        benchmark::DoNotOptimize(omp_estimate(f.y, f.sys.W, cfg).h_hat.data());
    }
}
BENCHMARK(BM_Omp)->Args({50, 0})->Args({100, 0})->Args({100, 1})->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
