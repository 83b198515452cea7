#include <benchmark/benchmark.h>

#include "fockctl/baselines.hpp"
#include "fockctl/env.hpp"
#include "fockctl/fock.hpp"
#include "fockctl/nn.hpp"
#include "fockctl/rng.hpp"
#include "fockctl/sme.hpp"

using namespace fockctl;

static void BM_SmeStep(benchmark::State& state) {
    const int dim = static_cast<int>(state.range(0));
    SmeIntegrator sim(dim, ChannelConfig{dim, 400.0, EfficiencyMode::PurityPreserving},
                      NoiseConfig{}, IntegratorConfig{});
    Mat rho = Mat::Zero(dim, dim);
    rho(0, 0) = 1.0;
    auto rng = make_stream(1);
    ControlAction act{cplx(3.0, 0.0), {}};
    for (auto _ : state) {
        sim.step(rho, act, rng);
        benchmark::DoNotOptimize(rho.data());
    }
}
BENCHMARK(BM_SmeStep)->Arg(10)->Arg(12)->Arg(16);

static void BM_MlpForwardBackward(benchmark::State& state) {
    const int obs = static_cast<int>(state.range(0));
    auto rng = make_stream(2);
    Mlp net = Mlp::init({obs, 64, 64, 2}, rng);
    MatrixXd x = MatrixXd::Random(obs, 256);
    std::vector<MatrixXd> acts;
    for (auto _ : state) {
        MatrixXd out = net.forward_cached(x, acts);
        Mlp g = net.backward(acts, MatrixXd::Ones(2, 256));
        benchmark::DoNotOptimize(g.w.front().data());
    }
}
BENCHMARK(BM_MlpForwardBackward)->Arg(200)->Arg(288);

static void BM_DisplacedOverlap(benchmark::State& state) {
    double alpha = 0.0;
    for (auto _ : state) {
        alpha += 1e-6;
        benchmark::DoNotOptimize(displaced_overlap(3, 7, 1.0 + alpha));
    }
}
BENCHMARK(BM_DisplacedOverlap);

static void BM_WignerPoint(benchmark::State& state) {
    Mat rho = Mat::Zero(10, 10);
    rho(3, 3) = 1.0;
    for (auto _ : state) {
        auto w = wigner_grid(rho, {1.0}, {0.5});
        benchmark::DoNotOptimize(w(0, 0));
    }
}
BENCHMARK(BM_WignerPoint);

BENCHMARK_MAIN();
