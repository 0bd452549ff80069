#include "alpnet/alp.hpp"
#include "alpnet/beamforming.hpp"
#include "alpnet/interference.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace alpnet;

namespace {

AffineModel random_affine(Eigen::Index k) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> g(0.0, 1.0 / static_cast<double>(k));
    Eigen::MatrixXd v = Eigen::MatrixXd::Zero(k, k);
    for (Eigen::Index i = 0; i < k; ++i)
        for (Eigen::Index j = 0; j < k; ++j)
            if (i != j) v(i, j) = g(rng);
    return AffineModel(v, Eigen::VectorXd::Ones(k));
}

MinStrategyModel random_min_strategy(std::size_t k, Eigen::Index n) {
    const auto s = MimoScenario::random(k, n, n, 1.0, 3);
    return receive_model(s, svd_init(s));
}

void BM_AffineEvaluate(benchmark::State& state) {
    const auto k = static_cast<Eigen::Index>(state.range(0));
    const AffineModel m = random_affine(k);
    const Eigen::VectorXd p = Eigen::VectorXd::Ones(k);
    for (auto _ : state) benchmark::DoNotOptimize(m.evaluate(p));
}
BENCHMARK(BM_AffineEvaluate)->Arg(8)->Arg(64)->Arg(256);

void BM_MinStrategyEvaluate(benchmark::State& state) {
    const auto k = static_cast<std::size_t>(state.range(0));
    const MinStrategyModel m = random_min_strategy(k, 4);
    const Eigen::VectorXd p = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(k));
    for (auto _ : state) benchmark::DoNotOptimize(m.evaluate(p));
}
BENCHMARK(BM_MinStrategyEvaluate)->Arg(4)->Arg(10)->Arg(32);

void BM_AlpStep(benchmark::State& state) {
    const auto k = static_cast<Eigen::Index>(state.range(0));
    const AffineModel m = random_affine(k);
    AlpConfig cfg;
    cfg.targets = SirTargets::common(static_cast<std::size_t>(k), 0.5, 1.2);
    cfg.p0 = Eigen::VectorXd::Constant(k, 0.01);
    cfg.p0[0] = 100.0;
    const NetworkState s = initial_state(m, cfg);
    for (auto _ : state) benchmark::DoNotOptimize(alp_step(m, cfg, s));
}
BENCHMARK(BM_AlpStep)->Arg(8)->Arg(64)->Arg(256);

void BM_TransceiverRound(benchmark::State& state) {
    const auto k = static_cast<std::size_t>(state.range(0));
    const auto s = MimoScenario::random(k, 4, 4, 1.0, 0);
    const BeamformerSet b = svd_init(s);
    const PowerVector p = PowerVector::Ones(static_cast<Eigen::Index>(k));
    for (auto _ : state) benchmark::DoNotOptimize(transceiver_round(s, b, p));
}
BENCHMARK(BM_TransceiverRound)->Arg(4)->Arg(10);

}  // namespace
BENCHMARK_MAIN();
