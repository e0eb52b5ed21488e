#include <benchmark/benchmark.h>

#include "enp/expansions.hpp"
#include "enp/kterms.hpp"
#include "enp/math/normal.hpp"
#include "enp/mc.hpp"
#include "enp/rng.hpp"

namespace {

enp::MarketModel base_model() {
    return enp::MarketModel(
        enp::build_asset(enp::VolKind::LogNormal, 0.2,
                         enp::DriverSpec::shifted_lognormal(-0.3)),
        enp::ClaimModel::gaussian(0.3882249778));
}

void BM_normal_quantile(benchmark::State& state) {
    double p = 0.0001;
    for (auto _ : state) {
        benchmark::DoNotOptimize(enp::math::normal_quantile(p));
        p += 1e-7;
        if (p > 0.9999) p = 0.0001;
    }
}
BENCHMARK(BM_normal_quantile);

void BM_surplus_sampling(benchmark::State& state) {
    const enp::MarketModel model = base_model();
    enp::McConfig cfg;
    cfg.n_samples = state.range(0);
    cfg.n_chunks = 64;
    cfg.jobs = 1;
    for (auto _ : state) {
        enp::SurplusCache cache(model, cfg);
        benchmark::DoNotOptimize(cache.claim_load().data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_surplus_sampling)->Arg(1 << 16)->Arg(1 << 20);

void BM_var_from_cache(benchmark::State& state) {
    const enp::MarketModel model = base_model();
    enp::McConfig cfg;
    cfg.n_samples = state.range(0);
    cfg.n_chunks = 64;
    cfg.jobs = 1;
    const enp::SurplusCache cache(model, cfg);
    for (auto _ : state) {
        benchmark::DoNotOptimize(cache.risk({0.9}, enp::Measure::VaR, 0.005).value);
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_var_from_cache)->Arg(1 << 20);

void BM_k_bundle_closed_form(benchmark::State& state) {
    Eigen::MatrixXd cov(3, 3), sigma(3, 3);
    cov << 1.2, 0.3, 0.1, 0.3, 0.8, -0.2, 0.1, -0.2, 1.5;
    sigma << 0.05, 0.015, -0.008, 0.015, 0.036, 0.01, -0.008, 0.01, 0.062;
    const enp::ClaimModel claims = enp::ClaimModel::multivariate_gaussian(cov);
    const double q = enp::claim_quantile(claims, 0.005);
    for (auto _ : state) {
        benchmark::DoNotOptimize(enp::k_bundle(claims, sigma, q).kL_d2);
    }
}
BENCHMARK(BM_k_bundle_closed_form);

void BM_var_expand_1d(benchmark::State& state) {
    const enp::MarketModel model = base_model();
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            enp::var_expand_1d(model, 0.85, 0.005, 4, enp::VolKind::LogNormal).value);
    }
}
BENCHMARK(BM_var_expand_1d);

}  // namespace

BENCHMARK_MAIN();
