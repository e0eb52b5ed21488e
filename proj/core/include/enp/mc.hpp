#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "enp/expansions.hpp"
#include "enp/market.hpp"

namespace enp {

/// Settings of a Monte Carlo run. Results are a pure function of
/// (seed, n_samples, n_chunks) regardless of the worker count.
struct McConfig {
    std::int64_t n_samples = 10'000'000;
    std::uint64_t seed = 20240801;
    int n_chunks = 1024;
    double alpha = 0.005;
    int jobs = 0;  // 0: default_jobs()

    void validate() const;
};

/// Tail sample adequacy advice: alpha * n_samples should be >= 1000 for
/// acceptance-grade runs; below 100 the estimate is unreliable.
std::optional<std::string> tail_sample_warning(const McConfig& cfg);

struct RiskEstimate {
    double value = 0.0;
    double std_error = 0.0;
    Measure measure = Measure::VaR;
    double alpha = 0.0;
};

/// Empirical risk of a sample vector (scratch is permuted). VaR is the
/// negated type-7 interpolated quantile; ES averages the worst alpha-fraction
/// with fractional weight on the boundary order statistic, which keeps the
/// estimator exactly convex in the sample values. Standard errors use 30-way
/// batch means over the natural sample order.
RiskEstimate risk_from_samples(std::vector<double>& samples, Measure measure,
                               double alpha);

/// Common-random-numbers engine: one generation of the joint draws, reusable
/// across allocations. Stores (X - 1) per asset and <X, L> per sample.
class SurplusCache {
public:
    SurplusCache(const MarketModel& model, const McConfig& cfg);

    std::int64_t size() const noexcept { return n_samples_; }
    int n() const noexcept { return n_assets_; }

    /// S_i(phi) = <X_i - 1, phi> - <X_i, L_i> into out (resized).
    void surplus(const std::vector<double>& phi, std::vector<double>& out) const;

    /// Column a of (X - 1).
    const std::vector<double>& asset_excess(int a) const { return excess_.at(a); }
    const std::vector<double>& claim_load() const noexcept { return claim_load_; }

    RiskEstimate risk(const std::vector<double>& phi, Measure measure,
                      double alpha) const;

private:
    std::int64_t n_samples_ = 0;
    int n_assets_ = 0;
    std::vector<std::vector<double>> excess_;  // per asset
    std::vector<double> claim_load_;
};

/// Draws of the surplus S(phi), chunk-seeded and bit-identical for a fixed
/// (seed, n_samples, n_chunks) whatever the parallelism.
std::vector<double> simulate_surplus(const MarketModel& model, const Allocation& phi,
                                     const McConfig& cfg);

RiskEstimate var_mc(const MarketModel& model, const Allocation& phi,
                    const McConfig& cfg);
RiskEstimate es_mc(const MarketModel& model, const Allocation& phi,
                   const McConfig& cfg);

/// ES via the tail integral of empirical VaR_beta over beta in (0, alpha],
/// midpoint rule on n_beta cells. Cross-validates es_mc.
double es_from_var_integral(const MarketModel& model, const Allocation& phi,
                            const McConfig& cfg, int n_beta);

struct ProfilePoint {
    std::vector<double> phi;
    double value = 0.0;
    double std_error = 0.0;
};

/// Risk profile over a grid of allocations with common random numbers, so
/// the curve is smooth and its minimizer stable.
std::vector<ProfilePoint> risk_profile(const MarketModel& model,
                                       const std::vector<Allocation>& grid,
                                       const McConfig& cfg, Measure measure);

struct McMinimum {
    std::vector<double> phi_star;
    double value = 0.0;
    double achieved_tol = 0.0;
};

/// Coarse grid then golden-section (univariate) or Nelder-Mead refinement of
/// the CRN objective within [lower, upper].
McMinimum minimize_risk_mc(const MarketModel& model,
                           const std::vector<double>& lower,
                           const std::vector<double>& upper, const McConfig& cfg,
                           Measure measure);

/// Central CRN finite difference of the risk at phi = q (univariate).
double derivative_at_q_mc(const MarketModel& model, const McConfig& cfg, double h,
                          Measure measure = Measure::VaR);

}  // namespace enp
