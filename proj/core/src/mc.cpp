#include "enp/mc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "enp/errors.hpp"
#include "enp/math/optimize.hpp"
#include "enp/rng.hpp"

namespace enp {

namespace {

constexpr int kBatches = 30;

// Type-7 interpolated p-quantile of an ascending-sorted range.
double sorted_quantile(const double* s, std::int64_t n, double p) {
    const double h = (static_cast<double>(n) - 1.0) * p;
    const auto i0 = static_cast<std::int64_t>(h);
    if (i0 + 1 >= n) return s[n - 1];
    return s[i0] + (h - static_cast<double>(i0)) * (s[i0 + 1] - s[i0]);
}

// Quantile of an unsorted span via partial selection (span is permuted).
double select_quantile(double* s, std::int64_t n, double p) {
    const double h = (static_cast<double>(n) - 1.0) * p;
    const auto i0 = static_cast<std::int64_t>(h);
    std::nth_element(s, s + i0, s + n);
    const double lo = s[i0];
    if (i0 + 1 >= n) return lo;
    const double hi = *std::min_element(s + i0 + 1, s + n);
    return lo + (h - static_cast<double>(i0)) * (hi - lo);
}

double var_of_span(double* s, std::int64_t n, double alpha) {
    return -select_quantile(s, n, alpha);
}

// Average of the worst alpha-fraction with fractional boundary weight
// (the empirical version of -1/alpha int_0^alpha F^{-1}).
double es_of_span(double* s, std::int64_t n, double alpha) {
    const double na = alpha * static_cast<double>(n);
    auto k = static_cast<std::int64_t>(na);
    if (k >= n) k = n - 1;
    std::nth_element(s, s + k, s + n);
    double acc = 0.0;
    for (std::int64_t i = 0; i < k; ++i) acc += s[i];
    acc += (na - static_cast<double>(k)) * s[k];
    return -acc / na;
}

double statistic_of_span(double* s, std::int64_t n, Measure m, double alpha) {
    return m == Measure::VaR ? var_of_span(s, n, alpha) : es_of_span(s, n, alpha);
}

}  // namespace

void McConfig::validate() const {
    if (n_samples < 2) throw std::invalid_argument("McConfig: n_samples < 2");
    if (n_chunks < 1) throw std::invalid_argument("McConfig: n_chunks < 1");
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw std::invalid_argument("McConfig: alpha must be in (0,1)");
    }
}

std::optional<std::string> tail_sample_warning(const McConfig& cfg) {
    const double tail = cfg.alpha * static_cast<double>(cfg.n_samples);
    if (tail < 100.0) {
        return "tail sample count " + std::to_string(tail) +
               " is below 100; estimates in the tail are unreliable";
    }
    if (tail < 1000.0) {
        return "tail sample count " + std::to_string(tail) +
               " is below the acceptance floor of 1000";
    }
    return std::nullopt;
}

RiskEstimate risk_from_samples(std::vector<double>& samples, Measure measure,
                               double alpha) {
    const auto n = static_cast<std::int64_t>(samples.size());
    if (n < 2 * kBatches) {
        throw std::invalid_argument("risk_from_samples: too few samples");
    }
    const auto [mn, mx] = std::minmax_element(samples.begin(), samples.end());
    if (*mn == *mx) {
        throw std::runtime_error("risk_from_samples: degenerate sample (all equal)");
    }
    RiskEstimate r;
    r.measure = measure;
    r.alpha = alpha;

    // Batch means first: the batches slice the natural sample order, before
    // the full-sample selection permutes the buffer.
    double batch_stats[kBatches];
    const std::int64_t batch = n / kBatches;
    std::vector<double> scratch;
    scratch.reserve(batch + 1);
    for (int b = 0; b < kBatches; ++b) {
        const std::int64_t lo = b * batch;
        const std::int64_t hi = (b == kBatches - 1) ? n : lo + batch;
        scratch.assign(samples.begin() + lo, samples.begin() + hi);
        batch_stats[b] = statistic_of_span(scratch.data(), hi - lo, measure, alpha);
    }
    double mean = 0.0;
    for (double v : batch_stats) mean += v;
    mean /= kBatches;
    double ss = 0.0;
    for (double v : batch_stats) ss += (v - mean) * (v - mean);
    r.std_error = std::sqrt(ss / (kBatches - 1.0) / kBatches);

    r.value = statistic_of_span(samples.data(), n, measure, alpha);
    return r;
}

SurplusCache::SurplusCache(const MarketModel& model, const McConfig& cfg) {
    cfg.validate();
    n_samples_ = cfg.n_samples;
    n_assets_ = model.n();
    excess_.assign(n_assets_, std::vector<double>(n_samples_));
    claim_load_.assign(n_samples_, 0.0);

    const int n = n_assets_;
    const bool mv_claims = model.claims().is_multivariate();
    const Eigen::MatrixXd corr_chol = model.driver_corr_cholesky();
    const Eigen::MatrixXd claim_chol =
        mv_claims ? model.claims().covariance_cholesky() : Eigen::MatrixXd();

    const std::int64_t chunk =
        (n_samples_ + cfg.n_chunks - 1) / static_cast<std::int64_t>(cfg.n_chunks);
    const int jobs = cfg.jobs > 0 ? cfg.jobs : default_jobs();

    parallel_chunks(jobs, static_cast<std::size_t>(cfg.n_chunks), [&](std::size_t c) {
        const std::int64_t lo = static_cast<std::int64_t>(c) * chunk;
        const std::int64_t hi = std::min(n_samples_, lo + chunk);
        if (lo >= hi) return;
        CounterRng rng(cfg.seed, static_cast<std::uint64_t>(c));
        std::vector<double> z(n), zc(n), w(n), l(n), x(n);
        for (std::int64_t i = lo; i < hi; ++i) {
            for (int a = 0; a < n; ++a) z[a] = rng.next_normal();
            for (int a = 0; a < n; ++a) {
                double acc = 0.0;
                for (int k = 0; k <= a; ++k) acc += corr_chol(a, k) * z[k];
                zc[a] = acc;
            }
            for (int a = 0; a < n; ++a) x[a] = model.asset(a).sample(zc[a]);
            if (mv_claims) {
                for (int a = 0; a < n; ++a) w[a] = rng.next_normal();
                for (int a = 0; a < n; ++a) {
                    double acc = 0.0;
                    for (int k = 0; k <= a; ++k) acc += claim_chol(a, k) * w[k];
                    l[a] = acc;
                }
            } else {
                l[0] = model.claims().sample(rng.next_uniform());
            }
            double load = 0.0;
            for (int a = 0; a < n; ++a) {
                excess_[a][i] = x[a] - 1.0;
                load += x[a] * l[a];
            }
            claim_load_[i] = load;
        }
    });
}

void SurplusCache::surplus(const std::vector<double>& phi,
                           std::vector<double>& out) const {
    if (static_cast<int>(phi.size()) != n_assets_) {
        throw std::invalid_argument("SurplusCache::surplus: phi dimension mismatch");
    }
    out.resize(claim_load_.size());
    const std::int64_t n = n_samples_;
    for (std::int64_t i = 0; i < n; ++i) out[i] = -claim_load_[i];
    for (int a = 0; a < n_assets_; ++a) {
        const double pa = phi[a];
        if (pa == 0.0) continue;
        const double* col = excess_[a].data();
        for (std::int64_t i = 0; i < n; ++i) out[i] += pa * col[i];
    }
}

RiskEstimate SurplusCache::risk(const std::vector<double>& phi, Measure measure,
                                double alpha) const {
    std::vector<double> s;
    surplus(phi, s);
    return risk_from_samples(s, measure, alpha);
}

std::vector<double> simulate_surplus(const MarketModel& model, const Allocation& phi,
                                     const McConfig& cfg) {
    SurplusCache cache(model, cfg);
    std::vector<double> out;
    cache.surplus(phi.phi(), out);
    return out;
}

RiskEstimate var_mc(const MarketModel& model, const Allocation& phi,
                    const McConfig& cfg) {
    std::vector<double> s = simulate_surplus(model, phi, cfg);
    return risk_from_samples(s, Measure::VaR, cfg.alpha);
}

RiskEstimate es_mc(const MarketModel& model, const Allocation& phi,
                   const McConfig& cfg) {
    std::vector<double> s = simulate_surplus(model, phi, cfg);
    return risk_from_samples(s, Measure::ES, cfg.alpha);
}

double es_from_var_integral(const MarketModel& model, const Allocation& phi,
                            const McConfig& cfg, int n_beta) {
    if (n_beta < 16) {
        throw std::invalid_argument("es_from_var_integral: n_beta must be >= 16");
    }
    std::vector<double> s = simulate_surplus(model, phi, cfg);
    std::sort(s.begin(), s.end());
    const auto n = static_cast<std::int64_t>(s.size());
    // Midpoint rule over (0, alpha]: ES = 1/alpha int_0^alpha VaR_beta dbeta.
    double acc = 0.0;
    for (int j = 0; j < n_beta; ++j) {
        const double beta = cfg.alpha * (j + 0.5) / n_beta;
        acc += -sorted_quantile(s.data(), n, beta);
    }
    return acc / n_beta;
}

std::vector<ProfilePoint> risk_profile(const MarketModel& model,
                                       const std::vector<Allocation>& grid,
                                       const McConfig& cfg, Measure measure) {
    SurplusCache cache(model, cfg);
    std::vector<ProfilePoint> out(grid.size());
    const int jobs = cfg.jobs > 0 ? cfg.jobs : default_jobs();
    parallel_chunks(jobs, grid.size(), [&](std::size_t i) {
        const RiskEstimate r = cache.risk(grid[i].phi(), measure, cfg.alpha);
        out[i] = {grid[i].phi(), r.value, r.std_error};
    });
    return out;
}

McMinimum minimize_risk_mc(const MarketModel& model,
                           const std::vector<double>& lower,
                           const std::vector<double>& upper, const McConfig& cfg,
                           Measure measure) {
    const int n = model.n();
    if (static_cast<int>(lower.size()) != n || static_cast<int>(upper.size()) != n) {
        throw std::invalid_argument("minimize_risk_mc: bounds dimension mismatch");
    }
    for (int i = 0; i < n; ++i) {
        if (!(std::isfinite(lower[i]) && std::isfinite(upper[i]) &&
              lower[i] < upper[i])) {
            throw std::invalid_argument("minimize_risk_mc: invalid bounds");
        }
    }
    SurplusCache cache(model, cfg);
    std::vector<double> scratch;
    auto objective = [&](const std::vector<double>& phi) {
        cache.surplus(phi, scratch);
        const auto m = static_cast<std::int64_t>(scratch.size());
        return statistic_of_span(scratch.data(), m, measure, cfg.alpha);
    };

    McMinimum result;
    if (n == 1) {
        const int coarse = 33;
        double best_x = lower[0], best_v = 0.0;
        int best_i = 0;
        for (int i = 0; i < coarse; ++i) {
            const double x = lower[0] + (upper[0] - lower[0]) * i / (coarse - 1.0);
            const double v = objective({x});
            if (i == 0 || v < best_v) {
                best_v = v;
                best_x = x;
                best_i = i;
            }
        }
        const double cell = (upper[0] - lower[0]) / (coarse - 1.0);
        const double lo = std::max(lower[0], best_x - (best_i > 0 ? cell : 0.0));
        const double hi =
            std::min(upper[0], best_x + (best_i < coarse - 1 ? cell : 0.0));
        const double tol = 1e-4 * (upper[0] - lower[0]);
        const auto gs = math::golden_section_min(
            [&](double x) { return objective({x}); }, lo, hi, tol, 200);
        if (!gs.converged) {
            throw convergence_error("minimize_risk_mc: golden section stalled",
                                    {gs.x}, gs.value);
        }
        result.phi_star = {gs.x};
        result.value = gs.value;
        result.achieved_tol = gs.width;
        return result;
    }

    // Coarse lattice, then Nelder-Mead from the best cell.
    const int per_dim = (n <= 3) ? 7 : 5;
    std::vector<int> idx(n, 0);
    std::vector<double> best(n), pt(n);
    double best_v = std::numeric_limits<double>::infinity();
    bool done = false;
    while (!done) {
        for (int d = 0; d < n; ++d) {
            pt[d] = lower[d] + (upper[d] - lower[d]) * idx[d] / (per_dim - 1.0);
        }
        const double v = objective(pt);
        if (v < best_v) {
            best_v = v;
            best = pt;
        }
        int d = 0;
        while (d < n && ++idx[d] == per_dim) {
            idx[d] = 0;
            ++d;
        }
        done = (d == n);
    }
    const double cell = (upper[0] - lower[0]) / (per_dim - 1.0);
    const auto nm = math::nelder_mead_min(objective, best, 0.7 * cell, lower, upper,
                                          1e-10, 400 * n);
    if (!nm.converged) {
        throw convergence_error("minimize_risk_mc: Nelder-Mead budget exhausted",
                                nm.x, nm.value);
    }
    result.phi_star = nm.x;
    result.value = nm.value;
    result.achieved_tol = nm.spread;
    return result;
}

double derivative_at_q_mc(const MarketModel& model, const McConfig& cfg, double h,
                          Measure measure) {
    if (!(h > 0.0)) throw std::invalid_argument("derivative_at_q_mc: h must be > 0");
    if (model.n() != 1) {
        throw std::domain_error("derivative_at_q_mc: univariate model required");
    }
    const double q = claim_quantile(model.claims(), cfg.alpha);
    SurplusCache cache(model, cfg);
    std::vector<double> s;
    cache.surplus({q + h}, s);
    const auto n = static_cast<std::int64_t>(s.size());
    const double up = statistic_of_span(s.data(), n, measure, cfg.alpha);
    cache.surplus({q - h}, s);
    const double dn = statistic_of_span(s.data(), n, measure, cfg.alpha);
    return (up - dn) / (2.0 * h);
}

}  // namespace enp
