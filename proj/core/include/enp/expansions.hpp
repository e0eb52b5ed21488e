#pragma once

#include <Eigen/Dense>

#include "enp/market.hpp"

namespace enp {

enum class Measure { VaR, ES };

/// Small-volatility expansion of a risk value. The quantile-side terms z_i
/// satisfy value = -(z0 + z2 + z3 + z4) truncated to the requested order;
/// the first-order term is identically zero and therefore not stored.
struct ExpansionResult {
    double value = 0.0;
    double z0 = 0.0;
    double z2 = 0.0;
    double z3 = 0.0;
    double z4 = 0.0;
    int order = 2;
    VolKind vol_kind = VolKind::LogNormal;
    Measure measure = Measure::VaR;
};

enum class AllocationMethod { VaR2, ES2, VaR3_1d, CovarianceAlloc, SpecialPointES };

/// Risk-minimal holdings from a closed-form expansion. Components that come
/// out negative are clipped to zero (no leverage) and flagged; `total` is the
/// unclipped sum, the quantity the total-amount identity constrains.
struct OptimalAllocation {
    Eigen::VectorXd phi_star;
    double total = 0.0;
    AllocationMethod method = AllocationMethod::VaR2;
    bool clipped = false;
};

/// Second-order multivariate VaR expansion:
///   q - 1/(2 f(q)) { <phi, Sigma phi> f'(q) + 2 <Sigma phi, K''(q)> - K[L]''(q) }
ExpansionResult var2_multi(const MarketModel& model, const Allocation& phi,
                           double alpha);

/// Minimizer of the second-order VaR expansion: phi* = -K''(q) / f'(q).
/// Independent of the asset distribution entirely.
OptimalAllocation phi_star_var2_multi(const MarketModel& model, double alpha);

/// Second-order multivariate ES expansion:
///   ES[-<1,L>] + 1/(2 alpha) { <phi,Sigma phi> f(q) + 2 <Sigma phi, K'(q)> - K[L]'(q) }
ExpansionResult es2_multi(const MarketModel& model, const Allocation& phi,
                          double alpha);

/// Minimizer of the second-order ES expansion: phi* = -K'(q) / f(q);
/// the total is exactly q.
OptimalAllocation phi_star_es2_multi(const MarketModel& model, double alpha);

/// Gaussian claims only: allocates the single-asset optimum phi0* across
/// assets proportionally to (Sigma_L 1)_i / <1, Sigma_L 1>.
OptimalAllocation covariance_allocation(const MarketModel& model, double alpha,
                                        Measure measure);

/// Univariate VaR expansion up to `order` in {2,3,4}, in the normal or
/// log-normal asset volatility. Per-order terms are reported separately.
ExpansionResult var_expand_1d(const MarketModel& model, double phi, double alpha,
                              int order, VolKind vol_kind);

/// Local minimizer of the third-order univariate VaR expansion. Falls back
/// to the skewless formula q + f/f' when mu3 * f''(q) vanishes; a negative
/// discriminant (possible for extreme sigma, mu3 pairs) also falls back and
/// sets `used_fallback`.
struct PhiStar1d {
    double phi_star = 0.0;
    bool used_fallback = false;
};
PhiStar1d phi_star_var3_1d(const MarketModel& model, double alpha, double sigma);

/// Univariate ES expansion up to `order` in {2,3,4}; the vol-kind branches
/// differ from third order on.
ExpansionResult es_expand_1d(const MarketModel& model, double phi, double alpha,
                             int order, VolKind vol_kind);

/// Exact slope of phi -> VaR[S(phi)] at phi = q: (1 - 1/E[1/X]) >= 0,
/// strictly positive for non-constant X. Zero for the ES measure.
double special_point_derivative(const AssetFamily& asset,
                                Measure measure = Measure::VaR);

/// Central moments (m1..m4) of the surplus S(phi); m1 is always zero.
struct SurplusMoments {
    double variance = 0.0;
    double third = 0.0;
    double fourth = 0.0;
};
SurplusMoments surplus_moments(const MarketModel& model, double phi, int upto = 4);

/// Fourth-order Cornish-Fisher VaR from the central moments of S(phi). The
/// baseline the distribution-based expansions are measured against; exact on
/// Gaussian surpluses, known to fail near phi = q for product liabilities.
double cornish_fisher_var(const MarketModel& model, double phi, double alpha);

/// Truncated distribution-function expansion of P(S(phi) <= z) around the
/// claim-only surplus, univariate:
///   Fbar_L(-z) + sum_{i=2..R} (mbar_i / i!) D^i K_i(-z).
double gram_charlier_cdf(const MarketModel& model, double phi, double z,
                         int truncation);

}  // namespace enp
