#include "enp/market.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "enp/math/normal.hpp"
#include "enp/math/quadrature.hpp"

namespace enp {

Allocation::Allocation(std::vector<double> units) : phi_(std::move(units)) {
    if (phi_.empty()) throw std::invalid_argument("Allocation: empty");
    for (double p : phi_) {
        if (!(p >= 0.0)) {
            throw std::invalid_argument("Allocation: negative holdings (leverage) "
                                        "are not allowed");
        }
    }
}

double Allocation::total() const {
    return std::accumulate(phi_.begin(), phi_.end(), 0.0);
}

NormalizationReport normalize_problem(const std::vector<double>& raw_assets_mean,
                                      const std::vector<double>& raw_claims_mean,
                                      double a0) {
    if (raw_assets_mean.size() != raw_claims_mean.size() || raw_assets_mean.empty()) {
        throw std::invalid_argument("normalize_problem: dimension mismatch");
    }
    const auto n = static_cast<Eigen::Index>(raw_assets_mean.size());
    NormalizationReport r;
    r.tilde_x_scale.resize(n);
    r.claim_shift.resize(n);
    double cross = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!(raw_assets_mean[i] > 0.0)) {
            throw std::domain_error("normalize_problem: asset means must be > 0");
        }
        r.tilde_x_scale[i] = raw_assets_mean[i];
        r.claim_shift[i] = raw_claims_mean[i];
        cross += raw_assets_mean[i] * raw_claims_mean[i];
    }
    r.cash_offset = a0 - cross;
    return r;
}

std::vector<double> NormalizationReport::map_allocation(
    const std::vector<double>& phi_raw) const {
    if (static_cast<Eigen::Index>(phi_raw.size()) != tilde_x_scale.size()) {
        throw std::invalid_argument("map_allocation: dimension mismatch");
    }
    std::vector<double> out(phi_raw.size());
    for (std::size_t i = 0; i < phi_raw.size(); ++i) {
        out[i] = tilde_x_scale[static_cast<Eigen::Index>(i)] *
                 (phi_raw[i] - claim_shift[static_cast<Eigen::Index>(i)]);
    }
    return out;
}

std::vector<double> NormalizationReport::unmap_allocation(
    const std::vector<double>& phi_tilde) const {
    if (static_cast<Eigen::Index>(phi_tilde.size()) != tilde_x_scale.size()) {
        throw std::invalid_argument("unmap_allocation: dimension mismatch");
    }
    std::vector<double> out(phi_tilde.size());
    for (std::size_t i = 0; i < phi_tilde.size(); ++i) {
        out[i] = phi_tilde[i] / tilde_x_scale[static_cast<Eigen::Index>(i)] +
                 claim_shift[static_cast<Eigen::Index>(i)];
    }
    return out;
}

namespace {

// E[(X_i - 1)(X_j - 1)] for two distinct assets whose drivers share a
// Gaussian copula with correlation rho. Closed form when both drivers are
// standard normal; 2-d quadrature over (z, w) with z' = rho z + sqrt(1-r^2) w
// otherwise. Empirical drivers fall back to a deterministic sample average.
double asset_cross_moment(const AssetFamily& a, const AssetFamily& b, double rho) {
    if (rho == 0.0 || a.sigma() == 0.0 || b.sigma() == 0.0) return 0.0;

    const bool both_gauss = a.driver().law() == DriverLaw::StandardNormal &&
                            b.driver().law() == DriverLaw::StandardNormal;
    if (both_gauss && a.vol_kind() == VolKind::Normal &&
        b.vol_kind() == VolKind::Normal) {
        return a.sigma() * b.sigma() * rho;
    }
    if (both_gauss && a.vol_kind() == VolKind::LogNormal &&
        b.vol_kind() == VolKind::LogNormal) {
        return std::exp(a.sigma() * b.sigma() * rho) - 1.0;
    }
    if (both_gauss) {
        // One normal, one lognormal: E[Z exp(s Z')] = rho s exp(s^2/2).
        const AssetFamily& nrm = (a.vol_kind() == VolKind::Normal) ? a : b;
        const AssetFamily& lgn = (a.vol_kind() == VolKind::Normal) ? b : a;
        return nrm.sigma() * rho * lgn.sigma();
    }

    const bool any_empirical = a.driver().law() == DriverLaw::Empirical ||
                               b.driver().law() == DriverLaw::Empirical;
    const double root = std::sqrt(std::max(0.0, 1.0 - rho * rho));
    if (any_empirical) {
        // Deterministic midpoint average over a uniform lattice of copula
        // normals; accuracy ~1e-4, only reachable with empirical drivers.
        const int m = 2048;
        double acc = 0.0;
        for (int i = 0; i < m; ++i) {
            const double z = math::normal_quantile((i + 0.5) / m);
            for (int j = 0; j < m; ++j) {
                const double w = math::normal_quantile((j + 0.5) / m);
                acc += (a.sample(z) - 1.0) * (b.sample(rho * z + root * w) - 1.0);
            }
        }
        return acc / (static_cast<double>(m) * m);
    }
    auto integrand = [&](const double* p) {
        const double z = p[0], w = p[1];
        return math::normal_pdf(z) * math::normal_pdf(w) * (a.sample(z) - 1.0) *
               (b.sample(rho * z + root * w) - 1.0);
    };
    return math::integrate_box(integrand, {{-13.0, 13.0}, {-13.0, 13.0}}, 1e-10);
}

}  // namespace

MarketModel::MarketModel(std::vector<AssetFamily> assets, Eigen::MatrixXd driver_corr,
                         ClaimModel claims)
    : assets_(std::move(assets)),
      driver_corr_(std::move(driver_corr)),
      claims_(std::move(claims)) {
    const auto n = static_cast<Eigen::Index>(assets_.size());
    if (n == 0) throw std::invalid_argument("MarketModel: no assets");
    if (driver_corr_.rows() != n || driver_corr_.cols() != n) {
        throw std::invalid_argument("MarketModel: driver correlation shape mismatch");
    }
    if (claims_.dimension() != static_cast<int>(n)) {
        throw std::invalid_argument(
            "MarketModel: claim dimension must match asset count");
    }
    if (!driver_corr_.isApprox(driver_corr_.transpose(), 1e-12)) {
        throw std::invalid_argument("MarketModel: driver correlation not symmetric");
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        if (std::fabs(driver_corr_(i, i) - 1.0) > 1e-12) {
            throw std::invalid_argument("MarketModel: correlation diagonal must be 1");
        }
    }
    Eigen::LLT<Eigen::MatrixXd> llt(driver_corr_);
    if (llt.info() != Eigen::Success) {
        throw std::invalid_argument(
            "MarketModel: driver correlation not positive definite");
    }
    corr_chol_ = llt.matrixL();

    sigma_x_.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        sigma_x_(i, i) = assets_[i].exact_central_moments(2).m2;
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double c =
                asset_cross_moment(assets_[i], assets_[j], driver_corr_(i, j));
            sigma_x_(i, j) = c;
            sigma_x_(j, i) = c;
        }
    }
}

MarketModel::MarketModel(AssetFamily asset, ClaimModel claims)
    : MarketModel(std::vector<AssetFamily>{std::move(asset)},
                  Eigen::MatrixXd::Identity(1, 1), std::move(claims)) {}

}  // namespace enp
