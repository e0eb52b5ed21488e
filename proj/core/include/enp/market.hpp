#pragma once

#include <Eigen/Dense>
#include <vector>

#include "enp/asset.hpp"
#include "enp/claims.hpp"

namespace enp {

/// Units of each asset held. Leverage (negative holdings) is not allowed.
struct Allocation {
    explicit Allocation(std::vector<double> units);
    explicit Allocation(double phi) : Allocation(std::vector<double>{phi}) {}

    const std::vector<double>& phi() const noexcept { return phi_; }
    double operator[](std::size_t i) const { return phi_[i]; }
    std::size_t size() const noexcept { return phi_.size(); }
    double total() const;

private:
    std::vector<double> phi_;
};

/// Affine change of variables that reduces a raw problem (general asset
/// means, claim means, initial capital) to the normalized one: unit asset
/// means, centered claims, zero initial capital. Applying map then unmap is
/// the identity on both the allocation and the risk value.
struct NormalizationReport {
    Eigen::VectorXd tilde_x_scale;  // E[X_i]
    Eigen::VectorXd claim_shift;    // E[L_i]
    double cash_offset = 0.0;       // A0 - <E[X], E[L]> = E[S]

    /// phi~_i = E[X_i] (phi_i - E[L_i])
    std::vector<double> map_allocation(const std::vector<double>& phi_raw) const;
    std::vector<double> unmap_allocation(const std::vector<double>& phi_tilde) const;

    /// Risk of the raw surplus from the risk of the normalized one. Cash
    /// invariance: rho[S] = rho[S~] - E[S], so extra initial capital lowers
    /// the requirement.
    double raw_risk(double normalized_risk) const { return normalized_risk - cash_offset; }
    double normalized_risk(double raw_risk) const { return raw_risk + cash_offset; }
};

NormalizationReport normalize_problem(const std::vector<double>& raw_assets_mean,
                                      const std::vector<double>& raw_claims_mean,
                                      double a0);

/// Normalized market: assets with unit mean, a driver correlation matrix for
/// the Gaussian copula across assets, and the claim model. The surplus is
/// S(phi) = <X - 1, phi> - <X, L>. Immutable; safe to share across threads.
class MarketModel {
public:
    MarketModel(std::vector<AssetFamily> assets, Eigen::MatrixXd driver_corr,
                ClaimModel claims);
    /// Univariate convenience: one asset, one claim dimension.
    MarketModel(AssetFamily asset, ClaimModel claims);

    int n() const noexcept { return static_cast<int>(assets_.size()); }
    const AssetFamily& asset(int i) const { return assets_.at(i); }
    const std::vector<AssetFamily>& assets() const noexcept { return assets_; }
    const ClaimModel& claims() const noexcept { return claims_; }
    const Eigen::MatrixXd& driver_correlation() const noexcept { return driver_corr_; }
    const Eigen::MatrixXd& driver_corr_cholesky() const noexcept { return corr_chol_; }

    /// Covariance of the asset vector X under the Gaussian copula; exact
    /// closed forms where the driver pair admits them, quadrature otherwise.
    const Eigen::MatrixXd& asset_covariance() const noexcept { return sigma_x_; }

private:
    std::vector<AssetFamily> assets_;
    Eigen::MatrixXd driver_corr_;
    Eigen::MatrixXd corr_chol_;
    ClaimModel claims_;
    Eigen::MatrixXd sigma_x_;
};

}  // namespace enp
