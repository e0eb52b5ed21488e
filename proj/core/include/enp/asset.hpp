#pragma once

#include <array>

#include "enp/driver.hpp"

namespace enp {

enum class VolKind { Normal, LogNormal };

struct CentralMoments {
    double m2 = 0.0;
    double m3 = 0.0;
    double m4 = 0.0;
};

/// One tradeable asset X_sigma with E[X] = 1 by construction:
///   Normal:    X = 1 + sigma * Y
///   LogNormal: X = exp(sigma * Y) / M(sigma)
/// where Y is the standardized driver and M its moment generating function.
class AssetFamily {
public:
    AssetFamily(VolKind kind, double sigma, DriverSpec driver);

    VolKind vol_kind() const noexcept { return kind_; }
    double sigma() const noexcept { return sigma_; }
    const DriverSpec& driver() const noexcept { return driver_; }

    /// Draw of X from a standard normal variate (Gaussian copula channel).
    double sample(double z) const;

    /// E[X^i] for i in [0,4], exact.
    double raw_moment(int i) const;

    /// Central moments E[(X-1)^i] for i in {2,3,4}, exact.
    CentralMoments exact_central_moments(int upto = 4) const;

    double variance() const { return exact_central_moments(2).m2; }

    /// E[1/X]; throws std::domain_error when the expectation diverges.
    double inverse_mean() const;

    /// Normal kind with sigma * inf(Y) <= -1: X can reach zero or below.
    /// Permitted (the SCR comparison relies on it) but flagged.
    bool positivity_violated() const noexcept { return positivity_violated_; }

private:
    VolKind kind_;
    double sigma_;
    DriverSpec driver_;
    double mgf_sigma_ = 1.0;  // M(sigma), LogNormal only
    bool positivity_violated_ = false;
};

/// Factory matching the construction above; validates sigma and, for the
/// LogNormal kind, finiteness of M(sigma)..M(4 sigma).
AssetFamily build_asset(VolKind kind, double sigma, DriverSpec driver);

/// Fourth-order small-sigma expansion of the central moments of the
/// LogNormal-kind asset in terms of the driver's mu3, mu4:
///   m2 = s^2 + mu3 s^3 + (7/12 mu4 - 5/4) s^4
///   m3 = mu3 s^3 + 3/2 (mu4 - 1) s^4
///   m4 = mu4 s^4
CentralMoments expanded_central_moments(double sigma, double mu3, double mu4);

}  // namespace enp
