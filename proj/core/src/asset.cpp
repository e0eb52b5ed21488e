#include "enp/asset.hpp"

#include <cmath>
#include <stdexcept>

namespace enp {

AssetFamily::AssetFamily(VolKind kind, double sigma, DriverSpec driver)
    : kind_(kind), sigma_(sigma), driver_(std::move(driver)) {
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
        throw std::invalid_argument("AssetFamily: sigma must be finite and >= 0");
    }
    if (kind_ == VolKind::LogNormal && sigma_ > 0.0) {
        for (int i = 1; i <= 4; ++i) {
            if (!driver_.mgf_finite(static_cast<double>(i) * sigma_)) {
                throw std::domain_error(
                    "AssetFamily: driver moment generating function diverges at "
                    "i*sigma; LogNormal kind needs M(t) finite up to t = 4 sigma");
            }
        }
        mgf_sigma_ = driver_.mgf(sigma_);
    }
    if (kind_ == VolKind::Normal && sigma_ > 0.0) {
        positivity_violated_ = sigma_ * driver_.support_min() <= -1.0;
    }
}

AssetFamily build_asset(VolKind kind, double sigma, DriverSpec driver) {
    return AssetFamily(kind, sigma, std::move(driver));
}

double AssetFamily::sample(double z) const {
    if (sigma_ == 0.0) return 1.0;
    const double y = driver_.sample(z);
    if (kind_ == VolKind::Normal) return 1.0 + sigma_ * y;
    return std::exp(sigma_ * y) / mgf_sigma_;
}

double AssetFamily::raw_moment(int i) const {
    if (i < 0 || i > 4) {
        throw std::invalid_argument("AssetFamily::raw_moment: order must be <= 4");
    }
    if (i == 0) return 1.0;
    if (sigma_ == 0.0) return 1.0;
    if (kind_ == VolKind::LogNormal) {
        // m_i(sigma) = M(i sigma) / M(sigma)^i
        return driver_.mgf(static_cast<double>(i) * sigma_) /
               std::pow(mgf_sigma_, i);
    }
    // E[(1 + sigma Y)^i] by the binomial theorem, mu_1 = 0.
    static constexpr std::array<std::array<double, 5>, 5> binom = {{
        {1, 0, 0, 0, 0},
        {1, 1, 0, 0, 0},
        {1, 2, 1, 0, 0},
        {1, 3, 3, 1, 0},
        {1, 4, 6, 4, 1},
    }};
    double acc = 0.0;
    double spow = 1.0;
    for (int k = 0; k <= i; ++k) {
        acc += binom[i][k] * spow * driver_.moment(k);
        spow *= sigma_;
    }
    return acc;
}

CentralMoments AssetFamily::exact_central_moments(int upto) const {
    if (upto < 2 || upto > 4) {
        throw std::invalid_argument("exact_central_moments: upto must be in [2,4]");
    }
    CentralMoments cm;
    if (sigma_ == 0.0) return cm;
    if (kind_ == VolKind::Normal) {
        cm.m2 = sigma_ * sigma_;
        if (upto >= 3) cm.m3 = sigma_ * sigma_ * sigma_ * driver_.mu3();
        if (upto >= 4) cm.m4 = cm.m2 * cm.m2 * driver_.mu4();
        return cm;
    }
    const double m2 = raw_moment(2);
    cm.m2 = m2 - 1.0;
    if (upto >= 3) {
        const double m3 = raw_moment(3);
        cm.m3 = m3 - 3.0 * m2 + 2.0;
        if (upto >= 4) {
            const double m4 = raw_moment(4);
            cm.m4 = m4 - 4.0 * m3 + 6.0 * m2 - 3.0;
        }
    }
    return cm;
}

double AssetFamily::inverse_mean() const {
    if (sigma_ == 0.0) return 1.0;
    if (kind_ == VolKind::LogNormal) {
        // 1/X = M(sigma) exp(-sigma Y), so E[1/X] = M(sigma) M(-sigma).
        if (!driver_.mgf_finite(-sigma_)) {
            throw std::domain_error("inverse_mean: E[1/X] diverges (M(-sigma) infinite)");
        }
        return mgf_sigma_ * driver_.mgf(-sigma_);
    }
    // Normal kind: finite only when X is bounded away from zero.
    if (sigma_ * driver_.support_min() <= -1.0) {
        throw std::domain_error(
            "inverse_mean: E[1/X] diverges, support of 1 + sigma Y reaches 0");
    }
    return driver_.expect(
        [s = sigma_](double y) { return 1.0 / (1.0 + s * y); });
}

CentralMoments expanded_central_moments(double sigma, double mu3, double mu4) {
    if (sigma < 0.0) {
        throw std::domain_error("expanded_central_moments: sigma < 0");
    }
    const double s2 = sigma * sigma;
    const double s3 = s2 * sigma;
    const double s4 = s2 * s2;
    CentralMoments cm;
    cm.m2 = s2 + mu3 * s3 + (7.0 / 12.0 * mu4 - 5.0 / 4.0) * s4;
    cm.m3 = mu3 * s3 + 1.5 * (mu4 - 1.0) * s4;
    cm.m4 = mu4 * s4;
    return cm;
}

}  // namespace enp
