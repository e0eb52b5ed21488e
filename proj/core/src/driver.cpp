#include "enp/driver.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "enp/math/normal.hpp"
#include "enp/math/quadrature.hpp"
#include "enp/math/roots.hpp"

namespace enp {

namespace {

// Skew of a standardized lognormal with w = exp(s^2).
double lognormal_skew_from_w(double w) { return (w + 2.0) * std::sqrt(w - 1.0); }

}  // namespace

DriverSpec DriverSpec::standard_normal() {
    DriverSpec d;
    d.law_ = DriverLaw::StandardNormal;
    d.mu3_ = 0.0;
    d.mu4_ = 3.0;
    return d;
}

DriverSpec DriverSpec::shifted_lognormal(double skew) {
    if (!std::isfinite(skew)) {
        throw std::invalid_argument("shifted_lognormal: skew must be finite");
    }
    // The lognormal family degenerates to the Gaussian as skew -> 0.
    if (std::fabs(skew) < 1e-8) return standard_normal();

    const double target = std::fabs(skew);
    double hi = 2.0;
    while (lognormal_skew_from_w(hi) < target) hi *= 2.0;
    const double w = math::brent_root(
        [&](double x) { return lognormal_skew_from_w(x) - target; }, 1.0 + 1e-14,
        hi, 1e-14);

    DriverSpec d;
    d.law_ = DriverLaw::ShiftedLognormal;
    d.lognormal_s_ = std::sqrt(std::log(w));
    d.lognormal_m_ = std::sqrt(w);  // exp(s^2/2)
    d.lognormal_v_ = std::sqrt(w * (w - 1.0));
    d.eps_ = (skew > 0.0) ? 1.0 : -1.0;
    d.mu3_ = skew;
    d.mu4_ = ((w * w + 2.0 * w + 3.0) * w * w) - 3.0;  // w^4 + 2w^3 + 3w^2 - 3
    // eps=+1: Y in (-m/v, inf); eps=-1: Y in (-inf, m/v).
    d.support_min_ = (d.eps_ > 0.0)
                         ? -d.lognormal_m_ / d.lognormal_v_
                         : -std::numeric_limits<double>::infinity();
    return d;
}

DriverSpec DriverSpec::empirical(std::vector<double> samples) {
    if (samples.size() < 2) {
        throw std::invalid_argument("empirical driver: need at least 2 samples");
    }
    const double n = static_cast<double>(samples.size());
    const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
    double var = 0.0;
    for (double& x : samples) {
        x -= mean;
        var += x * x;
    }
    var /= n;
    if (var <= 0.0) {
        throw std::invalid_argument("empirical driver: zero sample variance");
    }
    const double sd = std::sqrt(var);
    double m3 = 0.0, m4 = 0.0;
    for (double& x : samples) {
        x /= sd;
        m3 += x * x * x;
        m4 += x * x * x * x;
    }
    std::sort(samples.begin(), samples.end());

    DriverSpec d;
    d.law_ = DriverLaw::Empirical;
    d.mu3_ = m3 / n;
    d.mu4_ = m4 / n;
    d.support_min_ = samples.front();
    d.samples_ = std::move(samples);
    if (d.mu4_ < 1.0 + d.mu3_ * d.mu3_ - 1e-9) {
        throw std::invalid_argument("empirical driver: mu4 < 1 + mu3^2");
    }
    return d;
}

double DriverSpec::moment(int i) const {
    switch (i) {
        case 0: return 1.0;
        case 1: return 0.0;
        case 2: return 1.0;
        case 3: return mu3_;
        case 4: return mu4_;
        default:
            throw std::invalid_argument("DriverSpec::moment: order must be <= 4");
    }
}

bool DriverSpec::mgf_finite(double t) const noexcept {
    switch (law_) {
        case DriverLaw::StandardNormal: return true;
        case DriverLaw::Empirical: return true;
        case DriverLaw::ShiftedLognormal: return t * eps_ <= 0.0 || t == 0.0;
    }
    return false;
}

double DriverSpec::mgf(double t) const {
    if (t == 0.0) return 1.0;
    switch (law_) {
        case DriverLaw::StandardNormal:
            return std::exp(0.5 * t * t);
        case DriverLaw::Empirical: {
            double acc = 0.0;
            for (double y : samples_) acc += std::exp(t * y);
            return acc / static_cast<double>(samples_.size());
        }
        case DriverLaw::ShiftedLognormal: {
            const double u = t * eps_ / lognormal_v_;
            if (u > 0.0) {
                throw std::domain_error(
                    "DriverSpec::mgf: divergent for this sign of t (lognormal tail)");
            }
            // E[exp(u * exp(s Z))] over Z ~ N(0,1); u <= 0 keeps it bounded.
            const double s = lognormal_s_;
            const double value =
                math::gk_adaptive(
                    [&](double z) {
                        return math::normal_pdf(z) * std::exp(u * std::exp(s * z));
                    },
                    -13.0, 13.0, 1e-16, 1e-13, 1024)
                    .value;
            return std::exp(-t * eps_ * lognormal_m_ / lognormal_v_) * value;
        }
    }
    throw std::logic_error("DriverSpec::mgf: unknown law");
}

double DriverSpec::sample(double z) const {
    switch (law_) {
        case DriverLaw::StandardNormal:
            return z;
        case DriverLaw::ShiftedLognormal:
            return eps_ * (std::exp(lognormal_s_ * z) - lognormal_m_) / lognormal_v_;
        case DriverLaw::Empirical: {
            const double u = math::normal_cdf(z);
            auto idx = static_cast<std::size_t>(u * static_cast<double>(samples_.size()));
            if (idx >= samples_.size()) idx = samples_.size() - 1;
            return samples_[idx];
        }
    }
    throw std::logic_error("DriverSpec::sample: unknown law");
}

double DriverSpec::expect(const std::function<double(double)>& g) const {
    if (law_ == DriverLaw::Empirical) {
        double acc = 0.0;
        for (double y : samples_) acc += g(y);
        return acc / static_cast<double>(samples_.size());
    }
    return math::gk_adaptive(
               [&](double z) { return math::normal_pdf(z) * g(sample(z)); },
               -13.0, 13.0, 1e-15, 1e-12, 1024)
        .value;
}

double implied_lognormal_skew(double sigma) {
    if (sigma < 0.0) throw std::domain_error("implied_lognormal_skew: sigma < 0");
    const double w = std::exp(sigma * sigma);
    return -lognormal_skew_from_w(w);
}

}  // namespace enp
