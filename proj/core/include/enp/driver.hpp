#pragma once

#include <functional>
#include <limits>
#include <vector>

namespace enp {

enum class DriverLaw { StandardNormal, ShiftedLognormal, Empirical };

/// Standardized driver Y of a tradeable asset: mean 0, variance 1, known
/// skew mu3 and kurtosis mu4, plus a sampleable law. Draws are produced by a
/// monotone transform of a standard normal variate, which is what lets a
/// Gaussian copula correlate drivers across assets.
class DriverSpec {
public:
    static DriverSpec standard_normal();

    /// Standardized (optionally negated) lognormal solving for the shape
    /// parameter so that skew(Y) equals `skew` exactly. The moment generating
    /// function is finite on one tail only: t*sign(skew) <= 0.
    static DriverSpec shifted_lognormal(double skew);

    /// Empirical law from samples, standardized in-memory. Needs at least two
    /// distinct values.
    static DriverSpec empirical(std::vector<double> samples);

    DriverLaw law() const noexcept { return law_; }
    double mu3() const noexcept { return mu3_; }
    double mu4() const noexcept { return mu4_; }
    /// E[Y^i] for i in [0,4].
    double moment(int i) const;

    /// M(t) = E[exp(tY)]. Throws std::domain_error when divergent.
    double mgf(double t) const;
    bool mgf_finite(double t) const noexcept;

    /// Transform of a standard normal draw z into a draw of Y.
    double sample(double z) const;

    /// E[g(Y)] for integrable g: exact mean for the empirical law, adaptive
    /// quadrature for the analytic laws.
    double expect(const std::function<double(double)>& g) const;

    /// Infimum of the support (-inf for unbounded-below laws).
    double support_min() const noexcept { return support_min_; }

    /// Shape parameter s of the underlying lognormal (ShiftedLognormal only).
    double lognormal_shape() const noexcept { return lognormal_s_; }

private:
    DriverSpec() = default;

    DriverLaw law_ = DriverLaw::StandardNormal;
    double mu3_ = 0.0;
    double mu4_ = 3.0;
    double support_min_ = -std::numeric_limits<double>::infinity();

    // ShiftedLognormal parameters: Y = eps*(exp(s Z) - m)/v.
    double lognormal_s_ = 0.0;
    double lognormal_m_ = 0.0;
    double lognormal_v_ = 0.0;
    double eps_ = 1.0;

    std::vector<double> samples_;  // Empirical, sorted and standardized
};

/// Skew of X under the convention that log(X) itself is (negated) lognormal
/// with shape equal to the log-volatility sigma. Negative for sigma > 0.
double implied_lognormal_skew(double sigma);

}  // namespace enp
