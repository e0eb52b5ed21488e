#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>

namespace enp {

/// Evaluators for a user-supplied univariate claim law with zero mean and a
/// positive density around the working quantile. pdf, dpdf, d2pdf, quantile
/// and sampler are required; the rest fall back to quadrature when absent.
struct UnivariateClaim {
    std::function<double(double)> pdf;
    std::function<double(double)> dpdf;
    std::function<double(double)> d2pdf;
    std::function<double(double)> d3pdf;     // optional
    std::function<double(double)> cdf;       // optional
    std::function<double(double)> quantile;  // p in (0,1) -> y
    std::function<double(double)> sampler;   // u in (0,1) -> draw of L
};

/// Law of the claim vector L: either a univariate density model or a centered
/// multivariate Gaussian. Immutable after construction.
class ClaimModel {
public:
    enum class Kind { UnivariateDensity, MultivariateGaussian };

    /// Centered Gaussian claim N(0, sigma_l^2) with analytic evaluators.
    static ClaimModel gaussian(double sigma_l);

    static ClaimModel univariate(UnivariateClaim spec);

    /// Centered multivariate Gaussian N(0, cov); cov must be symmetric
    /// positive definite.
    static ClaimModel multivariate_gaussian(Eigen::MatrixXd cov);

    Kind kind() const noexcept { return kind_; }
    int dimension() const noexcept { return dim_; }
    bool is_multivariate() const noexcept {
        return kind_ == Kind::MultivariateGaussian;
    }

    // --- univariate density interface -------------------------------------
    double pdf(double y) const;
    double dpdf(double y) const;
    double d2pdf(double y) const;
    double d3pdf(double y) const;  // throws if unavailable
    bool has_d3pdf() const;
    double cdf(double y) const;
    double quantile(double p) const;
    /// Inverse-CDF style draw from a uniform in (0,1).
    double sample(double u) const;
    /// E[L^i] for i in [0,4].
    double moment(int i) const;
    /// Partial moment integral \int_y^inf l^j f(l) dl for j in [0,4].
    double partial_moment(int j, double y) const;

    // --- multivariate interface --------------------------------------------
    const Eigen::MatrixXd& covariance() const;
    const Eigen::MatrixXd& covariance_cholesky() const;
    double density_mv(const Eigen::VectorXd& l) const;
    Eigen::VectorXd density_gradient_mv(const Eigen::VectorXd& l) const;

    // --- aggregate T = <1, L> ----------------------------------------------
    /// Standard deviation of the aggregate (Gaussian kinds only).
    double aggregate_sd() const;
    double aggregate_pdf(double y) const;
    double aggregate_dpdf(double y) const;
    double aggregate_cdf(double y) const;
    /// ES_alpha[-<1,L>] = (1/alpha) E[T 1_{T > q}].
    double es_aggregate(double alpha) const;

private:
    ClaimModel() = default;

    Kind kind_ = Kind::UnivariateDensity;
    int dim_ = 1;
    bool gaussian_univariate_ = false;
    double sigma_l_ = 0.0;  // gaussian univariate
    UnivariateClaim uni_;
    Eigen::MatrixXd cov_;
    Eigen::MatrixXd chol_;
    double agg_sd_ = 0.0;
};

/// q with F_{<1,L>}(q) = 1 - alpha, refined by a bracketed root solve on the
/// aggregate CDF (tolerance 1e-12 in probability).
double claim_quantile(const ClaimModel& claims, double alpha);

}  // namespace enp
