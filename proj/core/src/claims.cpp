#include "enp/claims.hpp"

#include <cmath>
#include <stdexcept>

#include "enp/errors.hpp"
#include "enp/math/normal.hpp"
#include "enp/math/quadrature.hpp"
#include "enp/math/roots.hpp"

namespace enp {

namespace {

// \int_y^inf l^k phi(l; sigma) dl by the Gaussian partial-moment recursion
// I_k = sigma^2 [ y^{k-1} f(y) + (k-1) I_{k-2} ].
double gauss_partial_moment(int k, double y, double sigma) {
    const double s2 = sigma * sigma;
    const double fy = math::gauss_pdf(y, sigma);
    double i0 = math::normal_tail(y / sigma);
    if (k == 0) return i0;
    double i1 = s2 * fy;
    if (k == 1) return i1;
    double ylow = 1.0;  // y^{k-1} built up incrementally
    double prev = i0, cur = i1;
    for (int m = 2; m <= k; ++m) {
        ylow *= y;
        const double next = s2 * (ylow * fy + (m - 1) * prev);
        prev = cur;
        cur = next;
    }
    return cur;
}

}  // namespace

ClaimModel ClaimModel::gaussian(double sigma_l) {
    if (!(sigma_l > 0.0)) {
        throw std::invalid_argument("ClaimModel::gaussian: sigma_l must be > 0");
    }
    ClaimModel c;
    c.kind_ = Kind::UnivariateDensity;
    c.dim_ = 1;
    c.gaussian_univariate_ = true;
    c.sigma_l_ = sigma_l;
    c.agg_sd_ = sigma_l;
    return c;
}

ClaimModel ClaimModel::univariate(UnivariateClaim spec) {
    if (!spec.pdf || !spec.dpdf || !spec.d2pdf || !spec.quantile || !spec.sampler) {
        throw std::invalid_argument(
            "ClaimModel::univariate: pdf, dpdf, d2pdf, quantile and sampler are "
            "required");
    }
    ClaimModel c;
    c.kind_ = Kind::UnivariateDensity;
    c.dim_ = 1;
    c.uni_ = std::move(spec);
    return c;
}

ClaimModel ClaimModel::multivariate_gaussian(Eigen::MatrixXd cov) {
    const auto n = cov.rows();
    if (n < 1 || cov.cols() != n) {
        throw std::invalid_argument("multivariate_gaussian: covariance not square");
    }
    if (!cov.isApprox(cov.transpose(), 1e-12)) {
        throw std::invalid_argument("multivariate_gaussian: covariance not symmetric");
    }
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success) {
        throw std::invalid_argument(
            "multivariate_gaussian: covariance not positive definite");
    }
    ClaimModel c;
    c.kind_ = Kind::MultivariateGaussian;
    c.dim_ = static_cast<int>(n);
    c.cov_ = std::move(cov);
    c.chol_ = llt.matrixL();
    c.agg_sd_ = std::sqrt(Eigen::VectorXd::Ones(n).dot(c.cov_ * Eigen::VectorXd::Ones(n)));
    return c;
}

double ClaimModel::pdf(double y) const {
    if (is_multivariate()) throw std::domain_error("pdf: univariate models only");
    if (gaussian_univariate_) return math::gauss_pdf(y, sigma_l_);
    return uni_.pdf(y);
}

double ClaimModel::dpdf(double y) const {
    if (is_multivariate()) throw std::domain_error("dpdf: univariate models only");
    if (gaussian_univariate_) return math::gauss_dpdf(y, sigma_l_);
    return uni_.dpdf(y);
}

double ClaimModel::d2pdf(double y) const {
    if (is_multivariate()) throw std::domain_error("d2pdf: univariate models only");
    if (gaussian_univariate_) return math::gauss_d2pdf(y, sigma_l_);
    return uni_.d2pdf(y);
}

bool ClaimModel::has_d3pdf() const {
    return gaussian_univariate_ || static_cast<bool>(uni_.d3pdf);
}

double ClaimModel::d3pdf(double y) const {
    if (is_multivariate()) throw std::domain_error("d3pdf: univariate models only");
    if (gaussian_univariate_) return math::gauss_d3pdf(y, sigma_l_);
    if (!uni_.d3pdf) {
        throw std::domain_error("d3pdf: third density derivative not available");
    }
    return uni_.d3pdf(y);
}

double ClaimModel::cdf(double y) const {
    if (is_multivariate()) throw std::domain_error("cdf: use aggregate_cdf");
    if (gaussian_univariate_) return math::normal_cdf(y / sigma_l_);
    if (uni_.cdf) return uni_.cdf(y);
    // Integrate the density upward from far below the support of interest.
    const double lo = uni_.quantile(1e-14);
    const double pad = uni_.quantile(0.5) - lo;  // ~half the lower range
    if (y <= lo - pad) return 0.0;
    return math::gk_adaptive(uni_.pdf, lo - pad, y, 1e-14, 1e-11, 1024).value;
}

double ClaimModel::quantile(double p) const {
    if (!(p > 0.0 && p < 1.0)) {
        throw std::domain_error("ClaimModel::quantile: p must be in (0,1)");
    }
    if (is_multivariate()) return agg_sd_ * math::normal_quantile(p);
    if (gaussian_univariate_) return sigma_l_ * math::normal_quantile(p);
    return uni_.quantile(p);
}

double ClaimModel::sample(double u) const {
    if (is_multivariate()) {
        throw std::domain_error("sample(u): univariate models only");
    }
    if (gaussian_univariate_) return sigma_l_ * math::normal_quantile(u);
    return uni_.sampler(u);
}

double ClaimModel::moment(int i) const {
    if (is_multivariate()) throw std::domain_error("moment: univariate models only");
    if (i < 0 || i > 4) throw std::invalid_argument("moment: order must be <= 4");
    if (i == 0) return 1.0;
    if (gaussian_univariate_) {
        switch (i) {
            case 1: return 0.0;
            case 2: return sigma_l_ * sigma_l_;
            case 3: return 0.0;
            case 4: return 3.0 * std::pow(sigma_l_, 4);
        }
    }
    const double lo = uni_.quantile(1e-14);
    const double hi = uni_.quantile(1.0 - 1e-14);
    const double pad = 0.5 * (hi - lo);
    return math::gk_adaptive(
               [&](double l) { return std::pow(l, i) * uni_.pdf(l); }, lo - pad,
               hi + pad, 1e-14, 1e-11, 2048)
        .value;
}

double ClaimModel::partial_moment(int j, double y) const {
    if (is_multivariate()) {
        throw std::domain_error("partial_moment: univariate models only");
    }
    if (j < 0 || j > 4) throw std::invalid_argument("partial_moment: j must be <= 4");
    if (gaussian_univariate_) return gauss_partial_moment(j, y, sigma_l_);
    const double hi = uni_.quantile(1.0 - 1e-15);
    const double pad = hi - uni_.quantile(0.5);
    const double upper = std::max(hi + pad, y + pad);
    if (y >= upper) return 0.0;
    return math::gk_adaptive(
               [&](double l) { return std::pow(l, j) * uni_.pdf(l); }, y, upper,
               1e-15, 1e-11, 2048)
        .value;
}

const Eigen::MatrixXd& ClaimModel::covariance() const {
    if (!is_multivariate()) {
        throw std::domain_error("covariance: multivariate models only");
    }
    return cov_;
}

const Eigen::MatrixXd& ClaimModel::covariance_cholesky() const {
    if (!is_multivariate()) {
        throw std::domain_error("covariance_cholesky: multivariate models only");
    }
    return chol_;
}

double ClaimModel::density_mv(const Eigen::VectorXd& l) const {
    if (!is_multivariate()) {
        throw std::domain_error("density_mv: multivariate models only");
    }
    // Solve L z = l against the stored Cholesky factor.
    const Eigen::VectorXd z = chol_.triangularView<Eigen::Lower>().solve(l);
    double log_det = 0.0;
    for (int i = 0; i < dim_; ++i) log_det += std::log(chol_(i, i));
    const double log_norm =
        -0.5 * dim_ * std::log(2.0 * M_PI) - log_det - 0.5 * z.squaredNorm();
    return std::exp(log_norm);
}

Eigen::VectorXd ClaimModel::density_gradient_mv(const Eigen::VectorXd& l) const {
    // grad f = -f * Sigma^{-1} l
    const double f = density_mv(l);
    const Eigen::VectorXd z = chol_.triangularView<Eigen::Lower>().solve(l);
    const Eigen::VectorXd siginv_l =
        chol_.transpose().triangularView<Eigen::Upper>().solve(z);
    return -f * siginv_l;
}

double ClaimModel::aggregate_sd() const {
    if (is_multivariate() || gaussian_univariate_) return agg_sd_;
    throw std::domain_error("aggregate_sd: closed form only for Gaussian kinds");
}

double ClaimModel::aggregate_pdf(double y) const {
    if (is_multivariate()) return math::gauss_pdf(y, agg_sd_);
    return pdf(y);
}

double ClaimModel::aggregate_dpdf(double y) const {
    if (is_multivariate()) return math::gauss_dpdf(y, agg_sd_);
    return dpdf(y);
}

double ClaimModel::aggregate_cdf(double y) const {
    if (is_multivariate()) return math::normal_cdf(y / agg_sd_);
    return cdf(y);
}

double ClaimModel::es_aggregate(double alpha) const {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw std::domain_error("es_aggregate: alpha must be in (0,1)");
    }
    const double q = claim_quantile(*this, alpha);
    if (is_multivariate() || gaussian_univariate_) {
        return agg_sd_ * math::normal_pdf(q / agg_sd_) / alpha;
    }
    return partial_moment(1, q) / alpha;
}

double claim_quantile(const ClaimModel& claims, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw std::domain_error("claim_quantile: alpha must be in (0,1)");
    }
    const double p = 1.0 - alpha;
    if (claims.is_multivariate()) {
        return claims.aggregate_sd() * math::normal_quantile(p);
    }
    // Start from the model's quantile evaluator and refine so the contract
    // F(q) = 1 - alpha holds to 1e-12 even for approximate user evaluators.
    const double guess = claims.quantile(p);
    const double f_at_guess = claims.pdf(guess);
    if (!(f_at_guess > 0.0)) {
        throw numeric_error("claim_quantile: density vanishes at the bracket",
                            f_at_guess);
    }
    const double step = std::max(1e-3, 0.1 * std::fabs(guess));
    auto obj = [&](double y) { return claims.cdf(y) - p; };
    const double root = math::bracketed_root(obj, guess - step, guess + step, 1e-14);
    const double residual = std::fabs(obj(root));
    if (residual > 1e-10) {
        throw numeric_error("claim_quantile: CDF root refinement too loose", residual);
    }
    return root;
}

}  // namespace enp
