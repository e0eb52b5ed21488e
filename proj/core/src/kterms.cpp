#include "enp/kterms.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

#include "enp/errors.hpp"
#include "enp/math/normal.hpp"
#include "enp/math/quadrature.hpp"
#include "enp/rng.hpp"

namespace enp {

namespace {

constexpr int kMaxDim = 16;

// Assembles the derivative bundle from the hyperplane quantities h, h2
// and the aggregate density. Valid for any n >= 1 (for
// n = 1 the 1_perp terms are empty).
void assemble_derivatives(KTermBundle& b, const Eigen::MatrixXd& sigma_x,
                          const RotationMatrix* rot,
                          const Eigen::VectorXd& h_d1, double h2_d1) {
    const int n = static_cast<int>(sigma_x.rows());
    const double y = b.y;
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
    const double sig_sum = ones.dot(sigma_x * ones);

    b.kvec_d1 = Eigen::VectorXd::Constant(n, -(y / n) * b.f_agg);
    b.kvec_d2 =
        Eigen::VectorXd::Constant(n, -(b.f_agg + y * b.f_agg_d1) / n);
    double cross_d1 = 0.0;
    double cross_d2 = 0.0;
    if (n > 1) {
        const auto perp = rot->one_perp();
        b.kvec_d1 -= perp * b.h;
        b.kvec_d2 -= perp * h_d1;
        const Eigen::VectorXd sig_perp = perp.transpose() * (sigma_x * ones);
        cross_d1 = sig_perp.dot(b.h);
        cross_d2 = sig_perp.dot(b.h + y * h_d1);
    }
    b.kL_d1 = -(y * y) / (static_cast<double>(n) * n) * sig_sum * b.f_agg -
              (2.0 * y / n) * cross_d1 - b.h2;
    b.kL_d2 = -y / (static_cast<double>(n) * n) * sig_sum *
                  (2.0 * b.f_agg + y * b.f_agg_d1) -
              (2.0 / n) * cross_d2 - h2_d1;
}

// Allocation-free multivariate Gaussian density evaluation from the stored
// Cholesky factor; gradient is -f * Sigma^{-1} l.
struct GaussDensity {
    const Eigen::MatrixXd& chol;
    int n;
    double log_norm;

    explicit GaussDensity(const ClaimModel& claims)
        : chol(claims.covariance_cholesky()),
          n(claims.dimension()) {
        double log_det = 0.0;
        for (int i = 0; i < n; ++i) log_det += std::log(chol(i, i));
        log_norm = -0.5 * n * std::log(2.0 * M_PI) - log_det;
    }

    double operator()(const double* l) const {
        std::array<double, kMaxDim> z{};
        forward_solve(l, z.data());
        double q = 0.0;
        for (int i = 0; i < n; ++i) q += z[i] * z[i];
        return std::exp(log_norm - 0.5 * q);
    }

    // out = Sigma^{-1} l (forward then backward substitution)
    void siginv(const double* l, double* out) const {
        std::array<double, kMaxDim> z{};
        forward_solve(l, z.data());
        for (int i = n - 1; i >= 0; --i) {
            double acc = z[i];
            for (int k = i + 1; k < n; ++k) acc -= chol(k, i) * out[k];
            out[i] = acc / chol(i, i);
        }
    }

private:
    void forward_solve(const double* l, double* z) const {
        for (int i = 0; i < n; ++i) {
            double acc = l[i];
            for (int k = 0; k < i; ++k) acc -= chol(i, k) * z[k];
            z[i] = acc / chol(i, i);
        }
    }
};

// Integration box for the rotated coordinates: +-12 marginal standard
// deviations per rotated dimension (the claim densities in scope decay at
// least exponentially).
std::vector<std::pair<double, double>> rotated_bounds(
    const Eigen::MatrixXd& cov, const RotationMatrix& rot) {
    const Eigen::MatrixXd c = rot.d.transpose() * cov * rot.d;
    std::vector<std::pair<double, double>> bounds(cov.rows());
    for (Eigen::Index k = 0; k < cov.rows(); ++k) {
        const double sd = std::sqrt(c(k, k));
        bounds[static_cast<std::size_t>(k)] = {-12.0 * sd, 12.0 * sd};
    }
    return bounds;
}

}  // namespace

RotationMatrix rotation_matrix(int n) {
    if (n < 2) throw std::domain_error("rotation_matrix: n must be >= 2");
    RotationMatrix r;
    r.n = n;
    const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(n));
    Eigen::VectorXd e = Eigen::VectorXd::Constant(n, inv_sqrt_n);
    // Householder reflection mapping e1 onto e, then flip the last column to
    // land in SO(n).
    Eigen::VectorXd v = e;
    v(0) -= 1.0;
    const double vtv = v.squaredNorm();
    r.d = Eigen::MatrixXd::Identity(n, n) - (2.0 / vtv) * (v * v.transpose());
    r.d.col(n - 1) *= -1.0;
    return r;
}

KTermBundle k_bundle(const ClaimModel& claims, const Eigen::MatrixXd& sigma_x,
                     double y, KMethod method, const RotationMatrix* rotation) {
    const int n = claims.dimension();
    if (sigma_x.rows() != n || sigma_x.cols() != n) {
        throw std::invalid_argument("k_bundle: sigma_x shape mismatch");
    }
    if (!sigma_x.isApprox(sigma_x.transpose(), 1e-10)) {
        throw std::invalid_argument("k_bundle: sigma_x not symmetric");
    }
    if (n > kMaxDim) throw std::invalid_argument("k_bundle: dimension too large");

    KTermBundle b;
    b.y = y;
    b.h = Eigen::VectorXd::Zero(std::max(0, n - 1));
    Eigen::VectorXd h_d1 = Eigen::VectorXd::Zero(std::max(0, n - 1));
    double h2_d1 = 0.0;

    if (n == 1) {
        // Scalar case: the hyperplane terms vanish identically.
        b.f_agg = claims.aggregate_pdf(y);
        b.f_agg_d1 = claims.aggregate_dpdf(y);
        if (!(b.f_agg > 0.0)) {
            throw std::domain_error("k_bundle: density must be positive at y");
        }
        double k0;
        if (method == KMethod::Quadrature) {
            const double hi = claims.quantile(1.0 - 1e-15);
            const double pad = std::max(hi - claims.quantile(0.5), 1e-3);
            k0 = math::gk_integrate_checked(
                [&](double l) { return l * claims.aggregate_pdf(l); }, y,
                std::max(hi + pad, y + pad), 1e-8);
        } else if (claims.is_multivariate()) {
            k0 = claims.covariance()(0, 0) * b.f_agg;
        } else {
            k0 = claims.partial_moment(1, y);
        }
        b.kvec = Eigen::VectorXd::Constant(1, k0);
        assemble_derivatives(b, sigma_x, nullptr, h_d1, h2_d1);
        return b;
    }

    if (!claims.is_multivariate()) {
        throw std::domain_error("k_bundle: n > 1 requires a multivariate claim model");
    }

    RotationMatrix default_rot;
    if (rotation == nullptr) {
        default_rot = rotation_matrix(n);
        rotation = &default_rot;
    }
    const auto perp = rotation->one_perp();
    const double sqrt_n = std::sqrt(static_cast<double>(n));

    const bool closed = (method != KMethod::Quadrature);
    if (closed) {
        // Gaussian claims: conditional-moment closed forms of the hyperplane
        // integrals, then the same derivative assembly as the general route.
        const Eigen::MatrixXd& cov = claims.covariance();
        const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
        const Eigen::VectorXd u = cov * ones;
        const double s2 = ones.dot(u);
        const double s = std::sqrt(s2);
        b.f_agg = math::gauss_pdf(y, s);
        b.f_agg_d1 = math::gauss_dpdf(y, s);

        const Eigen::VectorXd w = (perp.transpose() * u) / s2;
        b.h = w * (y * b.f_agg);
        h_d1 = w * (b.f_agg + y * b.f_agg_d1);

        const Eigen::MatrixXd bmat = perp.transpose() * sigma_x * perp;
        const Eigen::MatrixXd cond =
            perp.transpose() * (cov - (u * u.transpose()) / s2) * perp;
        const double trace_term = (bmat * cond).trace();
        const double quad_term = w.dot(bmat * w);
        b.h2 = b.f_agg * (trace_term + quad_term * y * y);
        h2_d1 = b.f_agg_d1 * (trace_term + quad_term * y * y) +
                2.0 * quad_term * y * b.f_agg;

        b.kvec = u * b.f_agg;
        assemble_derivatives(b, sigma_x, rotation, h_d1, h2_d1);
        return b;
    }

    // Quadrature route: hyperplane integrals of the rotated density at
    // lambda_1 = y/sqrt(n); derivatives differentiate under the integral via
    // the density gradient.
    GaussDensity dens(claims);
    const Eigen::MatrixXd& dmat = rotation->d;
    const auto bounds_full = rotated_bounds(claims.covariance(), *rotation);
    std::vector<std::pair<double, double>> bounds_bar(bounds_full.begin() + 1,
                                                      bounds_full.end());
    const double t = y / sqrt_n;

    auto to_state = [&](double lam1, const double* lam_bar, double* l) {
        for (int i = 0; i < n; ++i) {
            double acc = dmat(i, 0) * lam1;
            for (int k = 1; k < n; ++k) acc += dmat(i, k) * lam_bar[k - 1];
            l[i] = acc;
        }
    };
    auto d1g = [&](const double* l, double g) {
        std::array<double, kMaxDim> si{};
        dens.siginv(l, si.data());
        double grad_dot_one = 0.0;
        for (int i = 0; i < n; ++i) grad_dot_one += si[i];
        return -g * grad_dot_one / sqrt_n;  // <grad f, 1>/sqrt(n)
    };

    const Eigen::VectorXd sig_ones = sigma_x * Eigen::VectorXd::Ones(n);
    const Eigen::MatrixXd bmat = perp.transpose() * sigma_x * perp;

    // One pass per scalar integral over the (n-1)-dim hyperplane box.
    auto hyperplane = [&](auto&& weight) {
        return math::integrate_box(
            [&](const double* lam_bar) {
                std::array<double, kMaxDim> l{};
                to_state(t, lam_bar, l.data());
                const double g = dens(l.data());
                return weight(lam_bar, l.data(), g);
            },
            bounds_bar, 1e-11);
    };

    const double g0 = hyperplane([](const double*, const double*, double g) { return g; });
    const double g0d =
        hyperplane([&](const double*, const double* l, double g) { return d1g(l, g); });
    b.f_agg = g0 / sqrt_n;
    b.f_agg_d1 = g0d / static_cast<double>(n);
    for (int k = 0; k < n - 1; ++k) {
        b.h(k) = hyperplane([k](const double* lb, const double*, double g) {
                     return lb[k] * g;
                 }) /
                 sqrt_n;
        h_d1(k) = hyperplane([&, k](const double* lb, const double* l, double g) {
                      return lb[k] * d1g(l, g);
                  }) /
                  static_cast<double>(n);
    }
    auto bquad = [&](const double* lb) {
        double acc = 0.0;
        for (int i = 0; i < n - 1; ++i)
            for (int j = 0; j < n - 1; ++j) acc += lb[i] * bmat(i, j) * lb[j];
        return acc;
    };
    b.h2 = hyperplane([&](const double* lb, const double*, double g) {
               return bquad(lb) * g;
           }) /
           sqrt_n;
    h2_d1 = hyperplane([&](const double* lb, const double* l, double g) {
                return bquad(lb) * d1g(l, g);
            }) /
            static_cast<double>(n);

    // K(y) itself: outer integral of the hyperplane moments over lambda_1.
    const double hi1 = std::max(t, 0.0) + bounds_full[0].second;
    auto outer = [&](auto&& weight) {
        return math::gk_adaptive(
                   [&](double lam1) {
                       return math::integrate_box(
                           [&](const double* lam_bar) {
                               std::array<double, kMaxDim> l{};
                               to_state(lam1, lam_bar, l.data());
                               const double g = dens(l.data());
                               return weight(lam1, lam_bar, g);
                           },
                           bounds_bar, 1e-11);
                   },
                   t, hi1, 1e-15, 1e-11, 256)
            .value;
    };
    const double alpha =
        outer([&](double lam1, const double*, double g) { return lam1 / sqrt_n * g; });
    Eigen::VectorXd gamma(n - 1);
    for (int k = 0; k < n - 1; ++k) {
        gamma(k) = outer(
            [k](double, const double* lb, double g) { return lb[k] * g; });
    }
    b.kvec = Eigen::VectorXd::Constant(n, alpha) + perp * gamma;

    assemble_derivatives(b, sigma_x, rotation, h_d1, h2_d1);
    return b;
}

KReference k_reference_quadrature(const ClaimModel& claims,
                                  const Eigen::MatrixXd& sigma_x, double y,
                                  double rel_tol) {
    const int n = claims.dimension();
    KReference ref;
    ref.kvec = Eigen::VectorXd::Zero(n);
    if (n == 1) {
        const double sd_hint = claims.is_multivariate()
                                   ? claims.aggregate_sd()
                                   : claims.quantile(1.0 - 1e-12) - claims.quantile(0.5);
        const double hi = std::max(y, 0.0) + 14.0 * std::fabs(sd_hint);
        ref.kvec(0) =
            math::gk_adaptive([&](double l) { return l * claims.aggregate_pdf(l); },
                              y, hi, 1e-16, rel_tol, 1024)
                .value;
        ref.kL =
            sigma_x(0, 0) *
            math::gk_adaptive([&](double l) { return l * l * claims.aggregate_pdf(l); },
                              y, hi, 1e-16, rel_tol, 1024)
                .value;
        return ref;
    }
    if (!claims.is_multivariate()) {
        throw std::domain_error("k_reference_quadrature: multivariate model needed");
    }

    const RotationMatrix rot = rotation_matrix(n);
    GaussDensity dens(claims);
    auto bounds = rotated_bounds(claims.covariance(), rot);
    const double sqrt_n = std::sqrt(static_cast<double>(n));
    const double t = y / sqrt_n;
    bounds[0] = {t, std::max(t, 0.0) + bounds[0].second};

    auto region = [&](auto&& weight) {
        return math::integrate_box(
            [&](const double* lam) {
                std::array<double, kMaxDim> l{};
                for (int i = 0; i < n; ++i) {
                    double acc = 0.0;
                    for (int k = 0; k < n; ++k) acc += rot.d(i, k) * lam[k];
                    l[i] = acc;
                }
                return weight(l.data()) * dens(l.data());
            },
            bounds, rel_tol);
    };
    // The n+1 region integrals are independent; evaluate them in parallel.
    parallel_chunks(default_jobs(), static_cast<std::size_t>(n) + 1,
                    [&](std::size_t task) {
                        if (task < static_cast<std::size_t>(n)) {
                            const int i = static_cast<int>(task);
                            ref.kvec(i) = region([i](const double* l) { return l[i]; });
                            return;
                        }
                        ref.kL = region([&](const double* l) {
                            double acc = 0.0;
                            for (int i = 0; i < n; ++i)
                                for (int j = 0; j < n; ++j)
                                    acc += l[i] * sigma_x(i, j) * l[j];
                            return acc;
                        });
                    });
    return ref;
}

double k_univariate(const ClaimModel& claims, double phi, double y, int j,
                    int deriv) {
    if (claims.is_multivariate()) {
        throw std::domain_error("k_univariate: univariate claim model required");
    }
    if (j < 0 || j > 4) throw std::invalid_argument("k_univariate: j in [0,4]");
    if (deriv < 0 || deriv > 4) {
        throw std::invalid_argument("k_univariate: deriv in [0,4]");
    }
    if (deriv == 0) {
        static constexpr std::array<std::array<double, 5>, 5> binom = {{
            {1, 0, 0, 0, 0},
            {1, 1, 0, 0, 0},
            {1, 2, 1, 0, 0},
            {1, 3, 3, 1, 0},
            {1, 4, 6, 4, 1},
        }};
        double acc = 0.0;
        for (int m = 0; m <= j; ++m) {
            const double sign = (m % 2 == 0) ? 1.0 : -1.0;
            acc += binom[j][m] * std::pow(phi, j - m) * sign *
                   claims.partial_moment(m, y);
        }
        return acc;
    }
    // K_j' = -(phi - id)^j f, then product-rule recursion on terms
    // c * (phi - y)^p * f^{(k)}.
    struct Term {
        double c;
        int p;
        int k;
    };
    std::vector<Term> terms = {{-1.0, j, 0}};
    for (int d = 1; d < deriv; ++d) {
        std::vector<Term> next;
        next.reserve(terms.size() * 2);
        for (const Term& t : terms) {
            if (t.p > 0) next.push_back({-t.c * t.p, t.p - 1, t.k});
            next.push_back({t.c, t.p, t.k + 1});
        }
        terms = std::move(next);
    }
    int max_k = 0;
    for (const Term& t : terms) max_k = std::max(max_k, t.k);
    if (max_k >= 3 && !claims.has_d3pdf()) {
        throw std::domain_error(
            "k_univariate: derivative order needs the third density derivative, "
            "which this claim model does not provide");
    }
    auto f_deriv = [&](int k, double x) {
        switch (k) {
            case 0: return claims.pdf(x);
            case 1: return claims.dpdf(x);
            case 2: return claims.d2pdf(x);
            case 3: return claims.d3pdf(x);
            default:
                throw std::domain_error("k_univariate: insufficient density derivatives");
        }
    };
    double acc = 0.0;
    for (const Term& t : terms) {
        acc += t.c * std::pow(phi - y, t.p) * f_deriv(t.k, y);
    }
    return acc;
}

double kderiv_finite_difference_check(const ClaimModel& claims,
                                      const Eigen::MatrixXd& sigma_x, double y,
                                      double step, double quad_rel_tol) {
    if (!(step > 0.0)) {
        throw std::invalid_argument("kderiv_finite_difference_check: step > 0");
    }
    const KTermBundle analytic = k_bundle(claims, sigma_x, y);
    const double tol = quad_rel_tol;
    const KReference up = k_reference_quadrature(claims, sigma_x, y + step, tol);
    const KReference dn = k_reference_quadrature(claims, sigma_x, y - step, tol);
    const KReference mid = k_reference_quadrature(claims, sigma_x, y, tol);

    const int n = claims.dimension();
    double max_rel = 0.0;
    auto update = [&](double got, double fd, double scale) {
        const double denom = std::max(std::fabs(got), scale);
        max_rel = std::max(max_rel, std::fabs(got - fd) / denom);
    };
    const double kscale = mid.kvec.cwiseAbs().maxCoeff();
    for (int i = 0; i < n; ++i) {
        const double fd1 = (up.kvec(i) - dn.kvec(i)) / (2.0 * step);
        const double fd2 =
            (up.kvec(i) - 2.0 * mid.kvec(i) + dn.kvec(i)) / (step * step);
        update(analytic.kvec_d1(i), fd1, kscale);
        update(analytic.kvec_d2(i), fd2, kscale);
    }
    const double fd1 = (up.kL - dn.kL) / (2.0 * step);
    const double fd2 = (up.kL - 2.0 * mid.kL + dn.kL) / (step * step);
    update(analytic.kL_d1, fd1, std::fabs(mid.kL));
    update(analytic.kL_d2, fd2, std::fabs(mid.kL));
    return max_rel;
}

}  // namespace enp
