#include "enp/expansions.hpp"

#include <cmath>
#include <stdexcept>

#include "enp/errors.hpp"
#include "enp/kterms.hpp"
#include "enp/math/normal.hpp"

namespace enp {

namespace {

constexpr double kTiny = 1e-14;

Eigen::VectorXd to_eigen(const Allocation& phi) {
    return Eigen::Map<const Eigen::VectorXd>(phi.phi().data(),
                                             static_cast<Eigen::Index>(phi.size()));
}

void require_dimension(const MarketModel& model, const Allocation& phi) {
    if (static_cast<int>(phi.size()) != model.n()) {
        throw std::invalid_argument("allocation dimension does not match model");
    }
}

void require_univariate(const MarketModel& model, const char* who) {
    if (model.n() != 1 || model.claims().is_multivariate()) {
        throw std::domain_error(std::string(who) + ": univariate model required");
    }
}

OptimalAllocation finalize_allocation(Eigen::VectorXd phi, AllocationMethod method) {
    OptimalAllocation out;
    out.method = method;
    out.clipped = false;
    for (Eigen::Index i = 0; i < phi.size(); ++i) {
        if (phi(i) < 0.0) {
            phi(i) = 0.0;
            out.clipped = true;
        }
    }
    out.phi_star = std::move(phi);
    out.total = out.phi_star.sum();
    return out;
}

// Volatility scale and standardized driver moments for the univariate
// expansions. The normal-volatility route is exact for any asset kind
// (sigma_N = sd(X), mu_i the standardized central moments); the log-normal
// route requires a log-normal-kind asset.
struct VolParams {
    double sigma = 0.0;
    double mu3 = 0.0;
    double mu4 = 0.0;
};

VolParams vol_params(const AssetFamily& asset, VolKind requested) {
    VolParams v;
    if (requested == VolKind::LogNormal) {
        if (asset.vol_kind() != VolKind::LogNormal) {
            throw std::domain_error(
                "log-normal volatility expansion requires a log-normal asset");
        }
        v.sigma = asset.sigma();
        v.mu3 = asset.driver().mu3();
        v.mu4 = asset.driver().mu4();
        return v;
    }
    const CentralMoments cm = asset.exact_central_moments(4);
    if (cm.m2 <= 0.0) return v;  // sigma = 0: constant asset
    v.sigma = std::sqrt(cm.m2);
    v.mu3 = cm.m3 / (cm.m2 * v.sigma);
    v.mu4 = cm.m4 / (cm.m2 * cm.m2);
    return v;
}

// Density values and derivatives of the (aggregate) claim law at q.
struct DensityAtQ {
    double f = 0.0, f1 = 0.0, f2 = 0.0, f3 = 0.0;
    bool has_f3 = false;
};

DensityAtQ density_at(const ClaimModel& claims, double q, bool need_f3) {
    DensityAtQ d;
    d.f = claims.pdf(q);
    d.f1 = claims.dpdf(q);
    d.f2 = claims.d2pdf(q);
    d.has_f3 = claims.has_d3pdf();
    if (need_f3) {
        if (!d.has_f3) {
            throw std::domain_error(
                "fourth-order expansion needs the third density derivative");
        }
        d.f3 = claims.d3pdf(q);
    }
    if (!(d.f > 0.0)) {
        throw std::domain_error("claim density must be positive at its quantile");
    }
    return d;
}

}  // namespace

ExpansionResult var2_multi(const MarketModel& model, const Allocation& phi,
                           double alpha) {
    require_dimension(model, phi);
    const double q = claim_quantile(model.claims(), alpha);
    const Eigen::MatrixXd& sigma = model.asset_covariance();
    const KTermBundle kb = k_bundle(model.claims(), sigma, q);
    if (!(kb.f_agg > 0.0)) {
        throw std::domain_error("var2_multi: aggregate density vanishes at q");
    }
    const Eigen::VectorXd p = to_eigen(phi);
    const Eigen::VectorXd sp = sigma * p;
    const double bracket =
        p.dot(sp) * kb.f_agg_d1 + 2.0 * sp.dot(kb.kvec_d2) - kb.kL_d2;

    ExpansionResult r;
    r.measure = Measure::VaR;
    r.order = 2;
    r.z0 = -q;
    r.z2 = bracket / (2.0 * kb.f_agg);
    r.value = -(r.z0 + r.z2);
    return r;
}

OptimalAllocation phi_star_var2_multi(const MarketModel& model, double alpha) {
    const double q = claim_quantile(model.claims(), alpha);
    const Eigen::MatrixXd& sigma = model.asset_covariance();
    Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    if (llt.info() != Eigen::Success) {
        throw std::domain_error("phi_star_var2_multi: asset covariance not invertible");
    }
    const KTermBundle kb = k_bundle(model.claims(), sigma, q);
    if (std::fabs(kb.f_agg_d1) < kTiny) {
        throw degenerate_error(
            "phi_star_var2_multi: f'(q) = 0; use phi_star_var3_1d or the ES "
            "allocation instead");
    }
    return finalize_allocation(-kb.kvec_d2 / kb.f_agg_d1, AllocationMethod::VaR2);
}

ExpansionResult es2_multi(const MarketModel& model, const Allocation& phi,
                          double alpha) {
    require_dimension(model, phi);
    const double q = claim_quantile(model.claims(), alpha);
    const Eigen::MatrixXd& sigma = model.asset_covariance();
    const KTermBundle kb = k_bundle(model.claims(), sigma, q);
    if (!(kb.f_agg > 0.0)) {
        throw std::domain_error("es2_multi: aggregate density vanishes at q");
    }
    const Eigen::VectorXd p = to_eigen(phi);
    const Eigen::VectorXd sp = sigma * p;
    const double bracket =
        p.dot(sp) * kb.f_agg + 2.0 * sp.dot(kb.kvec_d1) - kb.kL_d1;

    ExpansionResult r;
    r.measure = Measure::ES;
    r.order = 2;
    r.z0 = -model.claims().es_aggregate(alpha);
    r.z2 = -bracket / (2.0 * alpha);
    r.value = -(r.z0 + r.z2);
    return r;
}

OptimalAllocation phi_star_es2_multi(const MarketModel& model, double alpha) {
    const double q = claim_quantile(model.claims(), alpha);
    const Eigen::MatrixXd& sigma = model.asset_covariance();
    const KTermBundle kb = k_bundle(model.claims(), sigma, q);
    if (!(kb.f_agg > 0.0)) {
        throw std::domain_error("phi_star_es2_multi: aggregate density vanishes at q");
    }
    const AllocationMethod method = (model.n() == 1)
                                        ? AllocationMethod::SpecialPointES
                                        : AllocationMethod::ES2;
    return finalize_allocation(-kb.kvec_d1 / kb.f_agg, method);
}

OptimalAllocation covariance_allocation(const MarketModel& model, double alpha,
                                        Measure measure) {
    const ClaimModel& claims = model.claims();
    if (!claims.is_multivariate()) {
        throw std::domain_error(
            "covariance_allocation: multivariate Gaussian claims required");
    }
    const Eigen::Index n = claims.covariance().rows();
    const Eigen::VectorXd u = claims.covariance() * Eigen::VectorXd::Ones(n);
    const double total_var = u.sum();
    if (!(total_var > 0.0)) {
        throw std::domain_error("covariance_allocation: <1, Sigma_L 1> must be > 0");
    }
    const double q = claim_quantile(claims, alpha);
    double phi0;
    if (measure == Measure::ES) {
        phi0 = q;
    } else {
        const double f = claims.aggregate_pdf(q);
        const double f1 = claims.aggregate_dpdf(q);
        if (std::fabs(f1) < kTiny) {
            throw degenerate_error("covariance_allocation: f'(q) = 0");
        }
        phi0 = q + f / f1;
    }
    return finalize_allocation((u / total_var) * phi0,
                               AllocationMethod::CovarianceAlloc);
}

ExpansionResult var_expand_1d(const MarketModel& model, double phi, double alpha,
                              int order, VolKind vol_kind) {
    require_univariate(model, "var_expand_1d");
    if (order < 2 || order > 4) {
        throw std::invalid_argument("var_expand_1d: order must be in {2,3,4}");
    }
    const ClaimModel& claims = model.claims();
    const double q = claim_quantile(claims, alpha);
    const VolParams v = vol_params(model.asset(0), vol_kind);
    const DensityAtQ d = density_at(claims, q, order >= 4);

    const double p = phi - q;
    const double p2 = p * p, p3 = p2 * p, p4 = p2 * p2;
    const double s2 = v.sigma * v.sigma;
    const double s3 = s2 * v.sigma;
    const double s4 = s2 * s2;

    // G = [(phi-id)^2 f]'(q) and its derivative, shared by both vol kinds.
    const double g = -2.0 * p * d.f + p2 * d.f1;
    const double g1 = 2.0 * d.f - 4.0 * p * d.f1 + p2 * d.f2;

    ExpansionResult r;
    r.measure = Measure::VaR;
    r.order = order;
    r.vol_kind = vol_kind;
    r.z0 = -q;
    r.z2 = s2 / (2.0 * d.f) * g;

    if (order >= 3) {
        const double a3 = (vol_kind == VolKind::LogNormal)
                              // [(phi-id)^3 f']'(q)
                              ? -3.0 * p2 * d.f1 + p3 * d.f2
                              // [(phi-id)^3 f]''(q)
                              : 6.0 * p * d.f - 6.0 * p2 * d.f1 + p3 * d.f2;
        r.z3 = s3 * v.mu3 / (6.0 * d.f) * a3;
    }
    if (order >= 4) {
        const double t2 = -3.0 * (2.0 * g * g1 / d.f - g * g * d.f1 / (d.f * d.f));
        double a4;
        if (vol_kind == VolKind::LogNormal) {
            const double t1 = v.mu4 * (12.0 * p2 * d.f1 - 8.0 * p3 * d.f2 + p4 * d.f3);
            const double t3 = (2.0 * v.mu4 - 6.0) * (-3.0 * p2 * d.f1 + p3 * d.f2);
            const double t4 = (v.mu4 + 3.0) * g;
            a4 = t1 + t2 + t3 + t4;
        } else {
            const double t1 =
                v.mu4 * (-24.0 * p * d.f + 36.0 * p2 * d.f1 - 12.0 * p3 * d.f2 +
                         p4 * d.f3);
            a4 = t1 + t2;
        }
        r.z4 = s4 / (24.0 * d.f) * a4;
    }
    r.value = -(r.z0 + r.z2 + r.z3 + r.z4);
    return r;
}

PhiStar1d phi_star_var3_1d(const MarketModel& model, double alpha, double sigma) {
    require_univariate(model, "phi_star_var3_1d");
    if (sigma < 0.0) throw std::domain_error("phi_star_var3_1d: sigma < 0");
    const ClaimModel& claims = model.claims();
    const double q = claim_quantile(claims, alpha);
    const DensityAtQ d = density_at(claims, q, false);
    const double mu3 = model.asset(0).driver().mu3();

    PhiStar1d out;
    auto skewless = [&]() {
        if (std::fabs(d.f1) < kTiny) {
            throw degenerate_error(
                "phi_star_var3_1d: both mu3 f''(q) and f'(q) vanish");
        }
        return q + d.f / d.f1;
    };

    if (std::fabs(mu3 * sigma) < kTiny || std::fabs(d.f2) < kTiny) {
        out.phi_star = skewless();
        return out;
    }
    // Stationary points of the third-order polynomial in psi = phi - q:
    // minimize (a/3) psi^3 + (b/2) psi^2 + c psi with the coefficients below;
    // the root with 2a psi + b = +sqrt(disc) is the local minimum for either
    // sign of mu3.
    const double a = -0.5 * mu3 * sigma * sigma * sigma * (d.f2 / d.f);
    const double b = (mu3 * sigma - 1.0) * sigma * sigma * (d.f1 / d.f);
    const double c = sigma * sigma;
    const double disc = b * b - 4.0 * a * c;
    if (disc < 0.0) {
        // Extreme (sigma, mu3): no real stationary point of the cubic.
        out.phi_star = skewless();
        out.used_fallback = true;
        return out;
    }
    const double psi = (-b + std::sqrt(disc)) / (2.0 * a);
    out.phi_star = q + psi;
    return out;
}

ExpansionResult es_expand_1d(const MarketModel& model, double phi, double alpha,
                             int order, VolKind vol_kind) {
    require_univariate(model, "es_expand_1d");
    if (order < 2 || order > 4) {
        throw std::invalid_argument("es_expand_1d: order must be in {2,3,4}");
    }
    const ClaimModel& claims = model.claims();
    const double q = claim_quantile(claims, alpha);
    const VolParams v = vol_params(model.asset(0), vol_kind);
    const DensityAtQ d = density_at(claims, q, false);

    const double p = phi - q;
    const double p2 = p * p, p3 = p2 * p, p4 = p2 * p2;
    const double s2 = v.sigma * v.sigma;
    const double s3 = s2 * v.sigma;
    const double s4 = s2 * s2;
    const double g = -2.0 * p * d.f + p2 * d.f1;

    ExpansionResult r;
    r.measure = Measure::ES;
    r.order = order;
    r.vol_kind = vol_kind;
    r.z0 = -claims.es_aggregate(alpha);
    r.z2 = -s2 / (2.0 * alpha) * p2 * d.f;

    if (order >= 3) {
        const double a3 = (vol_kind == VolKind::LogNormal)
                              ? p3 * d.f1
                              // [(phi-id)^3 f]'(q)
                              : -3.0 * p2 * d.f + p3 * d.f1;
        r.z3 = -s3 * v.mu3 / (6.0 * alpha) * a3;
    }
    if (order >= 4) {
        const double t2 = -3.0 * g * g / d.f;
        double a4;
        if (vol_kind == VolKind::LogNormal) {
            const double t1 = v.mu4 * (-4.0 * p3 * d.f1 + p4 * d.f2);
            const double t3 = (2.0 * v.mu4 - 6.0) * p3 * d.f1;
            const double t4 = (v.mu4 + 3.0) * p2 * d.f;
            a4 = t1 + t2 + t3 + t4;
        } else {
            const double t1 = v.mu4 * (12.0 * p2 * d.f - 8.0 * p3 * d.f1 + p4 * d.f2);
            a4 = t1 + t2;
        }
        r.z4 = -s4 / (24.0 * alpha) * a4;
    }
    r.value = -(r.z0 + r.z2 + r.z3 + r.z4);
    return r;
}

double special_point_derivative(const AssetFamily& asset, Measure measure) {
    if (measure == Measure::ES) return 0.0;
    const double inv_mean = asset.inverse_mean();
    return 1.0 - 1.0 / inv_mean;
}

SurplusMoments surplus_moments(const MarketModel& model, double phi, int upto) {
    if (upto < 2 || upto > 4) {
        throw std::invalid_argument("surplus_moments: upto must be in [2,4]");
    }
    SurplusMoments m;
    if (model.n() > 1) {
        if (upto > 2) {
            throw std::domain_error(
                "surplus_moments: orders above 2 are univariate only");
        }
        // Var S = <phi, Sigma phi> + sum_ij (Sigma_ij + 1) Sigma^L_ij
        const Eigen::MatrixXd& sigma = model.asset_covariance();
        const Eigen::MatrixXd& cov_l = model.claims().covariance();
        const Eigen::VectorXd p = Eigen::VectorXd::Constant(model.n(), phi);
        m.variance = p.dot(sigma * p) +
                     ((sigma.array() + 1.0) * cov_l.array()).sum();
        return m;
    }
    const CentralMoments mb = model.asset(0).exact_central_moments(4);
    const ClaimModel& claims = model.claims();
    const double l2 = claims.moment(2);
    const double l3 = claims.moment(3);
    const double l4 = claims.moment(4);
    m.variance = phi * phi * mb.m2 + l2 * (1.0 + mb.m2);
    if (upto >= 3) {
        m.third = phi * phi * phi * mb.m3 + 3.0 * phi * (2.0 * mb.m2 + mb.m3) * l2 -
                  (1.0 + 3.0 * mb.m2 + mb.m3) * l3;
    }
    if (upto >= 4) {
        m.fourth = phi * phi * phi * phi * mb.m4 +
                   6.0 * phi * phi * (mb.m2 + 2.0 * mb.m3 + mb.m4) * l2 -
                   4.0 * phi * (3.0 * mb.m2 + 3.0 * mb.m3 + mb.m4) * l3 +
                   (1.0 + 6.0 * mb.m2 + 4.0 * mb.m3 + mb.m4) * l4;
    }
    return m;
}

double cornish_fisher_var(const MarketModel& model, double phi, double alpha) {
    require_univariate(model, "cornish_fisher_var");
    const SurplusMoments m = surplus_moments(model, phi, 4);
    const double sd = std::sqrt(m.variance);
    if (!(sd > 0.0)) {
        throw std::domain_error("cornish_fisher_var: degenerate surplus");
    }
    const double skew = m.third / (m.variance * sd);
    const double exkurt = m.fourth / (m.variance * m.variance) - 3.0;
    const double u = math::normal_quantile(alpha);
    const double u2 = u * u;
    const double z = u + (u2 - 1.0) * skew / 6.0 + u * (u2 - 3.0) * exkurt / 24.0 -
                     u * (2.0 * u2 - 5.0) * skew * skew / 36.0;
    return -sd * z;  // surplus has zero mean
}

double gram_charlier_cdf(const MarketModel& model, double phi, double z,
                         int truncation) {
    require_univariate(model, "gram_charlier_cdf");
    if (truncation > 4) {
        throw std::invalid_argument("gram_charlier_cdf: truncation above 4 unsupported");
    }
    const ClaimModel& claims = model.claims();
    double acc = 1.0 - claims.cdf(-z);
    if (truncation < 2) return acc;
    const CentralMoments mb = model.asset(0).exact_central_moments(4);
    const double mbar[5] = {0.0, 0.0, mb.m2, mb.m3, mb.m4};
    const double fact[5] = {1.0, 1.0, 2.0, 6.0, 24.0};
    for (int i = 2; i <= truncation; ++i) {
        if (mbar[i] == 0.0) continue;
        acc += mbar[i] / fact[i] * k_univariate(claims, phi, -z, i, i);
    }
    return acc;
}

}  // namespace enp
