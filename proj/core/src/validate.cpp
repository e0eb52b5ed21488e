#include "enp/validate.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

#include "enp/expansions.hpp"
#include "enp/kterms.hpp"
#include "enp/math/normal.hpp"
#include "enp/math/quadrature.hpp"
#include "enp/math/roots.hpp"
#include "enp/mc.hpp"
#include "enp/scr.hpp"

namespace enp {

namespace {

std::string fmt(double v) {
    std::ostringstream ss;
    ss.precision(6);
    ss << v;
    return ss.str();
}

double least_squares_slope(const std::vector<double>& x,
                           const std::vector<double>& y) {
    const auto n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    return sxy / sxx;
}

McConfig mc_config(const AcceptanceSettings& s, double alpha,
                   std::uint64_t seed_offset = 0) {
    McConfig cfg;
    cfg.n_samples = s.n_samples;
    cfg.seed = s.seed + seed_offset;
    cfg.n_chunks = s.n_chunks;
    cfg.alpha = alpha;
    cfg.jobs = s.jobs;
    return cfg;
}

double base_sigma_l(const AcceptanceSettings& s) {
    return s.base_sigma_l > 0.0 ? s.base_sigma_l
                                : 1.0 / math::normal_quantile(0.995);
}

MarketModel base_model(const AcceptanceSettings& s, double sigma = 0.2,
                       double mu3 = -0.3) {
    const DriverSpec driver = (mu3 == 0.0) ? DriverSpec::standard_normal()
                                           : DriverSpec::shifted_lognormal(mu3);
    return MarketModel(build_asset(VolKind::LogNormal, sigma, driver),
                       ClaimModel::gaussian(base_sigma_l(s)));
}

// ---------------------------------------------------------------------------
// Deterministic univariate oracle
// ---------------------------------------------------------------------------

}  // namespace

double surplus_cdf_exact_1d(const MarketModel& model, double phi, double z) {
    if (model.n() != 1) {
        throw std::domain_error("surplus_cdf_exact_1d: univariate model required");
    }
    const AssetFamily& asset = model.asset(0);
    const ClaimModel& claims = model.claims();
    auto conditional = [&](double u) {
        const double x = asset.sample(u);
        if (x > 0.0) {
            return 1.0 - claims.aggregate_cdf(phi - (z + phi) / x);
        }
        if (x < 0.0) {
            return claims.aggregate_cdf(phi - (z + phi) / x);
        }
        return (phi * (x - 1.0) <= z) ? 1.0 : 0.0;
    };
    return math::gk_adaptive(
               [&](double u) { return math::normal_pdf(u) * conditional(u); },
               -13.0, 13.0, 1e-15, 1e-12, 2048)
        .value;
}

double var_exact_1d(const MarketModel& model, double phi, double alpha) {
    const double q0 = claim_quantile(model.claims(), alpha);
    auto obj = [&](double z) { return surplus_cdf_exact_1d(model, phi, z) - alpha; };
    const double z =
        math::bracketed_root(obj, -q0 - 0.5 * std::fabs(q0) - 0.1,
                             -q0 + 0.5 * std::fabs(q0) + 0.1, 1e-13);
    return -z;
}

namespace {

// ---------------------------------------------------------------------------
// Criteria
// ---------------------------------------------------------------------------

CheckResult check_1_special_point(const AcceptanceSettings& s) {
    CheckResult r{1, "special point rho[S(q)] = rho[-L] (base calibration, q = 1)", false, ""};
    const double sigma_l = base_sigma_l(s);
    const MarketModel model = base_model(s);
    const double alpha = 0.005;
    const double q = claim_quantile(model.claims(), alpha);
    const McConfig cfg = mc_config(s, alpha, 1);
    SurplusCache cache(model, cfg);
    const RiskEstimate var = cache.risk({q}, Measure::VaR, alpha);
    const RiskEstimate es = cache.risk({q}, Measure::ES, alpha);
    const double es_ref =
        sigma_l * math::normal_pdf(math::normal_quantile(0.995)) / alpha;
    const double var_err = std::fabs(var.value - 1.0);
    const double es_err = std::fabs(es.value - es_ref);
    const bool var_ok = var_err <= 3.0 * var.std_error;
    const bool es_ok = es_err <= 3.0 * es.std_error;
    r.passed = var_ok && es_ok;
    r.detail = "|var_mc(q)-1|=" + fmt(var_err) + " (3se=" + fmt(3 * var.std_error) +
               "), |es_mc(q)-ES[-L]|=" + fmt(es_err) +
               " (3se=" + fmt(3 * es.std_error) + ")";
    return r;
}

CheckResult check_2_slope(const AcceptanceSettings& s) {
    CheckResult r{2, "special point slope 1 - exp(-sigma^2) (CRN finite difference)",
                  false, ""};
    const double sigma = 0.25;
    const MarketModel model(
        build_asset(VolKind::LogNormal, sigma, DriverSpec::standard_normal()),
        ClaimModel::gaussian(base_sigma_l(s)));
    const McConfig cfg = mc_config(s, 0.005, 2);
    const double h = 0.05;
    const double target = 1.0 - std::exp(-sigma * sigma);
    const double var_slope = derivative_at_q_mc(model, cfg, h, Measure::VaR);
    const double es_slope = derivative_at_q_mc(model, cfg, h, Measure::ES);
    const double analytic = special_point_derivative(model.asset(0));
    const bool var_ok = std::fabs(var_slope - target) <= 0.01;
    const bool es_ok = std::fabs(es_slope) <= 0.01;
    r.passed = var_ok && es_ok && std::fabs(analytic - target) < 1e-12;
    r.detail = "var slope=" + fmt(var_slope) + " vs " + fmt(target) +
               ", es slope=" + fmt(es_slope) + " vs 0";
    return r;
}

CheckResult check_3_optimal_ratio(const AcceptanceSettings& s) {
    CheckResult r{3, "optimal ratio phi*/q = 1 - 1/u^2 (0.8493 / 0.8152)", false, ""};
    bool ok = true;
    std::string detail;
    const double targets[2][2] = {{0.005, 0.8493}, {0.01, 0.8152}};
    for (const auto& t : targets) {
        const MarketModel model(
            build_asset(VolKind::LogNormal, 0.15, DriverSpec::standard_normal()),
            ClaimModel::gaussian(1.0 / math::normal_quantile(1.0 - t[0])));
        const double q = claim_quantile(model.claims(), t[0]);
        const double ratio = phi_star_var2_multi(model, t[0]).total / q;
        ok = ok && std::fabs(ratio - t[1]) < 5e-5;
        detail += "alpha=" + fmt(t[0]) + ": ratio=" + fmt(ratio) + " ";
    }
    // MC minimizer at sigma = 0.15 within 0.02 of the analytic ratio.
    const MarketModel model(
        build_asset(VolKind::LogNormal, 0.15, DriverSpec::standard_normal()),
        ClaimModel::gaussian(base_sigma_l(s)));
    const McConfig cfg = mc_config(s, 0.005, 3);
    const double q = claim_quantile(model.claims(), 0.005);
    const McMinimum mc = minimize_risk_mc(model, {0.5}, {1.2}, cfg, Measure::VaR);
    const double gap = std::fabs(mc.phi_star[0] - 0.849282 * q);
    ok = ok && gap <= 0.02;
    detail += "mc minimizer gap=" + fmt(gap);
    r.passed = ok;
    r.detail = detail;
    return r;
}

CheckResult check_4_fig_minimizers(const AcceptanceSettings& s) {
    CheckResult r{4, "risk-minimal allocations, base and high-volatility calibrations", false, ""};
    const double alpha = 0.005;
    const MarketModel base = base_model(s);
    const McConfig cfg = mc_config(s, alpha, 4);
    const McMinimum var2 = minimize_risk_mc(base, {0.5}, {1.3}, cfg, Measure::VaR);
    const McMinimum es2 = minimize_risk_mc(base, {0.6}, {1.4}, cfg, Measure::ES);
    const bool var_ok = var2.phi_star[0] >= 0.82 && var2.phi_star[0] <= 0.90;
    const bool es_ok = std::fabs(es2.phi_star[0] - 1.0) <= 0.02;

    // The high-volatility check stacks the formula-vs-truth gap (0.020 here)
    // on top of the empirical argmin jitter, so the search runs on a 4x
    // sample budget.
    const MarketModel highvol = base_model(s, 0.5, -1.75);
    McConfig cfg3 = cfg;
    cfg3.n_samples *= 4;
    const McMinimum var3 = minimize_risk_mc(highvol, {0.6}, {1.3}, cfg3, Measure::VaR);
    const double formula = phi_star_var3_1d(highvol, alpha, 0.5).phi_star;
    const bool highvol_ok = std::fabs(var3.phi_star[0] - 0.9) <= 0.03 &&
                            std::fabs(formula - var3.phi_star[0]) <= 0.03;
    r.passed = var_ok && es_ok && highvol_ok;
    r.detail = "base var*=" + fmt(var2.phi_star[0]) + " es*=" + fmt(es2.phi_star[0]) +
               ", highvol var*=" + fmt(var3.phi_star[0]) + " formula=" + fmt(formula);
    return r;
}

CheckResult check_5_expansion_orders(const AcceptanceSettings& s) {
    CheckResult r{5, "expansion error orders o(sigma^2)/o(sigma^3) vs var_mc", false,
                  ""};
    const double alpha = 0.005;
    const std::vector<double> sigmas = {0.05, 0.1, 0.2};
    const double phi = 0.8;  // 0.8 q with q = 1
    std::vector<double> log_sigma;
    std::vector<double> log_e2, log_e3;        // against var_mc (as stated)
    std::vector<double> log_e2_det, log_e3_det;  // against the exact oracle
    for (double sigma : sigmas) {
        const MarketModel model = base_model(s, sigma, -0.3);
        const McConfig cfg = mc_config(s, alpha, 5);  // shared seed: CRN in sigma
        const double mc = var_mc(model, Allocation(phi), cfg).value;
        const double exact = var_exact_1d(model, phi, alpha);
        const double e2 =
            var_expand_1d(model, phi, alpha, 2, VolKind::LogNormal).value;
        const double e3 =
            var_expand_1d(model, phi, alpha, 3, VolKind::LogNormal).value;
        log_sigma.push_back(std::log(sigma));
        log_e2.push_back(std::log(std::max(std::fabs(e2 - mc), 1e-300)));
        log_e3.push_back(std::log(std::max(std::fabs(e3 - mc), 1e-300)));
        log_e2_det.push_back(std::log(std::max(std::fabs(e2 - exact), 1e-300)));
        log_e3_det.push_back(std::log(std::max(std::fabs(e3 - exact), 1e-300)));
    }
    const double slope2 = least_squares_slope(log_sigma, log_e2);
    const double slope3 = least_squares_slope(log_sigma, log_e3);
    const double slope2_det = least_squares_slope(log_sigma, log_e2_det);
    const double slope3_det = least_squares_slope(log_sigma, log_e3_det);
    r.passed = slope2 >= 2.5 && slope3 >= 3.5;
    r.detail = "slopes vs var_mc: order2=" + fmt(slope2) + " order3=" + fmt(slope3) +
               "; vs exact quadrature oracle: order2=" + fmt(slope2_det) +
               " order3=" + fmt(slope3_det);
    if (!r.passed) {
        r.detail += " [the MC quantile noise floor ~" +
                    fmt(6e-4 * std::sqrt(1e7 / static_cast<double>(s.n_samples))) +
                    " exceeds the largest systematic expansion error on this "
                    "sigma grid, so the slope vs var_mc measures noise; the "
                    "deterministic oracle resolves the stated orders]";
    }
    return r;
}

CheckResult check_6_moment_expansion(const AcceptanceSettings&) {
    CheckResult r{6, "fourth-order central-moment expansion error is o(sigma^4)",
                  false, ""};
    const DriverSpec driver = DriverSpec::shifted_lognormal(-0.3);
    const std::vector<double> sigmas = {0.025, 0.05, 0.1};
    std::vector<double> log_sigma, log_err;
    double max_ratio = 0.0;
    for (double sigma : sigmas) {
        const AssetFamily asset = build_asset(VolKind::LogNormal, sigma, driver);
        const CentralMoments exact = asset.exact_central_moments(4);
        const CentralMoments approx =
            expanded_central_moments(sigma, driver.mu3(), driver.mu4());
        const double err = std::max({std::fabs(exact.m2 - approx.m2),
                                     std::fabs(exact.m3 - approx.m3),
                                     std::fabs(exact.m4 - approx.m4)});
        max_ratio = std::max(max_ratio, err / std::pow(sigma, 4));
        log_sigma.push_back(std::log(sigma));
        log_err.push_back(std::log(std::max(err, 1e-300)));
    }
    const double slope = least_squares_slope(log_sigma, log_err);
    r.passed = slope >= 4.5 && std::isfinite(max_ratio);
    r.detail = "slope=" + fmt(slope) + ", max err/sigma^4=" + fmt(max_ratio);
    return r;
}

CheckResult check_7_kterm_derivatives(const AcceptanceSettings&) {
    CheckResult r{7, "K-term derivative identities vs finite differences of "
                     "quadrature", false, ""};
    const double alpha = 0.005;
    bool ok = true;
    std::string detail;
    // Pinned SPD matrices standing in for "random" draws, n = 2 and 3.
    const auto run = [&](const Eigen::MatrixXd& cov_l, const Eigen::MatrixXd& sigma) {
        const ClaimModel claims = ClaimModel::multivariate_gaussian(cov_l);
        const double q = claim_quantile(claims, alpha);
        const double err = kderiv_finite_difference_check(claims, sigma, q, 3e-4);
        ok = ok && err < 1e-6;
        detail += "n=" + std::to_string(cov_l.rows()) + ": " + fmt(err) + " ";
    };
    Eigen::MatrixXd cov2(2, 2), sig2(2, 2);
    cov2 << 1.0, 0.3, 0.3, 0.7;
    sig2 << 0.040, 0.012, 0.012, 0.055;
    run(cov2, sig2);
    Eigen::MatrixXd cov3(3, 3), sig3(3, 3);
    cov3 << 1.2, 0.3, 0.1, 0.3, 0.8, -0.2, 0.1, -0.2, 1.5;
    sig3 << 0.050, 0.015, -0.008, 0.015, 0.036, 0.010, -0.008, 0.010, 0.062;
    run(cov3, sig3);
    r.passed = ok;
    r.detail = "max relative errors: " + detail + "(tolerance 1e-6)";
    return r;
}

CheckResult check_8_covariance_allocation(const AcceptanceSettings& s) {
    CheckResult r{8, "covariance allocation vs 2-d MC minimizer (ES)", false, ""};
    const double alpha = 0.005;
    Eigen::MatrixXd cov_l(2, 2);
    cov_l << 4.0, 1.0, 1.0, 1.0;
    // The allocation law is a second-order statement, so the assets sit at a
    // small volatility; the ES surface is then O(sigma^2 f/alpha) flat and the
    // componentwise tolerance needs a 4x sample budget for the empirical
    // argmin to resolve.
    std::vector<AssetFamily> assets = {
        build_asset(VolKind::LogNormal, 0.12, DriverSpec::standard_normal()),
        build_asset(VolKind::LogNormal, 0.12, DriverSpec::standard_normal())};
    Eigen::MatrixXd corr = Eigen::MatrixXd::Identity(2, 2);
    const MarketModel model(assets, corr, ClaimModel::multivariate_gaussian(cov_l));
    const double q = claim_quantile(model.claims(), alpha);

    const OptimalAllocation formula = covariance_allocation(model, alpha, Measure::ES);
    const double total_gap = std::fabs(formula.total - q);

    McConfig cfg = mc_config(s, alpha, 8);
    cfg.n_samples *= 4;
    const std::vector<double> lo = {formula.phi_star(0) - 0.5,
                                    formula.phi_star(1) - 0.5};
    const std::vector<double> hi = {formula.phi_star(0) + 0.5,
                                    formula.phi_star(1) + 0.5};
    const McMinimum mc = minimize_risk_mc(model, lo, hi, cfg, Measure::ES);
    const double g0 = std::fabs(formula.phi_star(0) - mc.phi_star[0]);
    const double g1 = std::fabs(formula.phi_star(1) - mc.phi_star[1]);
    r.passed = g0 <= 0.03 && g1 <= 0.03 && total_gap <= 1e-10;
    r.detail = "componentwise gaps (" + fmt(g0) + ", " + fmt(g1) +
               "), |<1,phi*> - q|=" + fmt(total_gap);
    return r;
}

CheckResult check_9_cornish_fisher(const AcceptanceSettings& s) {
    CheckResult r{9, "Cornish-Fisher misses the special point; expansion is exact",
                  false, ""};
    const double alpha = 0.01;
    const double sigma_l = 1.0 / math::normal_quantile(0.99);
    const MarketModel model(
        build_asset(VolKind::LogNormal, 0.25, DriverSpec::standard_normal()),
        ClaimModel::gaussian(sigma_l));
    const double q = claim_quantile(model.claims(), alpha);
    McConfig cfg = mc_config(s, alpha, 9);
    const RiskEstimate mc = var_mc(model, Allocation(q), cfg);
    const double cf = cornish_fisher_var(model, q, alpha);
    const double expansion =
        var_expand_1d(model, q, alpha, 3, VolKind::LogNormal).value;
    const double cf_err = std::fabs(cf - q);
    const double exp_err = std::fabs(expansion - q);
    r.passed = cf_err > 5.0 * mc.std_error && exp_err < 1e-12;
    r.detail = "|cf - q|=" + fmt(cf_err) + " vs 5se=" + fmt(5.0 * mc.std_error) +
               ", |expansion3 - q|=" + fmt(exp_err);
    return r;
}

CheckResult check_10_scr(const AcceptanceSettings& s) {
    CheckResult r{10, "SCR: ENP-modular tracks integrated; RP understates at phi=0",
                  false, ""};
    const double alpha = 0.005;
    const MarketModel model(
        build_asset(VolKind::Normal, 0.15, DriverSpec::standard_normal()),
        ClaimModel::gaussian(base_sigma_l(s)));
    const McConfig cfg = mc_config(s, alpha, 10);
    const double phi_star = phi_star_var2_multi(model, alpha).total;

    std::vector<double> grid;
    const int points = 21;
    for (int i = 0; i < points; ++i) {
        grid.push_back(std::max(0.0, phi_star - 0.5) + i * 1.0 / (points - 1));
    }
    grid.push_back(0.0);  // understatement probe
    ScrOptions options;
    options.phi_star = phi_star;
    const ScrReport rep = scr_comparison_report(model, grid, cfg, options);

    double max_gap = 0.0;
    for (int i = 0; i < points; ++i) {
        max_gap = std::max(max_gap,
                           std::fabs(rep.scr_modular_enp[i] - rep.scr_integrated[i]) /
                               rep.scr_integrated[i]);
    }
    const double integrated0 = rep.scr_integrated[points];
    const double rp0 = rep.scr_modular_rp[points];
    const double understatement = (integrated0 - rp0) / integrated0;
    const bool enp_ok = max_gap <= 0.05;
    const bool rp_ok = understatement >= 0.10;
    r.passed = enp_ok && rp_ok;
    r.detail = "max ENP gap=" + fmt(max_gap) + " (<=0.05), RP understatement at "
               "phi=0: " + fmt(understatement) + " (>=0.10 required)";
    if (enp_ok && !rp_ok) {
        r.detail += " [structural ceiling: the integrated total at phi=0 is "
                    "u*sigma_l*sqrt(1+sigma_x^2) plus a small product-kurtosis "
                    "load, ~5% above the RP total at sigma_x=15%]";
    }
    return r;
}

CheckResult check_11_properties(const AcceptanceSettings& s) {
    CheckResult r{11, "property suites: determinism, coherence, convexity, "
                      "truncation, ES integral", false, ""};
    const double alpha = 0.005;
    std::string detail;
    bool ok = true;

    // Determinism across worker counts, bit-exact.
    {
        const MarketModel model = base_model(s);
        McConfig cfg = mc_config(s, alpha, 11);
        cfg.n_samples = std::min<std::int64_t>(s.n_samples, 1'000'000);
        cfg.n_chunks = 64;
        McConfig cfg1 = cfg, cfg4 = cfg;
        cfg1.jobs = 1;
        cfg4.jobs = 4;
        const std::vector<double> a =
            simulate_surplus(model, Allocation(0.9), cfg1);
        const std::vector<double> b =
            simulate_surplus(model, Allocation(0.9), cfg4);
        const bool bit_exact = a == b;
        ok = ok && bit_exact;
        detail += std::string("determinism=") + (bit_exact ? "bit-exact" : "BROKEN");
    }

    // ES >= VaR pointwise and ES-profile convexity on a CRN curve.
    {
        const MarketModel model = base_model(s);
        const McConfig cfg = mc_config(s, alpha, 12);
        std::vector<Allocation> grid;
        for (int i = 0; i <= 16; ++i) grid.emplace_back(0.5 + i * 0.05);
        const auto es_curve = risk_profile(model, grid, cfg, Measure::ES);
        const auto var_curve = risk_profile(model, grid, cfg, Measure::VaR);
        bool coherent = true, convex = true;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const double slack =
                3.0 * (es_curve[i].std_error + var_curve[i].std_error);
            coherent = coherent && es_curve[i].value >= var_curve[i].value - slack;
        }
        for (std::size_t i = 1; i + 1 < grid.size(); ++i) {
            convex = convex && (es_curve[i - 1].value + es_curve[i + 1].value -
                                2.0 * es_curve[i].value) >= -1e-9;
        }
        ok = ok && coherent && convex;
        detail += std::string(", es>=var=") + (coherent ? "ok" : "VIOLATED") +
                  ", es convexity=" + (convex ? "ok" : "VIOLATED");
    }

    // Distribution-expansion truncation improvement, R = 4 vs R = 2, against
    // the deterministic CDF oracle.
    {
        const MarketModel model = base_model(s, 0.1, 0.0);
        const double q = claim_quantile(model.claims(), alpha);
        bool improved = true;
        for (double phi : {0.8, 1.2}) {
            const double exact = surplus_cdf_exact_1d(model, phi, -q);
            const double e2 = std::fabs(gram_charlier_cdf(model, phi, -q, 2) - exact);
            const double e4 = std::fabs(gram_charlier_cdf(model, phi, -q, 4) - exact);
            improved = improved && e4 <= e2;
        }
        ok = ok && improved;
        detail += std::string(", truncation improvement=") +
                  (improved ? "ok" : "VIOLATED");
    }

    // ES from the VaR tail integral agrees with the direct estimator.
    {
        const MarketModel model = base_model(s);
        const McConfig cfg = mc_config(s, alpha, 13);
        const Allocation phi(0.9);
        const RiskEstimate direct = es_mc(model, phi, cfg);
        const double integral = es_from_var_integral(model, phi, cfg, 64);
        const bool close = std::fabs(direct.value - integral) <=
                           3.0 * std::max(direct.std_error, 1e-12);
        ok = ok && close;
        detail += std::string(", es integral=") + (close ? "ok" : "VIOLATED") +
                  " (diff=" + fmt(std::fabs(direct.value - integral)) + ")";
    }

    r.passed = ok;
    r.detail = detail;
    return r;
}

}  // namespace

std::vector<CheckResult> run_acceptance(const AcceptanceSettings& settings,
                                        std::ostream* log) {
    using Check = CheckResult (*)(const AcceptanceSettings&);
    struct Entry {
        int id;
        Check fn;
    };
    const Entry checks[] = {
        {1, check_1_special_point},    {2, check_2_slope},
        {3, check_3_optimal_ratio},    {4, check_4_fig_minimizers},
        {5, check_5_expansion_orders}, {6, check_6_moment_expansion},
        {7, check_7_kterm_derivatives}, {8, check_8_covariance_allocation},
        {9, check_9_cornish_fisher},   {10, check_10_scr},
        {11, check_11_properties},
    };
    std::vector<CheckResult> results;
    for (const Entry& entry : checks) {
        if (!settings.only.empty() &&
            std::find(settings.only.begin(), settings.only.end(), entry.id) ==
                settings.only.end()) {
            continue;
        }
        CheckResult res = entry.fn(settings);
        if (log) {
            (*log) << (res.passed ? "[PASS] " : "[FAIL] ") << res.id << ". "
                   << res.name << " -- " << res.detail << '\n';
            log->flush();
        }
        results.push_back(std::move(res));
    }
    return results;
}

}  // namespace enp
