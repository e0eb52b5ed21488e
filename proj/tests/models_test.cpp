#include <doctest.h>

#include <cmath>

#include "enp/asset.hpp"
#include "enp/errors.hpp"
#include "enp/claims.hpp"
#include "enp/market.hpp"
#include "enp/math/normal.hpp"
#include "enp/rng.hpp"

using namespace enp;

namespace {

// Sample central moments of X with a fixed seed, plus crude standard errors.
struct McMoments {
    double m2, m3, m4;
    double se2, se3, se4;
};

McMoments mc_central_moments(const AssetFamily& asset, std::int64_t n,
                             std::uint64_t seed) {
    CounterRng rng(seed, 0);
    double s1 = 0, s2 = 0, s3 = 0, s4 = 0, s6 = 0, s8 = 0;
    for (std::int64_t i = 0; i < n; ++i) {
        const double e = asset.sample(rng.next_normal()) - 1.0;
        const double e2 = e * e;
        s1 += e;
        s2 += e2;
        s3 += e2 * e;
        s4 += e2 * e2;
        s6 += e2 * e2 * e2;
        s8 += e2 * e2 * e2 * e2;
    }
    const double nn = static_cast<double>(n);
    McMoments m;
    m.m2 = s2 / nn;
    m.m3 = s3 / nn;
    m.m4 = s4 / nn;
    m.se2 = std::sqrt(std::max(0.0, s4 / nn - m.m2 * m.m2) / nn);
    m.se3 = std::sqrt(std::max(0.0, s6 / nn - m.m3 * m.m3) / nn);
    m.se4 = std::sqrt(std::max(0.0, s8 / nn - m.m4 * m.m4) / nn);
    return m;
}

}  // namespace

TEST_CASE("drivers are standardized: mean 0, variance 1, stated skew") {
    for (double skew : {0.0, -0.3, -1.75, 0.8}) {
        const DriverSpec d = skew == 0.0 ? DriverSpec::standard_normal()
                                         : DriverSpec::shifted_lognormal(skew);
        const double mean = d.expect([](double y) { return y; });
        const double var = d.expect([](double y) { return y * y; });
        const double third = d.expect([](double y) { return y * y * y; });
        CHECK(std::fabs(mean) < 1e-10);
        CHECK(var == doctest::Approx(1.0).epsilon(1e-10));
        CHECK(third == doctest::Approx(skew).epsilon(1e-8).scale(1.0));
        CHECK(d.mu4() >= 1.0 + d.mu3() * d.mu3());
    }
}

TEST_CASE("empirical driver standardizes in-memory") {
    const DriverSpec d = DriverSpec::empirical({1.0, 2.0, 3.0, 4.0, 10.0});
    const double mean = d.expect([](double y) { return y; });
    const double var = d.expect([](double y) { return y * y; });
    CHECK(std::fabs(mean) < 1e-3);
    CHECK(var == doctest::Approx(1.0).epsilon(1e-3));
    CHECK_THROWS_AS(DriverSpec::empirical({1.0}), std::invalid_argument);
    CHECK_THROWS_AS(DriverSpec::empirical({2.0, 2.0, 2.0}), std::invalid_argument);
}

TEST_CASE("shifted lognormal mgf is one-tailed") {
    const DriverSpec neg = DriverSpec::shifted_lognormal(-0.3);
    CHECK(neg.mgf_finite(0.5));
    CHECK(!neg.mgf_finite(-0.5));
    CHECK_THROWS_AS(neg.mgf(-0.5), std::domain_error);
    const DriverSpec pos = DriverSpec::shifted_lognormal(0.3);
    CHECK(pos.mgf_finite(-0.5));
    CHECK(!pos.mgf_finite(0.5));
    // M(t) = E[exp(tY)] checked against direct expectation.
    const double direct = neg.expect([](double y) { return std::exp(0.37 * y); });
    CHECK(neg.mgf(0.37) == doctest::Approx(direct).epsilon(1e-9));
}

TEST_CASE("implied lognormal skew matches the high-volatility calibration") {
    // sigma = 0.5 implies a skew of -1.75 under the log-of-lognormal convention.
    CHECK(implied_lognormal_skew(0.5) == doctest::Approx(-1.75).epsilon(1e-3));
    CHECK(implied_lognormal_skew(0.0) == doctest::Approx(0.0));
}

TEST_CASE("assets have unit mean exactly for both volatility kinds") {
    for (double sigma : {0.0, 0.1, 0.5, 1.0}) {
        const AssetFamily nrm =
            build_asset(VolKind::Normal, sigma, DriverSpec::standard_normal());
        CHECK(nrm.raw_moment(1) == doctest::Approx(1.0).epsilon(1e-12));
        const AssetFamily lgn =
            build_asset(VolKind::LogNormal, sigma, DriverSpec::standard_normal());
        CHECK(lgn.raw_moment(1) == doctest::Approx(1.0).epsilon(1e-12));
        const double sampled_mean = [&] {
            CounterRng rng(7, 0);
            double acc = 0.0;
            const int n = 100000;
            for (int i = 0; i < n; ++i) acc += lgn.sample(rng.next_normal());
            return acc / n;
        }();
        CHECK(sampled_mean == doctest::Approx(1.0).epsilon(0.02));
    }
}

TEST_CASE("degenerate asset at sigma = 0") {
    const AssetFamily a = build_asset(VolKind::Normal, 0.0, DriverSpec::standard_normal());
    CHECK(a.sample(1.7) == 1.0);
    CHECK(a.variance() == 0.0);
    const CentralMoments cm = a.exact_central_moments(4);
    CHECK(cm.m2 == 0.0);
    CHECK(cm.m3 == 0.0);
    CHECK(cm.m4 == 0.0);
}

TEST_CASE("lognormal gaussian-driver asset matches closed-form moments") {
    const AssetFamily a =
        build_asset(VolKind::LogNormal, 0.25, DriverSpec::standard_normal());
    // Var[X] = exp(sigma^2) - 1
    CHECK(a.variance() == doctest::Approx(std::exp(0.0625) - 1.0).epsilon(1e-12));
    const AssetFamily b =
        build_asset(VolKind::LogNormal, 0.1, DriverSpec::standard_normal());
    CHECK(b.exact_central_moments(2).m2 ==
          doctest::Approx(std::exp(0.01) - 1.0).epsilon(1e-12));
}

TEST_CASE("normal-kind central moments are sigma^i mu_i exactly") {
    const DriverSpec d = DriverSpec::shifted_lognormal(-0.6);
    const AssetFamily a = build_asset(VolKind::Normal, 0.15, d);
    const CentralMoments cm = a.exact_central_moments(4);
    CHECK(cm.m2 == doctest::Approx(0.15 * 0.15).epsilon(1e-14));
    CHECK(cm.m3 == doctest::Approx(std::pow(0.15, 3) * d.mu3()).epsilon(1e-14));
    CHECK(cm.m4 == doctest::Approx(std::pow(0.15, 4) * d.mu4()).epsilon(1e-14));
    CHECK(a.exact_central_moments(2).m3 == 0.0);
}

TEST_CASE("exact central moments agree with a 10^7-sample monte carlo") {
    const AssetFamily a =
        build_asset(VolKind::LogNormal, 0.2, DriverSpec::shifted_lognormal(-0.3));
    const CentralMoments cm = a.exact_central_moments(4);
    const McMoments mc = mc_central_moments(a, 10'000'000, 99101);
    CHECK(std::fabs(mc.m2 - cm.m2) <= 4.0 * mc.se2);
    CHECK(std::fabs(mc.m3 - cm.m3) <= 4.0 * mc.se3);
    CHECK(std::fabs(mc.m4 - cm.m4) <= 4.0 * mc.se4);
}

TEST_CASE("expanded central moments: known coefficients and o(sigma^4) error") {
    CHECK(expanded_central_moments(0.0, 0.0, 3.0).m2 == 0.0);
    // mu3 = 0, mu4 = 3: m2 = sigma^2 + sigma^4/2.
    const CentralMoments e = expanded_central_moments(0.1, 0.0, 3.0);
    CHECK(e.m2 == doctest::Approx(0.01 + 0.5e-4).epsilon(1e-12));

    const DriverSpec d = DriverSpec::shifted_lognormal(-0.3);
    double prev_ratio = 0.0;
    for (double sigma : {0.05, 0.1, 0.2}) {
        const AssetFamily a = build_asset(VolKind::LogNormal, sigma, d);
        const CentralMoments exact = a.exact_central_moments(4);
        const CentralMoments approx =
            expanded_central_moments(sigma, d.mu3(), d.mu4());
        const double err = std::fabs(exact.m2 - approx.m2);
        const double ratio = err / std::pow(sigma, 4);
        // o(sigma^4): the ratio shrinks as sigma decreases, so walking the
        // grid upward it grows.
        CHECK(ratio >= prev_ratio);
        prev_ratio = ratio;
        CHECK(ratio < 1.0);
    }
}

TEST_CASE("divergent moment generating function is a domain error") {
    // Positive-skew lognormal drivers have no finite M(t) for t > 0, which a
    // LogNormal-kind asset needs.
    CHECK_THROWS_AS(
        build_asset(VolKind::LogNormal, 0.2, DriverSpec::shifted_lognormal(0.5)),
        std::domain_error);
    CHECK_THROWS_AS(build_asset(VolKind::Normal, -0.1, DriverSpec::standard_normal()),
                    std::invalid_argument);
}

TEST_CASE("positivity flag for normal-kind assets with unbounded drivers") {
    const AssetFamily unbounded =
        build_asset(VolKind::Normal, 0.15, DriverSpec::standard_normal());
    CHECK(unbounded.positivity_violated());
    const AssetFamily bounded =
        build_asset(VolKind::Normal, 0.15, DriverSpec::empirical({-1.0, 0.0, 1.0, 2.0}));
    CHECK(!bounded.positivity_violated());
    const AssetFamily lgn =
        build_asset(VolKind::LogNormal, 0.5, DriverSpec::standard_normal());
    CHECK(!lgn.positivity_violated());
}

TEST_CASE("inverse mean: closed form, divergence, and the 4-times-minus-1 slope") {
    const AssetFamily lgn =
        build_asset(VolKind::LogNormal, 0.25, DriverSpec::standard_normal());
    CHECK(lgn.inverse_mean() == doctest::Approx(std::exp(0.0625)).epsilon(1e-10));
    const AssetFamily nrm =
        build_asset(VolKind::Normal, 0.15, DriverSpec::standard_normal());
    CHECK_THROWS_AS(nrm.inverse_mean(), std::domain_error);
    const AssetFamily neg_skew =
        build_asset(VolKind::LogNormal, 0.2, DriverSpec::shifted_lognormal(-0.3));
    CHECK_THROWS_AS(neg_skew.inverse_mean(), std::domain_error);
}

TEST_CASE("claim quantiles satisfy the aggregate cdf contract") {
    // sigma_L = 0.388 puts q within rounding of 1 at the Solvency II tolerance.
    const ClaimModel base = ClaimModel::gaussian(0.388);
    const double q = claim_quantile(base, 0.005);
    CHECK(q == doctest::Approx(0.388 * 2.5758293035489).epsilon(1e-10));
    CHECK(base.cdf(q) == doctest::Approx(0.995).epsilon(1e-12));

    const ClaimModel wide = ClaimModel::gaussian(0.43);
    CHECK(claim_quantile(wide, 0.01) == doctest::Approx(1.0).epsilon(1e-3));

    Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(2, 2);
    const ClaimModel biv = ClaimModel::multivariate_gaussian(eye);
    CHECK(claim_quantile(biv, 0.005) ==
          doctest::Approx(std::sqrt(2.0) * 2.5758293035489).epsilon(1e-10));
    CHECK_THROWS_AS(claim_quantile(base, 0.0), std::domain_error);
}

TEST_CASE("custom univariate claims run through quadrature fallbacks") {
    // A Gaussian supplied as raw evaluators, with no cdf: the quadrature
    // fallbacks must reproduce the closed forms.
    const double sl = 0.388;
    UnivariateClaim spec;
    spec.pdf = [=](double y) { return math::gauss_pdf(y, sl); };
    spec.dpdf = [=](double y) { return math::gauss_dpdf(y, sl); };
    spec.d2pdf = [=](double y) { return math::gauss_d2pdf(y, sl); };
    spec.quantile = [=](double p) { return sl * math::normal_quantile(p); };
    spec.sampler = [=](double u) { return sl * math::normal_quantile(u); };
    const ClaimModel custom = ClaimModel::univariate(spec);
    const ClaimModel closed = ClaimModel::gaussian(sl);
    CHECK(custom.cdf(0.5) == doctest::Approx(closed.cdf(0.5)).epsilon(1e-9));
    CHECK(custom.moment(2) == doctest::Approx(sl * sl).epsilon(1e-9));
    CHECK(custom.moment(4) == doctest::Approx(3 * sl * sl * sl * sl).epsilon(1e-8));
    CHECK(custom.partial_moment(2, 0.7) ==
          doctest::Approx(closed.partial_moment(2, 0.7)).epsilon(1e-8));
    CHECK(claim_quantile(custom, 0.005) ==
          doctest::Approx(claim_quantile(closed, 0.005)).epsilon(1e-9));
    CHECK(!custom.has_d3pdf());
}

TEST_CASE("multivariate claims require symmetric positive definite covariance") {
    Eigen::MatrixXd bad(2, 2);
    bad << 1.0, 2.0, 2.0, 1.0;  // indefinite
    CHECK_THROWS_AS(ClaimModel::multivariate_gaussian(bad), std::invalid_argument);
    Eigen::MatrixXd asym(2, 2);
    asym << 1.0, 0.2, 0.1, 1.0;
    CHECK_THROWS_AS(ClaimModel::multivariate_gaussian(asym), std::invalid_argument);
}

TEST_CASE("normalization maps and unmaps to the identity") {
    SUBCASE("already normalized") {
        const NormalizationReport r = normalize_problem({1.0}, {0.0}, 0.0);
        CHECK(r.cash_offset == 0.0);
        CHECK(r.map_allocation({0.7})[0] == doctest::Approx(0.7));
    }
    SUBCASE("scalar example") {
        const NormalizationReport r = normalize_problem({2.0}, {3.0}, 0.0);
        CHECK(r.cash_offset == doctest::Approx(-6.0));
        CHECK(r.map_allocation({5.0})[0] == doctest::Approx(4.0));  // 2 (5 - 3)
    }
    SUBCASE("3-d round trip") {
        const NormalizationReport r =
            normalize_problem({2.0, 0.5, 1.3}, {3.0, -1.0, 0.2}, 7.0);
        const std::vector<double> phi = {1.0, 2.0, 3.5};
        const std::vector<double> back = r.unmap_allocation(r.map_allocation(phi));
        for (int i = 0; i < 3; ++i) CHECK(back[i] == doctest::Approx(phi[i]).epsilon(1e-12));
        const double rho = 1.234;
        CHECK(r.normalized_risk(r.raw_risk(rho)) == doctest::Approx(rho).epsilon(1e-12));
    }
    SUBCASE("nonpositive asset mean rejected") {
        CHECK_THROWS_AS(normalize_problem({0.0}, {0.0}, 0.0), std::domain_error);
    }
}

TEST_CASE("market model derives the asset covariance") {
    SUBCASE("normal kinds: sigma_i sigma_j rho") {
        std::vector<AssetFamily> assets = {
            build_asset(VolKind::Normal, 0.1, DriverSpec::standard_normal()),
            build_asset(VolKind::Normal, 0.2, DriverSpec::standard_normal())};
        Eigen::MatrixXd corr(2, 2);
        corr << 1.0, 0.5, 0.5, 1.0;
        Eigen::MatrixXd cov_l = Eigen::MatrixXd::Identity(2, 2);
        const MarketModel m(assets, corr, ClaimModel::multivariate_gaussian(cov_l));
        CHECK(m.asset_covariance()(0, 0) == doctest::Approx(0.01).epsilon(1e-12));
        CHECK(m.asset_covariance()(0, 1) == doctest::Approx(0.01).epsilon(1e-12));
        CHECK(m.asset_covariance()(1, 1) == doctest::Approx(0.04).epsilon(1e-12));
    }
    SUBCASE("lognormal kinds: exp(rho sigma_i sigma_j) - 1") {
        std::vector<AssetFamily> assets = {
            build_asset(VolKind::LogNormal, 0.3, DriverSpec::standard_normal()),
            build_asset(VolKind::LogNormal, 0.25, DriverSpec::standard_normal())};
        Eigen::MatrixXd corr(2, 2);
        corr << 1.0, -0.4, -0.4, 1.0;
        Eigen::MatrixXd cov_l = Eigen::MatrixXd::Identity(2, 2);
        const MarketModel m(assets, corr, ClaimModel::multivariate_gaussian(cov_l));
        CHECK(m.asset_covariance()(0, 1) ==
              doctest::Approx(std::exp(-0.4 * 0.3 * 0.25) - 1.0).epsilon(1e-12));
    }
    SUBCASE("mixed kinds against the quadrature route") {
        std::vector<AssetFamily> assets = {
            build_asset(VolKind::Normal, 0.1, DriverSpec::standard_normal()),
            build_asset(VolKind::LogNormal, 0.25,
                        DriverSpec::shifted_lognormal(-0.5))};
        Eigen::MatrixXd corr(2, 2);
        corr << 1.0, 0.6, 0.6, 1.0;
        Eigen::MatrixXd cov_l = Eigen::MatrixXd::Identity(2, 2);
        const MarketModel m(assets, corr, ClaimModel::multivariate_gaussian(cov_l));
        // Cross-checked by sampling.
        CounterRng rng(5150, 0);
        double acc = 0.0;
        const int n = 4'000'000;
        const Eigen::MatrixXd chol = m.driver_corr_cholesky();
        for (int i = 0; i < n; ++i) {
            const double z0 = rng.next_normal();
            const double z1 = rng.next_normal();
            const double w = chol(1, 0) * z0 + chol(1, 1) * z1;
            acc += (assets[0].sample(z0) - 1.0) * (assets[1].sample(w) - 1.0);
        }
        acc /= n;
        CHECK(m.asset_covariance()(0, 1) == doctest::Approx(acc).epsilon(0.02));
    }
    SUBCASE("dimension and correlation validation") {
        std::vector<AssetFamily> assets = {
            build_asset(VolKind::Normal, 0.1, DriverSpec::standard_normal())};
        Eigen::MatrixXd corr = Eigen::MatrixXd::Identity(1, 1);
        Eigen::MatrixXd cov_l = Eigen::MatrixXd::Identity(2, 2);
        CHECK_THROWS_AS(
            MarketModel(assets, corr, ClaimModel::multivariate_gaussian(cov_l)),
            std::invalid_argument);
    }
}

TEST_CASE("allocations forbid leverage") {
    CHECK_THROWS_AS(Allocation({0.5, -0.1}), std::invalid_argument);
    CHECK(Allocation({0.5, 0.25}).total() == doctest::Approx(0.75));
}

TEST_CASE("a flat cdf around the quantile guess is a numeric error") {
    UnivariateClaim spec;
    spec.pdf = [](double) { return 0.1; };
    spec.dpdf = [](double) { return 0.0; };
    spec.d2pdf = [](double) { return 0.0; };
    spec.quantile = [](double) { return 1.0; };
    spec.sampler = [](double) { return 0.0; };
    spec.cdf = [](double) { return 0.9; };  // never reaches 1 - alpha
    const ClaimModel stuck = ClaimModel::univariate(spec);
    CHECK_THROWS_AS(claim_quantile(stuck, 0.005), numeric_error);
}
