#include <doctest.h>

#include <cmath>

#include "enp/math/normal.hpp"
#include "enp/scr.hpp"

using namespace enp;

namespace {

// The normalized setting of the capital comparison: normal asset at 15%
// volatility, gaussian claims calibrated so the insurance SCR is one.
MarketModel scr_model(double sigma_x = 0.15) {
    return MarketModel(
        build_asset(VolKind::Normal, sigma_x, DriverSpec::standard_normal()),
        ClaimModel::gaussian(1.0 / math::normal_quantile(0.995)));
}

McConfig cfg(std::int64_t n = 2'000'000) {
    McConfig c;
    c.n_samples = n;
    c.seed = 2468;
    c.n_chunks = 128;
    c.alpha = 0.005;
    return c;
}

}  // namespace

TEST_CASE("square-root aggregation basics") {
    CHECK(aggregate_sqrt(1.0, 0.0) == doctest::Approx(1.0));
    CHECK(aggregate_sqrt(0.0, 0.7) == doctest::Approx(0.7));
    CHECK(aggregate_sqrt(3.0, 4.0) == doctest::Approx(5.0));
    CHECK_THROWS_AS(aggregate_sqrt(-1.0, 2.0), std::domain_error);
}

TEST_CASE("square-root aggregation is exact for independent gaussian components") {
    // VaR of c (X - 1) - L against sqrt((c sigma_x u)^2 + (sigma_l u)^2).
    const double sigma_x = 0.15;
    const double sigma_l = 1.0 / math::normal_quantile(0.995);
    const double u = math::normal_quantile(0.995);
    const MarketModel model = scr_model(sigma_x);
    const SurplusCache cache(model, cfg(4'000'000));
    for (double c : {0.5, 0.8493}) {
        std::vector<double> s(cache.claim_load().size());
        const std::vector<double>& excess = cache.asset_excess(0);
        const std::vector<double>& load = cache.claim_load();
        // Replace the product liability by its gaussian-sum idealization:
        // use the same asset draws but the independent claim part only.
        // claim_load = X * L here, so L = load / X = load / (1 + excess).
        for (std::size_t i = 0; i < s.size(); ++i) {
            s[i] = c * excess[i] - load[i] / (1.0 + excess[i]);
        }
        const RiskEstimate var = risk_from_samples(s, Measure::VaR, 0.005);
        const double predicted =
            aggregate_sqrt(sigma_l * u, std::fabs(c) * sigma_x * u);
        CHECK(std::fabs(var.value - predicted) <= 3.0 * var.std_error);
    }
}

TEST_CASE("integrated SCR at sigma_x = 0 is the insurance component") {
    const MarketModel model = scr_model(0.0);
    const double scr = scr_integrated(model, 0.37, cfg());
    CHECK(scr == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("market-risk mismatch vanishes at its reference point") {
    const MarketModel model = scr_model();
    ScrOptions options;
    options.phi_star = 0.8493;
    CHECK(scr_market(model, 0.8493, ScrReference::ENP, cfg(500'000), options) ==
          doctest::Approx(0.0));
    CHECK(scr_market(model, 0.0, ScrReference::RP, cfg(500'000)) ==
          doctest::Approx(0.0));
}

TEST_CASE("ENP mismatch at phi = 0 has the normal closed form") {
    const MarketModel model = scr_model();
    ScrOptions options;
    options.phi_star = 0.8493;
    const double got = scr_market(model, 0.0, ScrReference::ENP, cfg(4'000'000),
                                  options);
    const double expected = 0.8493 * 0.15 * math::normal_quantile(0.995);
    CHECK(got == doctest::Approx(expected).epsilon(0.01));
}

TEST_CASE("the literal mismatch convention keeps the cash leg") {
    const MarketModel model = scr_model();
    ScrOptions literal;
    literal.phi_star = 0.8493;
    literal.mismatch = MismatchConvention::Literal;
    // At phi = phi* the literal form is a pure cash shortfall of phi*.
    const double at_star =
        scr_market(model, 0.8493, ScrReference::ENP, cfg(500'000), literal);
    CHECK(at_star == doctest::Approx(0.8493).epsilon(1e-6));
}

TEST_CASE("comparison report: shapes, minimum location, understatement flags") {
    const MarketModel model = scr_model();
    std::vector<double> grid;
    for (int i = 0; i <= 16; ++i) grid.push_back(i * 0.1);
    const ScrReport rep = scr_comparison_report(model, grid, cfg(2'000'000));

    REQUIRE(rep.scr_integrated.size() == grid.size());
    CHECK(rep.scr_l == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(rep.phi_star == doctest::Approx(0.849282).epsilon(1e-4));

    SUBCASE("all totals are positive and the ENP column is exact at phi*") {
        for (std::size_t i = 0; i < grid.size(); ++i) {
            CHECK(rep.scr_integrated[i] > 0.0);
            CHECK(rep.scr_modular_enp[i] >= rep.scr_l - 1e-12);
            CHECK(rep.scr_modular_rp[i] >= rep.scr_l - 1e-12);
        }
    }
    SUBCASE("integrated minimum sits within a grid step of phi*") {
        std::size_t best = 0;
        for (std::size_t i = 1; i < grid.size(); ++i) {
            if (rep.scr_integrated[i] < rep.scr_integrated[best]) best = i;
        }
        CHECK(std::fabs(grid[best] - rep.phi_star) <= 0.1 + 1e-12);
    }
    SUBCASE("ENP-modular tracks the integrated model near phi*") {
        for (std::size_t i = 0; i < grid.size(); ++i) {
            if (std::fabs(grid[i] - rep.phi_star) <= 0.5) {
                CHECK(std::fabs(rep.scr_modular_enp[i] - rep.scr_integrated[i]) /
                          rep.scr_integrated[i] <=
                      0.05);
            }
        }
    }
    SUBCASE("the RP column understates the integrated total below phi*") {
        // The understatement is largest at phi = 0 where the RP carries no
        // market charge at all.
        CHECK(rep.scr_modular_rp[0] == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(rep.scr_integrated[0] > rep.scr_modular_rp[0]);
    }
}

TEST_CASE("multivariate models are rejected by the univariate SCR front end") {
    Eigen::MatrixXd cov_l = Eigen::MatrixXd::Identity(2, 2);
    std::vector<AssetFamily> assets = {
        build_asset(VolKind::Normal, 0.15, DriverSpec::standard_normal()),
        build_asset(VolKind::Normal, 0.15, DriverSpec::standard_normal())};
    const MarketModel model(assets, Eigen::MatrixXd::Identity(2, 2),
                            ClaimModel::multivariate_gaussian(cov_l));
    CHECK_THROWS_AS(scr_market(model, 0.5, ScrReference::RP, cfg(100'000)),
                    std::domain_error);
}

TEST_CASE("at phi* the modular total is the insurance SCR exactly and the "
          "integrated one statistically") {
    const MarketModel model = scr_model();
    const McConfig c = cfg(2'000'000);
    const double phi_star = 0.849282;
    ScrOptions options;
    options.phi_star = phi_star;
    const ScrReport rep = scr_comparison_report(model, {phi_star}, c, options);
    CHECK(rep.scr_modular_enp[0] == rep.scr_l);  // aggregate of (scr_l, 0)
    const RiskEstimate integrated =
        var_mc(model, Allocation(phi_star), c);
    CHECK(std::fabs(integrated.value - rep.scr_l) <= 3.0 * integrated.std_error);
}
