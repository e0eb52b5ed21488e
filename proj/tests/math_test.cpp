#include <doctest.h>

#include <cmath>

#include "enp/math/normal.hpp"
#include "enp/math/optimize.hpp"
#include "enp/math/quadrature.hpp"
#include "enp/math/roots.hpp"
#include "enp/rng.hpp"

using namespace enp;

TEST_CASE("normal quantile inverts the cdf across both tails") {
    for (double p : {1e-9, 1e-4, 0.005, 0.01, 0.3, 0.5, 0.7, 0.99, 0.995, 1 - 1e-9}) {
        const double x = math::normal_quantile(p);
        CHECK(math::normal_cdf(x) == doctest::Approx(p).epsilon(1e-12));
    }
    CHECK(math::normal_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-15));
    // Solvency II and Basel II reference quantiles.
    CHECK(math::normal_quantile(0.995) == doctest::Approx(2.5758293035489).epsilon(1e-12));
    CHECK(math::normal_quantile(0.99) == doctest::Approx(2.3263478740408).epsilon(1e-12));
    CHECK_THROWS_AS(math::normal_quantile(0.0), std::domain_error);
    CHECK_THROWS_AS(math::normal_quantile(1.0), std::domain_error);
}

TEST_CASE("gaussian density derivatives are consistent with finite differences") {
    const double sigma = 0.38;
    const double h = 1e-5;
    for (double y : {-0.7, 0.1, 1.0}) {
        const double d1_fd =
            (math::gauss_pdf(y + h, sigma) - math::gauss_pdf(y - h, sigma)) / (2 * h);
        CHECK(math::gauss_dpdf(y, sigma) == doctest::Approx(d1_fd).epsilon(1e-7));
        const double d2_fd =
            (math::gauss_dpdf(y + h, sigma) - math::gauss_dpdf(y - h, sigma)) / (2 * h);
        CHECK(math::gauss_d2pdf(y, sigma) == doctest::Approx(d2_fd).epsilon(1e-6));
        const double d3_fd =
            (math::gauss_d2pdf(y + h, sigma) - math::gauss_d2pdf(y - h, sigma)) /
            (2 * h);
        CHECK(math::gauss_d3pdf(y, sigma) == doctest::Approx(d3_fd).epsilon(1e-6));
    }
}

TEST_CASE("adaptive quadrature integrates a gaussian to machine accuracy") {
    const auto r = math::gk_adaptive([](double x) { return math::normal_pdf(x); },
                                     -10.0, 10.0, 1e-15, 1e-13, 512);
    CHECK(r.value == doctest::Approx(1.0).epsilon(1e-13));

    // A sharper, shifted integrand.
    const auto r2 = math::gk_adaptive(
        [](double x) { return std::exp(-50.0 * (x - 0.3) * (x - 0.3)); }, -4.0, 4.0,
        1e-15, 1e-12, 512);
    CHECK(r2.value == doctest::Approx(std::sqrt(M_PI / 50.0)).epsilon(1e-11));
}

TEST_CASE("integrate_box recovers a separable 3-d gaussian mass") {
    auto f = [](const double* p) {
        return math::normal_pdf(p[0]) * math::normal_pdf(p[1]) *
               math::normal_pdf(p[2]);
    };
    const double v = math::integrate_box(f, {{-8, 8}, {-8, 8}, {-8, 8}}, 1e-10);
    CHECK(v == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("brent root finds quantile-style roots") {
    const double root = math::brent_root(
        [](double x) { return math::normal_cdf(x) - 0.995; }, 0.0, 5.0, 1e-14);
    CHECK(root == doctest::Approx(2.5758293035489).epsilon(1e-10));
    CHECK_THROWS_AS(math::brent_root([](double x) { return x * x + 1.0; }, -1.0, 1.0),
                    numeric_error);
}

TEST_CASE("golden section and nelder-mead find simple minima") {
    const auto gs = math::golden_section_min(
        [](double x) { return (x - 0.3) * (x - 0.3) + 1.0; }, -2.0, 2.0, 1e-8);
    CHECK(gs.converged);
    CHECK(gs.x == doctest::Approx(0.3).epsilon(1e-6));

    auto rosenbrock_ish = [](const std::vector<double>& v) {
        const double a = v[0] - 1.0, b = v[1] - 2.0;
        return a * a + 3.0 * b * b + 0.5 * a * b;
    };
    const auto nm = math::nelder_mead_min(rosenbrock_ish, {0.0, 0.0}, 0.5,
                                          {-5.0, -5.0}, {5.0, 5.0}, 1e-12, 2000);
    CHECK(nm.converged);
    CHECK(nm.x[0] == doctest::Approx(1.0).epsilon(2e-3));
    CHECK(nm.x[1] == doctest::Approx(2.0).epsilon(2e-3));
}

TEST_CASE("counter rng streams are independent of call interleaving") {
    CounterRng a(42, 7);
    CounterRng b(42, 7);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

    // Distinct streams differ.
    CounterRng c(42, 8);
    bool any_diff = false;
    CounterRng a2(42, 7);
    for (int i = 0; i < 10; ++i) any_diff = any_diff || (a2.next_u64() != c.next_u64());
    CHECK(any_diff);
}

TEST_CASE("counter rng uniforms stay inside the open unit interval") {
    CounterRng rng(1234, 0);
    double mean = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double u = rng.next_uniform();
        REQUIRE(u > 0.0);
        REQUIRE(u < 1.0);
        mean += u;
    }
    mean /= n;
    CHECK(mean == doctest::Approx(0.5).epsilon(5e-3));
}
