#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

namespace enp::math {

struct ScalarMinResult {
    double x = 0.0;
    double value = 0.0;
    double width = 0.0;  // final bracket width
    bool converged = false;
};

/// Golden-section search on [a,b]. The objective need not be differentiable;
/// the CRN Monte Carlo objectives this library minimizes are only piecewise
/// smooth.
template <class F>
ScalarMinResult golden_section_min(F&& f, double a, double b,
                                   double x_tol = 1e-6, int max_iter = 200) {
    constexpr double invphi = 0.6180339887498949;
    double x1 = b - invphi * (b - a);
    double x2 = a + invphi * (b - a);
    double f1 = f(x1);
    double f2 = f(x2);
    int iter = 0;
    while ((b - a) > x_tol && iter++ < max_iter) {
        if (f1 < f2) {
            b = x2;
            x2 = x1; f2 = f1;
            x1 = b - invphi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2; f1 = f2;
            x2 = a + invphi * (b - a);
            f2 = f(x2);
        }
    }
    ScalarMinResult r;
    r.x = (f1 < f2) ? x1 : x2;
    r.value = std::min(f1, f2);
    r.width = b - a;
    r.converged = (b - a) <= x_tol;
    return r;
}

struct VectorMinResult {
    std::vector<double> x;
    double value = 0.0;
    double spread = 0.0;  // final simplex value spread
    bool converged = false;
};

/// Nelder-Mead with standard coefficients and box clamping. Good enough for
/// the low-dimensional (n <= 4) allocation searches here.
inline VectorMinResult nelder_mead_min(
    const std::function<double(const std::vector<double>&)>& f,
    std::vector<double> start, double initial_step,
    const std::vector<double>& lower, const std::vector<double>& upper,
    double f_tol = 1e-9, int max_iter = 2000) {
    const std::size_t n = start.size();
    auto clamp = [&](std::vector<double>& x) {
        for (std::size_t i = 0; i < n; ++i)
            x[i] = std::clamp(x[i], lower[i], upper[i]);
    };

    std::vector<std::vector<double>> simplex(n + 1, start);
    for (std::size_t i = 0; i < n; ++i) simplex[i + 1][i] += initial_step;
    for (auto& v : simplex) clamp(v);
    std::vector<double> values(n + 1);
    for (std::size_t i = 0; i <= n; ++i) values[i] = f(simplex[i]);

    std::vector<std::size_t> order(n + 1);
    int iter = 0;
    for (; iter < max_iter; ++iter) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
        const std::size_t best = order[0], worst = order[n], second = order[n - 1];
        if (std::fabs(values[worst] - values[best]) <=
            f_tol * (std::fabs(values[best]) + f_tol))
            break;

        std::vector<double> centroid(n, 0.0);
        for (std::size_t i = 0; i <= n; ++i) {
            if (i == worst) continue;
            for (std::size_t k = 0; k < n; ++k) centroid[k] += simplex[i][k];
        }
        for (auto& c : centroid) c /= static_cast<double>(n);

        auto blend = [&](double t) {
            std::vector<double> x(n);
            for (std::size_t k = 0; k < n; ++k)
                x[k] = centroid[k] + t * (simplex[worst][k] - centroid[k]);
            clamp(x);
            return x;
        };

        std::vector<double> reflected = blend(-1.0);
        double fr = f(reflected);
        if (fr < values[order[0]]) {
            std::vector<double> expanded = blend(-2.0);
            double fe = f(expanded);
            if (fe < fr) {
                simplex[worst] = std::move(expanded);
                values[worst] = fe;
            } else {
                simplex[worst] = std::move(reflected);
                values[worst] = fr;
            }
        } else if (fr < values[second]) {
            simplex[worst] = std::move(reflected);
            values[worst] = fr;
        } else {
            std::vector<double> contracted = blend(fr < values[worst] ? -0.5 : 0.5);
            double fc = f(contracted);
            if (fc < std::min(fr, values[worst])) {
                simplex[worst] = std::move(contracted);
                values[worst] = fc;
            } else {  // shrink toward best
                for (std::size_t i = 0; i <= n; ++i) {
                    if (i == best) continue;
                    for (std::size_t k = 0; k < n; ++k)
                        simplex[i][k] =
                            simplex[best][k] + 0.5 * (simplex[i][k] - simplex[best][k]);
                    clamp(simplex[i]);
                    values[i] = f(simplex[i]);
                }
            }
        }
    }

    std::size_t best = 0;
    for (std::size_t i = 1; i <= n; ++i)
        if (values[i] < values[best]) best = i;
    VectorMinResult r;
    r.x = simplex[best];
    r.value = values[best];
    double lo = values[best], hi = values[best];
    for (double v : values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    r.spread = hi - lo;
    r.converged = iter < max_iter;
    return r;
}

}  // namespace enp::math
