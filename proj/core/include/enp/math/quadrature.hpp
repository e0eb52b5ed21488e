#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <queue>
#include <vector>

#include "enp/errors.hpp"

namespace enp::math {

// Gauss-Kronrod 7-15 pair (QUADPACK dqk15 abscissae/weights, positive half).
namespace gk15 {
inline constexpr std::array<double, 8> nodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kronrod_weights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> gauss_weights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};
}  // namespace gk15

/// One Gauss-Kronrod 7-15 panel on [a,b]. Returns the K15 estimate and a
/// conservative error bound from the G7/K15 difference (QUADPACK scaling).
template <class F>
std::pair<double, double> gk15_panel(F&& f, double a, double b) {
    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);

    double fc = f(center);
    double result_k = gk15::kronrod_weights[7] * fc;
    double result_g = gk15::gauss_weights[3] * fc;
    double result_abs = std::fabs(result_k);

    for (int j = 0; j < 7; ++j) {
        const double x = half * gk15::nodes[j];
        const double f1 = f(center - x);
        const double f2 = f(center + x);
        result_k += gk15::kronrod_weights[j] * (f1 + f2);
        result_abs += gk15::kronrod_weights[j] * (std::fabs(f1) + std::fabs(f2));
        if (j % 2 == 1) {
            result_g += gk15::gauss_weights[j / 2] * (f1 + f2);
        }
    }
    double err = std::fabs((result_k - result_g) * half);
    result_abs *= std::fabs(half);
    if (result_abs > 0.0 && err > 0.0) {
        const double scale = std::pow(200.0 * err / result_abs, 1.5);
        err = (scale < 1.0) ? result_abs * scale : result_abs;
    }
    return {result_k * half, err};
}

struct QuadResult {
    double value = 0.0;
    double error = 0.0;
    int panels = 0;
};

/// Adaptive Gauss-Kronrod on [a,b]: worst-panel-first bisection until the
/// summed error estimate meets abs_tol + rel_tol*|value| or the panel budget
/// runs out. Smooth decaying integrands (everything in this library) converge
/// in a handful of panels.
template <class F>
QuadResult gk_adaptive(F&& f, double a, double b, double abs_tol = 1e-12,
                       double rel_tol = 1e-10, int max_panels = 512) {
    struct Panel {
        double a, b, value, error;
        bool operator<(const Panel& o) const { return error < o.error; }
    };
    std::priority_queue<Panel> heap;
    auto [v0, e0] = gk15_panel(f, a, b);
    heap.push({a, b, v0, e0});
    double total_value = v0;
    double total_error = e0;
    int panels = 1;

    while (total_error > abs_tol + rel_tol * std::fabs(total_value) &&
           panels < max_panels) {
        Panel worst = heap.top();
        heap.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        auto [vl, el] = gk15_panel(f, worst.a, mid);
        auto [vr, er] = gk15_panel(f, mid, worst.b);
        total_value += vl + vr - worst.value;
        total_error += el + er - worst.error;
        heap.push({worst.a, mid, vl, el});
        heap.push({mid, worst.b, vr, er});
        ++panels;
    }
    return {total_value, total_error, panels};
}

/// gk_adaptive that throws numeric_error when the relative target is missed.
template <class F>
double gk_integrate_checked(F&& f, double a, double b, double rel_tol = 1e-8,
                            double abs_floor = 1e-14) {
    QuadResult r = gk_adaptive(f, a, b, abs_floor, rel_tol * 0.1, 1024);
    if (r.error > abs_floor + rel_tol * std::fabs(r.value)) {
        throw numeric_error("quadrature did not reach requested accuracy",
                            r.error / std::max(std::fabs(r.value), 1e-300));
    }
    return r.value;
}

/// Adaptive integration of f over an axis-aligned box, innermost dimension
/// last. Each level runs gk_adaptive over its own coordinate; tolerances are
/// per-level relative targets. Intended for smooth, fast-decaying densities
/// in up to four dimensions.
double integrate_box(const std::function<double(const double*)>& f,
                     const std::vector<std::pair<double, double>>& bounds,
                     double rel_tol = 1e-9, double abs_floor = 1e-14);

}  // namespace enp::math
