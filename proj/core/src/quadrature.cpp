#include "enp/math/quadrature.hpp"

namespace enp::math {

namespace {

QuadResult integrate_box_level(const std::function<double(const double*)>& f,
                               const std::vector<std::pair<double, double>>& bounds,
                               std::size_t level, double* point, double rel_tol,
                               double abs_floor) {
    const auto [lo, hi] = bounds[level];
    const bool innermost = (level + 1 == bounds.size());
    auto slice = [&](double x) {
        point[level] = x;
        if (innermost) return f(point);
        return integrate_box_level(f, bounds, level + 1, point, rel_tol, abs_floor)
            .value;
    };
    return gk_adaptive(slice, lo, hi, abs_floor, rel_tol, 256);
}

}  // namespace

double integrate_box(const std::function<double(const double*)>& f,
                     const std::vector<std::pair<double, double>>& bounds,
                     double rel_tol, double abs_floor) {
    if (bounds.empty()) throw std::invalid_argument("integrate_box: empty bounds");
    std::vector<double> point(bounds.size(), 0.0);
    const QuadResult r =
        integrate_box_level(f, bounds, 0, point.data(), rel_tol, abs_floor);
    // The top-level estimate only sees its own panel errors; a generous
    // multiple of the target still catches integrands the rule cannot resolve.
    if (r.error > abs_floor + 50.0 * rel_tol * std::fabs(r.value)) {
        throw numeric_error("integrate_box: accuracy target missed",
                            r.error / std::max(std::fabs(r.value), 1e-300));
    }
    return r.value;
}

}  // namespace enp::math
