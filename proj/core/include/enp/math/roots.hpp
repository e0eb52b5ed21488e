#pragma once

#include <cmath>
#include <utility>

#include "enp/errors.hpp"

namespace enp::math {

/// Brent's method on a bracketing interval [a,b] with f(a)*f(b) <= 0.
/// Returns the root to within x_tol (absolute) or after max_iter iterations,
/// whichever comes first; throws numeric_error if the bracket is invalid.
template <class F>
double brent_root(F&& f, double a, double b, double x_tol = 1e-13,
                  int max_iter = 200) {
    double fa = f(a);
    double fb = f(b);
    if (fa == 0.0) return a;
    if (fb == 0.0) return b;
    if (fa * fb > 0.0) {
        throw numeric_error("brent_root: endpoints do not bracket a root",
                            std::fabs(fa) < std::fabs(fb) ? std::fabs(fa)
                                                          : std::fabs(fb));
    }
    double c = a, fc = fa;
    double d = b - a, e = d;
    for (int iter = 0; iter < max_iter; ++iter) {
        if (std::fabs(fc) < std::fabs(fb)) {
            a = b; b = c; c = a;
            fa = fb; fb = fc; fc = fa;
        }
        const double tol1 = 2.0 * 2.220446049250313e-16 * std::fabs(b) + 0.5 * x_tol;
        const double xm = 0.5 * (c - b);
        if (std::fabs(xm) <= tol1 || fb == 0.0) return b;
        if (std::fabs(e) >= tol1 && std::fabs(fa) > std::fabs(fb)) {
            double p, q;
            const double s = fb / fa;
            if (a == c) {  // secant
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {  // inverse quadratic
                const double qq = fa / fc;
                const double r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if (p > 0.0) q = -q;
            p = std::fabs(p);
            if (2.0 * p < std::fmin(3.0 * xm * q - std::fabs(tol1 * q),
                                    std::fabs(e * q))) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += (std::fabs(d) > tol1) ? d : std::copysign(tol1, xm);
        fb = f(b);
        if ((fb > 0.0) == (fc > 0.0)) {
            c = a; fc = fa;
            d = b - a; e = d;
        }
    }
    return b;
}

/// Expand [lo,hi] geometrically until f changes sign, then solve with Brent.
template <class F>
double bracketed_root(F&& f, double lo, double hi, double x_tol = 1e-13) {
    double flo = f(lo);
    double fhi = f(hi);
    for (int i = 0; i < 64 && flo * fhi > 0.0; ++i) {
        const double width = hi - lo;
        if (std::fabs(flo) < std::fabs(fhi)) {
            lo -= width;
            flo = f(lo);
        } else {
            hi += width;
            fhi = f(hi);
        }
    }
    return brent_root(f, lo, hi, x_tol);
}

}  // namespace enp::math
