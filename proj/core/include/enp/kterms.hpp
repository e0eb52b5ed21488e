#pragma once

#include <Eigen/Dense>

#include "enp/claims.hpp"

namespace enp {

/// Orthogonal matrix D = ( n^{-1/2} 1 | 1_perp ) with unit determinant. The
/// first column is fixed; the completion 1_perp is a deterministic
/// Householder construction and spans the hyperplane orthogonal to 1.
struct RotationMatrix {
    int n = 0;
    Eigen::MatrixXd d;  // n x n

    Eigen::Block<const Eigen::MatrixXd> one_perp() const {
        return d.block(0, 1, n, n - 1);
    }
};

RotationMatrix rotation_matrix(int n);

/// The claim-side functionals entering the second-order expansions,
/// evaluated at a point y:
///   K(y)    = E[ L 1_{<1,L> > y} ]               (vector)
///   K[L](y) = E[ <L, Sigma L> 1_{<1,L> > y} ]    (scalar, Sigma = asset cov)
/// together with their first two derivatives, the hyperplane integrals h, h2
/// of the rotated density, and the aggregate density f_{<1,L>} at y.
struct KTermBundle {
    double y = 0.0;
    Eigen::VectorXd kvec;     // K(y)
    Eigen::VectorXd kvec_d1;  // K'(y)
    Eigen::VectorXd kvec_d2;  // K''(y)
    double kL_d1 = 0.0;       // K[L]'(y)
    double kL_d2 = 0.0;       // K[L]''(y)
    Eigen::VectorXd h;        // length n-1 (empty when n = 1)
    double h2 = 0.0;
    double f_agg = 0.0;       // f_{<1,L>}(y)
    double f_agg_d1 = 0.0;    // f_{<1,L>}'(y)
};

enum class KMethod {
    Auto,        ///< closed forms where the claim law admits them
    ClosedForm,  ///< require closed forms (Gaussian / univariate analytic)
    Quadrature,  ///< rotated-hyperplane quadrature of the density
};

/// Evaluates the bundle. Gaussian claims use closed forms; the quadrature
/// route integrates the rotated density over the hyperplane <1,l> = y and
/// assembles the derivatives from the rotation identities, never by
/// numerically differentiating quadrature output. A custom rotation can be
/// injected to exercise completion invariance.
KTermBundle k_bundle(const ClaimModel& claims, const Eigen::MatrixXd& sigma_x,
                     double y, KMethod method = KMethod::Auto,
                     const RotationMatrix* rotation = nullptr);

/// Reference values of K(y) (vector) and K[L](y) (scalar) by direct
/// quadrature of the defining region integrals over {<1,l> > y}, treating the
/// density as a black box. Used as the independent check of the derivative
/// identities.
struct KReference {
    Eigen::VectorXd kvec;
    double kL = 0.0;
};
KReference k_reference_quadrature(const ClaimModel& claims,
                                  const Eigen::MatrixXd& sigma_x, double y,
                                  double rel_tol = 1e-9);

/// Univariate tail functional K_j(y) = \int_y^inf (phi - l)^j f_L(l) dl and
/// its derivatives. Derivatives use K_j' = -(phi - id)^j f_L and the product
/// rule, with density derivatives from the claim model.
double k_univariate(const ClaimModel& claims, double phi, double y, int j,
                    int deriv);

/// Max relative error between the analytic derivatives of k_bundle and
/// central finite differences of the quadratured K-integrals at y. The
/// quadrature tolerance is per-level relative; the achieved accuracy is
/// typically far tighter.
double kderiv_finite_difference_check(const ClaimModel& claims,
                                      const Eigen::MatrixXd& sigma_x, double y,
                                      double step, double quad_rel_tol = 1e-12);

}  // namespace enp
