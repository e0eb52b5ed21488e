#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace enp {

/// Quadrature or root solve missed its accuracy target. Carries the error
/// actually achieved so callers can decide whether to accept the result.
class numeric_error : public std::runtime_error {
public:
    numeric_error(const std::string& what, double achieved_error)
        : std::runtime_error(what), achieved_error_(achieved_error) {}

    double achieved_error() const noexcept { return achieved_error_; }

private:
    double achieved_error_;
};

/// A closed-form minimizer formula is degenerate for the given inputs.
/// The message names the fallback the caller should consider.
class degenerate_error : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// An iterative minimization exhausted its budget. Carries the best iterate.
class convergence_error : public std::runtime_error {
public:
    convergence_error(const std::string& what, std::vector<double> best_point,
                      double best_value)
        : std::runtime_error(what),
          best_point_(std::move(best_point)),
          best_value_(best_value) {}

    const std::vector<double>& best_point() const noexcept { return best_point_; }
    double best_value() const noexcept { return best_value_; }

private:
    std::vector<double> best_point_;
    double best_value_;
};

}  // namespace enp
