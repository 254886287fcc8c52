#pragma once

#include <functional>
#include <span>
#include <vector>

namespace polyscale::optim {

/// Objective returning f(x) and writing the gradient into `grad`.
using Objective = std::function<double(std::span<const double> x, std::span<double> grad)>;

struct BfgsOptions {
    int max_iter = 200;
    /// Stop when max |grad| <= grad_tol * max(1, |f|).
    double grad_tol = 1e-10;
    /// Stop when an accepted step improves f by less than f_tol * max(1, |f|).
    double f_tol = 1e-15;
};

struct BfgsResult {
    std::vector<double> x;
    double value = 0;
    int iterations = 0;
    bool converged = false;
};

/// BFGS ascent with backtracking (Armijo) line search. The returned value is
/// never below f(x0); non-finite trial values are rejected.
BfgsResult maximize_bfgs(const Objective& f, std::vector<double> x0, const BfgsOptions& opts = {});

}  // namespace polyscale::optim
