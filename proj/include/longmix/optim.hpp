#ifndef LONGMIX_OPTIM_HPP
#define LONGMIX_OPTIM_HPP

#include <functional>

#include "longmix/types.hpp"

namespace longmix {

using Objective = std::function<double(const Vector&)>;

struct OptimResult {
    Vector x;
    double f = 0.0;
    bool converged = false;
    int iterations = 0;
    int evaluations = 0;
    double grad_norm = -1.0;  // filled by the gradient-based polish
};

struct NelderMeadOptions {
    double initial_step = 0.25;
    double diameter_tol = 1e-9;
    double f_tol = 1e-10;
    int max_iterations = 5000;
};

struct BfgsOptions {
    double grad_tol = 1e-7;
    double step_tol = 1e-12;
    double fd_step = 1e-6;
    int max_iterations = 200;
};

// Downhill simplex minimization. The objective may return +inf (or NaN,
// treated as +inf) outside the feasible region.
OptimResult nelder_mead(const Objective& f, const Vector& x0, const NelderMeadOptions& opts = {});

// BFGS with central-difference gradients and Armijo backtracking; used to
// polish a simplex solution.
OptimResult bfgs_polish(const Objective& f, const Vector& x0, const BfgsOptions& opts = {});

}  // namespace longmix

#endif  // LONGMIX_OPTIM_HPP
