#include "longmix/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace longmix {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double guarded(const Objective& f, const Vector& x, int& evals) {
    ++evals;
    const double v = f(x);
    return std::isnan(v) ? kInf : v;
}

}  // namespace

OptimResult nelder_mead(const Objective& f, const Vector& x0, const NelderMeadOptions& opts) {
    const Index n = x0.size();
    int evals = 0;

    std::vector<Vector> simplex;
    std::vector<double> fv;
    simplex.reserve(n + 1);
    simplex.push_back(x0);
    fv.push_back(guarded(f, x0, evals));
    for (Index j = 0; j < n; ++j) {
        Vector v = x0;
        v(j) += opts.initial_step * std::max(1.0, std::fabs(x0(j)));
        simplex.push_back(v);
        fv.push_back(guarded(f, v, evals));
    }

    std::vector<int> order(n + 1);
    const auto sort_simplex = [&]() {
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
        std::sort(order.begin(), order.end(), [&](int a, int b) { return fv[a] < fv[b]; });
    };

    OptimResult result;
    int iter = 0;
    for (; iter < opts.max_iterations; ++iter) {
        sort_simplex();
        const int best = order[0];
        const int worst = order[n];
        const int second_worst = order[n - 1];

        // Convergence: simplex diameter and function spread both small.
        double diameter = 0.0;
        for (Index j = 1; j <= n; ++j) {
            diameter = std::max(diameter, (simplex[order[j]] - simplex[best]).norm());
        }
        const bool f_small = std::isfinite(fv[best]) && std::isfinite(fv[worst]) &&
                             fv[worst] - fv[best] < opts.f_tol;
        if (diameter < opts.diameter_tol && f_small) {
            result.converged = true;
            break;
        }

        Vector centroid = Vector::Zero(n);
        for (Index j = 0; j <= n; ++j) {
            if (order[j] != worst) centroid += simplex[order[j]];
        }
        centroid /= static_cast<double>(n);

        const Vector reflected = centroid + (centroid - simplex[worst]);
        const double fr = guarded(f, reflected, evals);
        if (fr < fv[best]) {
            const Vector expanded = centroid + 2.0 * (centroid - simplex[worst]);
            const double fe = guarded(f, expanded, evals);
            if (fe < fr) {
                simplex[worst] = expanded;
                fv[worst] = fe;
            } else {
                simplex[worst] = reflected;
                fv[worst] = fr;
            }
        } else if (fr < fv[second_worst]) {
            simplex[worst] = reflected;
            fv[worst] = fr;
        } else {
            const bool outside = fr < fv[worst];
            const Vector contracted =
                outside ? centroid + 0.5 * (reflected - centroid)
                        : centroid + 0.5 * (simplex[worst] - centroid);
            const double fc = guarded(f, contracted, evals);
            if (fc < std::min(fr, fv[worst])) {
                simplex[worst] = contracted;
                fv[worst] = fc;
            } else {
                // Shrink toward the best vertex.
                for (Index j = 0; j <= n; ++j) {
                    if (order[j] == best) continue;
                    const int idx = order[j];
                    simplex[idx] = simplex[best] + 0.5 * (simplex[idx] - simplex[best]);
                    fv[idx] = guarded(f, simplex[idx], evals);
                }
            }
        }
    }

    sort_simplex();
    result.x = simplex[order[0]];
    result.f = fv[order[0]];
    result.iterations = iter;
    result.evaluations = evals;
    return result;
}

OptimResult bfgs_polish(const Objective& f, const Vector& x0, const BfgsOptions& opts) {
    const Index n = x0.size();
    int evals = 0;

    const auto gradient = [&](const Vector& x) {
        Vector g(n);
        for (Index j = 0; j < n; ++j) {
            const double h = opts.fd_step * std::max(1.0, std::fabs(x(j)));
            Vector xp = x, xm = x;
            xp(j) += h;
            xm(j) -= h;
            g(j) = (guarded(f, xp, evals) - guarded(f, xm, evals)) / (2.0 * h);
        }
        return g;
    };

    OptimResult result;
    Vector x = x0;
    double fx = guarded(f, x, evals);
    if (!std::isfinite(fx)) {
        result.x = x;
        result.f = fx;
        result.evaluations = evals;
        return result;
    }

    Matrix h_inv = Matrix::Identity(n, n);
    Vector g = gradient(x);
    int iter = 0;
    for (; iter < opts.max_iterations; ++iter) {
        if (!g.allFinite()) break;
        if (g.norm() < opts.grad_tol) {
            result.converged = true;
            break;
        }
        Vector direction = -h_inv * g;
        if (direction.dot(g) >= 0.0) {
            h_inv = Matrix::Identity(n, n);
            direction = -g;
        }

        // Armijo backtracking.
        double step = 1.0;
        const double slope = g.dot(direction);
        Vector x_new;
        double f_new = kInf;
        bool accepted = false;
        for (int bt = 0; bt < 40; ++bt) {
            x_new = x + step * direction;
            f_new = guarded(f, x_new, evals);
            if (std::isfinite(f_new) && f_new <= fx + 1e-4 * step * slope) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted || (x_new - x).norm() < opts.step_tol) break;

        const Vector g_new = gradient(x_new);
        const Vector s = x_new - x;
        const Vector y = g_new - g;
        const double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm()) {
            const double rho = 1.0 / sy;
            const Matrix eye = Matrix::Identity(n, n);
            h_inv = (eye - rho * s * y.transpose()) * h_inv * (eye - rho * y * s.transpose()) +
                    rho * s * s.transpose();
        }
        x = x_new;
        fx = f_new;
        g = g_new;
    }

    result.x = x;
    result.f = fx;
    result.iterations = iter;
    result.evaluations = evals;
    result.grad_norm = g.allFinite() ? g.norm() : -1.0;
    return result;
}

}  // namespace longmix
