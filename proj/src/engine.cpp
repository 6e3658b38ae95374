#include "longmix/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "longmix/error.hpp"
#include "longmix/optim.hpp"

namespace longmix {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;

enum class CoreFailure { None, ClusterCholesky, SingularInformation };

// One sweep over the clusters: information matrix, GLS solution and the
// pieces of the ML/REML criteria. Accumulation follows cluster (mouse-id)
// order so results are reproducible bit for bit.
struct LikelihoodCore {
    CoreFailure failure = CoreFailure::None;
    Vector beta;
    Matrix cov_beta;
    double logdet_v = 0.0;
    double logdet_info = 0.0;
    double quad = 0.0;  // r' V^-1 r at the GLS optimum

    bool ok() const { return failure == CoreFailure::None; }
};

LikelihoodCore evaluate_core(const CovarianceStructure& theta, const DesignSet& ds) {
    const int p = ds.n_cols();
    LikelihoodCore core;
    Matrix info = Matrix::Zero(p, p);
    Vector xty = Vector::Zero(p);
    double ypy = 0.0;

    for (const auto& cl : ds.clusters) {
        const Matrix v = marginal_cov(theta, cl.t, cl.group_level);
        Eigen::LLT<Matrix> llt(v);
        if (llt.info() != Eigen::Success) {
            core.failure = CoreFailure::ClusterCholesky;
            return core;
        }
        const auto l = llt.matrixL();
        const Matrix u = l.solve(cl.X);
        const Vector w = l.solve(cl.y);
        info.noalias() += u.transpose() * u;
        xty.noalias() += u.transpose() * w;
        ypy += w.squaredNorm();
        for (Index i = 0; i < cl.t.size(); ++i) {
            core.logdet_v += 2.0 * std::log(llt.matrixLLT()(i, i));
        }
    }

    Eigen::LLT<Matrix> llt_info(info);
    if (llt_info.info() != Eigen::Success) {
        core.failure = CoreFailure::SingularInformation;
        return core;
    }
    core.beta = llt_info.solve(xty);
    const Matrix inv = llt_info.solve(Matrix::Identity(p, p));
    core.cov_beta = 0.5 * (inv + inv.transpose());
    core.quad = std::max(0.0, ypy - core.beta.dot(xty));
    for (int j = 0; j < p; ++j) {
        core.logdet_info += 2.0 * std::log(llt_info.matrixLLT()(j, j));
    }
    return core;
}

double loglik_from_core(const LikelihoodCore& core, long n, int p, Method method) {
    const double nn = static_cast<double>(n);
    if (method == Method::ML) {
        return -0.5 * (nn * kLog2Pi + core.logdet_v + core.quad);
    }
    return -0.5 * ((nn - p) * kLog2Pi + core.logdet_v + core.logdet_info + core.quad);
}

[[noreturn]] void throw_core_failure(CoreFailure failure) {
    if (failure == CoreFailure::ClusterCholesky) {
        throw Error(Errc::CholeskyFailure,
                    "cluster covariance is not positive definite at these parameters");
    }
    throw Error(Errc::SingularInformation, "GLS information matrix is singular");
}

// Prototype with data-dependent slots (heterogeneous-variance ratio count)
// resolved.
CovarianceStructure resolve_prototype(const CovarianceStructure& requested, int n_groups) {
    CovarianceStructure proto = requested;
    if (proto.kind == CovKind::RandomInterceptHeteroVar) {
        proto.ratios.assign(static_cast<std::size_t>(std::max(0, n_groups - 1)), 1.0);
    } else {
        proto.ratios.clear();
    }
    return proto;
}

// Method-of-moments start: residual sd from per-mouse OLS detrending and
// intercept sd across mice.
CovarianceStructure initial_structure(const CovarianceStructure& proto, const DesignSet& ds) {
    double rss = 0.0;
    long rdof = 0;
    std::vector<double> intercepts;
    intercepts.reserve(ds.clusters.size());
    for (const auto& cl : ds.clusters) {
        const Index n = cl.t.size();
        if (n == 1) {
            intercepts.push_back(cl.y(0));
            continue;
        }
        Matrix x(n, 2);
        x.col(0).setOnes();
        x.col(1) = cl.t;
        const Vector coef = (x.transpose() * x).ldlt().solve(x.transpose() * cl.y);
        rss += (cl.y - x * coef).squaredNorm();
        rdof += std::max<long>(0, n - 2);
        intercepts.push_back(coef(0));
    }

    const double ysd = response_sd(ds);
    const double floor = std::max(1e-3 * ysd, 1e-6);
    double sigma = rdof > 0 ? std::sqrt(rss / static_cast<double>(rdof)) : 0.0;
    sigma = std::max(sigma, floor);

    double sigma_b0 = 0.0;
    if (intercepts.size() >= 2) {
        double m = 0.0;
        for (double a : intercepts) m += a;
        m /= static_cast<double>(intercepts.size());
        double ss = 0.0;
        for (double a : intercepts) ss += (a - m) * (a - m);
        sigma_b0 = std::sqrt(ss / static_cast<double>(intercepts.size() - 1));
    }
    sigma_b0 = std::max(sigma_b0, floor);

    CovarianceStructure s = proto;
    s.sigma = sigma;
    s.sigma_b0 = sigma_b0;
    s.rho_ar = 0.0;
    std::fill(s.ratios.begin(), s.ratios.end(), 1.0);
    if (proto.kind == CovKind::RandomInterceptSlope) {
        s.slope_chol.setZero();
        s.slope_chol(0, 0) = sigma_b0;
        s.slope_chol(1, 1) = 0.1 * sigma_b0;
    }
    return s;
}

// Standard-deviation-like quantities inspected for the boundary flag,
// together with the unconstrained coordinates to clamp when one collapses.
struct SdComponent {
    double value = 0.0;
    std::vector<std::pair<Index, double>> clamp;  // (coordinate, clamped value)
    bool clampable = true;
};

std::vector<SdComponent> sd_components(const CovarianceStructure& s) {
    std::vector<SdComponent> out;
    const double log_clamp = std::log(1e-6);
    switch (s.kind) {
        case CovKind::RandomIntercept:
            out.push_back({s.sigma_b0, {{0, log_clamp}}, true});
            out.push_back({s.sigma, {{1, log_clamp}}, true});
            break;
        case CovKind::RandomInterceptAR1:
            out.push_back({s.sigma_b0, {{0, log_clamp}}, true});
            out.push_back({s.sigma, {{1, log_clamp}}, true});
            break;
        case CovKind::RandomInterceptHeteroVar: {
            out.push_back({s.sigma_b0, {{0, log_clamp}}, true});
            out.push_back({s.sigma, {{1, log_clamp}}, true});
            for (std::size_t g = 0; g < s.ratios.size(); ++g) {
                // Group-specific residual sd; flagged but not clamped.
                out.push_back({s.sigma * s.ratios[g], {}, false});
            }
            break;
        }
        case CovKind::RandomInterceptSlope: {
            const Eigen::Matrix2d d = s.slope_chol * s.slope_chol.transpose();
            if (s.slope_uncorrelated) {
                out.push_back({std::sqrt(d(0, 0)), {{0, log_clamp}}, true});
                out.push_back({std::sqrt(d(1, 1)), {{1, log_clamp}}, true});
                out.push_back({s.sigma, {{2, log_clamp}}, true});
            } else {
                out.push_back({std::sqrt(d(0, 0)), {{0, log_clamp}}, true});
                out.push_back({std::sqrt(d(1, 1)), {{1, 0.0}, {2, log_clamp}}, true});
                out.push_back({s.sigma, {{3, log_clamp}}, true});
            }
            break;
        }
    }
    return out;
}

struct BestTracker {
    Vector x;
    double f = std::numeric_limits<double>::infinity();

    void offer(const Vector& candidate, double value) {
        if (value < f) {
            f = value;
            x = candidate;
        }
    }
};

}  // namespace

std::string method_token(Method m) { return m == Method::ML ? "ML" : "REML"; }

Method method_from_token(std::string_view token) {
    if (token == "ml" || token == "ML") return Method::ML;
    if (token == "reml" || token == "REML") return Method::REML;
    throw Error(Errc::ParseError, "unknown method '" + std::string(token) + "'");
}

Vector FittedModel::se() const { return cov_beta.diagonal().cwiseMax(0.0).cwiseSqrt(); }

GlsResult gls_beta(const CovarianceStructure& theta, const DesignSet& ds) {
    const LikelihoodCore core = evaluate_core(theta, ds);
    if (!core.ok()) throw_core_failure(core.failure);
    return {core.beta, core.cov_beta};
}

double profile_loglik(const CovarianceStructure& theta, const DesignSet& ds, Method method) {
    const LikelihoodCore core = evaluate_core(theta, ds);
    if (!core.ok()) throw_core_failure(core.failure);
    return loglik_from_core(core, ds.n_obs, ds.n_cols(), method);
}

namespace {

FittedModel package(const ModelSpec& spec, const DesignSet& ds,
                    const CovarianceStructure& theta, bool converged, bool boundary) {
    const LikelihoodCore core = evaluate_core(theta, ds);
    if (!core.ok()) throw_core_failure(core.failure);

    FittedModel m;
    m.spec = spec;
    m.label = format_formula(spec.fixed);
    m.column_names = ds.column_names;
    m.column_scope = ds.column_scope;
    m.beta = core.beta;
    m.cov_beta = core.cov_beta;
    m.theta = theta;
    m.loglik = loglik_from_core(core, ds.n_obs, ds.n_cols(), spec.method);
    m.k = ds.n_cols() + n_variance_params(theta);
    m.n_obs = ds.n_obs;
    m.n_clusters = ds.n_clusters();
    int q_outer = 0, q_inner = 0;
    for (const auto scope : ds.column_scope) {
        (scope == ColumnScope::Outer ? q_outer : q_inner) += 1;
    }
    m.df_outer = ds.n_clusters() - q_outer;
    m.df_inner = static_cast<int>(ds.n_obs) - ds.n_clusters() - q_inner;
    m.converged = converged;
    m.boundary = boundary;
    return m;
}

}  // namespace

FittedModel fit(const ModelSpec& spec, const LongDataset& d, const FitOptions& opts) {
    const DesignSet ds = build_design(spec.fixed, d);
    CovarianceStructure proto = resolve_prototype(spec.structure, ds.n_groups());
    const int n_theta = n_variance_params(proto);
    if (ds.n_obs <= ds.n_cols() + n_theta) {
        throw Error(Errc::TooFew, "not enough observations to estimate " +
                                      std::to_string(ds.n_cols() + n_theta) + " parameters");
    }

    BestTracker best;
    const auto objective = [&](const Vector& u) {
        const LikelihoodCore core = evaluate_core(from_unconstrained(proto, u), ds);
        if (!core.ok()) return std::numeric_limits<double>::infinity();
        const double f = -loglik_from_core(core, ds.n_obs, ds.n_cols(), spec.method);
        best.offer(u, f);
        return f;
    };

    std::vector<Vector> starts;
    starts.push_back(to_unconstrained(initial_structure(proto, ds)));
    for (const auto& extra : opts.extra_starts) {
        starts.push_back(to_unconstrained(embed_structure(extra, proto)));
    }

    Vector launch = starts.front();
    double launch_f = objective(launch);
    for (std::size_t i = 1; i < starts.size(); ++i) {
        const double f = objective(starts[i]);
        if (f < launch_f) {
            launch = starts[i];
            launch_f = f;
        }
    }
    if (!std::isfinite(launch_f)) {
        throw Error(Errc::NonConvergence, "no feasible starting point for the optimizer");
    }

    const OptimResult nm = nelder_mead(objective, launch);
    bool converged = nm.converged;
    if (opts.polish) {
        const OptimResult polish = bfgs_polish(objective, best.x);
        converged = converged || polish.converged;
    }
    if (!std::isfinite(best.f)) {
        throw Error(Errc::NonConvergence, "optimizer failed to find a finite criterion value");
    }

    CovarianceStructure theta = from_unconstrained(proto, best.x);

    // Boundary scan: sds below threshold are clamped at 1e-6 and the free
    // coordinates re-optimized once to stabilize cov_beta.
    const double ysd = response_sd(ds);
    const double threshold = 1e-4 * (ysd > 0.0 ? ysd : 1.0);
    bool boundary = false;
    std::vector<std::pair<Index, double>> clamps;
    for (const auto& comp : sd_components(theta)) {
        if (comp.value < threshold) {
            boundary = true;
            if (comp.clampable) {
                clamps.insert(clamps.end(), comp.clamp.begin(), comp.clamp.end());
            }
        }
    }
    if (theta.kind == CovKind::RandomInterceptAR1 && std::fabs(theta.rho_ar) > 0.999) {
        boundary = true;
    }

    if (!clamps.empty()) {
        Vector fixed = best.x;
        std::vector<bool> frozen(static_cast<std::size_t>(fixed.size()), false);
        for (const auto& [idx, value] : clamps) {
            fixed(idx) = value;
            frozen[static_cast<std::size_t>(idx)] = true;
        }
        std::vector<Index> free_idx;
        for (Index j = 0; j < fixed.size(); ++j) {
            if (!frozen[static_cast<std::size_t>(j)]) free_idx.push_back(j);
        }
        if (free_idx.empty()) {
            return package(spec, ds, from_unconstrained(proto, fixed), converged, boundary);
        }
        BestTracker clamped_best;
        const auto clamped_objective = [&](const Vector& ufree) {
            Vector full = fixed;
            for (std::size_t j = 0; j < free_idx.size(); ++j) full(free_idx[j]) = ufree(j);
            const LikelihoodCore core = evaluate_core(from_unconstrained(proto, full), ds);
            if (!core.ok()) return std::numeric_limits<double>::infinity();
            const double f = -loglik_from_core(core, ds.n_obs, ds.n_cols(), spec.method);
            clamped_best.offer(ufree, f);
            return f;
        };
        Vector ufree(static_cast<Index>(free_idx.size()));
        for (std::size_t j = 0; j < free_idx.size(); ++j) ufree(j) = best.x(free_idx[j]);
        const OptimResult renm = nelder_mead(clamped_objective, ufree);
        if (opts.polish) bfgs_polish(clamped_objective, clamped_best.x);
        converged = converged || renm.converged;
        if (std::isfinite(clamped_best.f)) {
            Vector full = fixed;
            for (std::size_t j = 0; j < free_idx.size(); ++j) {
                full(free_idx[j]) = clamped_best.x(j);
            }
            theta = from_unconstrained(proto, full);
        }
    }

    return package(spec, ds, theta, converged, boundary);
}

FittedModel evaluate_at(const ModelSpec& spec, const LongDataset& d,
                        const CovarianceStructure& theta) {
    const DesignSet ds = build_design(spec.fixed, d);
    return package(spec, ds, theta, true, false);
}

FittedModel refit_reml(const FittedModel& m, const LongDataset& d) {
    ModelSpec spec = m.spec;
    spec.method = Method::REML;
    FitOptions opts;
    opts.extra_starts.push_back(m.theta);
    FittedModel out = fit(spec, d, opts);
    out.label = m.label;
    return out;
}

InformationCriteria information_criteria(const FittedModel& m) {
    InformationCriteria ic;
    ic.aic = -2.0 * m.loglik + 2.0 * m.k;
    ic.bic = -2.0 * m.loglik + m.k * std::log(static_cast<double>(m.n_obs));
    return ic;
}

}  // namespace longmix
