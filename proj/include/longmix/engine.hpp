#ifndef LONGMIX_ENGINE_HPP
#define LONGMIX_ENGINE_HPP

#include <string>
#include <vector>

#include "longmix/covstruct.hpp"
#include "longmix/design.hpp"
#include "longmix/formula.hpp"
#include "longmix/types.hpp"

namespace longmix {

enum class Method { ML, REML };

std::string method_token(Method m);
Method method_from_token(std::string_view token);

struct ModelSpec {
    FormulaAst fixed;
    CovarianceStructure structure;  // prototype: kind and options; values ignored
    Method method = Method::ML;
};

struct FittedModel {
    ModelSpec spec;
    std::string label;  // display name used in comparison tables
    std::vector<std::string> column_names;
    std::vector<ColumnScope> column_scope;
    Vector beta;
    Matrix cov_beta;
    CovarianceStructure theta;
    double loglik = 0.0;
    int k = 0;           // fixed-effect + variance parameter count
    long n_obs = 0;      // N
    int n_clusters = 0;  // M
    int df_outer = 0;    // M - #outer columns
    int df_inner = 0;    // N - M - #inner columns
    bool converged = false;
    bool boundary = false;

    int n_coef() const { return static_cast<int>(beta.size()); }
    Vector se() const;
};

struct GlsResult {
    Vector beta;
    Matrix cov_beta;
};

// GLS fixed effects at a given covariance: beta solves
// (sum_i X_i' V_i^-1 X_i) beta = sum_i X_i' V_i^-1 y_i via per-cluster
// Cholesky solves; cov_beta is the inverse information.
GlsResult gls_beta(const CovarianceStructure& theta, const DesignSet& ds);

// Log-likelihood with beta profiled out at beta_hat(theta). The REML
// criterion adds the -1/2 log|X'V^-1X| correction and replaces N by N - p
// in the 2*pi constant.
double profile_loglik(const CovarianceStructure& theta, const DesignSet& ds, Method method);

struct FitOptions {
    // Additional starting points evaluated alongside the moment-based
    // default; the optimizer never returns a point worse than any of them.
    std::vector<CovarianceStructure> extra_starts;
    bool polish = true;
};

// Maximize the profiled criterion over unconstrained variance coordinates
// (Nelder-Mead with a BFGS polish). A standard-deviation estimate within
// 1e-4 of zero on the response scale raises the boundary flag and triggers
// one refit with that component clamped at 1e-6.
FittedModel fit(const ModelSpec& spec, const LongDataset& d, const FitOptions& opts = {});

// Package a FittedModel at a fixed covariance (no optimization).
FittedModel evaluate_at(const ModelSpec& spec, const LongDataset& d,
                        const CovarianceStructure& theta);

// Same mean structure refit under REML, warm-started at m.theta.
FittedModel refit_reml(const FittedModel& m, const LongDataset& d);

struct InformationCriteria {
    double aic = 0.0;
    double bic = 0.0;
};

// aic = -2 loglik + 2k; bic = -2 loglik + k log N.
InformationCriteria information_criteria(const FittedModel& m);

}  // namespace longmix

#endif  // LONGMIX_ENGINE_HPP
