#ifndef LONGMIX_ORACLE_HPP
#define LONGMIX_ORACLE_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "longmix/covstruct.hpp"
#include "longmix/dataio.hpp"
#include "longmix/engine.hpp"
#include "longmix/formula.hpp"
#include "longmix/inference.hpp"
#include "longmix/rng.hpp"
#include "longmix/types.hpp"

namespace longmix {

struct SimLayout {
    std::vector<int> group_sizes = {10, 10, 11};  // labels 1..G
    int weeks = 12;
    std::uint64_t seed = 0;
};

struct TruthParams {
    FormulaAst formula;  // fixed-effects design the mean is built from
    Vector beta;
    CovarianceStructure structure;
};

// Fixed effects, formula and structure of the selected model's published
// fit; the default simulation truth.
TruthParams default_truth();

// Draw one dataset from the generative model: per mouse, random effects
// from N(0, D), residuals from the structure's law (AR(1) through the
// stationary recursion, group-scaled sds for the heterogeneous variant),
// y = X beta + Z b + e. Each mouse consumes an independent substream (run
// seed xor mouse index); draws inside a stream are the random-effect
// components first, then residual innovations in week order.
LongDataset simulate(const TruthParams& truth, const SimLayout& layout);

// Joint multivariate-normal log density over the full N x N block-diagonal
// covariance, evaluated with a single dense factorization and no
// per-cluster shortcuts. ML evaluates at beta = truth.beta; REML evaluates
// the restricted criterion (which profiles beta internally). Guards
// N <= 2000.
double dense_loglik(const TruthParams& truth, const LongDataset& d, Method method);

// GLS through the dense N x N system.
GlsResult dense_gls(const CovarianceStructure& theta, const LongDataset& d,
                    const FormulaAst& ast);

struct CoverageRow {
    std::string label;
    int reps = 0;
    int fit_failures = 0;
    int covered = 0;
    double coverage = 0.0;
};

// simulate -> fit -> contrast per replicate; empirical 95% CI coverage per
// contrast. Fit failures are counted, not fatal. Replicate r uses the
// derived seed splitmix64(layout.seed ^ (r + 1)).
std::vector<CoverageRow> coverage_experiment(const TruthParams& truth, const SimLayout& layout,
                                             int reps, const std::vector<Contrast>& contrasts);

void write_coverage_csv(const std::vector<CoverageRow>& rows, const std::string& path);

// Random interior draw of a structure's parameters; shared by the
// oracle-check command and the equivalence tests.
CovarianceStructure random_interior_structure(CovKind kind, int n_groups, Rng& rng);

}  // namespace longmix

#endif  // LONGMIX_ORACLE_HPP
