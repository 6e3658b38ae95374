#ifndef LONGMIX_COVSTRUCT_HPP
#define LONGMIX_COVSTRUCT_HPP

#include <string>
#include <string_view>
#include <vector>

#include "longmix/types.hpp"

namespace longmix {

// The four within-mouse covariance models. Every variant keeps a residual
// standard deviation `sigma`; the random-intercept family adds `sigma_b0`,
// the intercept+slope variant replaces it with the lower Cholesky factor of
// the 2x2 random-effect covariance D, AR(1) adds the lag-one correlation of
// the residual process, and the heterogeneous-variance variant scales the
// residual sd per non-reference group.
enum class CovKind { RandomIntercept, RandomInterceptSlope, RandomInterceptAR1, RandomInterceptHeteroVar };

struct CovarianceStructure {
    CovKind kind = CovKind::RandomIntercept;
    double sigma_b0 = 1.0;                       // ri, ar1, hv (grams)
    double sigma = 1.0;                          // all (grams; hv: reference group)
    Eigen::Matrix2d slope_chol = Eigen::Matrix2d::Zero();  // ris: D = L L'
    double rho_ar = 0.0;                         // ar1, in (-1, 1)
    std::vector<double> ratios;                  // hv: per non-reference group, > 0
    bool slope_uncorrelated = false;             // ris: pin the off-diagonal of L to 0
};

CovarianceStructure random_intercept(double sigma_b0, double sigma);
CovarianceStructure random_intercept_slope(const Eigen::Matrix2d& chol_L, double sigma,
                                           bool uncorrelated = false);
CovarianceStructure random_intercept_ar1(double sigma_b0, double sigma, double rho);
CovarianceStructure random_intercept_hetero(double sigma_b0, double sigma,
                                            std::vector<double> ratios);

// Number of variance parameters contributing to the model's k.
int n_variance_params(const CovarianceStructure& s);

// Columns of the random-effect design Z_i (1 for intercept-only, 2 for
// intercept+slope).
int n_random_effects(CovKind kind);

// Z_i for a cluster observed at weeks t.
Matrix random_effect_design(const CovarianceStructure& s, const Vector& t);

// Random-effect covariance D (1x1 or 2x2).
Matrix random_effect_cov(const CovarianceStructure& s);

// Residual sd for a cluster in the given group level (0 = reference).
double residual_sd(const CovarianceStructure& s, int group_level);

// Marginal covariance V_i = Z_i D Z_i' + R_i, exactly symmetric by
// construction. Weeks must be strictly increasing.
Matrix marginal_cov(const CovarianceStructure& s, const Vector& t, int group_level);

// Intraclass correlation sigma_b0^2 / (sigma_b0^2 + sigma^2) of the
// random-intercept structure.
double icc(const CovarianceStructure& s);

// Bijection between the interior of the parameter space and R^m:
// sds and ratios map through log, the AR(1) correlation through atanh,
// and the Cholesky off-diagonal stays as-is.
Vector to_unconstrained(const CovarianceStructure& s);
CovarianceStructure from_unconstrained(const CovarianceStructure& prototype, const Vector& u);

// Map a structure into another variant's parameter space for use as a warm
// start: the random-intercept content carries over and new parameters take
// neutral values (rho = 0, ratios = 1, slope sd a small fraction of the
// intercept sd).
CovarianceStructure embed_structure(const CovarianceStructure& s,
                                    const CovarianceStructure& prototype);

// CLI tokens: ri, ris, ri+ar1, ri+hv.
std::string kind_token(CovKind kind);
CovKind kind_from_token(std::string_view token);

// Human-readable one-line description of the fitted parameters.
std::string describe(const CovarianceStructure& s);

}  // namespace longmix

#endif  // LONGMIX_COVSTRUCT_HPP
