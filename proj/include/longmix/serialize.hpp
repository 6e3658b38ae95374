#ifndef LONGMIX_SERIALIZE_HPP
#define LONGMIX_SERIALIZE_HPP

#include <string>

#include "longmix/engine.hpp"

namespace longmix {

// JSON document with keys: model, method, beta (named), se, cov_beta,
// theta, loglik, aic, bic, k, N, M, df_outer, df_inner, converged,
// boundary. Values keep full double precision.
std::string fitted_model_json(const FittedModel& m);

void write_fitted_model_json(const FittedModel& m, const std::string& path);

}  // namespace longmix

#endif  // LONGMIX_SERIALIZE_HPP
