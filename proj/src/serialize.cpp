#include "longmix/serialize.hpp"

#include <fstream>

#include <json.hpp>

#include "longmix/error.hpp"

namespace longmix {

namespace {

using Json = nlohmann::ordered_json;

Json theta_json(const CovarianceStructure& s) {
    Json j;
    j["structure"] = kind_token(s.kind);
    switch (s.kind) {
        case CovKind::RandomIntercept:
            j["sigma_b0"] = s.sigma_b0;
            j["sigma"] = s.sigma;
            break;
        case CovKind::RandomInterceptAR1:
            j["sigma_b0"] = s.sigma_b0;
            j["sigma"] = s.sigma;
            j["rho_ar"] = s.rho_ar;
            break;
        case CovKind::RandomInterceptHeteroVar:
            j["sigma_b0"] = s.sigma_b0;
            j["sigma"] = s.sigma;
            j["ratios"] = s.ratios;
            break;
        case CovKind::RandomInterceptSlope: {
            const Eigen::Matrix2d d = s.slope_chol * s.slope_chol.transpose();
            j["sd_intercept"] = std::sqrt(d(0, 0));
            j["sd_slope"] = std::sqrt(d(1, 1));
            j["cov_intercept_slope"] = d(0, 1);
            j["sigma"] = s.sigma;
            j["chol"] = {s.slope_chol(0, 0), s.slope_chol(1, 0), s.slope_chol(1, 1)};
            break;
        }
    }
    return j;
}

}  // namespace

std::string fitted_model_json(const FittedModel& m) {
    const auto ic = information_criteria(m);
    Json j;
    j["model"] = format_formula(m.spec.fixed);
    j["method"] = method_token(m.spec.method);
    Json beta = Json::object();
    Json se = Json::object();
    const Vector se_vec = m.se();
    for (int i = 0; i < m.n_coef(); ++i) {
        beta[m.column_names[static_cast<std::size_t>(i)]] = m.beta(i);
        se[m.column_names[static_cast<std::size_t>(i)]] = se_vec(i);
    }
    j["beta"] = std::move(beta);
    j["se"] = std::move(se);
    Json cov = Json::array();
    for (Index r = 0; r < m.cov_beta.rows(); ++r) {
        Json row = Json::array();
        for (Index c = 0; c < m.cov_beta.cols(); ++c) row.push_back(m.cov_beta(r, c));
        cov.push_back(std::move(row));
    }
    j["cov_beta"] = std::move(cov);
    j["theta"] = theta_json(m.theta);
    j["loglik"] = m.loglik;
    j["aic"] = ic.aic;
    j["bic"] = ic.bic;
    j["k"] = m.k;
    j["N"] = m.n_obs;
    j["M"] = m.n_clusters;
    j["df_outer"] = m.df_outer;
    j["df_inner"] = m.df_inner;
    j["converged"] = m.converged;
    j["boundary"] = m.boundary;
    return j.dump(2) + "\n";
}

void write_fitted_model_json(const FittedModel& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error(Errc::IoError, "cannot write " + path);
    out << fitted_model_json(m);
}

}  // namespace longmix
