#include "longmix/covstruct.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "longmix/error.hpp"

namespace longmix {

namespace {

void check_finite(const CovarianceStructure& s) {
    bool ok = std::isfinite(s.sigma_b0) && std::isfinite(s.sigma) && std::isfinite(s.rho_ar) &&
              s.slope_chol.allFinite();
    for (double r : s.ratios) ok = ok && std::isfinite(r);
    if (!ok) throw Error(Errc::NonFiniteParam, "covariance parameters must be finite");
}

double hv_ratio(const CovarianceStructure& s, int group_level) {
    if (group_level == 0) return 1.0;
    const std::size_t idx = static_cast<std::size_t>(group_level - 1);
    if (idx >= s.ratios.size()) {
        throw Error(Errc::UnknownGroup,
                    "no variance ratio for group level " + std::to_string(group_level));
    }
    return s.ratios[idx];
}

}  // namespace

CovarianceStructure random_intercept(double sigma_b0, double sigma) {
    CovarianceStructure s;
    s.kind = CovKind::RandomIntercept;
    s.sigma_b0 = sigma_b0;
    s.sigma = sigma;
    return s;
}

CovarianceStructure random_intercept_slope(const Eigen::Matrix2d& chol_L, double sigma,
                                           bool uncorrelated) {
    CovarianceStructure s;
    s.kind = CovKind::RandomInterceptSlope;
    s.slope_chol = chol_L;
    s.slope_chol(0, 1) = 0.0;
    if (uncorrelated) s.slope_chol(1, 0) = 0.0;
    s.sigma = sigma;
    s.slope_uncorrelated = uncorrelated;
    return s;
}

CovarianceStructure random_intercept_ar1(double sigma_b0, double sigma, double rho) {
    CovarianceStructure s;
    s.kind = CovKind::RandomInterceptAR1;
    s.sigma_b0 = sigma_b0;
    s.sigma = sigma;
    s.rho_ar = rho;
    return s;
}

CovarianceStructure random_intercept_hetero(double sigma_b0, double sigma,
                                            std::vector<double> ratios) {
    CovarianceStructure s;
    s.kind = CovKind::RandomInterceptHeteroVar;
    s.sigma_b0 = sigma_b0;
    s.sigma = sigma;
    s.ratios = std::move(ratios);
    return s;
}

int n_variance_params(const CovarianceStructure& s) {
    switch (s.kind) {
        case CovKind::RandomIntercept:
            return 2;
        case CovKind::RandomInterceptSlope:
            return s.slope_uncorrelated ? 3 : 4;
        case CovKind::RandomInterceptAR1:
            return 3;
        case CovKind::RandomInterceptHeteroVar:
            return 2 + static_cast<int>(s.ratios.size());
    }
    return 0;
}

int n_random_effects(CovKind kind) {
    return kind == CovKind::RandomInterceptSlope ? 2 : 1;
}

Matrix random_effect_design(const CovarianceStructure& s, const Vector& t) {
    const Index n = t.size();
    if (s.kind == CovKind::RandomInterceptSlope) {
        Matrix z(n, 2);
        z.col(0).setOnes();
        z.col(1) = t;
        return z;
    }
    return Matrix::Ones(n, 1);
}

Matrix random_effect_cov(const CovarianceStructure& s) {
    if (s.kind == CovKind::RandomInterceptSlope) {
        return s.slope_chol * s.slope_chol.transpose();
    }
    Matrix d(1, 1);
    d(0, 0) = s.sigma_b0 * s.sigma_b0;
    return d;
}

double residual_sd(const CovarianceStructure& s, int group_level) {
    if (s.kind == CovKind::RandomInterceptHeteroVar) {
        return s.sigma * hv_ratio(s, group_level);
    }
    return s.sigma;
}

Matrix marginal_cov(const CovarianceStructure& s, const Vector& t, int group_level) {
    check_finite(s);
    const Index n = t.size();
    if (n < 1) throw std::invalid_argument("marginal_cov: empty week vector");
    Matrix v(n, n);
    switch (s.kind) {
        case CovKind::RandomIntercept:
        case CovKind::RandomInterceptHeteroVar: {
            const double b = s.sigma_b0 * s.sigma_b0;
            const double sd = residual_sd(s, group_level);
            const double e = sd * sd;
            for (Index j = 0; j < n; ++j) {
                v(j, j) = b + e;
                for (Index k = j + 1; k < n; ++k) {
                    v(j, k) = b;
                    v(k, j) = b;
                }
            }
            break;
        }
        case CovKind::RandomInterceptAR1: {
            const double b = s.sigma_b0 * s.sigma_b0;
            const double e = s.sigma * s.sigma;
            for (Index j = 0; j < n; ++j) {
                v(j, j) = b + e;  // rho^0 = 1
                for (Index k = j + 1; k < n; ++k) {
                    const double lag = std::fabs(t(k) - t(j));
                    const double val = b + e * std::pow(s.rho_ar, lag);
                    v(j, k) = val;
                    v(k, j) = val;
                }
            }
            break;
        }
        case CovKind::RandomInterceptSlope: {
            const Eigen::Matrix2d d = s.slope_chol * s.slope_chol.transpose();
            const double e = s.sigma * s.sigma;
            for (Index j = 0; j < n; ++j) {
                for (Index k = j; k < n; ++k) {
                    const double val =
                        d(0, 0) + d(0, 1) * t(k) + d(1, 0) * t(j) + d(1, 1) * t(j) * t(k);
                    v(j, k) = val;
                    v(k, j) = val;
                }
                v(j, j) += e;
            }
            break;
        }
    }
    return v;
}

double icc(const CovarianceStructure& s) {
    if (s.kind != CovKind::RandomIntercept) {
        throw std::invalid_argument("icc is defined for the random-intercept structure");
    }
    const double b = s.sigma_b0 * s.sigma_b0;
    const double e = s.sigma * s.sigma;
    if (b + e <= 0.0) {
        throw Error(Errc::DegenerateVariance, "icc undefined: both variance components are zero");
    }
    return b / (b + e);
}

Vector to_unconstrained(const CovarianceStructure& s) {
    check_finite(s);
    const auto log_positive = [](double x, const char* what) {
        if (!(x > 0.0)) {
            throw Error(Errc::BoundaryParam,
                        std::string(what) + " must be strictly positive to map to "
                                            "unconstrained coordinates");
        }
        return std::log(x);
    };
    switch (s.kind) {
        case CovKind::RandomIntercept: {
            Vector u(2);
            u << log_positive(s.sigma_b0, "sigma_b0"), log_positive(s.sigma, "sigma");
            return u;
        }
        case CovKind::RandomInterceptAR1: {
            if (!(std::fabs(s.rho_ar) < 1.0)) {
                throw Error(Errc::BoundaryParam, "|rho_ar| must be < 1");
            }
            Vector u(3);
            u << log_positive(s.sigma_b0, "sigma_b0"), log_positive(s.sigma, "sigma"),
                std::atanh(s.rho_ar);
            return u;
        }
        case CovKind::RandomInterceptHeteroVar: {
            Vector u(2 + static_cast<Index>(s.ratios.size()));
            u(0) = log_positive(s.sigma_b0, "sigma_b0");
            u(1) = log_positive(s.sigma, "sigma");
            for (std::size_t i = 0; i < s.ratios.size(); ++i) {
                u(2 + static_cast<Index>(i)) = log_positive(s.ratios[i], "variance ratio");
            }
            return u;
        }
        case CovKind::RandomInterceptSlope: {
            if (s.slope_uncorrelated) {
                Vector u(3);
                u << log_positive(s.slope_chol(0, 0), "intercept sd"),
                    log_positive(s.slope_chol(1, 1), "slope sd"),
                    log_positive(s.sigma, "sigma");
                return u;
            }
            Vector u(4);
            u << log_positive(s.slope_chol(0, 0), "intercept sd"), s.slope_chol(1, 0),
                log_positive(s.slope_chol(1, 1), "Cholesky diagonal"),
                log_positive(s.sigma, "sigma");
            return u;
        }
    }
    throw std::logic_error("unreachable");
}

CovarianceStructure from_unconstrained(const CovarianceStructure& prototype, const Vector& u) {
    CovarianceStructure s = prototype;
    switch (prototype.kind) {
        case CovKind::RandomIntercept:
            s.sigma_b0 = std::exp(u(0));
            s.sigma = std::exp(u(1));
            break;
        case CovKind::RandomInterceptAR1:
            s.sigma_b0 = std::exp(u(0));
            s.sigma = std::exp(u(1));
            s.rho_ar = std::tanh(u(2));
            break;
        case CovKind::RandomInterceptHeteroVar:
            s.sigma_b0 = std::exp(u(0));
            s.sigma = std::exp(u(1));
            s.ratios.resize(static_cast<std::size_t>(u.size() - 2));
            for (std::size_t i = 0; i < s.ratios.size(); ++i) {
                s.ratios[i] = std::exp(u(2 + static_cast<Index>(i)));
            }
            break;
        case CovKind::RandomInterceptSlope:
            s.slope_chol.setZero();
            if (prototype.slope_uncorrelated) {
                s.slope_chol(0, 0) = std::exp(u(0));
                s.slope_chol(1, 1) = std::exp(u(1));
                s.sigma = std::exp(u(2));
            } else {
                s.slope_chol(0, 0) = std::exp(u(0));
                s.slope_chol(1, 0) = u(1);
                s.slope_chol(1, 1) = std::exp(u(2));
                s.sigma = std::exp(u(3));
            }
            break;
    }
    return s;
}

CovarianceStructure embed_structure(const CovarianceStructure& s,
                                    const CovarianceStructure& prototype) {
    double sb = s.sigma_b0;
    if (s.kind == CovKind::RandomInterceptSlope) {
        sb = std::sqrt(s.slope_chol.row(0).squaredNorm());
    }
    sb = std::max(sb, 1e-8);
    const double sg = std::max(s.sigma, 1e-8);

    CovarianceStructure out = prototype;
    out.sigma_b0 = sb;
    out.sigma = sg;
    switch (prototype.kind) {
        case CovKind::RandomIntercept:
            break;
        case CovKind::RandomInterceptAR1:
            out.rho_ar = s.kind == CovKind::RandomInterceptAR1 ? s.rho_ar : 0.0;
            break;
        case CovKind::RandomInterceptHeteroVar:
            if (s.kind == CovKind::RandomInterceptHeteroVar &&
                s.ratios.size() == prototype.ratios.size()) {
                out.ratios = s.ratios;
            } else {
                std::fill(out.ratios.begin(), out.ratios.end(), 1.0);
            }
            break;
        case CovKind::RandomInterceptSlope:
            if (s.kind == CovKind::RandomInterceptSlope) {
                out.slope_chol = s.slope_chol;
                out.slope_chol(0, 0) = std::max(out.slope_chol(0, 0), 1e-8);
                out.slope_chol(1, 1) = std::max(out.slope_chol(1, 1), 1e-8);
                if (prototype.slope_uncorrelated) out.slope_chol(1, 0) = 0.0;
            } else {
                out.slope_chol.setZero();
                out.slope_chol(0, 0) = sb;
                out.slope_chol(1, 1) = std::max(1e-4 * sb, 1e-8);
            }
            break;
    }
    return out;
}

std::string kind_token(CovKind kind) {
    switch (kind) {
        case CovKind::RandomIntercept:
            return "ri";
        case CovKind::RandomInterceptSlope:
            return "ris";
        case CovKind::RandomInterceptAR1:
            return "ri+ar1";
        case CovKind::RandomInterceptHeteroVar:
            return "ri+hv";
    }
    return "?";
}

CovKind kind_from_token(std::string_view token) {
    if (token == "ri") return CovKind::RandomIntercept;
    if (token == "ris") return CovKind::RandomInterceptSlope;
    if (token == "ri+ar1") return CovKind::RandomInterceptAR1;
    if (token == "ri+hv") return CovKind::RandomInterceptHeteroVar;
    throw Error(Errc::ParseError,
                "unknown structure token '" + std::string(token) +
                    "' (expected ri, ris, ri+ar1 or ri+hv)");
}

std::string describe(const CovarianceStructure& s) {
    std::ostringstream out;
    out.precision(6);
    switch (s.kind) {
        case CovKind::RandomIntercept:
            out << "ri: sigma_b0=" << s.sigma_b0 << " sigma=" << s.sigma;
            break;
        case CovKind::RandomInterceptSlope: {
            const Eigen::Matrix2d d = s.slope_chol * s.slope_chol.transpose();
            out << "ris: sd_b0=" << std::sqrt(d(0, 0)) << " sd_b1=" << std::sqrt(d(1, 1))
                << " cov_b01=" << d(0, 1) << " sigma=" << s.sigma;
            break;
        }
        case CovKind::RandomInterceptAR1:
            out << "ri+ar1: sigma_b0=" << s.sigma_b0 << " sigma=" << s.sigma
                << " rho=" << s.rho_ar;
            break;
        case CovKind::RandomInterceptHeteroVar:
            out << "ri+hv: sigma_b0=" << s.sigma_b0 << " sigma=" << s.sigma << " ratios=";
            for (std::size_t i = 0; i < s.ratios.size(); ++i) {
                if (i) out << ",";
                out << s.ratios[i];
            }
            break;
    }
    return out.str();
}

}  // namespace longmix
