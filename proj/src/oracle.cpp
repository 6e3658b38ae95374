#include "longmix/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "longmix/design.hpp"
#include "longmix/error.hpp"

namespace longmix {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;
constexpr long kDenseLimit = 2000;

std::string mouse_name(int index, int total) {
    int width = 1;
    for (int t = total; t >= 10; t /= 10) ++width;
    std::string digits = std::to_string(index + 1);
    return "M" + std::string(static_cast<std::size_t>(width) - digits.size(), '0') + digits;
}

// Random-effect draw for one mouse: 1 or 2 standard normals through the
// covariance factor.
Vector draw_random_effect(const CovarianceStructure& s, Rng& rng) {
    if (s.kind == CovKind::RandomInterceptSlope) {
        Eigen::Vector2d z(rng.normal(), rng.normal());
        return s.slope_chol * z;
    }
    Vector b(1);
    b(0) = s.sigma_b0 * rng.normal();
    return b;
}

// Residual vector for one mouse. AR(1) uses the stationary recursion
// e_j = rho^dt e_{j-1} + sigma sqrt(1 - rho^(2 dt)) z_j, which reproduces
// corr(e_j, e_k) = rho^|t_j - t_k| for arbitrary week spacing.
Vector draw_residuals(const CovarianceStructure& s, const Vector& t, int group_level, Rng& rng) {
    const Index n = t.size();
    Vector e(n);
    if (s.kind == CovKind::RandomInterceptAR1) {
        e(0) = s.sigma * rng.normal();
        for (Index j = 1; j < n; ++j) {
            const double a = std::pow(s.rho_ar, t(j) - t(j - 1));
            e(j) = a * e(j - 1) + s.sigma * std::sqrt(std::max(0.0, 1.0 - a * a)) * rng.normal();
        }
        return e;
    }
    const double sd = residual_sd(s, group_level);
    for (Index j = 0; j < n; ++j) e(j) = sd * rng.normal();
    return e;
}

// Block-diagonal marginal covariance assembled from first principles
// (Z D Z' + R), independent of the engine's per-cluster formulas.
Matrix dense_covariance(const CovarianceStructure& s, const DesignSet& ds) {
    if (ds.n_obs > kDenseLimit) {
        throw Error(Errc::TooLarge, "dense oracle limited to " + std::to_string(kDenseLimit) +
                                        " observations");
    }
    Matrix v = Matrix::Zero(ds.n_obs, ds.n_obs);
    Index row = 0;
    for (const auto& cl : ds.clusters) {
        const Index n = cl.t.size();
        const Matrix z = random_effect_design(s, cl.t);
        const Matrix d = random_effect_cov(s);
        Matrix block = z * d * z.transpose();
        if (s.kind == CovKind::RandomInterceptAR1) {
            for (Index j = 0; j < n; ++j) {
                for (Index k = 0; k < n; ++k) {
                    block(j, k) +=
                        s.sigma * s.sigma * std::pow(s.rho_ar, std::fabs(cl.t(j) - cl.t(k)));
                }
            }
        } else {
            const double sd = residual_sd(s, cl.group_level);
            block.diagonal().array() += sd * sd;
        }
        v.block(row, row, n, n) = block;
        row += n;
    }
    return v;
}

}  // namespace

TruthParams default_truth() {
    TruthParams truth;
    truth.formula = parse_formula("weight ~ tw + grp + tw:grp3");
    truth.beta.resize(5);
    truth.beta << 19.004, 0.337, 14.925, 17.254, 1.738;
    truth.structure = random_intercept(1.72, 1.37);
    return truth;
}

LongDataset simulate(const TruthParams& truth, const SimLayout& layout) {
    if (layout.weeks < 2) throw std::invalid_argument("simulate: weeks must be >= 2");
    for (int size : layout.group_sizes) {
        if (size < 1) throw std::invalid_argument("simulate: group sizes must be >= 1");
    }

    int total = 0;
    for (int size : layout.group_sizes) total += size;

    // Skeleton records; design built through the shared formula machinery.
    std::vector<LongRecord> records;
    records.reserve(static_cast<std::size_t>(total) * layout.weeks);
    int mouse_index = 0;
    for (std::size_t g = 0; g < layout.group_sizes.size(); ++g) {
        for (int i = 0; i < layout.group_sizes[g]; ++i, ++mouse_index) {
            const std::string id = mouse_name(mouse_index, total);
            for (int w = 1; w <= layout.weeks; ++w) {
                records.push_back({id, static_cast<int>(g + 1), w, 0.0});
            }
        }
    }
    LongDataset d = make_long_dataset(std::move(records));
    const DesignSet ds = build_design(truth.formula, d);
    if (truth.beta.size() != ds.n_cols()) {
        throw std::invalid_argument("simulate: beta length does not match the design");
    }

    // Mouse streams are indexed by cluster position (mouse-id order).
    std::vector<LongRecord> out;
    out.reserve(d.records.size());
    for (std::size_t ci = 0; ci < ds.clusters.size(); ++ci) {
        const auto& cl = ds.clusters[ci];
        Rng rng = mouse_stream(layout.seed, ci);
        const Vector b = draw_random_effect(truth.structure, rng);
        const Vector e = draw_residuals(truth.structure, cl.t, cl.group_level, rng);
        const Matrix z = random_effect_design(truth.structure, cl.t);
        const Vector y = cl.X * truth.beta + z * b + e;
        for (Index i = 0; i < cl.t.size(); ++i) {
            out.push_back({cl.mouse_id, cl.group, static_cast<int>(cl.t(i)), y(i)});
        }
    }
    return make_long_dataset(std::move(out));
}

double dense_loglik(const TruthParams& truth, const LongDataset& d, Method method) {
    const DesignSet ds = build_design(truth.formula, d);
    const Matrix v = dense_covariance(truth.structure, ds);
    const Vector y = stacked_response(ds);
    const Matrix x = stacked_design(ds);
    const auto n = static_cast<double>(ds.n_obs);
    const int p = ds.n_cols();

    Eigen::LLT<Matrix> llt(v);
    if (llt.info() != Eigen::Success) {
        throw Error(Errc::CholeskyFailure, "dense covariance is not positive definite");
    }
    double logdet_v = 0.0;
    for (Index i = 0; i < v.rows(); ++i) logdet_v += 2.0 * std::log(llt.matrixLLT()(i, i));

    if (method == Method::ML) {
        if (truth.beta.size() != x.cols()) {
            throw std::invalid_argument("dense_loglik: beta length does not match the design");
        }
        const Vector resid = y - x * truth.beta;
        const double quad = llt.matrixL().solve(resid).squaredNorm();
        return -0.5 * (n * kLog2Pi + logdet_v + quad);
    }

    // Restricted criterion: beta profiled through the same dense system.
    const Matrix u = llt.matrixL().solve(x);
    const Vector w = llt.matrixL().solve(y);
    const Matrix info = u.transpose() * u;
    Eigen::LLT<Matrix> llt_info(info);
    if (llt_info.info() != Eigen::Success) {
        throw Error(Errc::SingularInformation, "dense information matrix is singular");
    }
    const Vector beta_hat = llt_info.solve(u.transpose() * w);
    const double quad = (w - u * beta_hat).squaredNorm();
    double logdet_info = 0.0;
    for (int j = 0; j < p; ++j) logdet_info += 2.0 * std::log(llt_info.matrixLLT()(j, j));
    return -0.5 * ((n - p) * kLog2Pi + logdet_v + logdet_info + quad);
}

GlsResult dense_gls(const CovarianceStructure& theta, const LongDataset& d,
                    const FormulaAst& ast) {
    const DesignSet ds = build_design(ast, d);
    const Matrix v = dense_covariance(theta, ds);
    const Vector y = stacked_response(ds);
    const Matrix x = stacked_design(ds);

    Eigen::LLT<Matrix> llt(v);
    if (llt.info() != Eigen::Success) {
        throw Error(Errc::CholeskyFailure, "dense covariance is not positive definite");
    }
    const Matrix u = llt.matrixL().solve(x);
    const Vector w = llt.matrixL().solve(y);
    const Matrix info = u.transpose() * u;
    Eigen::LLT<Matrix> llt_info(info);
    if (llt_info.info() != Eigen::Success) {
        throw Error(Errc::SingularInformation, "dense information matrix is singular");
    }
    GlsResult out;
    out.beta = llt_info.solve(u.transpose() * w);
    out.cov_beta = llt_info.solve(Matrix::Identity(x.cols(), x.cols()));
    return out;
}

std::vector<CoverageRow> coverage_experiment(const TruthParams& truth, const SimLayout& layout,
                                             int reps, const std::vector<Contrast>& contrasts) {
    if (reps < 100) throw std::invalid_argument("coverage_experiment: reps must be >= 100");

    std::vector<CoverageRow> rows;
    rows.reserve(contrasts.size());
    for (const auto& c : contrasts) rows.push_back({c.label, reps, 0, 0, 0.0});

    ModelSpec spec;
    spec.fixed = truth.formula;
    spec.structure = truth.structure;  // same variant as the truth
    spec.method = Method::ML;

    for (int r = 0; r < reps; ++r) {
        SimLayout rep_layout = layout;
        rep_layout.seed = splitmix64(layout.seed ^ static_cast<std::uint64_t>(r + 1));
        const LongDataset d = simulate(truth, rep_layout);
        FittedModel m;
        bool ok = true;
        try {
            m = fit(spec, d);
            ok = m.converged;
        } catch (const Error&) {
            ok = false;
        }
        for (std::size_t i = 0; i < contrasts.size(); ++i) {
            if (!ok) {
                rows[i].fit_failures += 1;
                continue;
            }
            const double target = contrasts[i].c.dot(truth.beta);
            const ContrastResult cr = contrast(m, contrasts[i]);
            if (cr.ci_lo <= target && target <= cr.ci_hi) rows[i].covered += 1;
        }
    }
    for (auto& row : rows) {
        const int effective = row.reps - row.fit_failures;
        row.coverage = effective > 0 ? static_cast<double>(row.covered) / effective : 0.0;
    }
    return rows;
}

void write_coverage_csv(const std::vector<CoverageRow>& rows, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error(Errc::IoError, "cannot write " + path);
    out << "contrast,reps,fit_failures,covered,coverage\n";
    for (const auto& r : rows) {
        out << r.label << ',' << r.reps << ',' << r.fit_failures << ',' << r.covered << ','
            << r.coverage << '\n';
    }
}

CovarianceStructure random_interior_structure(CovKind kind, int n_groups, Rng& rng) {
    const double sb = std::exp(rng.uniform(-0.7, 0.7));
    const double sg = std::exp(rng.uniform(-0.7, 0.7));
    switch (kind) {
        case CovKind::RandomIntercept:
            return random_intercept(sb, sg);
        case CovKind::RandomInterceptAR1:
            return random_intercept_ar1(sb, sg, rng.uniform(-0.8, 0.8));
        case CovKind::RandomInterceptHeteroVar: {
            std::vector<double> ratios;
            for (int g = 1; g < n_groups; ++g) ratios.push_back(std::exp(rng.uniform(-0.5, 0.5)));
            return random_intercept_hetero(sb, sg, std::move(ratios));
        }
        case CovKind::RandomInterceptSlope: {
            Eigen::Matrix2d l = Eigen::Matrix2d::Zero();
            l(0, 0) = std::exp(rng.uniform(-0.7, 0.3));
            l(1, 0) = rng.uniform(-0.3, 0.3);
            l(1, 1) = std::exp(rng.uniform(-1.5, -0.5));
            return random_intercept_slope(l, sg);
        }
    }
    throw std::logic_error("unreachable");
}

}  // namespace longmix
