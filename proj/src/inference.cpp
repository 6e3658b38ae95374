#include "longmix/inference.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>

#include "longmix/error.hpp"
#include "longmix/stats.hpp"

namespace longmix {

namespace {

bool is_selected_layout(const FittedModel& m) {
    static const std::vector<std::string> expected = {"(Intercept)", "tw", "grp2", "grp3",
                                                      "tw:grp3"};
    return m.column_names == expected;
}

void require_selected_layout(const FittedModel& m, const char* what) {
    if (!is_selected_layout(m)) {
        throw Error(Errc::LayoutMismatch,
                    std::string(what) +
                        " requires the (Intercept, tw, grp2, grp3, tw:grp3) column layout");
    }
}

Vector contrast_vector(std::initializer_list<double> values) {
    Vector c(static_cast<Index>(values.size()));
    Index i = 0;
    for (double v : values) c(i++) = v;
    return c;
}

}  // namespace

LrtResult lrt(const FittedModel& reduced, const FittedModel& full) {
    if (reduced.spec.method != Method::ML || full.spec.method != Method::ML) {
        throw Error(Errc::MethodMismatch,
                    "likelihood-ratio tests require ML fits; REML criteria are not "
                    "comparable across mean structures");
    }
    if (reduced.theta.kind != full.theta.kind) {
        throw Error(Errc::NotNested, "models use different covariance structures");
    }
    if (reduced.n_obs != full.n_obs || reduced.n_clusters != full.n_clusters) {
        throw Error(Errc::NotNested, "models were fit on different data");
    }
    if (reduced.k > full.k) {
        throw Error(Errc::NotNested, "reduced model has more parameters than the full model");
    }

    LrtResult out;
    const double raw = 2.0 * (full.loglik - reduced.loglik);
    out.negative_stat_warning = raw < -1e-6;
    out.stat = std::max(0.0, raw);
    out.df = std::max(1, full.k - reduced.k);
    out.p = stats::chisq_upper_tail(out.stat, out.df);
    out.boundary_warning = reduced.boundary || full.boundary;
    return out;
}

ContrastResult contrast(const FittedModel& m, const Contrast& c) {
    if (c.c.size() != m.beta.size()) {
        throw Error(Errc::LayoutMismatch,
                    "contrast has " + std::to_string(c.c.size()) + " entries but the model has " +
                        std::to_string(m.beta.size()) + " coefficients");
    }
    if (c.c.isZero(0.0)) throw Error(Errc::ZeroContrast, "contrast vector is all zeros");

    ContrastResult out;
    out.label = c.label;
    out.estimate = c.c.dot(m.beta);
    out.se = std::sqrt(std::max(0.0, c.c.dot(m.cov_beta * c.c)));

    int df = 0;
    bool first = true;
    for (Index j = 0; j < c.c.size(); ++j) {
        if (c.c(j) == 0.0) continue;
        const int col_df = m.column_scope[static_cast<std::size_t>(j)] == ColumnScope::Outer
                               ? m.df_outer
                               : m.df_inner;
        df = first ? col_df : std::min(df, col_df);
        first = false;
    }
    out.df = df;

    const double tq = stats::t_quantile(0.975, df);
    const double half_width = tq * out.se;
    out.ci_lo = out.estimate - half_width;
    out.ci_hi = out.estimate + half_width;
    out.p = out.se > 0.0 ? stats::t_two_sided_p(out.estimate / out.se, df)
                         : (out.estimate == 0.0 ? 1.0 : 0.0);
    return out;
}

std::vector<WeeklyDifference> weekly_differences(const FittedModel& m, int week_lo, int week_hi) {
    require_selected_layout(m, "weekly_differences");
    if (week_lo > week_hi) throw Error(Errc::ParseError, "empty week range");

    std::vector<WeeklyDifference> rows;
    for (int t = week_lo; t <= week_hi; ++t) {
        rows.push_back({"Group 2 - Group 1", t,
                        contrast(m, {"Group 2 - Group 1", contrast_vector({0, 0, 1, 0, 0})})});
    }
    for (int t = week_lo; t <= week_hi; ++t) {
        rows.push_back(
            {"Group 3 - Group 1", t,
             contrast(m, {"Group 3 - Group 1",
                          contrast_vector({0, 0, 0, 1, static_cast<double>(t)})})});
    }
    for (int t = week_lo; t <= week_hi; ++t) {
        rows.push_back(
            {"Group 3 - Group 2", t,
             contrast(m, {"Group 3 - Group 2",
                          contrast_vector({0, 0, -1, 1, static_cast<double>(t)})})});
    }
    return rows;
}

std::vector<ContrastResult> gains(const FittedModel& m) {
    require_selected_layout(m, "gains");
    std::vector<ContrastResult> rows;
    rows.push_back(contrast(m, {"Group 1", contrast_vector({0, 11, 0, 0, 0})}));
    rows.push_back(contrast(m, {"Group 2", contrast_vector({0, 11, 0, 0, 0})}));
    rows.push_back(contrast(m, {"Group 3", contrast_vector({0, 11, 0, 0, 11})}));
    rows.push_back(contrast(m, {"Group 3 - Group 1", contrast_vector({0, 0, 0, 0, 11})}));
    return rows;
}

ContrastResult group_mean(const FittedModel& m, int group, double t) {
    require_selected_layout(m, "group_mean");
    Vector c;
    switch (group) {
        case 1:
            c = contrast_vector({1, t, 0, 0, 0});
            break;
        case 2:
            c = contrast_vector({1, t, 1, 0, 0});
            break;
        case 3:
            c = contrast_vector({1, t, 0, 1, t});
            break;
        default:
            throw Error(Errc::UnknownGroup, "group must be 1, 2 or 3");
    }
    return contrast(m, {"mu_" + std::to_string(group) + "(" + std::to_string(t) + ")", c});
}

std::vector<CompareRow> compare_table(const std::vector<FittedModel>& models) {
    std::vector<CompareRow> rows;
    rows.reserve(models.size());
    for (const auto& m : models) {
        const auto ic = information_criteria(m);
        rows.push_back({m.label, ic.aic, ic.bic, m.loglik, m.k});
    }
    return rows;
}

std::string format_table_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    return buf;
}

std::string format_p_value(double p) {
    if (p < 1e-300) return "0.00";
    if (p < 1e-3) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.2e", p);
        return buf;
    }
    return format_table_number(p);
}

void write_weekly_csv(const std::vector<WeeklyDifference>& rows, std::ostream& out) {
    out << "contrast_label,week,Estimate,Std_Error,Lower_95CI,Upper_95CI,p_value\n";
    for (const auto& row : rows) {
        out << row.label << ',' << format_table_number(row.week) << ','
            << format_table_number(row.result.estimate) << ','
            << format_table_number(row.result.se) << ','
            << format_table_number(row.result.ci_lo) << ','
            << format_table_number(row.result.ci_hi) << ',' << format_p_value(row.result.p)
            << '\n';
    }
}

void write_weekly_csv(const std::vector<WeeklyDifference>& rows, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error(Errc::IoError, "cannot write " + path);
    write_weekly_csv(rows, out);
}

void write_gains_csv(const std::vector<ContrastResult>& rows, std::ostream& out) {
    out << "Group,Estimate,Std_Error,Lower_95CI,Upper_95CI\n";
    for (const auto& row : rows) {
        out << row.label << ',' << format_table_number(row.estimate) << ','
            << format_table_number(row.se) << ',' << format_table_number(row.ci_lo) << ','
            << format_table_number(row.ci_hi) << '\n';
    }
}

void write_gains_csv(const std::vector<ContrastResult>& rows, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error(Errc::IoError, "cannot write " + path);
    write_gains_csv(rows, out);
}

void write_compare_csv(const std::vector<CompareRow>& rows, std::ostream& out) {
    out << "Model,AIC,BIC,logLik,k\n";
    for (const auto& row : rows) {
        out << row.name << ',' << format_table_number(row.aic) << ','
            << format_table_number(row.bic) << ',' << format_table_number(row.loglik) << ','
            << row.k << '\n';
    }
}

void write_compare_csv(const std::vector<CompareRow>& rows, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error(Errc::IoError, "cannot write " + path);
    write_compare_csv(rows, out);
}

}  // namespace longmix
