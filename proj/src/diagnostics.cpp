#include "longmix/diagnostics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>

#include "longmix/error.hpp"
#include "longmix/stats.hpp"

namespace longmix {

namespace {

void write_value(std::ofstream& out, double v) {
    if (std::isnan(v)) {
        out << "NA";
        return;
    }
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    out.write(buf, ptr - buf);
    (void)ec;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error(Errc::IoError, "cannot write " + path);
    return out;
}

}  // namespace

std::vector<RanefRow> blups(const FittedModel& m, const DesignSet& ds) {
    const Matrix d = random_effect_cov(m.theta);
    std::vector<RanefRow> rows;
    rows.reserve(ds.clusters.size());
    for (const auto& cl : ds.clusters) {
        const Matrix v = marginal_cov(m.theta, cl.t, cl.group_level);
        Eigen::LLT<Matrix> llt(v);
        if (llt.info() != Eigen::Success) {
            throw Error(Errc::CholeskyFailure,
                        "cluster covariance not positive definite for mouse " + cl.mouse_id);
        }
        const Matrix z = random_effect_design(m.theta, cl.t);
        const Vector resid = cl.y - cl.X * m.beta;
        rows.push_back({cl.mouse_id, cl.group, d * z.transpose() * llt.solve(resid)});
    }
    return rows;
}

std::vector<DiagnosticsRow> residual_table(const FittedModel& m, const DesignSet& ds) {
    const auto ranef = blups(m, ds);
    std::vector<DiagnosticsRow> rows;
    rows.reserve(static_cast<std::size_t>(ds.n_obs));
    for (std::size_t ci = 0; ci < ds.clusters.size(); ++ci) {
        const auto& cl = ds.clusters[ci];
        const Matrix z = random_effect_design(m.theta, cl.t);
        const Vector fitted_marg = cl.X * m.beta;
        const Vector z_b = z * ranef[ci].b;
        const double sd = residual_sd(m.theta, cl.group_level);
        for (Index i = 0; i < cl.t.size(); ++i) {
            DiagnosticsRow row;
            row.mouse_id = cl.mouse_id;
            row.group = cl.group;
            row.tw = static_cast<int>(cl.t(i));
            row.observed = cl.y(i);
            row.fitted_marginal = fitted_marg(i);
            row.fitted_conditional = fitted_marg(i) + z_b(i);
            row.resid_marginal = row.observed - row.fitted_marginal;
            row.resid_conditional = row.resid_marginal - z_b(i);
            row.resid_pearson = sd > 0.0 ? row.resid_conditional / sd
                                         : std::numeric_limits<double>::quiet_NaN();
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

std::vector<QqPoint> qq_points(std::vector<double> values) {
    const std::size_t n = values.size();
    if (n < 2) throw Error(Errc::TooFew, "qq_points needs at least two values");
    std::sort(values.begin(), values.end());
    std::vector<QqPoint> points(n);
    for (std::size_t i = 0; i < n; ++i) {
        points[i].theoretical =
            stats::norm_quantile((static_cast<double>(i) + 0.5) / static_cast<double>(n));
        points[i].empirical = values[i];
    }
    return points;
}

std::vector<WeekResidualCell> residuals_by_week(const std::vector<DiagnosticsRow>& table) {
    std::map<std::pair<int, int>, std::vector<double>> cells;
    for (const auto& row : table) cells[{row.group, row.tw}].push_back(row.resid_pearson);

    std::vector<WeekResidualCell> out;
    out.reserve(cells.size());
    for (const auto& [key, values] : cells) {
        WeekResidualCell cell;
        cell.group = key.first;
        cell.tw = key.second;
        cell.count = static_cast<long>(values.size());
        cell.mean = stats::mean(values);
        cell.sd = values.size() > 1 ? stats::sample_sd(values)
                                    : std::numeric_limits<double>::quiet_NaN();
        out.push_back(cell);
    }
    return out;
}

void write_diagnostics_csv(const std::vector<DiagnosticsRow>& rows, const std::string& path) {
    auto out = open_out(path);
    out << "mouseid,grp,tw,observed,fitted_marginal,fitted_conditional,resid_marginal,"
           "resid_conditional,resid_pearson\n";
    for (const auto& r : rows) {
        out << r.mouse_id << ',' << r.group << ',' << r.tw << ',';
        write_value(out, r.observed);
        out << ',';
        write_value(out, r.fitted_marginal);
        out << ',';
        write_value(out, r.fitted_conditional);
        out << ',';
        write_value(out, r.resid_marginal);
        out << ',';
        write_value(out, r.resid_conditional);
        out << ',';
        write_value(out, r.resid_pearson);
        out << '\n';
    }
}

void write_ranef_csv(const std::vector<RanefRow>& rows, const std::string& path) {
    auto out = open_out(path);
    const Index q = rows.empty() ? 1 : rows.front().b.size();
    out << "mouseid,grp";
    for (Index j = 0; j < q; ++j) out << ",b" << j;
    out << '\n';
    for (const auto& r : rows) {
        out << r.mouse_id << ',' << r.group;
        for (Index j = 0; j < r.b.size(); ++j) {
            out << ',';
            write_value(out, r.b(j));
        }
        out << '\n';
    }
}

void write_qq_csv(const std::vector<QqPoint>& rows, const std::string& path) {
    auto out = open_out(path);
    out << "theoretical,empirical\n";
    for (const auto& r : rows) {
        write_value(out, r.theoretical);
        out << ',';
        write_value(out, r.empirical);
        out << '\n';
    }
}

void write_resid_by_week_csv(const std::vector<WeekResidualCell>& rows, const std::string& path) {
    auto out = open_out(path);
    out << "grp,tw,mean_resid_pearson,sd\n";
    for (const auto& r : rows) {
        out << r.group << ',' << r.tw << ',';
        write_value(out, r.mean);
        out << ',';
        write_value(out, r.sd);
        out << '\n';
    }
}

}  // namespace longmix
