#include "longmix/report.hpp"

#include <fstream>
#include <ostream>

#include "longmix/error.hpp"
#include "longmix/stats.hpp"

namespace longmix {

void emit_report(const ReportInputs& inputs, std::ostream& out) {
    out << "# Longitudinal mixed-model report\n\n";

    out << "## Model comparison\n\n";
    if (inputs.comparison.empty()) {
        out << "no results\n\n";
    } else {
        out << "Model | AIC | BIC | logLik | k\n";
        out << "--- | --- | --- | --- | ---\n";
        for (const auto& row : inputs.comparison) {
            out << row.name << " | " << format_table_number(row.aic) << " | "
                << format_table_number(row.bic) << " | " << format_table_number(row.loglik)
                << " | " << row.k << '\n';
        }
        out << '\n';
    }

    out << "## Coefficients\n\n";
    if (!inputs.final_model.has_value()) {
        out << "no results\n\n";
    } else {
        const FittedModel& m = *inputs.final_model;
        const Vector se = m.se();
        out << "Term | Estimate | Std_Error\n";
        out << "--- | --- | ---\n";
        for (int i = 0; i < m.n_coef(); ++i) {
            out << m.column_names[static_cast<std::size_t>(i)] << " | "
                << format_table_number(m.beta(i)) << " | " << format_table_number(se(i)) << '\n';
        }
        out << '\n';
        out << describe(m.theta) << '\n';
        out << "logLik " << format_table_number(m.loglik) << ", k " << m.k << ", N " << m.n_obs
            << ", M " << m.n_clusters << (m.boundary ? ", boundary" : "") << '\n';
        out << '\n';
    }

    out << "## Weekly group differences\n\n";
    if (inputs.weekly.empty()) {
        out << "no results\n\n";
    } else {
        out << "contrast | week | Estimate | Std_Error | Lower_95CI | Upper_95CI | p\n";
        out << "--- | --- | --- | --- | --- | --- | ---\n";
        for (const auto& row : inputs.weekly) {
            out << row.label << " | " << row.week << " | "
                << format_table_number(row.result.estimate) << " | "
                << format_table_number(row.result.se) << " | "
                << format_table_number(row.result.ci_lo) << " | "
                << format_table_number(row.result.ci_hi) << " | "
                << format_p_value(row.result.p) << '\n';
        }
        out << '\n';
    }

    out << "## 12-week gains\n\n";
    if (inputs.gain_rows.empty()) {
        out << "no results\n\n";
    } else {
        out << "Group | Estimate | Std_Error | Lower_95CI | Upper_95CI\n";
        out << "--- | --- | --- | --- | ---\n";
        for (const auto& row : inputs.gain_rows) {
            out << row.label << " | " << format_table_number(row.estimate) << " | "
                << format_table_number(row.se) << " | " << format_table_number(row.ci_lo)
                << " | " << format_table_number(row.ci_hi) << '\n';
        }
        out << '\n';
    }

    out << "## Diagnostics summary\n\n";
    if (inputs.diagnostics.empty()) {
        out << "no results\n";
    } else {
        std::vector<double> pearson;
        pearson.reserve(inputs.diagnostics.size());
        for (const auto& row : inputs.diagnostics) pearson.push_back(row.resid_pearson);
        out << "observations: " << inputs.diagnostics.size() << '\n';
        out << "pearson residual mean: " << format_table_number(stats::mean(pearson)) << '\n';
        out << "pearson residual sd: " << format_table_number(stats::sample_sd(pearson)) << '\n';
    }
}

void emit_report(const ReportInputs& inputs, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error(Errc::IoError, "cannot write " + path);
    emit_report(inputs, out);
}

}  // namespace longmix
