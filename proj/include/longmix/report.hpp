#ifndef LONGMIX_REPORT_HPP
#define LONGMIX_REPORT_HPP

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "longmix/diagnostics.hpp"
#include "longmix/engine.hpp"
#include "longmix/inference.hpp"

namespace longmix {

struct ReportInputs {
    std::vector<CompareRow> comparison;
    std::optional<FittedModel> final_model;
    std::vector<WeeklyDifference> weekly;
    std::vector<ContrastResult> gain_rows;
    std::vector<DiagnosticsRow> diagnostics;
};

// Plain-text report with fixed section order (comparison, coefficients,
// weekly contrasts, gains, diagnostics summary); deterministic, so reruns
// on identical inputs are byte-identical. Empty sections say "no results".
void emit_report(const ReportInputs& inputs, std::ostream& out);
void emit_report(const ReportInputs& inputs, const std::string& path);

}  // namespace longmix

#endif  // LONGMIX_REPORT_HPP
