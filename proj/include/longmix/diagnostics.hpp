#ifndef LONGMIX_DIAGNOSTICS_HPP
#define LONGMIX_DIAGNOSTICS_HPP

#include <string>
#include <vector>

#include "longmix/engine.hpp"
#include "longmix/types.hpp"

namespace longmix {

struct RanefRow {
    std::string mouse_id;
    int group = 0;
    Vector b;  // empirical Bayes estimate (grams; grams/week for slopes)
};

// b_i = D Z_i' V_i^-1 (y_i - X_i beta_hat) per cluster.
std::vector<RanefRow> blups(const FittedModel& m, const DesignSet& ds);

struct DiagnosticsRow {
    std::string mouse_id;
    int group = 0;
    int tw = 0;
    double observed = 0.0;
    double fitted_marginal = 0.0;     // X beta_hat
    double fitted_conditional = 0.0;  // X beta_hat + Z b_hat
    double resid_marginal = 0.0;      // observed - fitted_marginal, exact
    double resid_conditional = 0.0;   // resid_marginal - Z b_hat, exact
    double resid_pearson = 0.0;       // conditional residual / group residual sd
};

std::vector<DiagnosticsRow> residual_table(const FittedModel& m, const DesignSet& ds);

struct QqPoint {
    double theoretical = 0.0;  // Phi^-1((i - 0.5)/n)
    double empirical = 0.0;    // sorted input
};

std::vector<QqPoint> qq_points(std::vector<double> values);

struct WeekResidualCell {
    int group = 0;
    int tw = 0;
    double mean = 0.0;
    double sd = 0.0;  // NaN when the cell has a single observation
    long count = 0;
};

std::vector<WeekResidualCell> residuals_by_week(const std::vector<DiagnosticsRow>& table);

void write_diagnostics_csv(const std::vector<DiagnosticsRow>& rows, const std::string& path);
void write_ranef_csv(const std::vector<RanefRow>& rows, const std::string& path);
void write_qq_csv(const std::vector<QqPoint>& rows, const std::string& path);
void write_resid_by_week_csv(const std::vector<WeekResidualCell>& rows, const std::string& path);

}  // namespace longmix

#endif  // LONGMIX_DIAGNOSTICS_HPP
