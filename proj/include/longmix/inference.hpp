#ifndef LONGMIX_INFERENCE_HPP
#define LONGMIX_INFERENCE_HPP

#include <string>
#include <vector>

#include "longmix/engine.hpp"
#include "longmix/types.hpp"

namespace longmix {

struct Contrast {
    std::string label;
    Vector c;  // positional over the model's column order
};

struct ContrastResult {
    std::string label;
    double estimate = 0.0;  // grams (or grams/week, per the columns used)
    double se = 0.0;
    int df = 0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    double p = 1.0;  // two-sided t tail
};

struct LrtResult {
    double stat = 0.0;  // 2 (l_full - l_reduced), clamped at 0
    int df = 0;
    double p = 1.0;  // chi-square upper tail
    bool negative_stat_warning = false;  // raw stat below -1e-6
    bool boundary_warning = false;       // either fit sits on a variance boundary
};

// Likelihood-ratio test of nested ML fits on the same data. REML fits are
// rejected; nesting is checked through the parameter counts and a shared
// covariance variant.
LrtResult lrt(const FittedModel& reduced, const FittedModel& full);

// c' beta with its standard error, containment df (minimum over the df of
// the active columns: outer columns use M - q_outer, inner columns
// N - M - q_inner), 95% t interval and two-sided p-value.
ContrastResult contrast(const FittedModel& m, const Contrast& c);

struct WeeklyDifference {
    std::string label;
    int week = 0;
    ContrastResult result;
};

// Pairwise group differences at each week for the selected-model layout
// (Intercept, tw, grp2, grp3, tw:grp3): group 2 - group 1, group 3 -
// group 1, group 3 - group 2, each over the requested weeks.
std::vector<WeeklyDifference> weekly_differences(const FittedModel& m, int week_lo = 1,
                                                 int week_hi = 12);

// Model-based gain mu_g(12) - mu_g(1) per group plus the group 3 excess.
std::vector<ContrastResult> gains(const FittedModel& m);

// Model-based mean weight for a group at (possibly fractional) week t.
ContrastResult group_mean(const FittedModel& m, int group, double t);

struct CompareRow {
    std::string name;
    double aic = 0.0;
    double bic = 0.0;
    double loglik = 0.0;
    int k = 0;
};

std::vector<CompareRow> compare_table(const std::vector<FittedModel>& models);

// Delimited writers; headers match the tables the results mirror.
void write_weekly_csv(const std::vector<WeeklyDifference>& rows, std::ostream& out);
void write_weekly_csv(const std::vector<WeeklyDifference>& rows, const std::string& path);
void write_gains_csv(const std::vector<ContrastResult>& rows, std::ostream& out);
void write_gains_csv(const std::vector<ContrastResult>& rows, const std::string& path);
void write_compare_csv(const std::vector<CompareRow>& rows, std::ostream& out);
void write_compare_csv(const std::vector<CompareRow>& rows, const std::string& path);

// Table formatting: three decimals; p-values switch to scientific notation
// below 1e-3 and print as "0.00" below 1e-300.
std::string format_table_number(double v);
std::string format_p_value(double p);

}  // namespace longmix

#endif  // LONGMIX_INFERENCE_HPP
