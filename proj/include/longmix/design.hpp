#ifndef LONGMIX_DESIGN_HPP
#define LONGMIX_DESIGN_HPP

#include <string>
#include <vector>

#include "longmix/dataio.hpp"
#include "longmix/formula.hpp"
#include "longmix/types.hpp"

namespace longmix {

// Outer columns are constant within every mouse (intercept, group dummies);
// inner columns vary over weeks (tw and its interactions). The split drives
// the containment degrees of freedom used for contrasts.
enum class ColumnScope { Outer, Inner };

// Per-mouse slice of the stacked regression problem.
struct Cluster {
    std::string mouse_id;
    int group = 0;        // original label
    int group_level = 0;  // 0-based index among sorted labels; 0 = reference
    Vector t;             // weeks, strictly increasing
    Vector y;             // grams
    Matrix X;             // n_i x p
};

struct DesignSet {
    std::vector<std::string> column_names;
    std::vector<ColumnScope> column_scope;
    std::vector<Cluster> clusters;  // mouse-id order
    std::vector<int> group_labels;  // sorted distinct labels; index = level
    long n_obs = 0;

    int n_cols() const { return static_cast<int>(column_names.size()); }
    int n_clusters() const { return static_cast<int>(clusters.size()); }
    int n_groups() const { return static_cast<int>(group_labels.size()); }
};

// Build the fixed-effects design with treatment coding: `grp` expands to
// dummies for each non-reference level (levels sorted ascending, first is
// the reference), `tw` enters numerically, and `grp3` is the derived 0/1
// indicator for group 3. Columns appear in formula order with the intercept
// first, and interactions are elementwise products of the expanded sides.
DesignSet build_design(const FormulaAst& ast, const LongDataset& d);

// Stacked response / design over all clusters, in cluster order.
Vector stacked_response(const DesignSet& ds);
Matrix stacked_design(const DesignSet& ds);

double response_sd(const DesignSet& ds);

}  // namespace longmix

#endif  // LONGMIX_DESIGN_HPP
