#include "longmix/design.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "longmix/error.hpp"

namespace longmix {

namespace {

// A primitive column before interaction products are formed.
struct BaseColumn {
    enum class Source { One, Tw, GroupIs } source = Source::One;
    std::string name;
    int label = 0;  // GroupIs: the matching group label
};

std::vector<BaseColumn> expand_name(const std::string& name,
                                    const std::vector<int>& labels) {
    if (name == "tw") {
        return {{BaseColumn::Source::Tw, "tw", 0}};
    }
    if (name == "grp") {
        std::vector<BaseColumn> cols;
        for (std::size_t i = 1; i < labels.size(); ++i) {
            cols.push_back({BaseColumn::Source::GroupIs,
                            "grp" + std::to_string(labels[i]), labels[i]});
        }
        return cols;
    }
    if (name == "grp3") {
        return {{BaseColumn::Source::GroupIs, "grp3", 3}};
    }
    throw Error(Errc::UnknownVariable, "unknown variable '" + name + "' in formula");
}

double eval_base(const BaseColumn& c, const LongRecord& r) {
    switch (c.source) {
        case BaseColumn::Source::One:
            return 1.0;
        case BaseColumn::Source::Tw:
            return static_cast<double>(r.tw);
        case BaseColumn::Source::GroupIs:
            return r.group == c.label ? 1.0 : 0.0;
    }
    return 0.0;
}

// A design column is a product of at most two primitives.
struct DesignColumn {
    std::string name;
    std::vector<BaseColumn> factors;

    double eval(const LongRecord& r) const {
        double v = 1.0;
        for (const auto& f : factors) v *= eval_base(f, r);
        return v;
    }
};

}  // namespace

DesignSet build_design(const FormulaAst& ast, const LongDataset& d) {
    if (ast.response != "weight") {
        throw Error(Errc::UnknownVariable,
                    "unknown response '" + ast.response + "'; the dataset provides 'weight'");
    }
    if (d.records.empty()) throw Error(Errc::TooFew, "empty dataset");

    DesignSet ds;
    {
        std::set<int> labels;
        for (const auto& r : d.records) labels.insert(r.group);
        ds.group_labels.assign(labels.begin(), labels.end());
    }

    std::vector<DesignColumn> columns;
    for (const auto& term : ast.terms) {
        switch (term.kind) {
            case TermKind::Intercept:
                columns.push_back({"(Intercept)", {{BaseColumn::Source::One, "1", 0}}});
                break;
            case TermKind::Main:
                for (const auto& base : expand_name(term.a, ds.group_labels)) {
                    columns.push_back({base.name, {base}});
                }
                break;
            case TermKind::Interaction:
                for (const auto& lhs : expand_name(term.a, ds.group_labels)) {
                    for (const auto& rhs : expand_name(term.b, ds.group_labels)) {
                        columns.push_back({lhs.name + ":" + rhs.name, {lhs, rhs}});
                    }
                }
                break;
        }
    }

    const int p = static_cast<int>(columns.size());
    for (const auto& c : columns) ds.column_names.push_back(c.name);

    // Slice records per mouse; input is sorted by (mouse_id, tw).
    std::size_t start = 0;
    while (start < d.records.size()) {
        std::size_t end = start;
        while (end < d.records.size() &&
               d.records[end].mouse_id == d.records[start].mouse_id) {
            ++end;
        }
        const auto n = static_cast<Index>(end - start);
        Cluster cl;
        cl.mouse_id = d.records[start].mouse_id;
        cl.group = d.records[start].group;
        cl.group_level = static_cast<int>(
            std::lower_bound(ds.group_labels.begin(), ds.group_labels.end(), cl.group) -
            ds.group_labels.begin());
        cl.t.resize(n);
        cl.y.resize(n);
        cl.X.resize(n, p);
        for (Index i = 0; i < n; ++i) {
            const LongRecord& r = d.records[start + i];
            if (i > 0 && r.tw <= cl.t(i - 1)) {
                throw Error(Errc::DuplicateId,
                            "weeks not strictly increasing for mouse " + cl.mouse_id);
            }
            cl.t(i) = static_cast<double>(r.tw);
            cl.y(i) = r.weight;
            for (int j = 0; j < p; ++j) cl.X(i, j) = columns[j].eval(r);
        }
        ds.clusters.push_back(std::move(cl));
        start = end;
    }
    ds.n_obs = static_cast<long>(d.records.size());

    // Scope: outer iff constant within every cluster.
    ds.column_scope.assign(p, ColumnScope::Outer);
    for (int j = 0; j < p; ++j) {
        for (const auto& cl : ds.clusters) {
            const double head = cl.X(0, j);
            for (Index i = 1; i < cl.X.rows(); ++i) {
                if (cl.X(i, j) != head) {
                    ds.column_scope[j] = ColumnScope::Inner;
                    break;
                }
            }
            if (ds.column_scope[j] == ColumnScope::Inner) break;
        }
    }

    // Rank check on the pooled design, relative tolerance 1e-10.
    Eigen::ColPivHouseholderQR<Matrix> qr(stacked_design(ds));
    qr.setThreshold(1e-10);
    if (qr.rank() < p) {
        throw Error(Errc::RankDeficient,
                    "design matrix is rank deficient (rank " + std::to_string(qr.rank()) +
                        " < " + std::to_string(p) + " columns)");
    }
    return ds;
}

Vector stacked_response(const DesignSet& ds) {
    Vector y(ds.n_obs);
    Index row = 0;
    for (const auto& cl : ds.clusters) {
        y.segment(row, cl.y.size()) = cl.y;
        row += cl.y.size();
    }
    return y;
}

Matrix stacked_design(const DesignSet& ds) {
    Matrix X(ds.n_obs, ds.n_cols());
    Index row = 0;
    for (const auto& cl : ds.clusters) {
        X.middleRows(row, cl.X.rows()) = cl.X;
        row += cl.X.rows();
    }
    return X;
}

double response_sd(const DesignSet& ds) {
    const Vector y = stacked_response(ds);
    if (y.size() < 2) return 0.0;
    const double m = y.mean();
    return std::sqrt((y.array() - m).square().sum() / static_cast<double>(y.size() - 1));
}

}  // namespace longmix
