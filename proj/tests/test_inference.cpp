#include <doctest.h>

#include <cmath>

#include "longmix/engine.hpp"
#include "longmix/error.hpp"
#include "longmix/inference.hpp"
#include "longmix/oracle.hpp"
#include "longmix/rng.hpp"
#include "longmix/stats.hpp"
#include "test_helpers.hpp"

using namespace longmix;

namespace {

// Skeleton fitted model with the selected-model layout and published
// coefficients; covariance defaults to a diagonal of the published SEs.
FittedModel published_model() {
    FittedModel m;
    m.spec.fixed = parse_formula("weight ~ tw + grp + tw:grp3");
    m.spec.method = Method::ML;
    m.column_names = {"(Intercept)", "tw", "grp2", "grp3", "tw:grp3"};
    m.column_scope = {ColumnScope::Outer, ColumnScope::Inner, ColumnScope::Outer,
                      ColumnScope::Outer, ColumnScope::Inner};
    m.beta.resize(5);
    m.beta << 19.004, 0.337, 14.925, 17.254, 1.738;
    const double se[] = {0.561, 0.025, 0.777, 0.829, 0.044};
    m.cov_beta = Matrix::Zero(5, 5);
    for (int j = 0; j < 5; ++j) m.cov_beta(j, j) = se[j] * se[j];
    m.theta = random_intercept(1.72, 1.37);
    m.loglik = -691.838;
    m.k = 7;
    m.n_obs = 372;
    m.n_clusters = 31;
    m.df_outer = 28;
    m.df_inner = 339;
    m.converged = true;
    return m;
}

FittedModel ml_stub(double loglik, int k) {
    FittedModel m;
    m.spec.method = Method::ML;
    m.theta = random_intercept(1.0, 1.0);
    m.loglik = loglik;
    m.k = k;
    m.n_obs = 372;
    m.n_clusters = 31;
    m.converged = true;
    return m;
}

Vector cvec(std::initializer_list<double> values) {
    Vector c(static_cast<Index>(values.size()));
    Index i = 0;
    for (double v : values) c(i++) = v;
    return c;
}

}  // namespace

TEST_CASE("lrt reproduces the published test statistics") {
    const LrtResult strong = lrt(ml_stub(-984.321, 6), ml_stub(-691.838, 7));
    CHECK(strong.stat == doctest::Approx(584.966).epsilon(1e-12));
    CHECK(strong.df == 1);
    CHECK(strong.p < 1e-100);
    CHECK(strong.p > 0.0);

    const LrtResult weak = lrt(ml_stub(-691.838, 7), ml_stub(-691.730, 8));
    CHECK(weak.stat == doctest::Approx(0.216).epsilon(1e-12));
    CHECK(weak.df == 1);
    CHECK(weak.p == doctest::Approx(0.642).epsilon(0.005));

    const LrtResult self = lrt(ml_stub(-691.838, 7), ml_stub(-691.838, 7));
    CHECK(self.stat == 0.0);
    CHECK(self.p == 1.0);
}

TEST_CASE("lrt rejections and warnings") {
    FittedModel reml = ml_stub(-700.0, 7);
    reml.spec.method = Method::REML;
    CHECK_THROWS_AS(lrt(reml, ml_stub(-690.0, 8)), Error);
    try {
        lrt(reml, ml_stub(-690.0, 8));
    } catch (const Error& e) {
        CHECK(e.code() == Errc::MethodMismatch);
    }

    FittedModel other_structure = ml_stub(-700.0, 7);
    other_structure.theta = random_intercept_ar1(1.0, 1.0, 0.2);
    try {
        lrt(other_structure, ml_stub(-690.0, 8));
        FAIL("expected NotNested");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::NotNested);
    }

    try {
        lrt(ml_stub(-690.0, 8), ml_stub(-700.0, 7));
        FAIL("expected NotNested");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::NotNested);
    }

    // Worse full fit beyond tolerance is flagged, statistic clamped at 0.
    const LrtResult flagged = lrt(ml_stub(-690.0, 7), ml_stub(-690.5, 8));
    CHECK(flagged.stat == 0.0);
    CHECK(flagged.negative_stat_warning);

    FittedModel on_boundary = ml_stub(-690.0, 9);
    on_boundary.boundary = true;
    CHECK(lrt(ml_stub(-691.0, 7), on_boundary).boundary_warning);
}

TEST_CASE("contrast mechanics on the published coefficients") {
    const FittedModel m = published_model();

    // Group 2 - group 1: outer columns only, so df = M - q_outer = 28.
    const ContrastResult g21 = contrast(m, {"g2-g1", cvec({0, 0, 1, 0, 0})});
    CHECK(g21.estimate == doctest::Approx(14.925));
    CHECK(g21.se == doctest::Approx(0.777));
    CHECK(g21.df == 28);
    CHECK(g21.ci_lo == doctest::Approx(14.925 - 2.048407141795244 * 0.777).epsilon(1e-9));
    CHECK(std::fabs(g21.ci_lo - 13.333) < 0.01);

    // Gains use tw only: inner scope, df = N - M - q_inner = 339.
    const ContrastResult gain1 = contrast(m, {"gain1", cvec({0, 11, 0, 0, 0})});
    CHECK(gain1.estimate == doctest::Approx(11 * 0.337));
    CHECK(gain1.df == 339);
    CHECK(gain1.ci_hi - gain1.ci_lo ==
          doctest::Approx(2.0 * 1.9669864608402778 * gain1.se).epsilon(1e-12));

    // Mixed contrast takes the minimum df over active columns.
    const ContrastResult g31 = contrast(m, {"g3-g1@1", cvec({0, 0, 0, 1, 1})});
    CHECK(g31.df == 28);

    // The published group 3 trajectory at week 1.
    const ContrastResult mu3 = group_mean(m, 3, 1.0);
    CHECK(mu3.estimate == doctest::Approx(38.333).epsilon(1e-12));
    const ContrastResult mu1 = group_mean(m, 1, 0.0);
    CHECK(mu1.estimate == doctest::Approx(19.004));

    // mu2(t) - mu1(t) does not involve t.
    const ContrastResult d5 = contrast(m, {"d", cvec({0, 0, 1, 0, 0})});
    CHECK(contrast(m, {"d", cvec({0, 0, 1, 0, 0})}).estimate == d5.estimate);
}

TEST_CASE("contrast scaling linearity") {
    const FittedModel m = published_model();
    const ContrastResult base = contrast(m, {"e1", cvec({1, 0, 0, 0, 0})});
    const ContrastResult doubled = contrast(m, {"2e1", cvec({2, 0, 0, 0, 0})});
    CHECK(doubled.estimate == doctest::Approx(2.0 * base.estimate).epsilon(1e-14));
    CHECK(doubled.se == doctest::Approx(2.0 * base.se).epsilon(1e-14));
    CHECK(doubled.ci_lo == doctest::Approx(2.0 * base.ci_lo).epsilon(1e-12));
    CHECK(doubled.p == doctest::Approx(base.p).epsilon(1e-12));
}

TEST_CASE("contrast error paths") {
    const FittedModel m = published_model();
    CHECK_THROWS_AS(contrast(m, {"zero", cvec({0, 0, 0, 0, 0})}), Error);
    CHECK_THROWS_AS(contrast(m, {"short", cvec({1, 0})}), Error);
    CHECK_THROWS_AS(group_mean(m, 4, 1.0), Error);
}

TEST_CASE("weekly differences follow the published table structure") {
    const FittedModel m = published_model();
    const auto rows = weekly_differences(m);
    REQUIRE(rows.size() == 36);

    // First block: group 2 - group 1, identical across weeks.
    for (int t = 0; t < 12; ++t) {
        CHECK(rows[t].label == "Group 2 - Group 1");
        CHECK(rows[t].week == t + 1);
        CHECK(rows[t].result.estimate == rows[0].result.estimate);
        CHECK(rows[t].result.se == rows[0].result.se);
    }
    // Second block grows linearly in t; third equals second minus first.
    for (int t = 0; t < 12; ++t) {
        const auto& g31 = rows[12 + t].result;
        const auto& g32 = rows[24 + t].result;
        CHECK(g31.estimate ==
              doctest::Approx(m.beta(3) + (t + 1) * m.beta(4)).epsilon(1e-12));
        CHECK(g31.estimate - g32.estimate ==
              doctest::Approx(rows[t].result.estimate).epsilon(1e-12));
    }
}

TEST_CASE("gains table") {
    const FittedModel m = published_model();
    const auto rows = gains(m);
    REQUIRE(rows.size() == 4);
    CHECK(rows[0].estimate == doctest::Approx(11 * 0.337));
    // Groups 1 and 2 share the slope: identical contrast, identical row.
    CHECK(rows[1].estimate == rows[0].estimate);
    CHECK(rows[1].se == rows[0].se);
    CHECK(rows[2].estimate == doctest::Approx(11 * (0.337 + 1.738)).epsilon(1e-12));
    CHECK(rows[3].estimate == doctest::Approx(11 * 1.738).epsilon(1e-12));
    CHECK(std::fabs(rows[3].estimate - 19.12) < 0.01);
}

TEST_CASE("layout mismatch is rejected") {
    const LongDataset d = testing::paper_like_dataset(61);
    ModelSpec spec;
    spec.fixed = parse_formula("weight ~ tw + grp");
    const FittedModel m1 = fit(spec, d);
    CHECK_THROWS_AS(weekly_differences(m1), Error);
    CHECK_THROWS_AS(gains(m1), Error);
    try {
        gains(m1);
    } catch (const Error& e) {
        CHECK(e.code() == Errc::LayoutMismatch);
    }
}

TEST_CASE("significance and interval agreement on a fitted model") {
    const LongDataset d = testing::paper_like_dataset(62);
    ModelSpec spec;
    spec.fixed = parse_formula("weight ~ tw + grp + tw:grp3");
    const FittedModel m = fit(spec, d);

    Rng rng(99);
    for (int trial = 0; trial < 50; ++trial) {
        Vector c = Vector::Zero(5);
        for (int j = 0; j < 5; ++j) {
            if (rng.uniform() < 0.5) c(j) = rng.uniform(-2.0, 2.0);
        }
        if (c.isZero(0.0)) c(0) = 1.0;
        const ContrastResult r = contrast(m, {"random", c});
        CHECK(r.ci_lo < r.ci_hi);
        // p < 0.05 exactly when the 95% CI excludes zero.
        const bool excludes_zero = r.ci_lo > 0.0 || r.ci_hi < 0.0;
        CHECK((r.p < 0.05) == excludes_zero);
        // Interval width identity.
        const double tq = stats::t_quantile(0.975, r.df);
        CHECK(r.ci_hi - r.ci_lo == doctest::Approx(2.0 * tq * r.se).epsilon(1e-12));
    }
}

TEST_CASE("compare_table is consistent with information_criteria") {
    const LongDataset d = testing::tiny_dataset(63, 3, 5);
    ModelSpec spec;
    spec.fixed = parse_formula("weight ~ tw + grp");
    FittedModel m = fit(spec, d);
    m.label = "only";
    const auto rows = compare_table({m});
    REQUIRE(rows.size() == 1);
    const auto ic = information_criteria(m);
    CHECK(rows[0].name == "only");
    CHECK(rows[0].aic == ic.aic);
    CHECK(rows[0].bic == ic.bic);
    CHECK(rows[0].loglik == m.loglik);
    CHECK(rows[0].k == m.k);
}

TEST_CASE("table number formatting") {
    CHECK(format_table_number(1397.6764) == "1397.676");
    CHECK(format_table_number(-691.83) == "-691.830");
    CHECK(format_p_value(0.642) == "0.642");
    CHECK(format_p_value(3.77e-05) == "3.77e-05");
    CHECK(format_p_value(1e-310) == "0.00");
    CHECK(format_p_value(0.0) == "0.00");
}
