#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "longmix/error.hpp"
#include "longmix/oracle.hpp"
#include "test_helpers.hpp"

using namespace longmix;

TEST_CASE("simulate produces the planned layout") {
    SimLayout layout;
    layout.seed = 81;
    const LongDataset d = simulate(default_truth(), layout);
    CHECK(d.n_obs == 372);
    CHECK(d.n_mice == 31);
    int g3 = 0;
    for (const auto& r : d.records) {
        if (r.group == 3 && r.tw == 1) ++g3;
    }
    CHECK(g3 == 11);
}

TEST_CASE("zero-noise simulation hits the mean trajectories exactly") {
    TruthParams truth = default_truth();
    truth.structure = random_intercept(0.0, 0.0);
    SimLayout layout;
    layout.seed = 82;
    const LongDataset d = simulate(truth, layout);
    const Vector& b = truth.beta;
    for (const auto& r : d.records) {
        double mu = b(0) + b(1) * r.tw;
        if (r.group == 2) mu += b(2);
        if (r.group == 3) mu += b(3) + b(4) * r.tw;
        CHECK(r.weight == doctest::Approx(mu).epsilon(1e-15));
    }
}

TEST_CASE("simulation is reproducible from the seed") {
    SimLayout layout;
    layout.seed = 83;
    const LongDataset a = simulate(default_truth(), layout);
    const LongDataset b = simulate(default_truth(), layout);
    REQUIRE(a.n_obs == b.n_obs);
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        CHECK(a.records[i].weight == b.records[i].weight);
    }
    layout.seed = 84;
    const LongDataset c = simulate(default_truth(), layout);
    CHECK(a.records[0].weight != c.records[0].weight);
}

TEST_CASE("dense log-likelihood closed form at one observation") {
    const LongDataset d = make_long_dataset({{"M1", 1, 1, 21.0}});
    TruthParams truth;
    truth.formula = parse_formula("weight ~ 1");
    truth.beta = Vector::Constant(1, 20.0);
    truth.structure = random_intercept(0.0, 2.0);
    const double r = 21.0 - 20.0;
    const double expected = -0.5 * (std::log(2.0 * M_PI * 4.0) + r * r / 4.0);
    CHECK(dense_loglik(truth, d, Method::ML) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("dense log-likelihood is additive over clusters") {
    const LongDataset both = testing::tiny_dataset(85, 1, 4);
    // A per-cluster full-rank mean so single-mouse subsets remain valid.
    TruthParams truth;
    truth.formula = parse_formula("weight ~ tw");
    truth.beta = Vector(2);
    truth.beta << 19.0, 0.8;
    truth.structure = random_intercept(1.1, 0.7);

    double sum_parts = 0.0;
    std::vector<std::string> ids;
    for (const auto& r : both.records) {
        if (ids.empty() || ids.back() != r.mouse_id) ids.push_back(r.mouse_id);
    }
    for (const auto& id : ids) {
        std::vector<LongRecord> sub;
        for (const auto& r : both.records) {
            if (r.mouse_id == id) sub.push_back(r);
        }
        sum_parts += dense_loglik(truth, make_long_dataset(sub), Method::ML);
    }
    CHECK(dense_loglik(truth, both, Method::ML) == doctest::Approx(sum_parts).epsilon(1e-10));
}

TEST_CASE("profiling identity: profiled criterion dominates any fixed beta") {
    const LongDataset d = testing::tiny_dataset(86, 2, 4);
    const FormulaAst ast = parse_formula("weight ~ tw + grp + tw:grp3");
    const DesignSet ds = build_design(ast, d);
    const CovarianceStructure theta = random_intercept(0.9, 1.1);
    const double profiled = profile_loglik(theta, ds, Method::ML);

    const Vector beta_hat = gls_beta(theta, ds).beta;
    Rng rng(87);
    for (int trial = 0; trial < 20; ++trial) {
        Vector b = beta_hat;
        for (Index j = 0; j < b.size(); ++j) b(j) += rng.uniform(-1.0, 1.0);
        TruthParams at_b{ast, b, theta};
        CHECK(profiled >= dense_loglik(at_b, d, Method::ML) - 1e-10);
    }
    TruthParams at_hat{ast, beta_hat, theta};
    CHECK(profiled == doctest::Approx(dense_loglik(at_hat, d, Method::ML)).epsilon(1e-10));
}

TEST_CASE("dense gls equals OLS under an identity covariance") {
    const LongDataset d = testing::tiny_dataset(88, 2, 3);
    const FormulaAst ast = parse_formula("weight ~ tw + grp");
    const GlsResult gls = dense_gls(random_intercept(0.0, 1.0), d, ast);
    const DesignSet ds = build_design(ast, d);
    const Matrix x = stacked_design(ds);
    const Vector y = stacked_response(ds);
    const Vector ols = (x.transpose() * x).ldlt().solve(x.transpose() * y);
    CHECK((gls.beta - ols).norm() < 1e-10);
}

TEST_CASE("record order does not change the dense gls solution") {
    const LongDataset d = testing::tiny_dataset(89, 2, 4);
    std::vector<LongRecord> shuffled = d.records;
    std::mt19937 mixer(12345);
    std::shuffle(shuffled.begin(), shuffled.end(), mixer);
    const LongDataset d2 = make_long_dataset(std::move(shuffled));

    const FormulaAst ast = parse_formula("weight ~ tw + grp + tw:grp3");
    const CovarianceStructure theta = random_intercept_ar1(0.8, 1.0, 0.4);
    const GlsResult a = dense_gls(theta, d, ast);
    const GlsResult b = dense_gls(theta, d2, ast);
    CHECK((a.beta - b.beta).norm() < 1e-10);
}

TEST_CASE("dense oracle refuses oversized problems") {
    SimLayout layout;
    layout.group_sizes = {90, 90, 90};
    layout.weeks = 12;  // 3240 observations
    layout.seed = 90;
    const LongDataset d = simulate(default_truth(), layout);
    TruthParams truth = default_truth();
    try {
        dense_loglik(truth, d, Method::ML);
        FAIL("expected TooLarge");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::TooLarge);
    }
}

TEST_CASE("engine and dense oracle agree across structures at random parameters") {
    SimLayout layout;
    layout.group_sizes = {2, 2, 1};
    layout.weeks = 4;
    layout.seed = 91;
    const LongDataset d = simulate(default_truth(), layout);
    const FormulaAst ast = default_truth().formula;
    const DesignSet ds = build_design(ast, d);

    Rng rng(92);
    for (const CovKind kind :
         {CovKind::RandomIntercept, CovKind::RandomInterceptSlope, CovKind::RandomInterceptAR1,
          CovKind::RandomInterceptHeteroVar}) {
        for (int trial = 0; trial < 10; ++trial) {
            const CovarianceStructure theta = random_interior_structure(kind, 3, rng);
            const GlsResult engine = gls_beta(theta, ds);
            const GlsResult oracle = dense_gls(theta, d, ast);
            CHECK((engine.beta - oracle.beta).norm() / oracle.beta.norm() < 1e-8);
            TruthParams at{ast, oracle.beta, theta};
            CHECK(std::fabs(profile_loglik(theta, ds, Method::ML) -
                            dense_loglik(at, d, Method::ML)) < 1e-8);
            CHECK(std::fabs(profile_loglik(theta, ds, Method::REML) -
                            dense_loglik(at, d, Method::REML)) < 1e-8);
        }
    }
}

TEST_CASE("ar1 simulation reproduces the lag-one autocorrelation") {
    TruthParams truth;
    truth.formula = parse_formula("weight ~ 1");
    truth.beta = Vector::Zero(1);
    const double rho = 0.6;
    truth.structure = random_intercept_ar1(0.0, 1.0, rho);

    // 10000 series of length 200, simulated in batches.
    double num = 0.0, den = 0.0;
    for (int batch = 0; batch < 10; ++batch) {
        SimLayout layout;
        layout.group_sizes = {1000};
        layout.weeks = 200;
        layout.seed = 1000 + static_cast<std::uint64_t>(batch);
        const LongDataset d = simulate(truth, layout);
        // Records are sorted by (mouse, week): consecutive pairs within a
        // mouse are lag-one neighbours.
        for (std::size_t i = 1; i < d.records.size(); ++i) {
            const auto& prev = d.records[i - 1];
            const auto& cur = d.records[i];
            if (prev.mouse_id != cur.mouse_id) continue;
            num += prev.weight * cur.weight;
        }
        for (const auto& r : d.records) den += r.weight * r.weight;
    }
    const double lag1 = num / den * (200.0 / 199.0);
    CHECK(std::fabs(lag1 - rho) < 0.02);
}

TEST_CASE("coverage experiment API") {
    TruthParams truth = default_truth();
    SimLayout layout;
    layout.seed = 93;
    Vector c2 = Vector::Zero(5);
    c2(2) = 1.0;
    const auto rows = coverage_experiment(truth, layout, 100, {{"grp2", c2}});
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].reps == 100);
    CHECK(rows[0].fit_failures == 0);
    CHECK(rows[0].coverage > 0.85);
    CHECK(rows[0].coverage <= 1.0);
    CHECK_THROWS_AS(coverage_experiment(truth, layout, 50, {{"grp2", c2}}),
                    std::invalid_argument);
}
