#include <doctest.h>

#include "longmix/design.hpp"
#include "longmix/error.hpp"
#include "longmix/formula.hpp"
#include "longmix/rng.hpp"
#include "test_helpers.hpp"

using namespace longmix;

TEST_CASE("parse_formula on the candidate models") {
    const FormulaAst m1 = parse_formula("weight ~ tw + grp");
    REQUIRE(m1.terms.size() == 3);
    CHECK(m1.terms[0].kind == TermKind::Intercept);
    CHECK(m1.terms[1] == Term::main("tw"));
    CHECK(m1.terms[2] == Term::main("grp"));

    const FormulaAst m2 = parse_formula("weight ~ tw * grp");
    REQUIRE(m2.terms.size() == 4);
    CHECK(m2.terms[1] == Term::main("tw"));
    CHECK(m2.terms[2] == Term::main("grp"));
    CHECK(m2.terms[3] == Term::interaction("tw", "grp"));

    const FormulaAst m3 = parse_formula("weight ~ tw + grp + tw:grp3");
    REQUIRE(m3.terms.size() == 4);
    CHECK(m3.terms[3] == Term::interaction("tw", "grp3"));
}

TEST_CASE("parse_formula error paths") {
    try {
        parse_formula("weight ~");
        FAIL("expected ParseError");
    } catch (const FormulaParseError& e) {
        CHECK(e.code() == Errc::ParseError);
        CHECK(e.offset() == 8);
    }
    CHECK_THROWS_AS(parse_formula("weight tw"), FormulaParseError);
    CHECK_THROWS_AS(parse_formula("~ tw"), FormulaParseError);
    CHECK_THROWS_AS(parse_formula("weight ~ tw +"), FormulaParseError);
    try {
        parse_formula("weight ~ tw - grp");
        FAIL("expected UnknownOperator");
    } catch (const FormulaParseError& e) {
        CHECK(e.code() == Errc::UnknownOperator);
    }
    CHECK_THROWS_AS(parse_formula(""), FormulaParseError);
}

TEST_CASE("duplicate terms collapse; a*b expansion overlaps a + b") {
    const FormulaAst a = parse_formula("weight ~ tw + tw + grp");
    CHECK(a.terms.size() == 3);
    const FormulaAst b = parse_formula("weight ~ tw + tw * grp");
    CHECK(b.terms.size() == 4);  // intercept, tw, grp, tw:grp
    // Interactions are unordered.
    CHECK(parse_formula("weight ~ tw:grp3") == parse_formula("weight ~ grp3:tw"));
}

TEST_CASE("intercept-only formula") {
    const FormulaAst ast = parse_formula("weight ~ 1");
    REQUIRE(ast.terms.size() == 1);
    CHECK(ast.terms[0].kind == TermKind::Intercept);
    CHECK(format_formula(ast) == "weight ~ 1");
    CHECK(parse_formula(format_formula(ast)) == ast);
}

TEST_CASE("parse-print-parse is a fixed point") {
    for (const char* text :
         {"weight ~ tw + grp", "weight ~ tw * grp", "weight ~ tw + grp + tw:grp3",
          "weight ~ grp3", "weight ~ 1", "weight ~ tw + 1 + grp"}) {
        const FormulaAst ast = parse_formula(text);
        CHECK(parse_formula(format_formula(ast)) == ast);
    }

    // Randomized round trips over the grammar.
    Rng rng(2024);
    const std::vector<std::string> names = {"tw", "grp", "grp3", "dose", "litter"};
    for (int trial = 0; trial < 200; ++trial) {
        FormulaAst ast;
        ast.response = "weight";
        ast.terms.push_back(Term::intercept());
        const int n_terms = 1 + static_cast<int>(rng.uniform() * 4);
        for (int t = 0; t < n_terms; ++t) {
            const auto& a = names[static_cast<std::size_t>(rng.uniform() * names.size())];
            Term term = Term::main(a);
            if (rng.uniform() < 0.4) {
                const auto& b = names[static_cast<std::size_t>(rng.uniform() * names.size())];
                term = Term::interaction(a, b);
            }
            if (std::find(ast.terms.begin(), ast.terms.end(), term) == ast.terms.end()) {
                ast.terms.push_back(term);
            }
        }
        CHECK(parse_formula(format_formula(ast)) == ast);
    }
}

TEST_CASE("build_design for the selected model") {
    const LongDataset d = testing::paper_like_dataset(21);
    const DesignSet ds = build_design(parse_formula("weight ~ tw + grp + tw:grp3"), d);
    const std::vector<std::string> expected = {"(Intercept)", "tw", "grp2", "grp3", "tw:grp3"};
    CHECK(ds.column_names == expected);
    CHECK(ds.n_cols() == 5);
    CHECK(ds.n_obs == 372);
    CHECK(ds.n_clusters() == 31);
    CHECK(ds.n_groups() == 3);

    // Scopes: intercept and group dummies are mouse-constant.
    CHECK(ds.column_scope[0] == ColumnScope::Outer);
    CHECK(ds.column_scope[1] == ColumnScope::Inner);
    CHECK(ds.column_scope[2] == ColumnScope::Outer);
    CHECK(ds.column_scope[3] == ColumnScope::Outer);
    CHECK(ds.column_scope[4] == ColumnScope::Inner);

    for (const auto& cl : ds.clusters) {
        if (cl.group == 1) {
            // Reference-group rows have zeros in all dummy and interaction
            // columns.
            CHECK(cl.X.col(2).isZero(0.0));
            CHECK(cl.X.col(3).isZero(0.0));
            CHECK(cl.X.col(4).isZero(0.0));
            CHECK(cl.X(0, 0) == 1.0);
            CHECK(cl.X(0, 1) == cl.t(0));
        }
        if (cl.group == 3) {
            const Index i = 4 < cl.t.size() ? 4 : 0;  // week 5 row when present
            CHECK(cl.X(i, 0) == 1.0);
            CHECK(cl.X(i, 1) == cl.t(i));
            CHECK(cl.X(i, 2) == 0.0);
            CHECK(cl.X(i, 3) == 1.0);
            CHECK(cl.X(i, 4) == cl.t(i));
        }
    }
}

TEST_CASE("design widths for the three candidate models") {
    const LongDataset d = testing::paper_like_dataset(22);
    CHECK(build_design(parse_formula("weight ~ tw + grp"), d).n_cols() == 4);
    const DesignSet m2 = build_design(parse_formula("weight ~ tw * grp"), d);
    CHECK(m2.n_cols() == 6);
    const std::vector<std::string> expected = {"(Intercept)", "tw",     "grp2",
                                               "grp3",        "tw:grp2", "tw:grp3"};
    CHECK(m2.column_names == expected);
    CHECK(build_design(parse_formula("weight ~ tw + grp + tw:grp3"), d).n_cols() == 5);
}

TEST_CASE("build_design error paths") {
    const LongDataset d = testing::paper_like_dataset(23);
    try {
        build_design(parse_formula("weight ~ dose"), d);
        FAIL("expected UnknownVariable");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::UnknownVariable);
    }
    try {
        build_design(parse_formula("bw ~ tw"), d);
        FAIL("expected UnknownVariable");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::UnknownVariable);
    }
    // grp already spans the grp3 indicator: adding it again is collinear.
    try {
        build_design(parse_formula("weight ~ grp + grp3"), d);
        FAIL("expected RankDeficient");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::RankDeficient);
    }
}

TEST_CASE("group levels are sorted with the first as reference") {
    const LongDataset d =
        make_long_dataset({{"A", 5, 1, 10.0}, {"A", 5, 2, 11.0}, {"B", 2, 1, 12.0},
                           {"B", 2, 2, 13.0}, {"C", 9, 1, 14.0}, {"C", 9, 2, 15.0}});
    const DesignSet ds = build_design(parse_formula("weight ~ grp"), d);
    const std::vector<std::string> expected = {"(Intercept)", "grp5", "grp9"};
    CHECK(ds.column_names == expected);
    CHECK(ds.group_labels == std::vector<int>{2, 5, 9});
}
