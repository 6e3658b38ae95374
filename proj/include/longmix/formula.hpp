#ifndef LONGMIX_FORMULA_HPP
#define LONGMIX_FORMULA_HPP

#include <string>
#include <string_view>
#include <vector>

namespace longmix {

enum class TermKind { Intercept, Main, Interaction };

struct Term {
    TermKind kind = TermKind::Intercept;
    std::string a;  // Main name, or left operand of an interaction
    std::string b;  // right operand of an interaction

    static Term intercept() { return {TermKind::Intercept, "", ""}; }
    static Term main(std::string name) { return {TermKind::Main, std::move(name), ""}; }
    static Term interaction(std::string x, std::string y) {
        return {TermKind::Interaction, std::move(x), std::move(y)};
    }
};

// a:b and b:a denote the same term.
bool operator==(const Term& lhs, const Term& rhs);

// Model formula `response ~ term (+ term)*` with the intercept implicit.
// `a*b` expands to a + b + a:b; duplicate terms collapse to the first
// occurrence; intercept removal is not supported.
struct FormulaAst {
    std::string response;
    std::vector<Term> terms;  // terms[0] is always the intercept
};

bool operator==(const FormulaAst& lhs, const FormulaAst& rhs);

FormulaAst parse_formula(std::string_view text);

// Round-trips: parse_formula(format_formula(ast)) == ast.
std::string format_formula(const FormulaAst& ast);

}  // namespace longmix

#endif  // LONGMIX_FORMULA_HPP
