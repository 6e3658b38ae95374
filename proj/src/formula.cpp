#include "longmix/formula.hpp"

#include <algorithm>
#include <cctype>

#include "longmix/error.hpp"

namespace longmix {

bool operator==(const Term& lhs, const Term& rhs) {
    if (lhs.kind != rhs.kind) return false;
    switch (lhs.kind) {
        case TermKind::Intercept:
            return true;
        case TermKind::Main:
            return lhs.a == rhs.a;
        case TermKind::Interaction:
            return (lhs.a == rhs.a && lhs.b == rhs.b) || (lhs.a == rhs.b && lhs.b == rhs.a);
    }
    return false;
}

bool operator==(const FormulaAst& lhs, const FormulaAst& rhs) {
    return lhs.response == rhs.response && lhs.terms == rhs.terms;
}

namespace {

enum class TokKind { Name, Tilde, Plus, Colon, Star, End };

struct Token {
    TokKind kind;
    std::string text;
    std::size_t offset;
};

bool is_name_start(char c) {
    return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '1';
}

bool is_name_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.';
}

std::vector<Token> lex(std::string_view text) {
    std::vector<Token> tokens;
    std::size_t i = 0;
    while (i < text.size()) {
        const char c = text[i];
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
            ++i;
            continue;
        }
        if (c == '~') {
            tokens.push_back({TokKind::Tilde, "~", i});
            ++i;
        } else if (c == '+') {
            tokens.push_back({TokKind::Plus, "+", i});
            ++i;
        } else if (c == ':') {
            tokens.push_back({TokKind::Colon, ":", i});
            ++i;
        } else if (c == '*') {
            tokens.push_back({TokKind::Star, "*", i});
            ++i;
        } else if (is_name_start(c)) {
            std::size_t j = i + 1;
            while (j < text.size() && is_name_char(text[j])) ++j;
            tokens.push_back({TokKind::Name, std::string(text.substr(i, j - i)), i});
            i = j;
        } else {
            throw FormulaParseError(Errc::UnknownOperator,
                                    std::string("unknown operator '") + c + "'", i);
        }
    }
    tokens.push_back({TokKind::End, "", text.size()});
    return tokens;
}

void push_unique(std::vector<Term>& terms, Term t) {
    if (std::find(terms.begin(), terms.end(), t) == terms.end()) {
        terms.push_back(std::move(t));
    }
}

}  // namespace

FormulaAst parse_formula(std::string_view text) {
    const auto tokens = lex(text);
    std::size_t pos = 0;
    const auto peek = [&]() -> const Token& { return tokens[pos]; };
    const auto advance = [&]() -> const Token& { return tokens[pos++]; };
    const auto expect_name = [&](const char* what) -> Token {
        if (peek().kind != TokKind::Name) {
            throw FormulaParseError(Errc::ParseError, std::string("expected ") + what,
                                    peek().offset);
        }
        return advance();
    };

    FormulaAst ast;
    ast.response = expect_name("a response variable").text;
    if (ast.response == "1") {
        throw FormulaParseError(Errc::ParseError, "response must be a variable name",
                                tokens[0].offset);
    }
    if (peek().kind != TokKind::Tilde) {
        throw FormulaParseError(Errc::ParseError, "expected '~' after the response",
                                peek().offset);
    }
    advance();
    if (peek().kind == TokKind::End) {
        throw FormulaParseError(Errc::ParseError, "empty right-hand side", peek().offset);
    }

    ast.terms.push_back(Term::intercept());
    while (true) {
        const Token lhs = expect_name("a term name");
        if (peek().kind == TokKind::Colon) {
            advance();
            const Token rhs = expect_name("a name after ':'");
            if (lhs.text == "1" || rhs.text == "1") {
                throw FormulaParseError(Errc::ParseError, "'1' cannot appear in an interaction",
                                        lhs.offset);
            }
            push_unique(ast.terms, Term::interaction(lhs.text, rhs.text));
        } else if (peek().kind == TokKind::Star) {
            advance();
            const Token rhs = expect_name("a name after '*'");
            if (lhs.text == "1" || rhs.text == "1") {
                throw FormulaParseError(Errc::ParseError, "'1' cannot appear in a crossing",
                                        lhs.offset);
            }
            push_unique(ast.terms, Term::main(lhs.text));
            push_unique(ast.terms, Term::main(rhs.text));
            push_unique(ast.terms, Term::interaction(lhs.text, rhs.text));
        } else if (lhs.text != "1") {
            push_unique(ast.terms, Term::main(lhs.text));
        }
        // else: a bare '1' restates the implicit intercept

        if (peek().kind == TokKind::Plus) {
            advance();
            continue;
        }
        if (peek().kind == TokKind::End) break;
        throw FormulaParseError(Errc::ParseError, "expected '+' or end of formula",
                                peek().offset);
    }
    return ast;
}

std::string format_formula(const FormulaAst& ast) {
    std::string out = ast.response + " ~ ";
    bool first = true;
    for (const auto& t : ast.terms) {
        if (t.kind == TermKind::Intercept) continue;
        if (!first) out += " + ";
        first = false;
        if (t.kind == TermKind::Main) {
            out += t.a;
        } else {
            out += t.a + ":" + t.b;
        }
    }
    if (first) out += "1";  // intercept-only model
    return out;
}

}  // namespace longmix
