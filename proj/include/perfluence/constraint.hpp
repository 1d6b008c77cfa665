#pragma once

#include <algorithm>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "perfluence/errors.hpp"

namespace perfluence {

// Propositional constraints over binary options, written in a small prefix
// grammar:
//
//   expr := name | not expr | and expr expr | or expr expr | implies expr expr
//
// Parentheses may wrap any expression, so both `implies A B` and
// `(implies A (or B C))` parse. Operators have fixed arity.

enum class FormulaKind { Var, Not, And, Or, Implies };

struct Formula {
    FormulaKind kind = FormulaKind::Var;
    std::string var;             // Var only
    std::vector<Formula> args;   // operator children
};

enum class Tribool { False, True, Unknown };

inline Tribool tri_not(Tribool a) {
    if (a == Tribool::Unknown) return Tribool::Unknown;
    return a == Tribool::True ? Tribool::False : Tribool::True;
}

inline Tribool tri_and(Tribool a, Tribool b) {
    if (a == Tribool::False || b == Tribool::False) return Tribool::False;
    if (a == Tribool::True && b == Tribool::True) return Tribool::True;
    return Tribool::Unknown;
}

inline Tribool tri_or(Tribool a, Tribool b) {
    if (a == Tribool::True || b == Tribool::True) return Tribool::True;
    if (a == Tribool::False && b == Tribool::False) return Tribool::False;
    return Tribool::Unknown;
}

/// Evaluates under a partial assignment; unassigned vars yield Unknown.
/// Lets the configuration search prune as soon as a constraint is
/// definitely false.
inline Tribool eval_partial(const Formula& f,
                            const std::function<std::optional<bool>(const std::string&)>& lookup) {
    switch (f.kind) {
        case FormulaKind::Var: {
            auto v = lookup(f.var);
            if (!v) return Tribool::Unknown;
            return *v ? Tribool::True : Tribool::False;
        }
        case FormulaKind::Not:
            return tri_not(eval_partial(f.args[0], lookup));
        case FormulaKind::And:
            return tri_and(eval_partial(f.args[0], lookup), eval_partial(f.args[1], lookup));
        case FormulaKind::Or:
            return tri_or(eval_partial(f.args[0], lookup), eval_partial(f.args[1], lookup));
        case FormulaKind::Implies:
            return tri_or(tri_not(eval_partial(f.args[0], lookup)),
                          eval_partial(f.args[1], lookup));
    }
    return Tribool::Unknown;
}

inline bool eval_total(const Formula& f,
                       const std::function<bool(const std::string&)>& lookup) {
    return eval_partial(f, [&](const std::string& n) -> std::optional<bool> {
               return lookup(n);
           }) == Tribool::True;
}

inline void collect_vars(const Formula& f, std::vector<std::string>& out) {
    if (f.kind == FormulaKind::Var) {
        out.push_back(f.var);
        return;
    }
    for (const auto& a : f.args) collect_vars(a, out);
}

namespace detail {

struct Token {
    std::string text;
    int line = 1;
    int col = 1;
};

inline bool is_ident_char(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
           c == '_' || c == '.' || c == '-';
}

inline std::vector<Token> tokenize_formula(const std::string& src) {
    std::vector<Token> out;
    int line = 1, col = 1;
    std::size_t i = 0;
    while (i < src.size()) {
        char c = src[i];
        if (c == '\n') {
            ++line;
            col = 1;
            ++i;
            continue;
        }
        if (c == ' ' || c == '\t' || c == '\r') {
            ++col;
            ++i;
            continue;
        }
        if (c == '(' || c == ')') {
            out.push_back({std::string(1, c), line, col});
            ++col;
            ++i;
            continue;
        }
        if (is_ident_char(c)) {
            int start_col = col;
            std::size_t start = i;
            while (i < src.size() && is_ident_char(src[i])) {
                ++i;
                ++col;
            }
            out.push_back({src.substr(start, i - start), line, start_col});
            continue;
        }
        throw FormatError("line " + std::to_string(line) + ", col " + std::to_string(col) +
                          ": unknown token '" + std::string(1, c) + "'");
    }
    return out;
}

class FormulaParser {
  public:
    FormulaParser(std::vector<Token> toks, const std::vector<std::string>* known_names)
        : toks_(std::move(toks)), known_(known_names) {}

    Formula parse() {
        if (toks_.empty()) throw FormatError("line 1, col 1: empty constraint");
        Formula f = parse_expr();
        if (pos_ < toks_.size()) fail(toks_[pos_], "trailing input after constraint");
        return f;
    }

  private:
    Formula parse_expr() {
        const Token& t = peek();
        if (t.text == "(") {
            ++pos_;
            Formula inner = parse_expr();
            const Token& close = peek();
            if (close.text != ")") fail(close, "expected ')'");
            ++pos_;
            return inner;
        }
        if (t.text == ")") fail(t, "unexpected ')'");
        ++pos_;
        if (t.text == "not") return make_op(FormulaKind::Not, 1);
        if (t.text == "and") return make_op(FormulaKind::And, 2);
        if (t.text == "or") return make_op(FormulaKind::Or, 2);
        if (t.text == "implies") return make_op(FormulaKind::Implies, 2);
        if (known_ && std::find(known_->begin(), known_->end(), t.text) == known_->end())
            fail(t, "unknown option '" + t.text + "'");
        Formula f;
        f.kind = FormulaKind::Var;
        f.var = t.text;
        return f;
    }

    Formula make_op(FormulaKind kind, int arity) {
        Formula f;
        f.kind = kind;
        for (int i = 0; i < arity; ++i) f.args.push_back(parse_expr());
        return f;
    }

    const Token& peek() {
        if (pos_ >= toks_.size()) {
            const Token& last = toks_.back();
            throw FormatError("line " + std::to_string(last.line) + ", col " +
                              std::to_string(last.col + static_cast<int>(last.text.size())) +
                              ": unexpected end of constraint");
        }
        return toks_[pos_];
    }

    [[noreturn]] void fail(const Token& t, const std::string& why) {
        throw FormatError("line " + std::to_string(t.line) + ", col " + std::to_string(t.col) +
                          ": " + why);
    }

    std::vector<Token> toks_;
    const std::vector<std::string>* known_;
    std::size_t pos_ = 0;
};

} // namespace detail

/// Parsed constraint keeping its source text for error reporting and
/// round-tripping through space files.
struct Constraint {
    std::string source;
    Formula formula;
};

/// Parses one constraint string. When known_names is given, variable tokens
/// outside that set are rejected with their position.
inline Constraint parse_constraint(const std::string& src,
                                   const std::vector<std::string>* known_names = nullptr) {
    detail::FormulaParser parser(detail::tokenize_formula(src), known_names);
    return Constraint{src, parser.parse()};
}

} // namespace perfluence
