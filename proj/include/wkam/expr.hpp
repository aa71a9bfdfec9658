#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "wkam/domain.hpp"

namespace wkam {

/// Syntax error or unknown identifier in an expression, with the byte offset.
class ExprError : public std::invalid_argument {
public:
    ExprError(const std::string& msg, std::size_t offset)
        : std::invalid_argument(msg + " at offset " + std::to_string(offset)), offset_(offset) {}
    std::size_t offset() const { return offset_; }

private:
    std::size_t offset_;
};

/// Evaluation produced a non-finite value.
class ExprDomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

struct ExprNode {
    enum class Kind { number, variable, neg, add, sub, mul, div, pow, call };
    enum class Func { sin, cos, exp, abs, min, max };
    Kind kind = Kind::number;
    double value = 0.0;
    Func func = Func::sin;
    std::vector<std::unique_ptr<ExprNode>> args;
};

class ExprAst {
public:
    explicit ExprAst(std::unique_ptr<ExprNode> root, std::string source)
        : root_(std::move(root)), source_(std::move(source)) {}

    double operator()(double x) const {
        const double v = eval(*root_, x);
        if (!std::isfinite(v))
            throw ExprDomainError("expression '" + source_ + "' is not finite at x = " + format_double(x));
        return v;
    }
    const std::string& source() const { return source_; }
    const ExprNode& root() const { return *root_; }

private:
    static double eval(const ExprNode& n, double x) {
        using K = ExprNode::Kind;
        switch (n.kind) {
        case K::number: return n.value;
        case K::variable: return x;
        case K::neg: return -eval(*n.args[0], x);
        case K::add: return eval(*n.args[0], x) + eval(*n.args[1], x);
        case K::sub: return eval(*n.args[0], x) - eval(*n.args[1], x);
        case K::mul: return eval(*n.args[0], x) * eval(*n.args[1], x);
        case K::div: return eval(*n.args[0], x) / eval(*n.args[1], x);
        case K::pow: return std::pow(eval(*n.args[0], x), eval(*n.args[1], x));
        case K::call: break;
        }
        using F = ExprNode::Func;
        const double a = eval(*n.args[0], x);
        switch (n.func) {
        case F::sin: return std::sin(a);
        case F::cos: return std::cos(a);
        case F::exp: return std::exp(a);
        case F::abs: return std::abs(a);
        case F::min:
        case F::max: {
            double r = a;
            for (std::size_t k = 1; k < n.args.size(); ++k) {
                const double b = eval(*n.args[k], x);
                r = n.func == F::min ? std::min(r, b) : std::max(r, b);
            }
            return r;
        }
        }
        return 0.0;
    }

    std::unique_ptr<ExprNode> root_;
    std::string source_;
};

namespace detail {

// expr := term (('+'|'-') term)*; term := unary (('*'|'/') unary)*;
// unary := '-' unary | power; power := primary ('^' unary)?
class ExprParser {
public:
    explicit ExprParser(std::string_view s) : s_(s) {}

    std::unique_ptr<ExprNode> parse() {
        auto e = expr();
        skip();
        if (pos_ < s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
        return e;
    }

private:
    using Node = std::unique_ptr<ExprNode>;
    using K = ExprNode::Kind;

    static Node make(K k, Node a = nullptr, Node b = nullptr) {
        auto n = std::make_unique<ExprNode>();
        n->kind = k;
        if (a) n->args.push_back(std::move(a));
        if (b) n->args.push_back(std::move(b));
        return n;
    }

    [[noreturn]] void fail(const std::string& msg) const { throw ExprError("expression syntax error: " + msg, pos_); }

    void skip() {
        while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t' || s_[pos_] == '\n' || s_[pos_] == '\r')) ++pos_;
    }
    bool accept(char c) {
        skip();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }
    void expect(char c) {
        if (!accept(c)) fail(std::string("expected '") + c + "'");
    }

    Node expr() {
        auto a = term();
        for (;;) {
            if (accept('+')) a = make(K::add, std::move(a), term());
            else if (accept('-')) a = make(K::sub, std::move(a), term());
            else return a;
        }
    }
    Node term() {
        auto a = unary();
        for (;;) {
            if (accept('*')) a = make(K::mul, std::move(a), unary());
            else if (accept('/')) a = make(K::div, std::move(a), unary());
            else return a;
        }
    }
    Node unary() {
        if (accept('-')) return make(K::neg, unary());
        return power();
    }
    Node power() {
        auto a = primary();
        if (accept('^')) return make(K::pow, std::move(a), unary());
        return a;
    }
    Node primary() {
        skip();
        if (pos_ >= s_.size()) fail("unexpected end of input");
        const char c = s_[pos_];
        if (c == '(') {
            ++pos_;
            auto e = expr();
            expect(')');
            return e;
        }
        if ((c >= '0' && c <= '9') || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
        fail("unexpected '" + std::string(1, c) + "'");
    }
    Node number() {
        double v = 0.0;
        const auto [end, ec] = std::from_chars(s_.data() + pos_, s_.data() + s_.size(), v);
        if (ec != std::errc()) fail("malformed number");
        pos_ = static_cast<std::size_t>(end - s_.data());
        auto n = make(K::number);
        n->value = v;
        return n;
    }
    Node identifier() {
        const std::size_t start = pos_;
        while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
        const std::string_view id = s_.substr(start, pos_ - start);
        if (id == "x") return make(K::variable);
        if (id == "pi") {
            auto n = make(K::number);
            n->value = std::numbers::pi;
            return n;
        }
        using F = ExprNode::Func;
        struct Entry { std::string_view name; F f; std::size_t min_args, max_args; };
        static constexpr Entry table[] = {{"sin", F::sin, 1, 1}, {"cos", F::cos, 1, 1}, {"exp", F::exp, 1, 1},
                                          {"abs", F::abs, 1, 1}, {"min", F::min, 2, 64}, {"max", F::max, 2, 64}};
        for (const auto& e : table) {
            if (e.name != id) continue;
            auto n = make(K::call);
            n->func = e.f;
            expect('(');
            n->args.push_back(expr());
            while (accept(',')) n->args.push_back(expr());
            const std::size_t close = pos_;
            expect(')');
            if (n->args.size() < e.min_args || n->args.size() > e.max_args)
                throw ExprError("wrong number of arguments to " + std::string(id), close);
            return n;
        }
        throw ExprError("unknown identifier '" + std::string(id) + "'", start);
    }

    std::string_view s_;
    std::size_t pos_ = 0;
};

} // namespace detail

/// Parses arithmetic in x: numbers, pi, + − * / ^ (right-assoc, above unary minus),
/// sin cos exp abs min max, parentheses. Whitespace is ignored.
inline ExprAst parse_expr(std::string_view src) {
    return ExprAst(detail::ExprParser(src).parse(), std::string(src));
}

/// The expression sampled at every node.
inline GridFunction sample_expr(const ExprAst& e, const GridDomain& d) {
    return GridFunction::sample(d, [&](double x) { return e(x); });
}

} // namespace wkam
