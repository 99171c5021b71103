#pragma once

#include <array>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "phibvp/errors.hpp"

namespace phibvp {

/// Parse error with the byte offset where the problem was detected.
class ExprError : public ConfigError {
public:
    ExprError(const std::string& msg, std::size_t offset)
        : ConfigError(msg + " at offset " + std::to_string(offset)), offset_(offset) {}
    std::size_t offset() const { return offset_; }

private:
    std::size_t offset_;
};

namespace exprdet {

constexpr std::array<char, 4> kVarNames = {'t', 'z', 'y', 's'};

inline int var_slot(const std::string& name) {
    if (name.size() != 1) return -1;
    for (std::size_t i = 0; i < kVarNames.size(); ++i)
        if (name[0] == kVarNames[i]) return static_cast<int>(i);
    return -1;
}

enum class Fn { Abs, Sqrt, Cbrt, Sin, Cos, Sinh, Log, Exp, Atan, Min, Max, Pow, Indicator };

struct FnInfo {
    const char* name;
    Fn fn;
    int arity;
};

inline const std::vector<FnInfo>& fn_table() {
    static const std::vector<FnInfo> table = {
        {"abs", Fn::Abs, 1},  {"sqrt", Fn::Sqrt, 1}, {"cbrt", Fn::Cbrt, 1},
        {"sin", Fn::Sin, 1},  {"cos", Fn::Cos, 1},   {"sinh", Fn::Sinh, 1},
        {"log", Fn::Log, 1},  {"exp", Fn::Exp, 1},   {"atan", Fn::Atan, 1},
        {"min", Fn::Min, 2},  {"max", Fn::Max, 2},   {"pow", Fn::Pow, 2},
        {"indicator", Fn::Indicator, 2},
    };
    return table;
}

enum class NodeKind { Number, Variable, Unary, Binary, Call };

struct Node {
    NodeKind kind;
    double number = 0.0;
    int var = -1;
    std::string ident; // original spelling, kept for unresolved names
    char op = 0;
    Fn fn = Fn::Abs;
    std::vector<std::shared_ptr<const Node>> args;
    std::size_t pos = 0;
};

using NodePtr = std::shared_ptr<const Node>;

inline bool equal(const NodePtr& a, const NodePtr& b) {
    if (a->kind != b->kind) return false;
    switch (a->kind) {
        case NodeKind::Number: return a->number == b->number;
        case NodeKind::Variable: return a->var == b->var;
        case NodeKind::Unary: break;
        case NodeKind::Binary:
            if (a->op != b->op) return false;
            break;
        case NodeKind::Call:
            if (a->fn != b->fn) return false;
            break;
    }
    if (a->args.size() != b->args.size()) return false;
    for (std::size_t i = 0; i < a->args.size(); ++i)
        if (!equal(a->args[i], b->args[i])) return false;
    return true;
}

inline int precedence(const NodePtr& n) {
    switch (n->kind) {
        case NodeKind::Binary:
            if (n->op == '+' || n->op == '-') return 1;
            if (n->op == '*' || n->op == '/') return 2;
            return 4; // '^'
        case NodeKind::Unary: return 3;
        default: return 5;
    }
}

inline void print(std::ostream& os, const NodePtr& n);

inline void print_wrapped(std::ostream& os, const NodePtr& n, bool wrap) {
    if (wrap) os << '(';
    print(os, n);
    if (wrap) os << ')';
}

inline void print(std::ostream& os, const NodePtr& n) {
    switch (n->kind) {
        case NodeKind::Number: {
            std::ostringstream tmp;
            tmp.precision(17);
            tmp << n->number;
            os << tmp.str();
            return;
        }
        case NodeKind::Variable: os << kVarNames[static_cast<std::size_t>(n->var)]; return;
        case NodeKind::Unary:
            os << '-';
            print_wrapped(os, n->args[0], precedence(n->args[0]) < 3);
            return;
        case NodeKind::Binary: {
            const int p = precedence(n);
            if (n->op == '^') {
                print_wrapped(os, n->args[0], precedence(n->args[0]) <= p);
                os << '^';
                print_wrapped(os, n->args[1], precedence(n->args[1]) < p);
            } else {
                print_wrapped(os, n->args[0], precedence(n->args[0]) < p);
                os << n->op;
                print_wrapped(os, n->args[1], precedence(n->args[1]) <= p);
            }
            return;
        }
        case NodeKind::Call: {
            for (const auto& info : fn_table())
                if (info.fn == n->fn) {
                    os << info.name;
                    break;
                }
            os << '(';
            for (std::size_t i = 0; i < n->args.size(); ++i) {
                if (i) os << ',';
                print(os, n->args[i]);
            }
            os << ')';
            return;
        }
    }
}

inline std::string to_string(const NodePtr& n) {
    std::ostringstream os;
    print(os, n);
    return os.str();
}

} // namespace exprdet

/// Variable assignments for expression evaluation; slots t, z, y, s.
class Bindings {
public:
    Bindings& set(char name, double v) {
        const int slot = exprdet::var_slot(std::string(1, name));
        if (slot < 0) throw ConfigError(std::string("unknown binding variable '") + name + "'");
        val_[static_cast<std::size_t>(slot)] = v;
        has_[static_cast<std::size_t>(slot)] = true;
        return *this;
    }
    bool has(int slot) const { return has_[static_cast<std::size_t>(slot)]; }
    double get(int slot) const { return val_[static_cast<std::size_t>(slot)]; }

private:
    std::array<double, 4> val_{};
    std::array<bool, 4> has_{};
};

/// Immutable scalar expression over variables from {t, z, y, s}.
class Expr {
public:
    Expr() = default;

    static Expr parse(const std::string& src, const std::string& allowed_vars);

    double eval(const Bindings& b) const;

    std::string to_string() const { return exprdet::to_string(root_); }
    bool structurally_equal(const Expr& other) const { return exprdet::equal(root_, other.root_); }
    bool empty() const { return root_ == nullptr; }
    const std::string& source() const { return src_; }

private:
    Expr(exprdet::NodePtr root, std::string src) : root_(std::move(root)), src_(std::move(src)) {}
    exprdet::NodePtr root_;
    std::string src_;
};

namespace exprdet {

struct Token {
    enum class Kind { Number, Ident, Op, LParen, RParen, Comma, End };
    Kind kind;
    std::string text;
    double number = 0.0;
    std::size_t pos = 0;
};

class Parser {
public:
    Parser(const std::string& src, const std::string& allowed) : src_(src), allowed_(allowed) {
        lex();
    }

    NodePtr run() {
        NodePtr root = parse_sum();
        if (cur().kind != Token::Kind::End)
            throw ExprError("unexpected token '" + cur().text + "'", cur().pos);
        validate(root);
        return root;
    }

private:
    void lex() {
        std::size_t i = 0;
        while (i < src_.size()) {
            const char c = src_[i];
            if (std::isspace(static_cast<unsigned char>(c))) {
                ++i;
                continue;
            }
            Token tok;
            tok.pos = i;
            if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
                std::size_t end = i;
                while (end < src_.size() &&
                       (std::isdigit(static_cast<unsigned char>(src_[end])) || src_[end] == '.'))
                    ++end;
                // exponent part
                if (end < src_.size() && (src_[end] == 'e' || src_[end] == 'E')) {
                    std::size_t e = end + 1;
                    if (e < src_.size() && (src_[e] == '+' || src_[e] == '-')) ++e;
                    if (e < src_.size() && std::isdigit(static_cast<unsigned char>(src_[e]))) {
                        while (e < src_.size() && std::isdigit(static_cast<unsigned char>(src_[e])))
                            ++e;
                        end = e;
                    }
                }
                tok.kind = Token::Kind::Number;
                tok.text = src_.substr(i, end - i);
                try {
                    tok.number = std::stod(tok.text);
                } catch (const std::exception&) {
                    throw ExprError("malformed number '" + tok.text + "'", i);
                }
                i = end;
            } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
                std::size_t end = i;
                while (end < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[end])) ||
                                             src_[end] == '_'))
                    ++end;
                tok.kind = Token::Kind::Ident;
                tok.text = src_.substr(i, end - i);
                i = end;
            } else if (c == '(') {
                tok.kind = Token::Kind::LParen;
                tok.text = "(";
                ++i;
            } else if (c == ')') {
                tok.kind = Token::Kind::RParen;
                tok.text = ")";
                ++i;
            } else if (c == ',') {
                tok.kind = Token::Kind::Comma;
                tok.text = ",";
                ++i;
            } else if (c == '+' || c == '-' || c == '*' || c == '/' || c == '^') {
                tok.kind = Token::Kind::Op;
                tok.text = std::string(1, c);
                ++i;
            } else {
                throw ExprError(std::string("unexpected character '") + c + "'", i);
            }
            tokens_.push_back(std::move(tok));
        }
        Token end;
        end.kind = Token::Kind::End;
        end.pos = src_.size();
        tokens_.push_back(end);
    }

    const Token& cur() const { return tokens_[pos_]; }
    const Token& prev() const { return tokens_[pos_ > 0 ? pos_ - 1 : 0]; }
    void advance() { ++pos_; }
    bool is_op(const char* text) const {
        return cur().kind == Token::Kind::Op && cur().text == text;
    }

    NodePtr parse_sum() {
        NodePtr lhs = parse_product();
        while (is_op("+") || is_op("-")) {
            const char op = cur().text[0];
            const std::size_t at = cur().pos;
            advance();
            NodePtr rhs = parse_product();
            lhs = make_binary(op, lhs, rhs, at);
        }
        return lhs;
    }

    NodePtr parse_product() {
        NodePtr lhs = parse_unary();
        while (is_op("*") || is_op("/")) {
            const char op = cur().text[0];
            const std::size_t at = cur().pos;
            advance();
            NodePtr rhs = parse_unary();
            lhs = make_binary(op, lhs, rhs, at);
        }
        return lhs;
    }

    NodePtr parse_unary() {
        if (is_op("-")) {
            const std::size_t at = cur().pos;
            advance();
            auto node = std::make_shared<Node>();
            node->kind = NodeKind::Unary;
            node->op = '-';
            node->pos = at;
            node->args.push_back(parse_unary());
            return node;
        }
        return parse_power();
    }

    NodePtr parse_power() {
        NodePtr base = parse_primary();
        if (is_op("^")) {
            const std::size_t at = cur().pos;
            advance();
            NodePtr exp = parse_unary(); // right-assoc, exponent may carry a sign
            return make_binary('^', base, exp, at);
        }
        return base;
    }

    NodePtr parse_primary() {
        const Token& tok = cur();
        switch (tok.kind) {
            case Token::Kind::Number: {
                auto node = std::make_shared<Node>();
                node->kind = NodeKind::Number;
                node->number = tok.number;
                node->pos = tok.pos;
                advance();
                return node;
            }
            case Token::Kind::Ident: {
                const std::string name = tok.text;
                const std::size_t at = tok.pos;
                advance();
                if (cur().kind == Token::Kind::LParen) return parse_call(name, at);
                // Unknown names parse as variables; the validation pass
                // reports them, so structural errors win.
                auto node = std::make_shared<Node>();
                node->kind = NodeKind::Variable;
                node->var = var_slot(name);
                node->ident = name;
                node->pos = at;
                return node;
            }
            case Token::Kind::LParen: {
                advance();
                NodePtr inner = parse_sum();
                if (cur().kind != Token::Kind::RParen)
                    throw ExprError("expected ')'", cur().pos);
                advance();
                return inner;
            }
            case Token::Kind::End:
                throw ExprError("expected operand after '" + prev().text + "'", prev().pos);
            default:
                throw ExprError("unexpected token '" + tok.text + "'", tok.pos);
        }
    }

    NodePtr parse_call(const std::string& name, std::size_t at) {
        const FnInfo* info = nullptr;
        for (const auto& f : fn_table())
            if (name == f.name) {
                info = &f;
                break;
            }
        if (!info) throw ExprError("unknown function '" + name + "'", at);
        advance(); // consume '('
        std::vector<NodePtr> args;
        if (cur().kind != Token::Kind::RParen) {
            args.push_back(parse_sum());
            while (cur().kind == Token::Kind::Comma) {
                advance();
                args.push_back(parse_sum());
            }
        }
        if (cur().kind != Token::Kind::RParen) throw ExprError("expected ')'", cur().pos);
        advance();
        if (static_cast<int>(args.size()) != info->arity)
            throw ExprError("function '" + name + "' expects " + std::to_string(info->arity) +
                                " argument(s), got " + std::to_string(args.size()),
                            at);
        auto node = std::make_shared<Node>();
        node->kind = NodeKind::Call;
        node->fn = info->fn;
        node->args = std::move(args);
        node->pos = at;
        return node;
    }

    static NodePtr make_binary(char op, NodePtr lhs, NodePtr rhs, std::size_t at) {
        auto node = std::make_shared<Node>();
        node->kind = NodeKind::Binary;
        node->op = op;
        node->args = {std::move(lhs), std::move(rhs)};
        node->pos = at;
        return node;
    }

    void validate(const NodePtr& n) const {
        if (n->kind == NodeKind::Variable) {
            if (n->var < 0)
                throw ExprError("unknown identifier '" + n->ident + "'", n->pos);
            const char name = kVarNames[static_cast<std::size_t>(n->var)];
            if (allowed_.find(name) == std::string::npos)
                throw ExprError(std::string("variable '") + name + "' not allowed here", n->pos);
        }
        if (n->kind == NodeKind::Call && n->fn == Fn::Indicator &&
            allowed_.find('t') == std::string::npos)
            throw ExprError("indicator requires the variable t", n->pos);
        for (const auto& arg : n->args) validate(arg);
    }

    const std::string& src_;
    std::string allowed_;
    std::vector<Token> tokens_;
    std::size_t pos_ = 0;
};

inline double eval_node(const NodePtr& n, const Bindings& b) {
    auto fail = [&](const char* what) -> double {
        throw DomainError(std::string(what) + " in subexpression '" + to_string(n) + "'");
    };
    switch (n->kind) {
        case NodeKind::Number: return n->number;
        case NodeKind::Variable:
            if (!b.has(n->var))
                throw DomainError(std::string("unbound variable '") +
                                  kVarNames[static_cast<std::size_t>(n->var)] + "'");
            return b.get(n->var);
        case NodeKind::Unary: return -eval_node(n->args[0], b);
        case NodeKind::Binary: {
            const double l = eval_node(n->args[0], b);
            const double r = eval_node(n->args[1], b);
            double v = 0.0;
            switch (n->op) {
                case '+': v = l + r; break;
                case '-': v = l - r; break;
                case '*': v = l * r; break;
                case '/':
                    if (r == 0.0) return fail("division by zero");
                    v = l / r;
                    break;
                case '^':
                    if (l < 0.0 && r != std::floor(r)) return fail("negative base with non-integer exponent");
                    if (l == 0.0 && r < 0.0) return fail("zero base with negative exponent");
                    v = std::pow(l, r);
                    break;
            }
            if (!std::isfinite(v)) return fail("non-finite result");
            return v;
        }
        case NodeKind::Call: {
            switch (n->fn) {
                case Fn::Abs: return std::abs(eval_node(n->args[0], b));
                case Fn::Sqrt: {
                    const double v = eval_node(n->args[0], b);
                    if (v < 0.0) return fail("sqrt of a negative value");
                    return std::sqrt(v);
                }
                case Fn::Cbrt: return std::cbrt(eval_node(n->args[0], b));
                case Fn::Sin: return std::sin(eval_node(n->args[0], b));
                case Fn::Cos: return std::cos(eval_node(n->args[0], b));
                case Fn::Sinh: {
                    const double v = std::sinh(eval_node(n->args[0], b));
                    if (!std::isfinite(v)) return fail("non-finite result");
                    return v;
                }
                case Fn::Log: {
                    const double v = eval_node(n->args[0], b);
                    if (v <= 0.0) return fail("log of a non-positive value");
                    return std::log(v);
                }
                case Fn::Exp: {
                    const double v = std::exp(eval_node(n->args[0], b));
                    if (!std::isfinite(v)) return fail("non-finite result");
                    return v;
                }
                case Fn::Atan: return std::atan(eval_node(n->args[0], b));
                case Fn::Min:
                    return std::min(eval_node(n->args[0], b), eval_node(n->args[1], b));
                case Fn::Max:
                    return std::max(eval_node(n->args[0], b), eval_node(n->args[1], b));
                case Fn::Pow: {
                    const double l = eval_node(n->args[0], b);
                    const double r = eval_node(n->args[1], b);
                    if (l < 0.0 && r != std::floor(r)) return fail("negative base with non-integer exponent");
                    if (l == 0.0 && r < 0.0) return fail("zero base with negative exponent");
                    const double v = std::pow(l, r);
                    if (!std::isfinite(v)) return fail("non-finite result");
                    return v;
                }
                case Fn::Indicator: {
                    // indicator(lo, hi) is the characteristic function of
                    // [lo, hi] in the variable t, closed on both ends.
                    if (!b.has(0)) throw DomainError("indicator requires a bound variable t");
                    const double t = b.get(0);
                    const double lo = eval_node(n->args[0], b);
                    const double hi = eval_node(n->args[1], b);
                    return (lo <= t && t <= hi) ? 1.0 : 0.0;
                }
            }
            return fail("unknown function");
        }
    }
    return fail("unknown node");
}

} // namespace exprdet

inline Expr Expr::parse(const std::string& src, const std::string& allowed_vars) {
    if (src.empty()) throw ExprError("empty expression", 0);
    exprdet::Parser parser(src, allowed_vars);
    return Expr(parser.run(), src);
}

inline double Expr::eval(const Bindings& b) const {
    if (!root_) throw ConfigError("evaluating an empty expression");
    return exprdet::eval_node(root_, b);
}

} // namespace phibvp
