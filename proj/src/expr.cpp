#include "bdsde/expr.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>

#include "bdsde/error.hpp"

namespace bdsde {

namespace {

const std::map<std::string, int> builtin_arity = {
    {"abs", 1}, {"min", 2}, {"max", 2}, {"exp", 1}, {"ln", 1}, {"sqrt", 1},
    {"tanh", 1}, {"sin", 1}, {"cos", 1}, {"pos", 1}, {"neg", 1},
};

int lookup_variable(const std::string& id) {
    if (id == "t") return slot::t;
    if (id == "y") return slot::y;
    if (id == "btail") return slot::btail;
    if (id == "db") return slot::db;
    if (id.size() == 2 && (id[0] == 'z' || id[0] == 'w') && id[1] >= '1' && id[1] <= '9')
        return (id[0] == 'z' ? slot::z1 : slot::w1) + (id[1] - '1');
    return -1;
}

class Parser {
public:
    Parser(const std::string& src, int line, int column) : s_(src), line0_(line), col0_(column) {}

    std::unique_ptr<ExprNode> parse() {
        auto e = expr();
        skip();
        if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
        return e;
    }

private:
    [[noreturn]] void fail(const std::string& msg, std::size_t at) const {
        int line = line0_, col = col0_;
        for (std::size_t k = 0; k < at && k < s_.size(); ++k) {
            if (s_[k] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw ParseError(msg, line, col);
    }
    [[noreturn]] void fail(const std::string& msg) const { fail(msg, pos_); }

    void skip() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }
    bool accept(char c) {
        skip();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    static std::unique_ptr<ExprNode> binary(ExprNode::Kind k, std::unique_ptr<ExprNode> a, std::unique_ptr<ExprNode> b) {
        auto n = std::make_unique<ExprNode>();
        n->kind = k;
        n->args.push_back(std::move(a));
        n->args.push_back(std::move(b));
        return n;
    }

    std::unique_ptr<ExprNode> expr() {
        auto lhs = term();
        while (true) {
            if (accept('+')) lhs = binary(ExprNode::Kind::add, std::move(lhs), term());
            else if (accept('-')) lhs = binary(ExprNode::Kind::sub, std::move(lhs), term());
            else return lhs;
        }
    }

    std::unique_ptr<ExprNode> term() {
        auto lhs = unary();
        while (true) {
            if (accept('*')) lhs = binary(ExprNode::Kind::mul, std::move(lhs), unary());
            else if (accept('/')) lhs = binary(ExprNode::Kind::div, std::move(lhs), unary());
            else return lhs;
        }
    }

    std::unique_ptr<ExprNode> unary() {
        if (accept('-')) {
            auto n = std::make_unique<ExprNode>();
            n->kind = ExprNode::Kind::negate;
            n->args.push_back(unary());
            return n;
        }
        if (accept('+')) return unary();
        return power();
    }

    std::unique_ptr<ExprNode> power() {
        auto base = primary();
        if (accept('^')) return binary(ExprNode::Kind::pow, std::move(base), unary());
        return base;
    }

    std::unique_ptr<ExprNode> primary() {
        skip();
        if (pos_ >= s_.size()) fail("unexpected end of expression");
        const char c = s_[pos_];
        if (c == '(') {
            ++pos_;
            auto e = expr();
            if (!accept(')')) fail("expected ')'");
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
        fail("unexpected '" + std::string(1, c) + "'");
    }

    std::unique_ptr<ExprNode> number() {
        const std::size_t start = pos_;
        while (pos_ < s_.size() && (std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.')) ++pos_;
        if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
            std::size_t p = pos_ + 1;
            if (p < s_.size() && (s_[p] == '+' || s_[p] == '-')) ++p;
            if (p < s_.size() && std::isdigit(static_cast<unsigned char>(s_[p]))) {
                pos_ = p;
                while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
            }
        }
        double v = 0.0;
        const auto res = std::from_chars(s_.data() + start, s_.data() + pos_, v);
        if (res.ec != std::errc() || res.ptr != s_.data() + pos_) fail("malformed number", start);
        auto n = std::make_unique<ExprNode>();
        n->kind = ExprNode::Kind::constant;
        n->value = v;
        return n;
    }

    std::unique_ptr<ExprNode> identifier() {
        const std::size_t start = pos_;
        while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
        const std::string id = s_.substr(start, pos_ - start);
        skip();
        if (pos_ < s_.size() && s_[pos_] == '(') {
            auto it = builtin_arity.find(id);
            if (it == builtin_arity.end()) fail("unknown function '" + id + "'", start);
            ++pos_;
            auto n = std::make_unique<ExprNode>();
            n->kind = ExprNode::Kind::call;
            n->fn = id;
            if (!accept(')')) {
                do {
                    n->args.push_back(expr());
                } while (accept(','));
                if (!accept(')')) fail("expected ')' after arguments");
            }
            if (static_cast<int>(n->args.size()) != it->second)
                fail(id + " takes " + std::to_string(it->second) + " argument(s), got " + std::to_string(n->args.size()),
                     start);
            return n;
        }
        const int v = lookup_variable(id);
        if (v < 0) fail("unknown identifier '" + id + "'", start);
        auto n = std::make_unique<ExprNode>();
        n->kind = ExprNode::Kind::variable;
        n->var = v;
        return n;
    }

    const std::string& s_;
    int line0_, col0_;
    std::size_t pos_ = 0;
};

std::uint32_t collect_vars(const ExprNode& n) {
    std::uint32_t m = n.kind == ExprNode::Kind::variable ? (1U << n.var) : 0U;
    for (const auto& a : n.args) m |= collect_vars(*a);
    return m;
}

double checked(double v, const char* what) {
    if (!std::isfinite(v)) throw NumericalFailure(std::string("non-finite result in ") + what);
    return v;
}

double eval(const ExprNode& n, const EvalContext& c) {
    using K = ExprNode::Kind;
    switch (n.kind) {
        case K::constant: return n.value;
        case K::variable:
            if (!(c.bound & (1U << n.var))) throw InvalidArgument("unbound variable '" + slot_name(n.var) + "'");
            return c.v[n.var];
        case K::negate: return -eval(*n.args[0], c);
        case K::add: return checked(eval(*n.args[0], c) + eval(*n.args[1], c), "+");
        case K::sub: return checked(eval(*n.args[0], c) - eval(*n.args[1], c), "-");
        case K::mul: return checked(eval(*n.args[0], c) * eval(*n.args[1], c), "*");
        case K::div: {
            const double a = eval(*n.args[0], c), b = eval(*n.args[1], c);
            if (b == 0.0) throw NumericalFailure("division by zero");
            return checked(a / b, "/");
        }
        case K::pow: {
            const double a = eval(*n.args[0], c), b = eval(*n.args[1], c);
            if (b == 2.0) return checked(a * a, "^");
            return checked(std::pow(a, b), "^");
        }
        case K::call: {
            const double a = eval(*n.args[0], c);
            const std::string& f = n.fn;
            if (f == "abs") return std::abs(a);
            if (f == "min") return std::min(a, eval(*n.args[1], c));
            if (f == "max") return std::max(a, eval(*n.args[1], c));
            if (f == "exp") return checked(std::exp(a), "exp");
            if (f == "ln") {
                if (!(a > 0.0)) throw NumericalFailure("ln of a non-positive value");
                return std::log(a);
            }
            if (f == "sqrt") {
                if (a < 0.0) throw NumericalFailure("sqrt of a negative value");
                return std::sqrt(a);
            }
            if (f == "tanh") return std::tanh(a);
            if (f == "sin") return std::sin(a);
            if (f == "cos") return std::cos(a);
            if (f == "pos") return a > 0.0 ? a : 0.0;
            if (f == "neg") return a < 0.0 ? -a : 0.0;
            throw InvalidArgument("unknown function '" + f + "'");
        }
    }
    return 0.0;
}

std::string fmt_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string print(const ExprNode& n) {
    using K = ExprNode::Kind;
    switch (n.kind) {
        case K::constant: return fmt_number(n.value);
        case K::variable: return slot_name(n.var);
        case K::negate: return "(-" + print(*n.args[0]) + ")";
        case K::add: return "(" + print(*n.args[0]) + " + " + print(*n.args[1]) + ")";
        case K::sub: return "(" + print(*n.args[0]) + " - " + print(*n.args[1]) + ")";
        case K::mul: return "(" + print(*n.args[0]) + " * " + print(*n.args[1]) + ")";
        case K::div: return "(" + print(*n.args[0]) + " / " + print(*n.args[1]) + ")";
        case K::pow: return "(" + print(*n.args[0]) + " ^ " + print(*n.args[1]) + ")";
        case K::call: {
            std::string s = n.fn + "(";
            for (std::size_t k = 0; k < n.args.size(); ++k) s += (k ? ", " : "") + print(*n.args[k]);
            return s + ")";
        }
    }
    return {};
}

}  // namespace

std::string slot_name(int s) {
    switch (s) {
        case slot::t: return "t";
        case slot::y: return "y";
        case slot::btail: return "btail";
        case slot::db: return "db";
        default: break;
    }
    if (s >= slot::z1 && s < slot::z1 + 9) return "z" + std::to_string(s - slot::z1 + 1);
    if (s >= slot::w1 && s < slot::w1 + 9) return "w" + std::to_string(s - slot::w1 + 1);
    return "?";
}

bool ExprNode::operator==(const ExprNode& o) const {
    if (kind != o.kind || args.size() != o.args.size()) return false;
    if (kind == Kind::constant && value != o.value) return false;
    if (kind == Kind::variable && var != o.var) return false;
    if (kind == Kind::call && fn != o.fn) return false;
    for (std::size_t k = 0; k < args.size(); ++k)
        if (!(*args[k] == *o.args[k])) return false;
    return true;
}

Expr::Expr(std::shared_ptr<const ExprNode> root) : root_(std::move(root)), vars_(collect_vars(*root_)) {}

bool Expr::operator==(const Expr& o) const {
    if (empty() || o.empty()) return empty() == o.empty();
    return *root_ == *o.root_;
}

Expr parse_expr(const std::string& src, int line, int column) {
    Parser p(src, line, column);
    return Expr(std::shared_ptr<const ExprNode>(p.parse()));
}

double eval_expr(const Expr& e, const EvalContext& ctx) {
    if (e.empty()) throw InvalidArgument("empty expression");
    return eval(e.root(), ctx);
}

std::string to_string(const Expr& e) { return e.empty() ? std::string() : print(e.root()); }

std::vector<std::string> variable_names(const Expr& e) {
    std::vector<std::string> out;
    for (int s = 0; s < slot::count; ++s)
        if (e.variables() & (1U << s)) out.push_back(slot_name(s));
    return out;
}

}  // namespace bdsde
