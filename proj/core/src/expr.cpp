#include "incstab/expr.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <utility>

namespace incstab {

namespace {

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }
bool is_ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_';
}

bool is_integer_valued(double v) {
    return std::isfinite(v) && v == std::nearbyint(v) && std::abs(v) < 1e15;
}

// Overload shims so the templated evaluator picks the right math for both
// scalar types (unqualified calls would convert double to Dual otherwise).
double m_sin(double x) { return std::sin(x); }
double m_cos(double x) { return std::cos(x); }
double m_exp(double x) { return std::exp(x); }
double m_log(double x) { return std::log(x); }
double m_sqrt(double x) { return std::sqrt(x); }
double m_tanh(double x) { return std::tanh(x); }
Dual m_sin(const Dual& x) { return sin(x); }
Dual m_cos(const Dual& x) { return cos(x); }
Dual m_exp(const Dual& x) { return exp(x); }
Dual m_log(const Dual& x) { return log(x); }
Dual m_sqrt(const Dual& x) { return sqrt(x); }
Dual m_tanh(const Dual& x) { return tanh(x); }

}  // namespace

// ---------------------------------------------------------------------------
// Parser: recursive descent, tracking byte offsets for diagnostics.
// ---------------------------------------------------------------------------

class Parser {
public:
    explicit Parser(std::string_view src) : src_(src) {}

    Expr run() {
        if (src_.empty()) throw ParseError("empty expression", 0);
        Expr e;
        e.root_ = parse_sum(e);
        skip_ws();
        if (pos_ != src_.size()) throw ParseError("unexpected trailing input", pos_);
        return e;
    }

private:
    std::string_view src_;
    std::size_t pos_ = 0;
    int depth_ = 0;

    static constexpr int kMaxDepth = 256;

    void skip_ws() {
        while (pos_ < src_.size() &&
               std::isspace(static_cast<unsigned char>(src_[pos_])) != 0)
            ++pos_;
    }

    [[nodiscard]] char peek() {
        skip_ws();
        return pos_ < src_.size() ? src_[pos_] : '\0';
    }

    struct DepthGuard {
        Parser& p;
        explicit DepthGuard(Parser& parser) : p(parser) {
            if (++p.depth_ > kMaxDepth) throw ParseError("expression too deeply nested", p.pos_);
        }
        ~DepthGuard() { --p.depth_; }
    };

    int parse_sum(Expr& e) {
        DepthGuard guard(*this);
        int lhs = parse_product(e);
        while (true) {
            const char c = peek();
            if (c != '+' && c != '-') return lhs;
            ++pos_;
            int rhs = parse_product(e);
            lhs = add_binary(e, c, lhs, rhs);
        }
    }

    int parse_product(Expr& e) {
        DepthGuard guard(*this);
        int lhs = parse_unary(e);
        while (true) {
            const char c = peek();
            if (c != '*' && c != '/') return lhs;
            ++pos_;
            int rhs = parse_unary(e);
            lhs = add_binary(e, c, lhs, rhs);
        }
    }

    int parse_unary(Expr& e) {
        DepthGuard guard(*this);
        if (peek() == '-') {
            ++pos_;
            int child = parse_unary(e);
            Expr::Node n;
            n.kind = Expr::Kind::negate;
            n.a = child;
            return add_node(e, std::move(n));
        }
        return parse_power(e);
    }

    int parse_power(Expr& e) {
        DepthGuard guard(*this);
        int base = parse_atom(e);
        if (peek() != '^') return base;
        ++pos_;
        // Right-associative, and the exponent may carry a unary minus.
        int exponent = parse_unary(e);
        return add_binary(e, '^', base, exponent);
    }

    int parse_atom(Expr& e) {
        const char c = peek();
        const std::size_t start = pos_;
        if (c == '\0') throw ParseError("unexpected end of input", pos_);
        if (c == '(') {
            ++pos_;
            int inner = parse_sum(e);
            if (peek() != ')') throw ParseError("expected ')'", pos_);
            ++pos_;
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) != 0 || c == '.') return parse_number(e);
        if (is_ident_start(c)) return parse_ident(e);
        throw ParseError(std::string("unexpected character '") + c + "'", start);
    }

    int parse_number(Expr& e) {
        const std::size_t start = pos_;
        double value = 0.0;
        const char* begin = src_.data() + pos_;
        const char* end = src_.data() + src_.size();
        auto [ptr, ec] = std::from_chars(begin, end, value, std::chars_format::general);
        if (ec != std::errc() || ptr == begin) throw ParseError("invalid number", start);
        pos_ += static_cast<std::size_t>(ptr - begin);
        Expr::Node n;
        n.kind = Expr::Kind::constant;
        n.number = value;
        return add_node(e, std::move(n));
    }

    int parse_ident(Expr& e) {
        const std::size_t start = pos_;
        while (pos_ < src_.size() && is_ident_char(src_[pos_])) ++pos_;
        std::string name(src_.substr(start, pos_ - start));
        if (peek() == '(') {
            ++pos_;
            int arg = parse_sum(e);
            if (peek() != ')') throw ParseError("expected ')'", pos_);
            ++pos_;
            Expr::Node n;
            n.kind = Expr::Kind::call;
            n.a = arg;
            if (name == "sin") n.fn = Expr::Fn::sin;
            else if (name == "cos") n.fn = Expr::Fn::cos;
            else if (name == "exp") n.fn = Expr::Fn::exp;
            else if (name == "log") n.fn = Expr::Fn::log;
            else if (name == "sqrt") n.fn = Expr::Fn::sqrt;
            else if (name == "tanh") n.fn = Expr::Fn::tanh;
            else throw ParseError("unknown function '" + name + "'", start);
            return add_node(e, std::move(n));
        }
        Expr::Node n;
        n.kind = Expr::Kind::variable;
        n.name = std::move(name);
        return add_node(e, std::move(n));
    }

    static int add_node(Expr& e, Expr::Node&& n) {
        e.nodes_.push_back(std::move(n));
        return static_cast<int>(e.nodes_.size()) - 1;
    }

    static int add_binary(Expr& e, char op, int a, int b) {
        Expr::Node n;
        n.kind = Expr::Kind::binary;
        n.op = op;
        n.a = a;
        n.b = b;
        return add_node(e, std::move(n));
    }
};

Expr Expr::parse(std::string_view source) { return Parser(source).run(); }

// ---------------------------------------------------------------------------
// Binding and evaluation
// ---------------------------------------------------------------------------

void Expr::bind(std::span<const std::string> variables) {
    for (Node& n : nodes_) {
        if (n.kind != Kind::variable) continue;
        n.slot = -1;
        for (std::size_t i = 0; i < variables.size(); ++i) {
            if (variables[i] == n.name) {
                n.slot = static_cast<int>(i);
                break;
            }
        }
        if (n.slot < 0) throw ConfigError("unknown variable '" + n.name + "' in '" + str() + "'");
    }
    bound_ = true;
}

template <class T, class Lookup>
T Expr::eval_node(int idx, Lookup&& lookup) const {
    const Node& n = nodes_[static_cast<std::size_t>(idx)];
    switch (n.kind) {
        case Kind::constant:
            return T(n.number);
        case Kind::variable:
            return lookup(n);
        case Kind::negate:
            return -eval_node<T>(n.a, lookup);
        case Kind::call: {
            const T arg = eval_node<T>(n.a, lookup);
            double v;
            if constexpr (std::is_same_v<T, Dual>) v = arg.value;
            else v = arg;
            switch (n.fn) {
                case Fn::sin: return m_sin(arg);
                case Fn::cos: return m_cos(arg);
                case Fn::exp: return m_exp(arg);
                case Fn::log:
                    if (v <= 0.0) throw EvalError("log of non-positive argument", subexpr_str(idx));
                    return m_log(arg);
                case Fn::sqrt:
                    if (v < 0.0) throw EvalError("sqrt of negative argument", subexpr_str(idx));
                    return m_sqrt(arg);
                case Fn::tanh: return m_tanh(arg);
            }
            break;
        }
        case Kind::binary: {
            const T lhs = eval_node<T>(n.a, lookup);
            const T rhs = eval_node<T>(n.b, lookup);
            double rv, lv;
            if constexpr (std::is_same_v<T, Dual>) {
                lv = lhs.value;
                rv = rhs.value;
            } else {
                lv = lhs;
                rv = rhs;
            }
            switch (n.op) {
                case '+': return lhs + rhs;
                case '-': return lhs - rhs;
                case '*': return lhs * rhs;
                case '/':
                    if (rv == 0.0) throw EvalError("division by zero", subexpr_str(idx));
                    return lhs / rhs;
                case '^': {
                    if (lv < 0.0 && !is_integer_valued(rv))
                        throw EvalError("negative base with non-integer exponent", subexpr_str(idx));
                    if (lv == 0.0 && rv < 0.0)
                        throw EvalError("division by zero", subexpr_str(idx));
                    if constexpr (std::is_same_v<T, Dual>) {
                        if (rhs.deriv == 0.0) return pow(lhs, rv);
                        if (lv <= 0.0)
                            throw EvalError("non-constant exponent needs a positive base",
                                            subexpr_str(idx));
                        return m_exp(rhs * m_log(lhs));
                    } else {
                        return std::pow(lv, rv);
                    }
                }
            }
            break;
        }
    }
    throw EvalError("malformed expression node", str());
}

double Expr::eval(std::span<const double> values) const {
    return eval_node<double>(root_, [&](const Node& n) {
        if (n.slot < 0) throw ConfigError("expression evaluated before bind()");
        return values[static_cast<std::size_t>(n.slot)];
    });
}

Dual Expr::eval(std::span<const Dual> values) const {
    return eval_node<Dual>(root_, [&](const Node& n) {
        if (n.slot < 0) throw ConfigError("expression evaluated before bind()");
        return values[static_cast<std::size_t>(n.slot)];
    });
}

double Expr::eval(const std::map<std::string, double>& env) const {
    return eval_node<double>(root_, [&](const Node& n) {
        auto it = env.find(n.name);
        if (it == env.end()) throw ConfigError("unbound variable '" + n.name + "'");
        return it->second;
    });
}

Dual Expr::eval(const std::map<std::string, Dual>& env) const {
    return eval_node<Dual>(root_, [&](const Node& n) {
        auto it = env.find(n.name);
        if (it == env.end()) throw ConfigError("unbound variable '" + n.name + "'");
        return it->second;
    });
}

std::vector<std::string> Expr::variables() const {
    std::vector<std::string> out;
    for (const Node& n : nodes_) {
        if (n.kind != Kind::variable) continue;
        bool seen = false;
        for (const std::string& s : out) seen = seen || s == n.name;
        if (!seen) out.push_back(n.name);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Printing. Precedence levels: + - (1), * / (2), unary - (3), ^ (4),
// atoms (5). Parenthesization is chosen so that reparsing the printed form
// rebuilds the identical tree.
// ---------------------------------------------------------------------------

namespace {

int node_precedence(char op) {
    switch (op) {
        case '+':
        case '-': return 1;
        case '*':
        case '/': return 2;
        case '^': return 4;
        default: return 5;
    }
}

const char* fn_name(int fn) {
    static const char* names[] = {"sin", "cos", "exp", "log", "sqrt", "tanh"};
    return names[fn];
}

}  // namespace

void Expr::print_node(int idx, int parent_prec, bool right_side, std::string& out) const {
    const Node& n = nodes_[static_cast<std::size_t>(idx)];
    int prec = 5;
    switch (n.kind) {
        case Kind::constant: {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.17g", n.number);
            out += buf;
            return;
        }
        case Kind::variable:
            out += n.name;
            return;
        case Kind::call:
            out += fn_name(static_cast<int>(n.fn));
            out += '(';
            print_node(n.a, 0, false, out);
            out += ')';
            return;
        case Kind::negate: {
            prec = 3;
            const bool parens = prec < parent_prec || (right_side && prec == parent_prec);
            if (parens) out += '(';
            out += '-';
            print_node(n.a, prec, false, out);
            if (parens) out += ')';
            return;
        }
        case Kind::binary: {
            prec = node_precedence(n.op);
            const bool parens = prec < parent_prec || (right_side && prec == parent_prec);
            if (parens) out += '(';
            if (n.op == '^') {
                // Right-associative: parenthesize a left child of equal or
                // lower precedence, keep chains on the right bare.
                print_node(n.a, prec + 1, false, out);
                out += '^';
                print_node(n.b, prec, false, out);
            } else {
                print_node(n.a, prec, false, out);
                out += ' ';
                out += n.op;
                out += ' ';
                print_node(n.b, prec + ((n.op == '-' || n.op == '/') ? 1 : 0),
                           n.op == '+' || n.op == '*', out);
            }
            if (parens) out += ')';
            return;
        }
    }
}

std::string Expr::str() const {
    std::string out;
    if (root_ >= 0) print_node(root_, 0, false, out);
    return out;
}

// Printed form of a single subtree, used in evaluation diagnostics.
std::string Expr::subexpr_str(int idx) const {
    std::string out;
    print_node(idx, 0, false, out);
    return out;
}

// ---------------------------------------------------------------------------
// Jacobians
// ---------------------------------------------------------------------------

Matrix jacobian(std::span<const Expr> field, const std::map<std::string, double>& env,
                std::span<const std::string> wrt) {
    Matrix out(static_cast<int>(field.size()), static_cast<int>(wrt.size()));
    std::map<std::string, Dual> denv;
    for (const auto& [k, v] : env) denv.emplace(k, Dual(v));
    for (std::size_t j = 0; j < wrt.size(); ++j) {
        auto it = denv.find(wrt[j]);
        if (it == denv.end()) throw ConfigError("jacobian variable '" + wrt[j] + "' not in env");
        it->second.deriv = 1.0;
        for (std::size_t i = 0; i < field.size(); ++i)
            out(static_cast<int>(i), static_cast<int>(j)) = field[i].eval(denv).deriv;
        it->second.deriv = 0.0;
    }
    return out;
}

Matrix fd_jacobian(std::span<const Expr> field, const std::map<std::string, double>& env,
                   std::span<const std::string> wrt, double h) {
    if (!(h > 0.0)) throw ConfigError("fd_jacobian requires h > 0");
    Matrix out(static_cast<int>(field.size()), static_cast<int>(wrt.size()));
    std::map<std::string, double> shifted = env;
    for (std::size_t j = 0; j < wrt.size(); ++j) {
        auto it = shifted.find(wrt[j]);
        if (it == shifted.end()) throw ConfigError("fd_jacobian variable '" + wrt[j] + "' not in env");
        const double x0 = it->second;
        it->second = x0 + h;
        std::vector<double> hi(field.size());
        for (std::size_t i = 0; i < field.size(); ++i) hi[i] = field[i].eval(shifted);
        it->second = x0 - h;
        for (std::size_t i = 0; i < field.size(); ++i)
            out(static_cast<int>(i), static_cast<int>(j)) = (hi[i] - field[i].eval(shifted)) / (2.0 * h);
        it->second = x0;
    }
    return out;
}

}  // namespace incstab
