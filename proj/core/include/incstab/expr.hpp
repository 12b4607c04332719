#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "incstab/dual.hpp"
#include "incstab/errors.hpp"
#include "incstab/matrix.hpp"

namespace incstab {

/// Parsed scalar expression over named variables.
///
/// Grammar: numbers, identifiers, unary minus, binary + - * / ^ and the
/// function set {sin, cos, exp, log, sqrt, tanh}. '^' binds tightest and is
/// right-associative, then unary minus, then * /, then + -. The function set
/// is deliberately smooth-only: any nonsmoothness in a model must live in the
/// switching surface, never inside a mode, so every mode Jacobian stays
/// well-defined.
class Expr {
public:
    Expr() = default;

    /// Parse `source`; throws ParseError with a byte offset on bad syntax.
    static Expr parse(std::string_view source);

    /// Resolve every variable leaf against an ordered variable list so the
    /// slot-based evaluators can run. Throws ConfigError on an unknown name.
    void bind(std::span<const std::string> variables);
    [[nodiscard]] bool bound() const { return bound_; }

    /// Evaluate with values aligned to the bound variable order.
    [[nodiscard]] double eval(std::span<const double> values) const;
    /// Dual-number pass; seeds in the inputs select the derivative direction.
    [[nodiscard]] Dual eval(std::span<const Dual> values) const;
    /// Convenience evaluation from a name->value map ("t" is an ordinary
    /// name here). Does not require bind().
    [[nodiscard]] double eval(const std::map<std::string, double>& env) const;
    [[nodiscard]] Dual eval(const std::map<std::string, Dual>& env) const;

    /// Canonical printed form; reparsing it reproduces the same tree.
    [[nodiscard]] std::string str() const;

    /// Distinct variable names, in first-appearance order.
    [[nodiscard]] std::vector<std::string> variables() const;

    [[nodiscard]] bool empty() const { return nodes_.empty(); }

private:
    enum class Kind { constant, variable, negate, binary, call };
    enum class Fn { sin, cos, exp, log, sqrt, tanh };

    struct Node {
        Kind kind;
        double number = 0.0;   // constant
        std::string name;      // variable
        int slot = -1;         // variable, filled by bind()
        char op = 0;           // binary
        Fn fn = Fn::sin;       // call
        int a = -1;            // first child
        int b = -1;            // second child
    };

    std::vector<Node> nodes_;
    int root_ = -1;
    bool bound_ = false;

    template <class T, class Lookup>
    T eval_node(int idx, Lookup&& lookup) const;

    void print_node(int idx, int parent_prec, bool right_side, std::string& out) const;
    [[nodiscard]] std::string subexpr_str(int idx) const;

    friend class Parser;
};

/// Jacobian of a vector field by one dual pass per column: entry (i, j) is
/// the partial of field[i] with respect to wrt[j], exact to rounding for the
/// supported function set. `env` must bind every variable (including "t").
Matrix jacobian(std::span<const Expr> field, const std::map<std::string, double>& env,
                std::span<const std::string> wrt);

/// Central-difference Jacobian, (f(x+h)-f(x-h))/2h per column. Test oracle
/// for `jacobian`; h must be positive.
Matrix fd_jacobian(std::span<const Expr> field, const std::map<std::string, double>& env,
                   std::span<const std::string> wrt, double h);

}  // namespace incstab
