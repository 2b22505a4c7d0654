#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace bdsde {

/// Variable slots of the expression language.
namespace slot {
inline constexpr int t = 0;
inline constexpr int y = 1;
inline constexpr int btail = 2;
inline constexpr int db = 3;
inline constexpr int z1 = 4;   // z1..z9 -> 4..12
inline constexpr int w1 = 13;  // w1..w9 -> 13..21
inline constexpr int count = 22;
}  // namespace slot

std::string slot_name(int s);

struct ExprNode {
    enum class Kind { constant, variable, negate, add, sub, mul, div, pow, call };
    Kind kind = Kind::constant;
    double value = 0.0;  // constant
    int var = -1;        // variable slot
    std::string fn;      // call
    std::vector<std::unique_ptr<ExprNode>> args;

    bool operator==(const ExprNode& o) const;
};

/// A parsed expression. Copies share the immutable tree.
class Expr {
public:
    Expr() = default;
    explicit Expr(std::shared_ptr<const ExprNode> root);

    const ExprNode& root() const { return *root_; }
    bool empty() const { return !root_; }
    /// Bitmask of variable slots referenced anywhere in the tree.
    std::uint32_t variables() const { return vars_; }
    bool operator==(const Expr& o) const;

private:
    std::shared_ptr<const ExprNode> root_;
    std::uint32_t vars_ = 0;
};

/// Bindings for evaluation. Reading an unbound slot raises InvalidArgument.
struct EvalContext {
    std::array<double, slot::count> v{};
    std::uint32_t bound = 0;

    EvalContext& set(int s, double x) {
        v[s] = x;
        bound |= 1U << s;
        return *this;
    }
};

/// Precedence: ^ (right-assoc) > unary - > * / > + -. Errors carry the
/// position; `line` and `column` locate the first character of `src`.
Expr parse_expr(const std::string& src, int line = 1, int column = 1);
double eval_expr(const Expr& e, const EvalContext& ctx);
std::string to_string(const Expr& e);

/// Names of the variables referenced by e, in slot order.
std::vector<std::string> variable_names(const Expr& e);

}  // namespace bdsde
