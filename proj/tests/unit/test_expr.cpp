#include <gtest/gtest.h>

#include <cmath>

#include "bdsde/error.hpp"
#include "bdsde/expr.hpp"

using namespace bdsde;

namespace {
double ev(const std::string& s, EvalContext c = {}) { return eval_expr(parse_expr(s), c); }
}  // namespace

TEST(Expr, Examples) {
    EXPECT_EQ(ev("1 + 2*3"), 7.0);
    EXPECT_EQ(ev("pos(-2) + pos(3)"), 3.0);
    EXPECT_EQ(ev("min(4, -1)"), -1.0);
    EXPECT_EQ(ev("exp(0)"), 1.0);
    EXPECT_THROW(ev("ln(0)"), NumericalFailure);
    EXPECT_EQ(ev("abs(-2) + neg(-3)"), 5.0);
    EXPECT_THROW(ev("1/(1-1)"), NumericalFailure);
    EXPECT_THROW(ev("sqrt(-1)"), NumericalFailure);
}

TEST(Expr, Precedence) {
    EXPECT_EQ(ev("2^3^2"), 512.0);
    EXPECT_EQ(ev("-2^2"), -4.0);
    EXPECT_EQ(ev("2^-1"), 0.5);
    EXPECT_EQ(ev("8/4/2"), 1.0);
    EXPECT_EQ(ev("1 - 2 - 3"), -4.0);
    EXPECT_EQ(ev("(1 + 2) * 3"), 9.0);
    EXPECT_EQ(ev("2 * -3"), -6.0);
    EXPECT_EQ(ev("1.5e2 + .5"), 150.5);
}

TEST(Expr, Variables) {
    EvalContext c;
    c.set(slot::y, 2).set(slot::z1, 3).set(slot::w1 + 1, 5).set(slot::t, 0.5);
    EXPECT_EQ(ev("y*z1 + w2 - t", c), 10.5);
    const Expr e = parse_expr("btail + w1 * z2 + t");
    EXPECT_EQ(variable_names(e), (std::vector<std::string>{"t", "btail", "z2", "w1"}));
    EXPECT_EQ(e.variables(), (1U << slot::t) | (1U << slot::btail) | (1U << (slot::z1 + 1)) | (1U << slot::w1));
}

TEST(Expr, UnboundVariable) { EXPECT_THROW(ev("y + 1"), InvalidArgument); }

TEST(Expr, ParseErrorsCarryPosition) {
    try {
        parse_expr("1 + * 2", 7, 10);
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 7);
        EXPECT_EQ(e.column(), 14);
    }
    try {
        parse_expr("y + foo", 1, 1);
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.column(), 5);
    }
    EXPECT_THROW(parse_expr("(1 + 2"), ParseError);
    EXPECT_THROW(parse_expr("1 2"), ParseError);
    EXPECT_THROW(parse_expr(""), ParseError);
    EXPECT_THROW(parse_expr("bogus(1)"), ParseError);
    EXPECT_THROW(parse_expr("z0"), ParseError);
}

TEST(Expr, Arity) {
    EXPECT_THROW(parse_expr("min(1)"), ParseError);
    EXPECT_THROW(parse_expr("exp(1, 2)"), ParseError);
    EXPECT_THROW(parse_expr("abs()"), ParseError);
}

TEST(Expr, RoundTrip) {
    for (const char* s : {"w1", "0", "-y", "tanh(w1) + 1", "0.5*z1", "1 - 2*abs(t - 0.5)", "pos(1 - exp(w1))",
                          "-y + 0.3*sin(z1)", "y^3 - z1^2", "2^3^2", "(2^3)^2", "-(1 - y)", "1 - (2 - 3)",
                          "8/(4/2)", "min(y, max(z1, 0)) * btail", "cos(w1) + db", "1e-3 * y / 7",
                          "sqrt(1 + z1^2) - ln(2 + y^2)"}) {
        const Expr a = parse_expr(s);
        const Expr b = parse_expr(to_string(a));
        EXPECT_EQ(a, b) << s << " -> " << to_string(a);
        EXPECT_EQ(to_string(a), to_string(b));
    }
}

TEST(Expr, RoundTripPreservesValues) {
    EvalContext c;
    c.set(slot::y, -0.7).set(slot::z1, 1.3).set(slot::t, 0.25);
    for (const char* s : {"y - (z1 - t)", "-y^2", "(-y)^2", "y/(z1*t)", "y/z1*t", "-(y + z1) * t"}) {
        const Expr a = parse_expr(s);
        EXPECT_EQ(eval_expr(a, c), eval_expr(parse_expr(to_string(a)), c)) << s;
    }
}
