"""Expression language: parsing, evaluation, symbolic derivative, printing."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fracvar import expr
from fracvar.errors import (
    DisallowedVariable,
    DomainFault,
    ExprSyntaxError,
    UnknownIdentifier,
)


def ev(src, **env):
    return expr.evaluate(expr.parse(src), env)


class TestParsing:
    def test_precedence_power_binds_tighter_than_unary_minus(self):
        assert ev("-2^2") == -4.0

    def test_power_right_associative(self):
        assert ev("2^3^2") == 512.0

    def test_mul_before_add(self):
        assert ev("1 + 2*3") == 7.0

    def test_unary_minus_chain(self):
        assert ev("--3") == 3.0

    def test_pi_constant(self):
        assert ev("sin(pi/2)") == pytest.approx(1.0, abs=1e-15)

    def test_function_calls_nest(self):
        assert ev("exp(ln(2))") == pytest.approx(2.0, rel=1e-15)

    def test_whitespace_ignored(self):
        assert ev("  1   +2 ") == 3.0

    def test_syntax_error_carries_offset(self):
        with pytest.raises(ExprSyntaxError) as err:
            expr.parse("1 + * 2")
        assert err.value.offset == 4

    def test_unbalanced_paren(self):
        with pytest.raises(ExprSyntaxError):
            expr.parse("sin(t")

    def test_unknown_function(self):
        with pytest.raises(UnknownIdentifier):
            expr.parse("tan(t)")

    def test_disallowed_variable(self):
        with pytest.raises(DisallowedVariable):
            expr.parse("u + 1", allowed_vars={"t"})

    def test_trailing_garbage(self):
        with pytest.raises(ExprSyntaxError):
            expr.parse("1 + 2 )")


class TestEvaluation:
    def test_vectorized_over_arrays(self):
        node = expr.parse("t^2 + 1")
        out = expr.evaluate(node, {"t": np.array([0.0, 1.0, 2.0])})
        assert np.allclose(out, [1.0, 2.0, 5.0])

    def test_ln_of_nonpositive_faults(self):
        with pytest.raises(DomainFault):
            ev("ln(t)", t=0.0)

    def test_sqrt_of_negative_faults(self):
        with pytest.raises(DomainFault):
            ev("sqrt(t)", t=-1.0)

    def test_division_by_zero_faults(self):
        with pytest.raises(DomainFault):
            ev("1/t", t=0.0)

    def test_fractional_power_of_negative_faults(self):
        with pytest.raises(DomainFault):
            ev("t^0.5", t=-2.0)

    def test_array_fault_detected(self):
        node = expr.parse("ln(t)")
        with pytest.raises(DomainFault):
            expr.evaluate(node, {"t": np.array([1.0, 0.5, -3.0])})

    def test_abs(self):
        assert ev("abs(-3)") == 3.0


# derivative oracles: central differences on the evaluated parse tree,
# checked at 64 points per expression
_DIFFERENTIABLE = [
    ("t^3 - 2*t", (-2.0, 2.0)),
    ("sin(3*t)*cos(t)", (-2.0, 2.0)),
    ("exp(-t^2)", (-2.0, 2.0)),
    ("ln(t + 3)", (-2.0, 2.0)),
    ("sqrt(t + 3)", (-2.0, 2.0)),
    ("1/(1 + t^2)", (-2.0, 2.0)),
    ("t^t", (0.1, 2.0)),
    ("2^t", (-2.0, 2.0)),
]


@pytest.mark.parametrize("src,interval", _DIFFERENTIABLE)
def test_derivative_matches_finite_differences(src, interval):
    node = expr.parse(src)
    dnode = expr.derivative(node, "t")
    lo, hi = interval
    h = 1e-6
    for t in np.linspace(lo + 10 * h, hi - 10 * h, 64):
        fd = (expr.evaluate(node, {"t": t + h})
              - expr.evaluate(node, {"t": t - h})) / (2 * h)
        sym = expr.evaluate(dnode, {"t": t})
        assert sym == pytest.approx(fd, rel=1e-6, abs=1e-8), (src, t)


def test_derivative_of_constant_is_zero():
    assert expr.derivative(expr.parse("pi * 4"), "t") == expr.Const(0.0)


def test_derivative_wrt_other_variable():
    node = expr.parse("t * u")
    du = expr.derivative(node, "u")
    assert expr.evaluate(du, {"t": 3.0, "u": 100.0}) == 3.0


_expr_strategy = st.recursive(
    st.one_of(
        st.floats(min_value=0.1, max_value=9.0).map(lambda v: expr.Const(round(v, 3))),
        st.sampled_from(["t", "u", "alpha"]).map(expr.Var),
    ),
    lambda children: st.one_of(
        st.tuples(st.sampled_from(["+", "-", "*", "/", "^"]), children, children)
        .map(lambda trio: expr.Binary(trio[0], trio[1], trio[2])),
        st.tuples(st.sampled_from(["neg", "sin", "cos", "exp", "abs"]), children)
        .map(lambda pair: expr.Unary(pair[0], pair[1])),
    ),
    max_leaves=12,
)


@given(_expr_strategy)
@settings(max_examples=200, deadline=None)
def test_print_parse_round_trip(node):
    """to_source output reparses to a tree with identical structure."""
    text = expr.to_source(node)
    again = expr.parse(text)
    assert expr.to_source(again) == text


@given(st.floats(min_value=-3.0, max_value=3.0),
       st.floats(min_value=-3.0, max_value=3.0))
@settings(max_examples=50, deadline=None)
def test_round_trip_preserves_value(t, u):
    node = expr.parse("(t + 2*u)^2 - sin(t*u)")
    again = expr.parse(expr.to_source(node))
    assert expr.evaluate(again, {"t": t, "u": u}) == pytest.approx(
        expr.evaluate(node, {"t": t, "u": u}), rel=1e-12, abs=1e-12)


def test_round_trip_expression_with_all_functions():
    src = "abs(sin(t)) + sqrt(exp(t)) - ln(t + 4)/cos(t)"
    node = expr.parse(src)
    printed = expr.to_source(node)
    t = 0.37
    assert expr.evaluate(expr.parse(printed), {"t": t}) == pytest.approx(
        expr.evaluate(node, {"t": t}), rel=1e-14)
    # integer-exponent powers of negatives stay legal after printing
    assert ev("(-2)^2") == 4.0
