import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from warpeig.errors import DomainError, ParseError, UnbalancedParens, UnknownFunction, ValidationError
from warpeig.warping import (
    custom,
    differentiate,
    euclidean,
    evaluate,
    hyperbolic,
    log_abs,
    log_derivative,
    make_manifold,
    parse_warping,
    sphere,
    to_string,
    validate_warping,
    warping_from_string,
)
from warpeig.warping.expr import Add, Const, Func, Mul, Pow, Sub, T

TEST_EXPRESSIONS = [
    "sin(t)", "t", "sinh(t)", "t + 2*t^3", "t*exp(t)", "sinh(t)^2",
    "sinh(t)*exp(t^3)", "t - t^3/6", "tanh(t)", "pow(t, 3) + cos(t)",
    "sqrt(1 + t^2) * log(2 + t)", "-t^2 + cosh(t)/(1 + t)", "exp(-t)*t",
]
POINTS = np.random.default_rng(0).uniform(0.05, 2.0, 100)


def _fd(expr, t, h=1e-6):
    return (evaluate(expr, t + h) - evaluate(expr, t - h)) / (2 * h)


# --- parsing ----------------------------------------------------------------

class TestParse:
    def test_single_function(self):
        assert parse_warping("sin(t)") == Func("sin", (T,))

    def test_precedence(self):
        assert parse_warping("t + 2*t^3") == Add(T, Mul(Const(2.0), Pow(T, Const(3.0))))

    def test_self_cancellation(self):
        e = parse_warping("sinh(t)*exp(t^3/10) − sinh(t)*exp(t^3/10)")
        assert evaluate(e, 1.0) == 0.0

    def test_power_right_associative(self):
        assert evaluate(parse_warping("2^3^2"), 0.0) == 512.0

    def test_unary_minus_below_power(self):
        assert evaluate(parse_warping("-t^2"), 3.0) == -9.0

    def test_left_associative_subtraction_and_division(self):
        assert evaluate(parse_warping("10 - 4 - 3"), 0.0) == 3.0
        assert evaluate(parse_warping("24 / 4 / 3"), 0.0) == 2.0

    def test_whitespace_insensitive(self):
        assert parse_warping(" t  *sin( t ) ") == parse_warping("t*sin(t)")

    def test_scientific_literal(self):
        assert evaluate(parse_warping("1.5e-3*t"), 2.0) == pytest.approx(3e-3)

    def test_implicit_multiplication_rejected(self):
        with pytest.raises(ParseError) as info:
            parse_warping("2t")
        assert info.value.offset == 1

    def test_unknown_function(self):
        with pytest.raises(UnknownFunction) as info:
            parse_warping("t + foo(t)")
        assert info.value.offset == 4

    def test_internal_functions_not_exposed(self):
        with pytest.raises(UnknownFunction):
            parse_warping("lsinh(t)")

    @pytest.mark.parametrize("text", ["sin(t", "(t + 1", "t)", "sin(t))"])
    def test_unbalanced(self, text):
        with pytest.raises(UnbalancedParens):
            parse_warping(text)

    @pytest.mark.parametrize("text", ["", "t +", "* t", "t ^", "pow(t)", "sin(t, t)", "x"])
    def test_malformed(self, text):
        with pytest.raises(ParseError):
            parse_warping(text)

    def test_expected_set_reported(self):
        with pytest.raises(ParseError) as info:
            parse_warping("t +")
        assert info.value.offset == 3
        assert info.value.expected


# --- round trip and evaluation ---------------------------------------------

_leaf = st.one_of(st.just(T), st.floats(0.1, 5.0).map(lambda v: Const(round(v, 3))))


def _extend(children):
    binary = st.tuples(st.sampled_from([Add, Sub, Mul]), children, children).map(lambda a: a[0](a[1], a[2]))
    small_pow = st.tuples(children, st.integers(1, 3)).map(lambda a: Pow(a[0], Const(float(a[1]))))
    unary = st.tuples(st.sampled_from(["sin", "cos", "tanh", "exp"]), children).map(
        lambda a: Func(a[0], (a[1],)))
    return st.one_of(binary, small_pow, unary)


expressions = st.recursive(_leaf, _extend, max_leaves=8)


@settings(max_examples=100, deadline=None)
@given(expressions)
def test_round_trip_preserves_evaluation(expr):
    again = parse_warping(to_string(expr))
    ts = np.random.default_rng(1).uniform(1e-9, 5.0, 100)
    with np.errstate(all="ignore"):
        a, b = evaluate(expr, ts), evaluate(again, ts)
    np.testing.assert_allclose(b, a, rtol=1e-12, atol=1e-12, equal_nan=True)


@pytest.mark.parametrize("text", TEST_EXPRESSIONS)
def test_round_trip_of_test_expressions(text):
    expr = parse_warping(text)
    ts = np.random.default_rng(2).uniform(1e-9, 5.0, 100)
    np.testing.assert_allclose(evaluate(parse_warping(to_string(expr)), ts), evaluate(expr, ts), rtol=1e-12)


# --- differentiation --------------------------------------------------------

class TestDifferentiate:
    def test_sine_at_zero(self):
        assert evaluate(differentiate(parse_warping("sin(t)")), 0.0) == 1.0

    def test_product_rule(self):
        value = evaluate(differentiate(parse_warping("t*exp(t)")), 1.0)
        assert value == pytest.approx(2 * math.e, rel=1e-15)

    def test_sinh_squared_against_finite_difference(self):
        e = parse_warping("sinh(t)^2")
        value = evaluate(differentiate(e), 1.0)
        assert value == pytest.approx(_fd(e, 1.0), abs=1e-8)
        assert value == pytest.approx(2 * math.sinh(1) * math.cosh(1), rel=1e-15)

    def test_constant_folding(self):
        assert differentiate(parse_warping("3")) == Const(0.0)
        assert differentiate(T) == Const(1.0)

    @pytest.mark.parametrize("text", TEST_EXPRESSIONS)
    def test_matches_finite_differences(self, text):
        e = parse_warping(text)
        d = differentiate(e)
        for t in POINTS:
            exact, approx = evaluate(d, t), _fd(e, t)
            assert approx == pytest.approx(exact, rel=1e-6, abs=1e-6)

    @pytest.mark.parametrize("factory", [sphere, euclidean, hyperbolic])
    def test_builtin_derivatives_match_finite_differences(self, factory):
        w = factory()
        for name, dname in (("f", "df"), ("df", "ddf"), ("ddf", "dddf")):
            expr = getattr(w, name)
            for t in POINTS:
                assert _fd(expr, t) == pytest.approx(w.value(dname, t), rel=1e-6, abs=1e-6)


# --- log-space rewrites -----------------------------------------------------

@pytest.mark.parametrize("text", TEST_EXPRESSIONS)
def test_log_forms_match_direct_evaluation(text):
    e = parse_warping(text)
    ts = POINTS[evaluate(e, POINTS) > 0]
    f = evaluate(e, ts)
    np.testing.assert_allclose(evaluate(log_abs(e), ts), np.log(f), rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(
        evaluate(log_derivative(e), ts), evaluate(differentiate(e), ts) / f, rtol=1e-10, atol=1e-12)


def test_log_forms_stay_finite_where_f_overflows():
    w = custom("sinh(t)*exp(t^3)")
    t = 12.0
    assert not math.isfinite(w.value("f", t)) or w.value("f", t) > 1e300
    assert w.value("log_f", t) == pytest.approx(t**3 + t - math.log(2), rel=1e-12)
    assert w.value("dlog_f", t) == pytest.approx(1 / math.tanh(t) + 3 * t * t, rel=1e-12)


# --- builtins and validation -----------------------------------------------

@pytest.mark.parametrize("factory,text", [(sphere, "sin(t)"), (euclidean, "t"), (hyperbolic, "sinh(t)")])
def test_builtins_agree_with_custom(factory, text):
    b, c = factory(), custom(text)
    ts = np.random.default_rng(3).uniform(1e-6, 3.0, 200)
    for name in ("f", "df", "ddf", "log_f", "dlog_f"):
        np.testing.assert_allclose(b.value(name, ts), c.value(name, ts), rtol=1e-14, atol=1e-14)


class TestValidation:
    def test_sphere_valid(self):
        m = make_manifold(sphere(), 2)
        assert m.extent == math.pi

    def test_t_squared_rejected(self):
        with pytest.raises(ValidationError) as info:
            make_manifold(custom("t^2"), 2)
        assert "f'(0)" in str(info.value)

    def test_incomplete_metric_valid(self):
        m = make_manifold(custom("sinh(t)*exp(t^3)"), 2)
        assert m.complete_with_pole

    def test_euclidean_passes(self):
        assert validate_warping(euclidean()).ok

    def test_sin_2t_fails(self):
        report = validate_warping(custom("sin(2*t)"))
        assert not report.ok
        assert report.df_at_0 == pytest.approx(2.0)

    def test_cubic_with_finite_extent_passes(self):
        assert validate_warping(custom("t - t^3/6", extent=2.0)).ok
        assert not validate_warping(custom("t - t^3/6")).ok

    def test_nonzero_at_pole_fails(self):
        report = validate_warping(custom("1 + t"))
        assert not report.ok and "f(0)" in report.failures[0]

    def test_negative_somewhere_reports_t(self):
        report = validate_warping(custom("sin(t)"))
        assert not report.ok
        assert any("t=" in msg for msg in report.failures)

    def test_small_sample_count_rejected(self):
        with pytest.raises(ValueError):
            validate_warping(euclidean(), samples=8)

    @pytest.mark.parametrize("n", [1, 2.5, 0])
    def test_bad_dimension(self, n):
        with pytest.raises(ValidationError):
            make_manifold(euclidean(), n)

    def test_metric_strings(self):
        assert warping_from_string("hyperbolic").kind == "hyperbolic"
        assert warping_from_string("expr: t*exp(t)").source == "t*exp(t)"
        assert warping_from_string("expr:t - t^3/6", extent=2.0).extent == 2.0
        with pytest.raises(ParseError):
            warping_from_string("torus")
        with pytest.raises(DomainError):
            warping_from_string("sphere", extent=1.0)
