import math

import numpy as np
import pytest

from harnack_lab.expressions import (
    Binary,
    Const,
    DerivativeError,
    EvalDomainError,
    ParseError,
    Unary,
    UnknownIdentifierError,
    Var,
    differentiate,
    evaluate,
    free_variables,
    parse,
    simplify,
    to_string,
)

VARS2 = ["x", "y1"]
VARS3 = ["x", "y1", "y2"]


def test_parse_and_eval_basics():
    assert evaluate(parse("y1^2 - 1", VARS2), {"y1": 2.0}) == 3.0
    assert evaluate(parse("sin(y1)*y2", VARS3), {"y1": math.pi / 2, "y2": 2.0}) == pytest.approx(2.0)
    assert evaluate(parse("2*pi", VARS2), {}) == pytest.approx(2 * math.pi)
    assert evaluate(parse("e", VARS2), {}) == math.e
    assert evaluate(parse("1 + 2*3^2", VARS2), {}) == 19.0
    # exponent chains group from the right
    assert evaluate(parse("2^3^2", VARS2), {}) == 512.0
    # unary minus binds looser than the exponent
    assert evaluate(parse("-y1^2", VARS2), {"y1": 3.0}) == -9.0
    assert evaluate(parse("(-y1)^2", VARS2), {"y1": 3.0}) == 9.0
    assert evaluate(parse("6 - 2 - 1", VARS2), {}) == 3.0
    assert evaluate(parse("cosh(y1)^2 - sinh(y1)^2", VARS2), {"y1": 0.7}) == pytest.approx(1.0)
    assert evaluate(parse("sqrt(y1 + 2)", VARS2), {"y1": 2.0}) == 2.0
    assert evaluate(parse("1.5e2 + .25", VARS2), {}) == 150.25


def test_parse_rejects_malformed_input():
    with pytest.raises(UnknownIdentifierError):
        parse("y3 + 1", ["y1", "y2"])
    with pytest.raises(UnknownIdentifierError):
        parse("foo(3)", VARS2)
    for bad in ["1 +", "sin 3", "(1 + 2", "1 2", "", "   ", "* 4", "3 $ 4", "sin()"]:
        with pytest.raises(ParseError):
            parse(bad, VARS2)


def test_parse_error_reports_position():
    with pytest.raises(ParseError) as err:
        parse("1 + @", VARS2)
    assert err.value.position == 4


def test_vectorized_eval_matches_scalar():
    e = parse("sin(y1)*exp(x) - y1^3 / (2 + cos(x))", VARS2)
    rng = np.random.default_rng(7)
    xs = rng.uniform(-2, 2, size=50)
    ys = rng.uniform(-2, 2, size=50)
    batch = evaluate(e, {"x": xs, "y1": ys})
    for i in range(50):
        assert batch[i] == evaluate(e, {"x": float(xs[i]), "y1": float(ys[i])})


def test_eval_domain_errors():
    with pytest.raises(EvalDomainError):
        evaluate(parse("sqrt(y1)", VARS2), {"y1": -1.0})
    with pytest.raises(EvalDomainError):
        evaluate(parse("1 / y1", VARS2), {"y1": 0.0})
    with pytest.raises(EvalDomainError):
        evaluate(parse("y1 ^ (-1)", VARS2), {"y1": 0.0})
    with pytest.raises(EvalDomainError):
        evaluate(parse("y1 ^ 0.5", VARS2), {"y1": -2.0})
    with pytest.raises(EvalDomainError):
        evaluate(parse("exp(y1)", VARS2), {"y1": 1e4})
    with pytest.raises(EvalDomainError):
        evaluate(parse("x + y1", VARS2), {"x": 1.0})


def test_differentiate_basics():
    d = differentiate(parse("y1^2 - 1", VARS2), "y1")
    for v in [-2.0, 0.0, 0.5, 3.0]:
        assert evaluate(d, {"y1": v}) == pytest.approx(2 * v)
    assert simplify(differentiate(parse("y1^2 - 1", VARS2), "x")) == Const(0.0)

    d = differentiate(parse("sin(y1)", VARS2), "y1")
    assert evaluate(d, {"y1": 0.3}) == pytest.approx(math.cos(0.3))

    # quotient rule
    d = differentiate(parse("x / (y1 + 2)", VARS2), "x")
    assert evaluate(d, {"x": 5.0, "y1": 1.0}) == pytest.approx(1 / 3)
    d = differentiate(parse("x / (y1 + 2)", VARS2), "y1")
    assert evaluate(d, {"x": 6.0, "y1": 1.0}) == pytest.approx(-6 / 9)

    # chain through exp and sqrt
    d = differentiate(parse("exp(x^2)", VARS2), "x")
    assert evaluate(d, {"x": 0.5}) == pytest.approx(math.exp(0.25))
    d = differentiate(parse("sqrt(1 + y1^2)", VARS2), "y1")
    assert evaluate(d, {"y1": 2.0}) == pytest.approx(2 / math.sqrt(5))

    # e^f differentiates like exp(f)
    d = differentiate(parse("e^(2*x)", VARS2), "x")
    assert evaluate(d, {"x": 0.4}) == pytest.approx(2 * math.exp(0.8))


def test_repeated_differentiation():
    e = parse("sin(2*y1)", VARS2)
    d4 = e
    for _ in range(4):
        d4 = differentiate(d4, "y1")
    assert evaluate(d4, {"y1": 0.3}) == pytest.approx(16 * math.sin(0.6))


def test_nonconstant_exponent_has_no_derivative():
    with pytest.raises(DerivativeError):
        differentiate(parse("x ^ y1", VARS2), "x")
    with pytest.raises(DerivativeError):
        differentiate(parse("x ^ x", VARS2), "x")
    # but it still evaluates where the base is positive
    assert evaluate(parse("x ^ y1", VARS2), {"x": 2.0, "y1": 3.0}) == 8.0


def test_simplify_examples():
    assert simplify(parse("0*y1 + 3", VARS2)) == Const(3.0)
    assert simplify(parse("y1^1", VARS2)) == Var("y1")
    assert simplify(parse("1*y1 + 0", VARS2)) == Var("y1")
    assert simplify(parse("2^3", VARS2)) == Const(8.0)
    assert simplify(Unary("neg", Unary("neg", Var("x")))) == Var("x")
    assert simplify(parse("y1^0", VARS2)) == Const(1.0)
    assert simplify(parse("x / 1", VARS2)) == Var("x")
    # folding must not erase a runtime domain error
    kept = simplify(parse("sqrt(0 - 4)", VARS2))
    with pytest.raises(EvalDomainError):
        evaluate(kept, {})


def test_free_variables():
    assert free_variables(parse("sin(y1)*x + 2", VARS3)) == {"x", "y1"}
    assert free_variables(parse("3 + pi", VARS3)) == set()


def _random_expr(rng, variables, depth, growth=1):
    """Small random AST over +,-,*,^const and the unary functions.

    ``growth`` limits how many exp/cosh/sinh may nest along one branch so
    values and higher derivatives stay at a sane magnitude.
    """
    if depth == 0 or rng.random() < 0.15:
        if rng.random() < 0.35:
            return Const(float(rng.integers(-3, 4)))
        return Var(variables[rng.integers(len(variables))])
    roll = rng.random()
    if roll < 0.3:
        op = ("sin", "cos", "neg", "cosh", "sinh", "exp")[rng.integers(6)]
        if op in ("cosh", "sinh", "exp"):
            if growth == 0:
                op = ("sin", "cos", "neg")[rng.integers(3)]
            else:
                return Unary(op, _random_expr(rng, variables, depth - 1, growth - 1))
        return Unary(op, _random_expr(rng, variables, depth - 1, growth))
    if roll < 0.42:
        return Binary(
            "^",
            _random_expr(rng, variables, depth - 1, growth),
            Const(float(rng.integers(2, 4))),
        )
    op = ("+", "-", "*")[rng.integers(3)]
    return Binary(
        op,
        _random_expr(rng, variables, depth - 1, growth),
        _random_expr(rng, variables, depth - 1, growth),
    )


def test_simplify_preserves_values_on_random_expressions():
    rng = np.random.default_rng(20240811)
    for _ in range(80):
        e = _random_expr(rng, ("x", "y1"), depth=3)
        s = simplify(e)
        for _ in range(20):
            env = {"x": float(rng.uniform(-1, 1)), "y1": float(rng.uniform(-1, 1))}
            try:
                want = evaluate(e, env)
            except EvalDomainError:
                with pytest.raises(EvalDomainError):
                    evaluate(s, env)
                continue
            got = evaluate(s, env)
            assert got == pytest.approx(want, rel=1e-12, abs=1e-12)


def test_print_parse_round_trip_is_exact():
    rng = np.random.default_rng(991)
    for _ in range(80):
        e = _random_expr(rng, ("x", "y1", "y2"), depth=3)
        back = parse(to_string(e), ("x", "y1", "y2"))
        for _ in range(10):
            env = {
                "x": float(rng.uniform(-1, 1)),
                "y1": float(rng.uniform(-1, 1)),
                "y2": float(rng.uniform(-1, 1)),
            }
            try:
                want = evaluate(e, env)
            except EvalDomainError:
                continue
            # identical tree -> identical arithmetic, bit for bit
            assert evaluate(back, env) == want


def test_symbolic_derivative_matches_finite_differences():
    """Central differences converge at second order to the symbolic result.

    For each sample the error at step h/2 must be about a quarter of the
    error at h.  Samples whose error is already at roundoff are skipped.
    """
    rng = np.random.default_rng(315)
    h = 1e-2
    checked = 0
    for _ in range(300):
        e = _random_expr(rng, ("x", "y1"), depth=3)
        var = ("x", "y1")[rng.integers(2)]
        try:
            d = differentiate(e, var)
        except DerivativeError:
            continue
        env = {"x": float(rng.uniform(-1, 1)), "y1": float(rng.uniform(-1, 1))}

        def fd(step):
            hi = dict(env)
            lo = dict(env)
            hi[var] = env[var] + step
            lo[var] = env[var] - step
            return (evaluate(e, hi) - evaluate(e, lo)) / (2 * step)

        try:
            exact = evaluate(d, env)
            err_h = abs(fd(h) - exact)
            err_h2 = abs(fd(h / 2) - exact)
        except EvalDomainError:
            continue
        scale = 1.0 + abs(exact)
        if err_h2 < 1e-7 * scale:
            continue  # third derivative too small at this point to measure order
        assert 3.2 < err_h / err_h2 < 4.8
        checked += 1
    assert checked >= 40
