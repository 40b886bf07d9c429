import ast
import math
import operator

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sgfractal.field import (
    FieldEvalError,
    FieldParseError,
    VertexFunction,
    eval_field,
    parse_expression,
    sample,
    sup_norm,
    to_text,
)

FIG_F = "y^2*sin(x)/2"


# --- Python-grammar oracle ----------------------------------------------------

_BIN = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
        ast.Div: operator.truediv, ast.Pow: operator.pow}
_NAMES = {"pi": math.pi, "sqrt3": math.sqrt(3.0)}
_FUNCS = {"sin": math.sin, "cos": math.cos, "exp": math.exp, "sqrt": math.sqrt, "abs": abs}


def oracle(text, x, y):
    """Evaluate with Python's own parser; ``^`` maps to ``**``.

    Returns None where the value is undefined over the reals.
    """
    tree = ast.parse(text.replace("^", "**"), mode="eval").body

    def ev(node):
        if isinstance(node, ast.Constant):
            return float(node.value)
        if isinstance(node, ast.Name):
            return {"x": x, "y": y}.get(node.id, _NAMES.get(node.id))
        if isinstance(node, ast.UnaryOp):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.BinOp):
            a, b = ev(node.left), ev(node.right)
            r = _BIN[type(node.op)](a, b)
            if isinstance(r, complex) or not math.isfinite(r):
                raise ArithmeticError
            return r
        if isinstance(node, ast.Call):
            return _FUNCS[node.func.id](ev(node.args[0]))
        raise AssertionError(ast.dump(node))

    try:
        v = ev(tree)
    except (ArithmeticError, ValueError):
        return None
    return v if math.isfinite(v) else None


leaves = st.sampled_from(["x", "y", "0.5", "2.0", "3.0", "1.25", "pi", "sqrt3"])


def _extend(children):
    ops = st.sampled_from(["+", "-", "*", "/", "^"])
    funcs = st.sampled_from(["sin", "cos", "exp", "sqrt", "abs"])
    return st.one_of(
        st.tuples(children, ops, children).map(lambda t: f"{t[0]}{t[1]}{t[2]}"),
        st.tuples(children, ops, children).map(lambda t: f"({t[0]}){t[1]}({t[2]})"),
        children.map(lambda c: f"-{c}"),
        st.tuples(funcs, children).map(lambda t: f"{t[0]}({t[1]})"),
    )


expressions = st.recursive(leaves, _extend, max_leaves=8)
points = st.tuples(st.floats(0.0, 1.0), st.floats(0.0, 0.9))


@settings(max_examples=300)
@given(expressions, points)
def test_matches_python_grammar(text, pt):
    x, y = pt
    expected = oracle(text, x, y)
    if expected is None:
        with pytest.raises(FieldEvalError):
            eval_field(text, x, y)
    else:
        assert eval_field(text, x, y) == pytest.approx(expected, rel=1e-12, abs=1e-300)


@given(expressions)
def test_to_text_round_trip(text):
    tree = parse_expression(text)
    assert parse_expression(to_text(tree)) == tree


@pytest.mark.parametrize(
    "text,value",
    [
        ("-2^2", -4.0),
        ("2^3^2", 512.0),
        ("2^-1", 0.5),
        ("1-2-3", -4.0),
        ("8/4/2", 1.0),
        ("2+3*4", 14.0),
        ("(2+3)*4", 20.0),
        ("--3", 3.0),
        ("sqrt3^2", math.sqrt(3.0) ** 2),
        ("abs(-pi)", math.pi),
        (" 1.5e1 ", 15.0),
    ],
)
def test_precedence_examples(text, value):
    assert eval_field(text, 0.0, 0.0) == value


@pytest.mark.parametrize(
    "text,offset",
    [("x*(", 3), ("1+", 2), ("foo(x)", 0), ("x y", 2), ("", 0), ("sin x", 4),
     ("(x", 2), ("x)", 1), ("$", 0), ("2^", 2)],
)
def test_parse_error_offsets(text, offset):
    with pytest.raises(FieldParseError) as info:
        parse_expression(text)
    assert info.value.offset == offset
    assert str(offset) in str(info.value)


@pytest.mark.parametrize(
    "text,reason",
    [("1/x", "division by zero"), ("sqrt(x-1)", "square root"), ("(x-1)^0.5", "fractional power"),
     ("exp(1000)", "overflow"), ("0^-1", "division by zero")],
)
def test_eval_errors(text, reason):
    with pytest.raises(FieldEvalError) as info:
        eval_field(text, 0.0, 0.0)
    assert reason in info.value.reason


def test_sample_reports_vertex(lat):
    with pytest.raises(FieldEvalError) as info:
        sample("1/(x-1)", lat(2))
    assert info.value.vertex == 1


def test_sample_x_level1(lat):
    vf = sample("x", lat(1))
    assert sorted(vf.values.tolist()) == [0.0, 0.25, 0.5, 0.5, 0.75, 1.0]


def test_figure_seed_at_top_corner(lat):
    v = sample(FIG_F, lat(0)).values
    assert v[0] == 0.0 and v[1] == 0.0
    assert v[2] == pytest.approx(0.75 * math.sin(0.5) / 2.0, rel=1e-15)
    assert v[2] == pytest.approx(0.1797845769765761, rel=1e-15)


def test_sample_thread_invariance(lat):
    L = lat(7)
    a = sample("sin(3*x)*exp(y) - x^3", L, threads=1).values
    b = sample("sin(3*x)*exp(y) - x^3", L, threads=4).values
    assert a.tobytes() == b.tobytes()


def test_sample_env_threads(lat, monkeypatch):
    monkeypatch.setenv("SGFRACTAL_THREADS", "3")
    L = lat(7)
    np.testing.assert_array_equal(sample("x*y", L).values, sample("x*y", L, threads=1).values)


def test_vertex_function_arithmetic(lat):
    L = lat(2)
    f = sample("x", L)
    g = sample("y", L)
    np.testing.assert_allclose((f + g).values, L.coords.sum(axis=1))
    np.testing.assert_allclose((2.0 * f - g).values, 2 * L.coords[:, 0] - L.coords[:, 1])
    np.testing.assert_array_equal((-f).values, -f.values)
    assert f.restrict(0).tolist() == [0.0, 1.0, 0.5]


def test_vertex_function_validation(lat):
    L = lat(1)
    with pytest.raises(ValueError):
        VertexFunction(L, np.zeros(5))
    with pytest.raises(FieldEvalError):
        VertexFunction(L, [0, 0, 0, np.nan, 0, 0])
    vf = VertexFunction(L, np.zeros(6))
    with pytest.raises(ValueError):
        vf.values[0] = 1.0


def test_sup_norm(lat):
    assert sup_norm(sample("x-2", lat(3))) == 2.0
