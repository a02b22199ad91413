import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from emdec.errors import ExpressionError
from emdec.expressions import parse_expression


@pytest.mark.parametrize("text,expected", [
    ("3", 3.0),
    ("2.5e2", 250.0),
    (".5", 0.5),
    ("1 + 2 * 3", 7.0),
    ("(1 + 2) * 3", 9.0),
    ("2 - 3 - 4", -5.0),
    ("12 / 4 / 3", 1.0),
    ("-3 + 1", -2.0),
    ("--2", 2.0),
    ("+5", 5.0),
    ("pi", math.pi),
    ("cos(0)", 1.0),
    ("sin(pi / 2)", 1.0),
    ("exp(0)", 1.0),
    ("2 * sin(pi / 6)", 1.0),
])
def test_constant_expressions(text, expected):
    assert parse_expression(text)() == pytest.approx(expected, rel=1e-14)


def test_variables():
    f = parse_expression("x + 2 * y - z * t")
    assert f(1.0, 2.0, 3.0, 4.0) == pytest.approx(1 + 4 - 12)
    assert f.names == {"x", "y", "z", "t"}


def test_numpy_array_evaluation():
    f = parse_expression("sin(pi * x) * cos(t)")
    x = np.linspace(0, 1, 5)
    out = f(x=x, t=0.0)
    assert out == pytest.approx(np.sin(np.pi * x))


@pytest.mark.parametrize("bad", [
    "", "   ", "1 +", "* 2", "sin 3", "sin(1", "(1 + 2", "1 2", "foo(3)",
    "unknown + 1", "1 $ 2",
])
def test_parse_errors(bad):
    with pytest.raises(ExpressionError):
        parse_expression(bad)


def test_error_mentions_column():
    with pytest.raises(ExpressionError, match="column"):
        parse_expression("1 + bogus")


@settings(max_examples=30, deadline=None)
@given(st.floats(-10, 10), st.floats(-10, 10))
def test_matches_python_arithmetic(a, b):
    f = parse_expression("x * 2 - y / 4 + 1")
    assert f(x=a, y=b) == pytest.approx(a * 2 - b / 4 + 1, rel=1e-12, abs=1e-12)


def test_division_and_unary_precedence():
    assert parse_expression("-2 * 3")() == -6.0
    assert parse_expression("6 / -2")() == -3.0
    assert parse_expression("2 - -3")() == 5.0
