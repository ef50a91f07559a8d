import numpy as np
import pytest

from periodic_dde.expressions import ExpressionError, compile_state_exprs, compile_time_expr


def test_time_expression_matches_numpy():
    f = compile_time_expr("1+0.6*cos(2*pi*t) - exp(-t)/2 + t**2")
    t = np.linspace(0, 3, 11)
    ref = 1 + 0.6 * np.cos(2 * np.pi * t) - np.exp(-t) / 2 + t ** 2
    assert np.array_equal(f(t), ref)


def test_constant_expression_broadcasts():
    f = compile_time_expr("2*e")
    assert f(np.zeros(4)).shape == (4,)
    assert f(0.0) == pytest.approx(2 * np.e)


def test_state_expressions_shape():
    F = compile_state_exprs(["exp(-(x1+x2))", "x2**2/(0.25+x2**2)"])
    x = np.array([[0.0, 0.0], [1.0, 2.0]])
    out = F(x)
    assert out.shape == (2, 2)
    assert out[1, 0] == pytest.approx(np.exp(-3.0))
    assert out[1, 1] == pytest.approx(4 / 4.25)


@pytest.mark.parametrize("src", [
    "__import__('os')", "t.real", "abs(t)", "t if t else 1", "[t]", "log(t)", "t % 2",
    "sin(t, t)", "'a'", "", "1 +", "y*2", "True",
])
def test_rejected(src):
    with pytest.raises(ExpressionError):
        compile_time_expr(src)


def test_state_reference_out_of_range():
    with pytest.raises(ExpressionError):
        compile_state_exprs(["x3", "x1"])


def test_time_variable_not_allowed_in_state():
    with pytest.raises(ExpressionError):
        compile_state_exprs(["t*x1"])
