"""Small arithmetic grammar for coefficients and nonlinearities in configs.

Accepted: numbers, ``pi``, ``e``, the variable(s) in scope, ``+ - * / **``,
unary minus and the functions ``sin``, ``cos``, ``exp``. Expressions are
parsed with :mod:`ast` and compiled to vectorized numpy callables.
"""
from __future__ import annotations

import ast
import re

import numpy as np

FUNCTIONS = {"sin": np.sin, "cos": np.cos, "exp": np.exp}
CONSTANTS = {"pi": np.pi, "e": np.e}
_BINOPS = (ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow)


class ExpressionError(ValueError):
    pass


def _validate(tree: ast.AST, variables: set[str], source: str):
    for node in ast.walk(tree):
        if isinstance(node, (ast.Expression, ast.Load)):
            continue
        if isinstance(node, ast.BinOp):
            if not isinstance(node.op, _BINOPS):
                raise ExpressionError(f"operator {type(node.op).__name__} not allowed in {source!r}")
        elif isinstance(node, ast.UnaryOp):
            if not isinstance(node.op, (ast.USub, ast.UAdd)):
                raise ExpressionError(f"unary operator not allowed in {source!r}")
        elif isinstance(node, ast.Call):
            if not (isinstance(node.func, ast.Name) and node.func.id in FUNCTIONS):
                raise ExpressionError(f"unknown function in {source!r}")
            if len(node.args) != 1 or node.keywords:
                raise ExpressionError(f"functions take exactly one argument in {source!r}")
        elif isinstance(node, ast.Name):
            if node.id not in variables and node.id not in CONSTANTS and node.id not in FUNCTIONS:
                raise ExpressionError(f"unknown name {node.id!r} in {source!r}")
        elif isinstance(node, ast.Constant):
            if not isinstance(node.value, (int, float)) or isinstance(node.value, bool):
                raise ExpressionError(f"non-numeric literal in {source!r}")
        elif isinstance(node, (ast.operator, ast.unaryop)):
            continue
        else:
            raise ExpressionError(f"syntax {type(node).__name__} not allowed in {source!r}")


def _compile(source: str, variables: set[str]):
    if not isinstance(source, str) or not source.strip():
        raise ExpressionError("expression must be a non-empty string")
    try:
        tree = ast.parse(source.strip(), mode="eval")
    except SyntaxError as exc:
        raise ExpressionError(f"cannot parse {source!r}: {exc.msg}") from None
    _validate(tree, variables, source)
    return compile(tree, "<expr>", "eval")


def compile_time_expr(source: str):
    """Compile an expression in ``t`` into ``f(t) -> ndarray``."""
    code = _compile(source, {"t"})
    env = {"__builtins__": {}, **FUNCTIONS, **CONSTANTS}

    def f(t):
        t = np.asarray(t, dtype=float)
        return np.broadcast_to(eval(code, env, {"t": t}), t.shape)

    return f


def compile_state_exprs(sources: list[str]):
    """Compile per-component expressions in ``x1..xn`` into ``F(x)``.

    ``F`` maps an array of shape ``(..., n)`` to ``(..., n)``.
    """
    n = len(sources)
    names = {f"x{i + 1}" for i in range(n)}
    codes = [_compile(s, names) for s in sources]
    for s in sources:
        for ref in re.findall(r"\bx(\d+)\b", s):
            if not 1 <= int(ref) <= n:
                raise ExpressionError(f"{s!r} refers to x{ref} but n={n}")
    env = {"__builtins__": {}, **FUNCTIONS, **CONSTANTS}

    def F(x):
        x = np.asarray(x, dtype=float)
        scope = {f"x{i + 1}": x[..., i] for i in range(n)}
        return np.stack([np.broadcast_to(eval(c, env, scope), x.shape[:-1]) for c in codes], axis=-1)

    return F
