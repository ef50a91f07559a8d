"""Periodic coefficient functions and the quadrature used to integrate them.

Coefficients are closures over ``t`` plus a declared period. Every evaluator
must accept numpy arrays; scalar-returning evaluators (constants) are
broadcast to the input shape.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np

DEFAULT_PANELS = 256

# cells per period of the cached antiderivative table
_ANTIDERIV_CELLS = 512
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)


class NonFiniteError(ValueError):
    """An integrand or coefficient produced NaN/inf at a quadrature node."""


@dataclass(frozen=True)
class QuadratureRule:
    """Composite quadrature rule.

    ``kind`` is ``"composite-simpson"`` or ``"gauss-legendre-panels"``. For
    Simpson, each panel holds two subintervals (three nodes).
    """

    kind: str = "composite-simpson"
    panels: int = DEFAULT_PANELS
    points: int = 5

    def __post_init__(self):
        if self.kind not in ("composite-simpson", "gauss-legendre-panels"):
            raise ValueError(f"unknown quadrature kind {self.kind!r}")
        if self.panels < 1:
            raise ValueError("panels must be >= 1")
        if self.kind == "gauss-legendre-panels" and self.points < 1:
            raise ValueError("points per panel must be >= 1")

    def nodes_weights(self, lo: float, hi: float) -> tuple[np.ndarray, np.ndarray]:
        """Nodes and weights on ``[lo, hi]`` (weights include the width)."""
        if self.kind == "composite-simpson":
            n_sub = 2 * self.panels
            nodes = np.linspace(lo, hi, n_sub + 1)
            w = np.ones(n_sub + 1)
            w[1:-1:2] = 4.0
            w[2:-1:2] = 2.0
            return nodes, w * (hi - lo) / (3.0 * n_sub)
        x, wx = np.polynomial.legendre.leggauss(self.points)
        edges = np.linspace(lo, hi, self.panels + 1)
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[:-1] + edges[1:])
        nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
        weights = (half[:, None] * wx[None, :]).ravel()
        return nodes, weights


DEFAULT_RULE = QuadratureRule()


def _check_finite(values: np.ndarray, nodes: np.ndarray, what: str = "integrand"):
    bad = ~np.isfinite(values)
    if np.any(bad):
        idx = np.flatnonzero(bad.reshape(len(nodes), -1).any(axis=1))[0]
        raise NonFiniteError(f"{what} is not finite at node t={nodes[idx]!r}")


def integrate(f: Callable, lo: float, hi: float, rule: QuadratureRule = DEFAULT_RULE) -> float:
    """Composite quadrature of ``f`` over ``[lo, hi]``; ``f`` is vectorized."""
    if hi < lo:
        raise ValueError(f"integrate needs lo <= hi, got [{lo}, {hi}]")
    nodes, weights = rule.nodes_weights(lo, hi)
    vals = np.broadcast_to(np.asarray(f(nodes), dtype=float), nodes.shape)
    _check_finite(vals, nodes)
    return float(np.dot(weights, vals))


@dataclass(frozen=True, eq=False)
class PeriodicFn:
    """An omega-periodic scalar function of time.

    ``expr`` is the source expression when the function came from the
    expression grammar; it makes the function serializable.
    """

    func: Callable = field(repr=False)
    period: float
    label: str = ""
    expr: str | None = None

    def __post_init__(self):
        if not (self.period > 0 and math.isfinite(self.period)):
            raise ValueError(f"period must be positive, got {self.period}")

    @classmethod
    def constant(cls, value: float, period: float = 1.0, label: str = "") -> "PeriodicFn":
        value = float(value)
        return cls(lambda t: np.full(np.shape(t), value), period,
                   label or repr(value), expr=repr(value))

    @classmethod
    def from_expr(cls, expr: str, period: float, label: str = "") -> "PeriodicFn":
        from .expressions import compile_time_expr

        return cls(compile_time_expr(expr), period, label or expr, expr=expr)

    def __call__(self, t):
        t_arr = np.asarray(t, dtype=float)
        out = np.broadcast_to(np.asarray(self.func(t_arr), dtype=float), t_arr.shape)
        if out.ndim == 0:
            return float(out)
        return np.array(out)

    def scaled(self, factor: float) -> "PeriodicFn":
        expr = None if self.expr is None else f"{factor!r}*({self.expr})"
        return PeriodicFn(lambda t: factor * self(t), self.period,
                          f"{factor}*{self.label}", expr=expr)

    def abs(self) -> "PeriodicFn":
        return PeriodicFn(lambda t: np.abs(self(t)), self.period, f"|{self.label}|")

    @cached_property
    def _antiderivative_table(self) -> tuple[float, np.ndarray]:
        h = self.period / _ANTIDERIV_CELLS
        left = np.arange(_ANTIDERIV_CELLS) * h
        nodes = left[:, None] + 0.5 * h * (_GL_NODES[None, :] + 1.0)
        vals = self(nodes.ravel()).reshape(nodes.shape)
        _check_finite(vals.ravel(), nodes.ravel(), f"coefficient {self.label}")
        cell = 0.5 * h * vals @ _GL_WEIGHTS
        cum = np.concatenate([[0.0], np.cumsum(cell)])
        return h, cum

    def antiderivative(self, t):
        """``∫_0^t f``, using periodicity to reduce ``t`` into one period."""
        h, cum = self._antiderivative_table
        t = np.asarray(t, dtype=float)
        k = np.floor(t / self.period)
        u = t - k * self.period
        j = np.minimum((u / h).astype(int), _ANTIDERIV_CELLS - 1)
        start = j * h
        width = u - start
        nodes = start[..., None] + 0.5 * width[..., None] * (_GL_NODES + 1.0)
        vals = self(nodes)
        partial = 0.5 * width * (vals @ _GL_WEIGHTS)
        out = k * cum[-1] + cum[j] + partial
        return float(out) if out.ndim == 0 else out

    def is_periodic(self, samples: int = 1000, seed: int = 0, rtol: float = 1e-12) -> bool:
        t = np.random.default_rng(seed).uniform(-10 * self.period, 10 * self.period, samples)
        f0 = self(t)
        return bool(np.all(np.abs(self(t + self.period) - f0) <= rtol * (1 + np.abs(f0))))


def average(f: PeriodicFn, rule: QuadratureRule = DEFAULT_RULE) -> float:
    """Mean of ``f`` over one period."""
    nodes, weights = rule.nodes_weights(0.0, f.period)
    vals = f(nodes)
    _check_finite(vals, nodes, f"coefficient {f.label or 'f'}")
    return float(np.dot(weights, vals)) / f.period


def exponent_integral(a: PeriodicFn, t, s):
    """Signed integral ``∫_t^s a``; antisymmetric in ``(t, s)``."""
    return np.subtract(a.antiderivative(s), a.antiderivative(t))
