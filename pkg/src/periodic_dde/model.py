"""Model types: nonlinearities, limit classes and the delay system itself.

The system is

    x_i'(t) = -a_i(t) x_i(t) + lam * b_i(t) * f^i(x(t - tau(t))),  i = 1..n

with omega-periodic coefficients and the l1 norm on R^n.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .periodic import PeriodicFn, average


class HypothesisError(ValueError):
    """A standing hypothesis on the coefficients or nonlinearity fails."""


@dataclass(frozen=True)
class Limit:
    """Value of ``lim f(x)/|x|`` at zero or infinity.

    ``kind`` is ``"zero"``, ``"finite"`` or ``"infinite"``.
    """

    kind: str
    value: float = 0.0

    def __post_init__(self):
        if self.kind not in ("zero", "finite", "infinite"):
            raise ValueError(f"bad limit kind {self.kind!r}")
        if self.kind == "finite" and not (self.value > 0 and math.isfinite(self.value)):
            raise ValueError("finite limit needs a positive finite value")

    @classmethod
    def of(cls, value) -> "Limit":
        """Build from a number, ``"inf"``/``"zero"`` strings or a Limit."""
        if isinstance(value, Limit):
            return value
        if isinstance(value, str):
            key = value.strip().lower()
            if key in ("inf", "infinite", "infinity"):
                return cls("infinite", math.inf)
            if key == "zero":
                return cls("zero")
            value = float(key)
        value = float(value)
        if value == 0:
            return cls("zero")
        if math.isinf(value):
            return cls("infinite", math.inf)
        return cls("finite", value)

    @property
    def number(self) -> float:
        return {"zero": 0.0, "infinite": math.inf}.get(self.kind, self.value)

    def to_json(self):
        return {"zero": 0.0, "infinite": "inf"}.get(self.kind, self.value)


def limit_max(limits: Sequence[Limit]) -> Limit:
    return Limit.of(max(l.number for l in limits))


@dataclass(frozen=True, eq=False)
class Nonlinearity:
    """Vector field ``F: R^n_+ -> R^n_+`` acting on the delayed state.

    ``func`` maps arrays of shape ``(..., n)`` to ``(..., n)``.

    Optional declarations (analytic knowledge that overrides estimation):
    ``limits`` is a per-component list of ``(f0, finf)`` Limit pairs;
    ``lipschitz`` maps a ball radius L to a Lipschitz constant K_L;
    ``c1``/``c2`` are global linear bounds ``c1|x| <= f^i(x) <= c2|x|``.
    ``name``/``params`` identify registry nonlinearities for serialization.
    """

    func: Callable = field(repr=False)
    n: int
    label: str = ""
    limits: tuple | None = None
    lipschitz: Callable | None = field(default=None, repr=False)
    c1: float | None = None
    c2: float | None = None
    name: str | None = None
    params: dict = field(default_factory=dict)
    exprs: tuple | None = None

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.asarray(self.func(x), dtype=float)

    @classmethod
    def from_components(cls, comps: Sequence[Callable], **kw) -> "Nonlinearity":
        comps = list(comps)

        def F(x):
            x = np.asarray(x, dtype=float)
            return np.stack([np.broadcast_to(c(x), x.shape[:-1]) for c in comps], axis=-1)

        return cls(F, len(comps), **kw)

    @classmethod
    def from_exprs(cls, exprs: Sequence[str], **kw) -> "Nonlinearity":
        from .expressions import compile_state_exprs

        exprs = tuple(exprs)
        return cls(compile_state_exprs(list(exprs)), len(exprs),
                   label=kw.pop("label", "; ".join(exprs)), exprs=exprs, **kw)

    def replace(self, **changes) -> "Nonlinearity":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True, eq=False)
class DelaySystem:
    """The full periodic delay system. ``lam`` is the parameter lambda."""

    a: tuple
    b: tuple
    F: Nonlinearity
    tau: PeriodicFn
    omega: float
    lam: float = 1.0
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "a", tuple(self.a))
        object.__setattr__(self, "b", tuple(self.b))
        if len(self.a) != len(self.b) or len(self.a) != self.F.n:
            raise ValueError(f"dimension mismatch: {len(self.a)} a's, {len(self.b)} b's, F has n={self.F.n}")
        if not self.omega > 0:
            raise ValueError("omega must be positive")
        for fn in (*self.a, *self.b, self.tau):
            if not math.isclose(fn.period, self.omega, rel_tol=1e-12):
                raise ValueError(f"coefficient {fn.label!r} has period {fn.period}, system has {self.omega}")

    @property
    def n(self) -> int:
        return len(self.a)

    def with_lambda(self, lam: float) -> "DelaySystem":
        return dataclasses.replace(self, lam=float(lam))

    def with_tau(self, tau: PeriodicFn) -> "DelaySystem":
        return dataclasses.replace(self, tau=tau)

    def a_bar(self) -> np.ndarray:
        return np.array([average(f) for f in self.a])

    def b_bar(self) -> np.ndarray:
        return np.array([average(f) for f in self.b])

    def max_delay(self, samples: int = 1024) -> float:
        t = np.linspace(0.0, self.omega, samples, endpoint=False)
        return float(max(np.max(self.tau(t)), 0.0))

    def A(self, t) -> np.ndarray:
        return np.stack([f(t) for f in self.a], axis=-1)

    def B(self, t) -> np.ndarray:
        return np.stack([f(t) for f in self.b], axis=-1)

    def rhs(self, t: float, x: np.ndarray, x_delayed: np.ndarray) -> np.ndarray:
        return -self.A(t) * x + self.lam * self.B(t) * self.F(x_delayed)

    def check_h1(self, samples: int = 512):
        """Raise HypothesisError unless a_i, b_i >= 0 with positive means."""
        problems = []
        t = np.linspace(0.0, self.omega, samples, endpoint=False)
        for name, coeffs in (("a", self.a), ("b", self.b)):
            for i, f in enumerate(coeffs, start=1):
                mean = average(f)
                if not mean > 0:
                    problems.append(f"mean of {name}{i} is {mean:.6g}, must be > 0")
                if np.min(f(t)) < -1e-12:
                    problems.append(f"{name}{i} takes negative values")
        if problems:
            raise HypothesisError("H1 violated: " + "; ".join(problems))

    def check_h2(self, samples: int = 2048, radius: float = 10.0, seed: int = 0):
        """Spot-check f^i >= 0 on R^n_+ and f^i > 0 on its interior.

        Points on the boundary faces are only checked for nonnegativity,
        since feedback terms that ignore a coordinate vanish there.
        """
        rng = np.random.default_rng(seed)
        x = rng.uniform(0.0, radius, size=(samples, self.n))
        face = x.copy()
        face[np.arange(samples), rng.integers(0, self.n, samples)] = 0.0
        fx, ff = self.F(x), self.F(face)
        if not (np.all(np.isfinite(fx)) and np.all(np.isfinite(ff))):
            raise HypothesisError("H2 violated: nonlinearity not finite on R^n_+")
        if np.min(ff) < 0 or np.min(fx) < 0:
            raise HypothesisError("H2 violated: nonlinearity takes negative values")
        if np.any(fx <= 0):
            raise HypothesisError("H2 violated: nonlinearity vanishes at an interior point")
