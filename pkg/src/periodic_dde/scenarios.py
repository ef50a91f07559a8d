"""Built-in model registry: the feedback systems and the delayed exponential system."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .model import DelaySystem, Limit, Nonlinearity
from .periodic import PeriodicFn

INF, ZERO = Limit("infinite", float("inf")), Limit("zero")

PARAMETER_SETS = {
    "small": {"a": 0.2, "b": 2.0, "c": 0.02, "theta": 0.02},
    "medium": {"a": 5.0, "b": 4.0, "c": 1.2, "theta": 0.5},
    "large": {"a": 20.0, "b": 4.0, "c": 8.0, "theta": 0.5},
}


def _exp_sum(x):
    return np.exp(-np.sum(x, axis=-1))


def nonlinearity(name: str, n: int = 2, **params) -> Nonlinearity:
    """Look up a named nonlinearity. Names: delayed-exp, negative-feedback, positive-feedback."""
    if name == "delayed-exp":
        return Nonlinearity(lambda x: np.repeat(_exp_sum(x)[..., None], n, axis=-1), n,
                            label="exp(-sum x)", limits=((INF, ZERO),) * n,
                            lipschitz=lambda L: 2.0, name=name, params={"n": n})
    theta = float(params["theta"])
    th2 = theta * theta
    if name == "negative-feedback":
        first = lambda x: th2 / (th2 + x[..., 1] ** 2)
        limits = ((INF, ZERO), (INF, ZERO))
    elif name == "positive-feedback":
        first = lambda x: x[..., 1] ** 2 / (th2 + x[..., 1] ** 2)
        limits = ((ZERO, ZERO), (INF, ZERO))
    else:
        raise KeyError(f"unknown nonlinearity {name!r}")
    return Nonlinearity(lambda x: np.stack([first(x), _exp_sum(x)], axis=-1), 2,
                        label=f"{name} theta={theta}", limits=limits,
                        name=name, params={"theta": theta})


def feedback_system(kind: str, a: float, b: float, c: float, theta: float,
                    h: str = "1+0.6*sin(2*pi*t)") -> DelaySystem:
    """x' = a f(y) - b x,  y' = c exp(-(x+y)) - h(t) y  (no delay, lam = 1)."""
    w = 1.0
    return DelaySystem(
        a=(PeriodicFn.constant(b, w, "b"), PeriodicFn.from_expr(h, w, "h")),
        b=(PeriodicFn.constant(a, w, "a"), PeriodicFn.constant(c, w, "c")),
        F=nonlinearity(kind, theta=theta),
        tau=PeriodicFn.constant(0.0, w, "tau"),
        omega=w, lam=1.0, label=f"{kind} a={a} b={b} c={c} theta={theta}")


DELAYED_EXP_COEFFS = {
    "a": ("5+sin(2*pi*t)", "5+cos(2*pi*t)"),
    "b": ("1+0.6*cos(2*pi*t)", "1+0.5*sin(2*pi*t)"),
}


def delayed_exp_system(lam: float = 0.1, tau: float = 0.1) -> DelaySystem:
    w = 1.0
    return DelaySystem(
        a=tuple(PeriodicFn.from_expr(e, w, f"a{i + 1}") for i, e in enumerate(DELAYED_EXP_COEFFS["a"])),
        b=tuple(PeriodicFn.from_expr(e, w, f"b{i + 1}") for i, e in enumerate(DELAYED_EXP_COEFFS["b"])),
        F=nonlinearity("delayed-exp"),
        tau=PeriodicFn.constant(tau, w, "tau"),
        omega=w, lam=float(lam), label=f"delayed-exp lam={lam} tau={tau}")


@dataclass(frozen=True)
class ScenarioDef:
    id: str
    description: str
    factory: Callable = field(repr=False)
    defaults: dict = field(default_factory=dict)
    variants: tuple = ()
    figure_refs: tuple = ()
    default_histories: tuple = ()

    def build(self, **overrides) -> DelaySystem:
        params = {**self.defaults, **{k: v for k, v in overrides.items() if v is not None}}
        return self.factory(**params)


def _feedback_factory(kind):
    def build(param_set: str = "small", lam: float = 1.0, tau: float = 0.0, **explicit):
        p = dict(PARAMETER_SETS[param_set])
        p.update({k: v for k, v in explicit.items() if k in p and v is not None})
        sys = feedback_system(kind, **p)
        sys = sys.with_lambda(lam)
        if tau:
            sys = sys.with_tau(PeriodicFn.constant(tau, 1.0, "tau"))
        return sys
    return build


def _delayed_factory(lam: float = 0.1, tau: float = 0.1, **_):
    return delayed_exp_system(lam, tau)


_REGISTRY = (
    ScenarioDef(
        "negative-feedback",
        "x' = a f(y) - b x, y' = c exp(-(x+y)) - h(t) y with f(y) = theta^2/(theta^2+y^2)",
        _feedback_factory("negative-feedback"),
        {"param_set": "small"},
        tuple({"param_set": k} for k in PARAMETER_SETS),
        ("4.1", "4.2", "4.4"),
        ((0.02, 0.08), (0.07, 0.03)),
    ),
    ScenarioDef(
        "positive-feedback",
        "x' = a f(y) - b x, y' = c exp(-(x+y)) - h(t) y with f(y) = y^2/(theta^2+y^2)",
        _feedback_factory("positive-feedback"),
        {"param_set": "small"},
        tuple({"param_set": k} for k in PARAMETER_SETS),
        ("4.3", "4.4"),
        ((0.07, 0.05), (0.01, 0.09)),
    ),
    ScenarioDef(
        "delayed-exp",
        "x_i' = -a_i(t) x_i + lam b_i(t) exp(-(x1+x2)(t - tau)), periodic a_i, b_i",
        _delayed_factory,
        {"lam": 0.1, "tau": 0.1},
        tuple({"lam": lam, "tau": tau} for lam in (0.1, 401.0) for tau in (0.1, 5.0, 10.0)),
        ("5.1", "5.2", "5.3", "5.4"),
        ((0.02, 0.08), (0.07, 0.01)),
    ),
)


def registry() -> list[ScenarioDef]:
    return list(_REGISTRY)


def get(scenario_id: str) -> ScenarioDef:
    for s in _REGISTRY:
        if s.id == scenario_id:
            return s
    raise KeyError(f"unknown scenario {scenario_id!r}; known: {', '.join(s.id for s in _REGISTRY)}")
