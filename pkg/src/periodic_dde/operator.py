"""Green-kernel fixed-point operator for periodic solutions.

For x periodic, component i of the operator is

    (T x)_i(t) = lam * ∫_t^{t+omega} G_i(t, s) b_i(s) f^i(x(s - tau(s))) ds,
    G_i(t, s) = exp(∫_t^s a_i) / (exp(mean(a_i) omega) - 1),

and x is a positive periodic solution exactly when T x = x.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .existence import compute_gamma_chi, compute_sigma, estimate_M_m
from .model import DelaySystem
from .periodic import DEFAULT_RULE, QuadratureRule, exponent_integral

DEFAULT_GRID = 256
BLOWUP = 1e12


class NumericalFailure(RuntimeError):
    """NaN or unrecoverable breakdown inside an iteration."""


def _periodic_slopes(values: np.ndarray, h: float) -> np.ndarray:
    """Fourth-order centered differences of closed periodic samples."""
    v = values[:-1]
    d = (-np.roll(v, -2, 0) + 8 * np.roll(v, -1, 0) - 8 * np.roll(v, 1, 0) + np.roll(v, 2, 0)) / (12 * h)
    return np.vstack([d, d[:1]])


@dataclass(frozen=True, eq=False)
class PeriodicTrajectory:
    """Samples of an omega-periodic curve on ``m + 1`` uniform nodes.

    ``values[0]`` and ``values[-1]`` coincide (periodic closure).
    """

    omega: float
    values: np.ndarray = field(repr=False)
    interpolation: str = "cubic-hermite"

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if v.shape[0] < 3:
            raise ValueError("need at least two grid intervals")
        if self.interpolation not in ("cubic-hermite", "linear"):
            raise ValueError(f"unknown interpolation {self.interpolation!r}")
        scale = 1.0 + np.max(np.abs(v))
        if np.max(np.abs(v[-1] - v[0])) > 1e-12 * scale:
            raise ValueError("trajectory is not periodically closed")
        v[-1] = v[0]
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, func, omega: float, m: int = DEFAULT_GRID, **kw) -> "PeriodicTrajectory":
        t = np.linspace(0.0, omega, m + 1)
        v = np.asarray(func(t), dtype=float).reshape(m + 1, -1)
        v[-1] = v[0]
        return cls(omega, v, **kw)

    @classmethod
    def constant(cls, value, omega: float, m: int = DEFAULT_GRID) -> "PeriodicTrajectory":
        value = np.atleast_1d(np.asarray(value, dtype=float))
        return cls(omega, np.tile(value, (m + 1, 1)))

    @property
    def n(self) -> int:
        return self.values.shape[1]

    @property
    def m(self) -> int:
        return self.values.shape[0] - 1

    @property
    def grid(self) -> np.ndarray:
        return np.linspace(0.0, self.omega, self.m + 1)

    @property
    def sup(self) -> np.ndarray:
        """Per-component sup of |x_i|."""
        return np.max(np.abs(self.values), axis=0)

    def norm(self) -> float:
        """Sum over components of sup_t |x_i(t)|."""
        return float(np.sum(self.sup))

    def slopes(self) -> np.ndarray:
        return _periodic_slopes(self.values, self.omega / self.m)

    def _spline(self):
        spline = self.__dict__.get("_spline_cache")
        if spline is None:
            spline = CubicHermiteSpline(self.grid, self.values, self.slopes(), axis=0)
            self.__dict__["_spline_cache"] = spline
        return spline

    def __call__(self, t) -> np.ndarray:
        """Values at arbitrary times (reduced modulo omega), shape ``(..., n)``."""
        t = np.asarray(t, dtype=float)
        u = np.mod(t, self.omega)
        if self.interpolation == "linear":
            out = np.stack([np.interp(u.ravel(), self.grid, self.values[:, i])
                            for i in range(self.n)], axis=-1)
            return out.reshape(*t.shape, self.n)
        return self._spline()(u)

    def with_values(self, values) -> "PeriodicTrajectory":
        return PeriodicTrajectory(self.omega, values, self.interpolation)

    def resample(self, m: int) -> "PeriodicTrajectory":
        return PeriodicTrajectory.from_function(self, self.omega, m, interpolation=self.interpolation)


def green_kernel(system: DelaySystem, i: int, t, s):
    """G_i(t, s) for component ``i`` (0-based), vectorized over t and s."""
    abar = system.a_bar()[i]
    return np.exp(exponent_integral(system.a[i], t, s)) / math.expm1(abar * system.omega)


def kernel_bounds(system: DelaySystem) -> np.ndarray:
    """Rows ``(lower, upper)`` of the kernel on ``t <= s <= t + omega``."""
    sig, _ = compute_sigma(system)
    inv = 1.0 / (1.0 / sig - 1.0)
    return np.stack([inv, inv / sig], axis=1)


def _integrand(system: DelaySystem, x: PeriodicTrajectory, s: np.ndarray) -> np.ndarray:
    """b_i(s) f^i(x(s - tau(s))) at nodes ``s``; shape ``s.shape + (n,)``."""
    delayed = x(np.mod(s - system.tau(s), system.omega))
    g = system.B(s) * system.F(delayed)
    if not np.all(np.isfinite(g)):
        raise NumericalFailure("operator integrand is not finite")
    if np.min(g) < 0:
        raise ValueError("negative operator integrand: b_i f^i must be nonnegative")
    return g


def evaluate_T(system: DelaySystem, x: PeriodicTrajectory, times,
               rule: QuadratureRule = DEFAULT_RULE) -> np.ndarray:
    """Direct quadrature of the operator at arbitrary times.

    No periodic reduction is applied to the kernel-weighted integral; this is
    the reference path that :func:`apply_T` is checked against.
    """
    times = np.atleast_1d(np.asarray(times, dtype=float))
    base, w = rule.nodes_weights(0.0, system.omega)
    s = times[:, None] + base[None, :]
    g = _integrand(system, x, s)
    abar = system.a_bar()
    out = np.empty((len(times), system.n))
    for i in range(system.n):
        G = np.exp(exponent_integral(system.a[i], times[:, None], s)) / math.expm1(abar[i] * system.omega)
        out[:, i] = system.lam * (G * g[..., i]) @ w
    return out


@lru_cache(maxsize=32)
def _operator_matrices(system: DelaySystem, m: int, panels: int):
    """Weight matrices mapping integrand samples on the node lattice to T(x)."""
    N = 2 * panels
    q = N // m
    h = system.omega / N
    _, w = QuadratureRule("composite-simpson", panels).nodes_weights(0.0, system.omega)
    lattice = np.arange(q * m + N + 1) * h
    abar = system.a_bar()
    k = np.arange(m + 1)
    j = np.arange(N + 1)
    idx = q * k[:, None] + j[None, :]
    mats = []
    for i in range(system.n):
        A = system.a[i].antiderivative(lattice)
        G = np.exp(A[idx] - A[q * k][:, None]) / math.expm1(abar[i] * system.omega)
        W = np.zeros((m + 1, N))
        rows = np.broadcast_to(k[:, None], idx.shape)
        np.add.at(W, (rows, idx % N), w[None, :] * G)
        mats.append(W)
    s_nodes = np.arange(N) * h
    return mats, s_nodes


def _lattice_ok(rule: QuadratureRule, m: int) -> bool:
    return rule.kind == "composite-simpson" and (2 * rule.panels) % m == 0


def apply_T(system: DelaySystem, x: PeriodicTrajectory,
            rule: QuadratureRule = DEFAULT_RULE) -> PeriodicTrajectory:
    """One application of the operator, sampled on the grid of ``x``."""
    if x.n != system.n:
        raise ValueError(f"trajectory has {x.n} components, system has {system.n}")
    if _lattice_ok(rule, x.m):
        mats, s_nodes = _operator_matrices(system, x.m, rule.panels)
        g = _integrand(system, x, s_nodes)
        vals = np.stack([system.lam * (W @ g[:, i]) for i, W in enumerate(mats)], axis=1)
    else:
        vals = evaluate_T(system, x, x.grid, rule)
    scale = 1.0 + np.max(np.abs(vals))
    if np.max(np.abs(vals[-1] - vals[0])) > 1e-10 * scale:
        raise NumericalFailure("operator output lost periodic closure")
    vals[-1] = vals[0]
    return x.with_values(vals)


def cone_membership(x: PeriodicTrajectory, sigma_i, tol: float = 1e-10) -> tuple[bool, float]:
    """Whether ``x_i(t) >= sigma_i sup|x_i|`` for all i, and the worst margin."""
    sigma_i = np.asarray(sigma_i, dtype=float)
    margin = np.min(x.values, axis=0) - sigma_i * np.max(x.values, axis=0)
    worst = float(np.min(margin))
    return bool(worst >= -tol and np.min(x.values) >= -tol), worst


def residual_ode(system: DelaySystem, x: PeriodicTrajectory) -> float:
    """Sup over the grid of |x' + A x - lam B F(x(t - tau))|."""
    t = x.grid[:-1]
    delayed = x(np.mod(t - system.tau(t), system.omega))
    r = x.slopes()[:-1] + system.A(t) * x.values[:-1] - system.lam * system.B(t) * system.F(delayed)
    return float(np.max(np.abs(r)))


@dataclass(frozen=True)
class FixedPointResult:
    solution: PeriodicTrajectory
    residual_operator: float
    residual_ode: float
    iterations: int
    converged: bool
    cone_ok: bool
    cone_margin: float
    diverged: bool = False
    damping: float = 1.0
    history: tuple = ()

    def to_json(self) -> dict:
        return {"residual_operator": self.residual_operator, "residual_ode": self.residual_ode,
                "iterations": self.iterations, "converged": self.converged,
                "diverged": self.diverged, "cone_ok": self.cone_ok,
                "cone_margin": self.cone_margin, "damping": self.damping,
                "omega": self.solution.omega, "grid": self.solution.m,
                "sup": self.solution.sup.tolist(), "norm": self.solution.norm()}


def _newton(system, x, rule, tol, max_iter, fd_step=1e-7):
    """Newton on ``T(x) - x`` over the free grid values, FD Jacobian, backtracking."""
    m, n = x.m, x.n

    def close(v):
        v = v.reshape(m, n)
        return x.with_values(np.vstack([v, v[:1]]))

    def resid(v):
        return apply_T(system, close(v), rule).values[:-1].ravel() - v

    v = x.values[:-1].ravel().copy()
    r = resid(v)
    hist = []
    eye = np.eye(v.size)
    for it in range(1, max_iter + 1):
        res = float(np.max(np.abs(r)))
        hist.append(res)
        if res < tol:
            return close(v), res, it, True, tuple(hist)
        J = np.empty((v.size, v.size))
        for k in range(v.size):
            e = v.copy()
            e[k] += fd_step * max(1.0, abs(v[k]))
            J[:, k] = (resid(e) - r) / (e[k] - v[k])
        try:
            step = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError:
            break
        lam = 1.0
        for _ in range(20):
            trial = v + lam * step
            if np.min(trial) >= 0:
                r_trial = resid(trial)
                if np.max(np.abs(r_trial)) < res:
                    break
            lam *= 0.5
        else:
            break
        v, r = trial, r_trial
    res = float(np.max(np.abs(r)))
    return close(v), res, max_iter, res < tol, tuple(hist)


def solve_fixed_point(system: DelaySystem, x0: PeriodicTrajectory | None = None,
                      tol: float = 1e-10, max_iter: int = 2000, damping: float = 0.5,
                      rule: QuadratureRule = DEFAULT_RULE, method: str = "auto",
                      newton_iter: int = 30) -> FixedPointResult:
    """Find a fixed point of the operator starting from ``x0``.

    ``method="picard"`` iterates ``x <- (1-d) x + d T(x)``; the damping is
    halved after five consecutive residual increases. ``"newton"`` runs
    Newton's method on ``T(x) - x`` with a finite-difference Jacobian.
    ``"auto"`` runs Picard and hands its best iterate to Newton when Picard
    stalls, which happens when the linearized operator has eigenvalues with
    real part above one (strong delayed negative feedback).

    Convergence means ``sup|T x - x| < tol``.
    """
    if method not in ("auto", "picard", "newton"):
        raise ValueError(f"unknown method {method!r}")
    if not 0 < damping <= 1:
        raise ValueError("damping must lie in (0, 1]")
    if not tol > 0:
        raise ValueError("tol must be positive")
    if x0 is None:
        x0 = PeriodicTrajectory.constant(np.full(system.n, 0.1), system.omega)
    if np.min(x0.values) < 0:
        raise ValueError("initial guess must be nonnegative")
    sig, _ = compute_sigma(system)
    x, d = x0, damping
    best, best_x, best_it = math.inf, x0, 0
    hist = []
    converged = diverged = False
    rises = 0
    res = math.inf
    it = 0
    picard_iter = 0 if method == "newton" else max_iter
    for it in range(1, picard_iter + 1):
        tx = apply_T(system, x, rule)
        res = float(np.max(np.abs(tx.values - x.values)))
        if not math.isfinite(res):
            raise NumericalFailure(f"NaN in Picard iteration {it}")
        hist.append(res)
        if res < best:
            best, best_x, best_it = res, x, it
        if res < tol:
            converged = True
            break
        if tx.norm() > BLOWUP:
            diverged = True
            break
        rises = rises + 1 if len(hist) > 1 and res > hist[-2] else 0
        if rises >= 5 and d > 1.0 / 64:
            d, rises = 0.5 * d, 0
        if method == "auto" and it - best_it > 200:
            break
        x = x.with_values((1 - d) * x.values + d * tx.values)
    if not converged and not diverged and method in ("auto", "newton"):
        start = best_x if method == "auto" else x0
        x, res, n_it, converged, nh = _newton(system, start, rule, tol, newton_iter)
        hist.extend(nh)
        it += n_it
    ok, margin = cone_membership(x, sig)
    return FixedPointResult(x, res, residual_ode(system, x), it, converged, ok, margin,
                            diverged, d, tuple(hist))


def random_cone_element(sigma_i, r: float, omega: float, rng: np.random.Generator,
                        m: int = DEFAULT_GRID, harmonics: int = 4) -> PeriodicTrajectory:
    """Random smooth cone element with ``sum_i sup x_i = r``."""
    sigma_i = np.asarray(sigma_i, dtype=float)
    n = len(sigma_i)
    sups = r * rng.dirichlet(np.ones(n))
    t = np.linspace(0.0, omega, m + 1)
    vals = np.empty((m + 1, n))
    for i in range(n):
        k = np.arange(1, harmonics + 1)
        c = rng.normal(size=harmonics) / k
        ph = rng.uniform(0, 2 * np.pi, harmonics)
        p = np.cos(2 * np.pi * np.outer(t / omega, k) + ph) @ c
        u = (p - p.min()) / (p.max() - p.min())
        vals[:, i] = sups[i] * (sigma_i[i] + (1 - sigma_i[i]) * u)
    vals[-1] = vals[0]
    return PeriodicTrajectory(omega, vals)


@dataclass(frozen=True)
class BoundReport:
    r: float
    lower: float
    upper: float
    norms: tuple
    lower_slack: float  # min of |Tx| - lam Gamma m(r)
    upper_slack: float  # min of lam chi M(r) - |Tx|
    eta_slack: float  # min of |Tx| - lam sigma Gamma eta |x|
    eps_slack: float  # min of lam chi eps |x| - |Tx|
    ok: bool
    witness: int | None = None

    def to_json(self) -> dict:
        d = {k: getattr(self, k) for k in ("r", "lower", "upper", "lower_slack", "upper_slack",
                                           "eta_slack", "eps_slack", "ok", "witness")}
        d["samples"] = len(self.norms)
        return d


def operator_bound_checks(system: DelaySystem, r: float, samples: int = 50, seed: int = 0,
                          tol: float = 1e-8, elements=None) -> BoundReport:
    """Check the operator-norm sandwich on sampled cone elements of norm r.

    For every element x:  lam Gamma m(r) <= |T x| <= lam chi M(r), and with
    eta = max_i min_t f^i(x)/sum x, eps = max_i max_t f^i(x)/sum x,
    lam sigma Gamma eta |x| <= |T x| <= lam chi eps |x|.
    """
    if not r > 0:
        raise ValueError("r must be positive")
    sig_i, sig = compute_sigma(system)
    gamma, chi = compute_gamma_chi(system)
    Mm = estimate_M_m(system.F, r, sig)
    lam = system.lam
    lower, upper = lam * gamma * Mm.m, lam * chi * Mm.M
    rng = np.random.default_rng(seed)
    if elements is None:
        elements = [random_cone_element(sig_i, r, system.omega, rng) for _ in range(samples)]
    norms, lo_s, up_s, eta_s, eps_s = [], [], [], [], []
    for x in elements:
        tn = apply_T(system, x).norm()
        fx = system.F(x.values)
        tot = np.sum(x.values, axis=1, keepdims=True)
        ratio = fx / tot
        eta = float(np.max(np.min(ratio, axis=0)))
        eps = float(np.max(ratio))
        norms.append(tn)
        lo_s.append(tn - lower)
        up_s.append(upper - tn)
        eta_s.append(tn - lam * sig * gamma * eta * x.norm())
        eps_s.append(lam * chi * eps * x.norm() - tn)
    worst = np.min(np.vstack([lo_s, up_s, eta_s, eps_s]), axis=0)
    ok = bool(np.all(worst >= -tol))
    witness = None if ok else int(np.argmin(worst))
    return BoundReport(r, lower, upper, tuple(norms), min(lo_s), min(up_s), min(eta_s),
                       min(eps_s), ok, witness)


def with_grid(x: PeriodicTrajectory, m: int) -> PeriodicTrajectory:
    return x if x.m == m else x.resample(m)


__all__ = [
    "PeriodicTrajectory", "FixedPointResult", "BoundReport", "NumericalFailure",
    "green_kernel", "kernel_bounds", "evaluate_T", "apply_T", "cone_membership",
    "residual_ode", "solve_fixed_point", "random_cone_element", "operator_bound_checks",
    "with_grid",
]
