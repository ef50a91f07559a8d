"""Method-of-steps RK4 integration of the delay system, plus orbit diagnostics.

The integrator uses a fixed step. For a constant delay the step must divide
the delay, so delayed lookups at whole steps land on stored nodes and only
the half-step stage needs interpolation (cubic Hermite from stored states
and slopes). A time-varying delay interpolates every lookup; there is no
alignment with breaking points in that case, so the order drops.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .model import DelaySystem
from .operator import DEFAULT_GRID, PeriodicTrajectory

BLOWUP = 1e12


class HistoryUnderflow(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class HistoryFn:
    """Initial function on ``[-r, 0]`` (relative to the start time)."""

    func: Callable = field(repr=False)
    r: float
    kind: str = "closed-form"
    label: str = ""

    @classmethod
    def constant(cls, value, r: float = 0.0) -> "HistoryFn":
        v = np.atleast_1d(np.asarray(value, dtype=float)).copy()
        return cls(lambda s: v, r, "constant", ",".join(f"{x:g}" for x in v))

    @classmethod
    def from_trajectory(cls, x: PeriodicTrajectory, r: float, t0: float = 0.0) -> "HistoryFn":
        """History that follows a periodic trajectory (absolute phase ``t0 + s``)."""
        return cls(lambda s: x(t0 + s), r, "sampled-with-interpolation", "periodic orbit")

    def __call__(self, s: float) -> np.ndarray:
        return np.asarray(self.func(s), dtype=float)


def _constant_tau(system: DelaySystem) -> float | None:
    t = np.linspace(0.0, system.omega, 257)
    v = system.tau(t)
    return float(v[0]) if np.all(v == v[0]) else None


@dataclass(frozen=True, eq=False)
class SimulationRun:
    times: np.ndarray = field(repr=False)
    states: np.ndarray = field(repr=False)
    slopes: np.ndarray = field(repr=False)
    dt: float
    history: HistoryFn = field(repr=False)
    blew_up: bool = False
    integrator: str = "rk4-fixed"

    @property
    def t0(self) -> float:
        return float(self.times[0])

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    @property
    def n(self) -> int:
        return self.states.shape[1]

    def __call__(self, t) -> np.ndarray:
        """Dense output: Hermite interpolation of the stored steps."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        u = (t - self.t0) / self.dt
        j = np.clip(np.floor(u).astype(int), 0, len(self.times) - 2)
        th = (u - j)[:, None]
        x0, x1 = self.states[j], self.states[j + 1]
        d0, d1 = self.slopes[j], self.slopes[j + 1]
        h00 = (1 + 2 * th) * (1 - th) ** 2
        h10 = th * (1 - th) ** 2
        h01 = th * th * (3 - 2 * th)
        h11 = th * th * (th - 1)
        return h00 * x0 + h10 * self.dt * d0 + h01 * x1 + h11 * self.dt * d1


def simulate(system: DelaySystem, history: HistoryFn, t_end: float, dt: float | None = None,
             t0: float = 0.0) -> SimulationRun:
    """Integrate from ``t0`` to ``t_end`` with classical RK4 and fixed step ``dt``.

    Default step: min(tau, omega)/100 (omega/100 without delay).
    """
    tau_c = _constant_tau(system)
    r = system.max_delay()
    if dt is None:
        dt = min(tau_c, system.omega) / 100 if tau_c else system.omega / 100
    if not dt > 0:
        raise ValueError("dt must be positive")
    if tau_c is not None and tau_c > 0:
        k = tau_c / dt
        if abs(k - round(k)) > 1e-9 * k or round(k) < 10:
            raise ValueError(f"dt={dt} must be tau/k for an integer k >= 10 (tau={tau_c})")
    elif tau_c is None:
        t_probe = np.linspace(0.0, system.omega, 1025)
        if np.min(system.tau(t_probe)) < dt:
            raise ValueError("time-varying delay must stay >= dt")
    if history.r < r - 1e-12 and history.kind != "constant":
        raise HistoryUnderflow(f"history covers [-{history.r}, 0] but the delay reaches {r}")

    steps = int(round((t_end - t0) / dt))
    if steps < 1:
        raise ValueError("t_end must exceed t0 by at least one step")
    n = system.n
    times = t0 + dt * np.arange(steps + 1)
    half = t0 + dt * (np.arange(2 * steps + 1) / 2.0)
    A = system.A(half)
    B = system.lam * system.B(half)
    tau = system.tau(half)
    F = system.F
    states = np.empty((steps + 1, n))
    slopes = np.empty((steps + 1, n))
    states[0] = history(0.0)
    tol = 1e-9 * dt

    def lookup(s: float, upto: int) -> np.ndarray:
        if s <= t0 + tol:
            if s < t0 - max(history.r, r) - tol and history.kind != "constant":
                raise HistoryUnderflow(f"delayed time {s} precedes the history window")
            return history(s - t0)
        u = (s - t0) / dt
        j = int(math.floor(u + 1e-9))
        th = u - j
        if abs(th) < 1e-9:
            return states[j]
        if j + 1 > upto:
            raise ValueError("delayed lookup inside the current step; reduce dt")
        h00 = (1 + 2 * th) * (1 - th) ** 2
        h10 = th * (1 - th) ** 2
        h01 = th * th * (3 - 2 * th)
        h11 = th * th * (th - 1)
        return (h00 * states[j] + h10 * dt * slopes[j] + h01 * states[j + 1]
                + h11 * dt * slopes[j + 1])

    no_delay = tau_c == 0.0

    def f(idx: int, x: np.ndarray, upto: int) -> np.ndarray:
        if no_delay:
            xd = x
        else:
            xd = lookup(half[idx] - tau[idx], upto)
        return -A[idx] * x + B[idx] * F(xd)

    blew_up = False
    last = steps
    for k in range(steps):
        x = states[k]
        k1 = f(2 * k, x, k)
        slopes[k] = k1
        k2 = f(2 * k + 1, x + 0.5 * dt * k1, k)
        k3 = f(2 * k + 1, x + 0.5 * dt * k2, k)
        k4 = f(2 * k + 2, x + dt * k3, k)
        nxt = x + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(nxt)) or np.max(np.abs(nxt)) > BLOWUP:
            blew_up, last = True, k
            break
        states[k + 1] = nxt
    if blew_up:
        slopes[last] = slopes[last - 1] if last else 0.0
    else:
        slopes[last] = f(2 * last, states[last], last)
    return SimulationRun(times[: last + 1], states[: last + 1], slopes[: last + 1], dt,
                         history, blew_up)


@dataclass(frozen=True)
class PeriodicityReport:
    distances: np.ndarray
    converged: bool
    orbit: PeriodicTrajectory
    tol: float


def detect_periodic(run: SimulationRun, omega: float, tol: float = 1e-6,
                    m: int = DEFAULT_GRID) -> PeriodicityReport:
    """Per-period distances ``d_k = sup_{[k w, (k+1) w]} |x(t) - x(t - w)|``.

    The orbit is the last whole period (aligned to multiples of omega)
    resampled onto ``m`` intervals.
    """
    span = run.t_end - run.t0
    periods = int(math.floor(span / omega + 1e-9))
    if periods < 5:
        raise ValueError(f"run covers {span / omega:.2f} periods, need at least 5")
    q = omega / run.dt
    dists = []
    for k in range(1, periods):
        if abs(q - round(q)) < 1e-9 * q:
            q_i = int(round(q))
            seg = run.states[k * q_i:(k + 1) * q_i + 1]
            prev = run.states[(k - 1) * q_i:k * q_i + 1]
        else:
            t = run.t0 + k * omega + np.linspace(0.0, omega, 4 * m + 1)
            seg, prev = run(t), run(t - omega)
        dists.append(float(np.max(np.abs(seg - prev))))
    dists = np.array(dists)
    start = math.floor((run.t_end + 1e-9 * omega) / omega) * omega - omega
    orbit = PeriodicTrajectory.from_function(lambda t: run(start + t), omega, m)
    return PeriodicityReport(dists, bool(dists[-1] < tol), orbit, tol)


@dataclass(frozen=True)
class MergeReport:
    merged: bool
    merge_time: float | None
    final_distance: float
    runs: tuple = field(repr=False)
    diagnosis: str = ""


def trajectories_merge(system: DelaySystem, histories, t_end: float, dt: float | None = None,
                       tol: float = 1e-4, window: float | None = None) -> MergeReport:
    """Simulate from each history and test whether all runs coalesce.

    ``merged`` when the pairwise sup-distance over the final period (or
    ``window``) is below ``tol``; ``merge_time`` is the first time after
    which the running pairwise distance stays below ``tol``.
    """
    histories = list(histories)
    if len(histories) < 2:
        raise ValueError("need at least two histories")
    runs = tuple(simulate(system, h, t_end, dt) for h in histories)
    for i, r in enumerate(runs):
        if r.blew_up:
            return MergeReport(False, None, math.inf, runs, f"run {i} blew up at t={r.t_end:g}")
    D = np.zeros(len(runs[0].times))
    for i in range(len(runs)):
        for j in range(i + 1, len(runs)):
            D = np.maximum(D, np.max(np.abs(runs[i].states - runs[j].states), axis=1))
    window = system.omega if window is None else window
    tail = runs[0].times >= runs[0].t_end - window - 1e-12
    final = float(np.max(D[tail]))
    above = np.flatnonzero(D >= tol)
    if len(above) == 0:
        merge_time = runs[0].t0
    elif above[-1] == len(D) - 1:
        merge_time = None
    else:
        merge_time = float(runs[0].times[above[-1] + 1])
    merged = final < tol
    return MergeReport(merged, merge_time if merged else None, final, runs,
                       "" if merged else f"final-period distance {final:.3g} >= {tol:g}")


@dataclass(frozen=True)
class OrbitMeasure:
    amplitude: np.ndarray
    period: float | None
    resolution: float

    def to_json(self) -> dict:
        return {"amplitude": self.amplitude.tolist(), "period": self.period,
                "resolution": self.resolution}


def _autocorr_period(signal: np.ndarray, step: float) -> float | None:
    x = signal - signal.mean(axis=0)
    var = np.sum(x * x)
    if var <= 1e-24 * max(1.0, np.sum(signal * signal)):
        return None
    N = len(x)
    size = 1 << (2 * N - 1).bit_length()
    spec = np.fft.rfft(x, size, axis=0)
    acf = np.fft.irfft(spec * np.conj(spec), size, axis=0)[:N].sum(axis=1)
    # Pearson normalization: energies of the two overlapping segments
    e = np.concatenate([[0.0], np.cumsum(np.sum(x * x, axis=1))])
    lags = np.arange(N)
    acf = acf / np.sqrt((e[N - lags] - e[0]) * (e[N] - e[lags]))
    half = acf[: N // 2]
    rising = np.flatnonzero(np.diff(half) > 0)
    if len(rising) == 0:
        return None
    tail = half[rising[0]:]
    peak = tail.max()
    k = np.flatnonzero(tail >= peak - 1e-3)[0]
    while k + 1 < len(tail) and tail[k + 1] > tail[k]:
        k += 1
    k += rising[0]
    shift = 0.0
    if 0 < k < len(half) - 1:
        y0, y1, y2 = half[k - 1], half[k], half[k + 1]
        den = y0 - 2 * y1 + y2
        if den < 0:
            shift = 0.5 * (y0 - y2) / den
    return float((k + shift) * step)


def measure_orbit(source, window: float | None = None, omega: float | None = None) -> OrbitMeasure:
    """Amplitude (max - min per component) and autocorrelation period.

    ``source`` is a SimulationRun (the last ``window`` time units are used,
    default 20 omega or the whole run) or a PeriodicTrajectory (tiled over
    eight periods).
    """
    if isinstance(source, PeriodicTrajectory):
        vals = np.vstack([source.values[:-1]] * 8)
        step = source.omega / source.m
        amp = np.ptp(source.values, axis=0)
        return OrbitMeasure(amp, _autocorr_period(vals, step), step)
    run = source
    if window is None:
        window = 20 * (omega or 1.0)
    keep = run.times >= run.t_end - window - 1e-12
    vals = run.states[keep]
    return OrbitMeasure(np.ptp(vals, axis=0), _autocorr_period(vals, run.dt), run.dt)
