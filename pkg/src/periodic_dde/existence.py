"""Existence thresholds and the lambda-interval classification.

Given a periodic delay system, compute sigma_i, Gamma, chi, M(1), m(1) and
the limit classes F0, Finf, then split (0, inf) in lambda into intervals
with a guaranteed number of positive periodic solutions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import qmc

from .model import DelaySystem, Limit, Nonlinearity, limit_max

DEFAULT_SAMPLES = 4096
DEFAULT_LIMIT_RADII = (1e-14, 1e-13, 1e-12, 1e12, 1e13, 1e14)

# Where each kind of interval comes from. The text names the hypothesis
# pattern and which end of the lambda axis it governs.
SOURCES = {
    "large-lambda-index": "i0 in {1,2}: i0 solutions for lam > 1/(m(1) Gamma)",
    "small-lambda-index": "iinf in {1,2}: iinf solutions for 0 < lam < 1/(M(1) chi)",
    "mixed-limits-all-lambda": "i0 = iinf = 1: one solution for every lam > 0",
    "large-lambda-nonexistence": "f >= c1|x|: no solution for lam > 1/(sigma Gamma c1)",
    "small-lambda-nonexistence": "f <= c2|x|: no solution for lam < 1/(c2 chi)",
    "finite-limits-window": "i0 = iinf = 0: one solution for 1/(sigma Gamma max) < lam < 1/(chi min)",
}


class InconclusiveLimitError(ValueError):
    """Numerical limit estimation could not classify a component."""


@dataclass(frozen=True)
class LimitEstimate:
    f0: tuple
    finf: tuple
    F0: Limit
    Finf: Limit
    i0: int
    iinf: int
    source: str  # "declared" or "estimated"


@dataclass(frozen=True)
class Thresholds:
    sigma_i: tuple
    sigma: float
    Gamma: float
    chi: float
    M_of_1: float
    m_of_1: float
    F0: Limit
    Finf: Limit
    i0: int
    iinf: int
    f0: tuple = ()
    finf: tuple = ()
    Mm_source: str = "sampled"
    limits_source: str = "declared"
    c1: float | None = None
    c2: float | None = None

    @property
    def lambda_small(self) -> float:
        """Upper end of the small-lambda window, 1/(M(1) chi)."""
        return 1.0 / (self.M_of_1 * self.chi)

    @property
    def lambda_large(self) -> float:
        """Lower end of the large-lambda window, 1/(m(1) Gamma)."""
        return math.inf if self.m_of_1 <= 0 else 1.0 / (self.m_of_1 * self.Gamma)

    def to_json(self) -> dict:
        return {
            "sigma_i": list(self.sigma_i),
            "sigma": self.sigma,
            "Gamma": self.Gamma,
            "chi": self.chi,
            "M_of_1": self.M_of_1,
            "m_of_1": self.m_of_1,
            "Mm_source": self.Mm_source,
            "f0": [l.to_json() for l in self.f0],
            "finf": [l.to_json() for l in self.finf],
            "F0": self.F0.to_json(),
            "Finf": self.Finf.to_json(),
            "i0": self.i0,
            "iinf": self.iinf,
            "limits_source": self.limits_source,
            "c1": self.c1,
            "c2": self.c2,
            "lambda_small": _num(self.lambda_small),
            "lambda_large": _num(self.lambda_large),
        }


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float
    lo_open: bool
    hi_open: bool
    count: object  # 0, 1, 2 or "unknown"
    sources: tuple = ()

    def contains(self, lam: float) -> bool:
        above = lam > self.lo if self.lo_open else lam >= self.lo
        below = lam < self.hi if self.hi_open else lam <= self.hi
        return above and below

    def to_json(self) -> dict:
        return {"lo": _num(self.lo), "hi": _num(self.hi), "lo_open": self.lo_open,
                "hi_open": self.hi_open, "count": self.count,
                "source": "; ".join(self.sources) if self.sources else "none"}


@dataclass(frozen=True)
class ExistenceReport:
    thresholds: Thresholds
    intervals: tuple
    lam: float
    verdict: object = field(default="unknown")

    def interval_for(self, lam: float) -> Interval:
        for iv in self.intervals:
            if iv.contains(lam):
                return iv
        raise ValueError(f"lambda={lam} is not positive")

    def count_at(self, lam: float):
        return self.interval_for(lam).count

    def to_json(self) -> dict:
        iv = self.interval_for(self.lam)
        return {"thresholds": self.thresholds.to_json(),
                "intervals": [i.to_json() for i in self.intervals],
                "lambda": self.lam,
                "verdict": self.verdict,
                "verdict_interval": iv.to_json()}


def _num(x: float):
    return "inf" if math.isinf(x) else x


def compute_sigma(system: DelaySystem) -> tuple[np.ndarray, float]:
    """Per-component decay factors exp(-mean(a_i) omega) and their minimum."""
    system.check_h1()
    sig = np.exp(-system.a_bar() * system.omega)
    return sig, float(sig.min())


def compute_gamma_chi(system: DelaySystem) -> tuple[float, float]:
    system.check_h1()
    abar, bbar, w = system.a_bar(), system.b_bar(), system.omega
    # 1/(sigma_i^-1 - 1) = 1/expm1(abar w)
    inv = 1.0 / np.expm1(abar * w)
    gamma = float(np.min(inv * bbar * w))
    chi = float(np.sum(np.exp(abar * w) * inv * bbar * w))
    return gamma, chi


def simplex_directions(n: int, count: int, seed: int = 0) -> np.ndarray:
    """Deterministic low-discrepancy points on the unit l1 simplex in R^n_+.

    Always includes the vertices and the barycenter.
    """
    fixed = np.vstack([np.eye(n), np.full((1, n), 1.0 / n)])
    if n == 1:
        return np.ones((1, 1))
    m = max(count - len(fixed), 0)
    if m == 0:
        return fixed
    u = qmc.Halton(d=n - 1, scramble=True, seed=seed).random(m)
    u = np.sort(u, axis=1)
    edges = np.hstack([np.zeros((m, 1)), u, np.ones((m, 1))])
    d = np.diff(edges, axis=1)
    return np.vstack([fixed, d])


@dataclass(frozen=True)
class MmEstimate:
    M: float
    m: float
    source: str  # "sampled" or "declared"


def estimate_M_m(F: Nonlinearity, r: float, sigma: float, samples: int = DEFAULT_SAMPLES,
                 declared: tuple | None = None) -> MmEstimate:
    """Max of f^i over the l1 ball of radius r, min over the annulus [sigma r, r].

    Points are a product of simplex directions and radii that include both
    ends of each radial range, so radially monotone f are evaluated exactly
    at their extremes.
    """
    if declared is not None:
        return MmEstimate(float(declared[0]), float(declared[1]), "declared")
    if not r > 0:
        raise ValueError("r must be positive")
    if not 0 < sigma < 1:
        raise ValueError("sigma must lie in (0, 1)")
    n = F.n
    if n == 1:
        n_dir, n_rad = 1, samples
    else:
        n_rad = max(int(math.sqrt(samples)), 2)
        n_dir = max(samples // n_rad, n + 1)
    dirs = simplex_directions(n, n_dir)
    out = []
    for lo in (0.0, sigma * r):
        rho = np.linspace(lo, r, n_rad)
        x = rho[:, None, None] * dirs[None, :, :]
        fx = F(x.reshape(-1, n))
        if not np.all(np.isfinite(fx)):
            raise ValueError("nonlinearity is not finite at a sample point")
        out.append(fx)
    return MmEstimate(float(out[0].max()), float(out[1].min()), "sampled")


def _classify_ratios(ratios: np.ndarray) -> Limit | None:
    """``ratios`` ordered from the outermost radius inward toward the limit."""
    r = np.asarray(ratios, dtype=float)
    # moving toward the limit point the ratio must keep shrinking / growing
    if np.all(r < 1e-4) and np.all(np.diff(r) <= 0):
        return Limit("zero")
    if np.all(r > 1e4) and np.all(np.diff(r) >= 0):
        return Limit("infinite", math.inf)
    if np.all(r > 0) and (r.max() - r.min()) <= 0.05 * r.min():
        return Limit("finite", float(np.mean(r)))
    return None


def estimate_limits(F: Nonlinearity, directions: int = 64,
                    radii=DEFAULT_LIMIT_RADII) -> LimitEstimate:
    """Classify f^i(x)/|x| as |x| -> 0 and |x| -> inf for every component."""
    if F.limits is not None:
        f0 = tuple(Limit.of(p[0]) for p in F.limits)
        finf = tuple(Limit.of(p[1]) for p in F.limits)
        source = "declared"
    else:
        radii = np.sort(np.asarray(radii, dtype=float))
        small, large = radii[radii <= 1e-3], radii[radii >= 1e3]
        if len(small) < 3 or len(large) < 3:
            raise ValueError("need at least three radii <= 1e-3 and three >= 1e3")
        dirs = simplex_directions(F.n, directions)

        def mean_ratio(rho):
            return F(rho * dirs).mean(axis=0) / rho

        small3 = np.array([mean_ratio(r) for r in small[:3][::-1]])  # outward -> 0
        large3 = np.array([mean_ratio(r) for r in large[-3:]])  # outward -> inf
        f0, finf, bad = [], [], []
        for i in range(F.n):
            lo = _classify_ratios(small3[:, i])
            hi = _classify_ratios(large3[:, i])
            if lo is None:
                bad.append(f"f0 of component {i + 1}")
            if hi is None:
                bad.append(f"finf of component {i + 1}")
            f0.append(lo)
            finf.append(hi)
        if bad:
            raise InconclusiveLimitError(
                "cannot classify " + ", ".join(bad) + "; declare limits on the nonlinearity")
        f0, finf, source = tuple(f0), tuple(finf), "estimated"
    F0, Finf = limit_max(f0), limit_max(finf)
    pair = (F0, Finf)
    i0 = sum(l.kind == "zero" for l in pair)
    iinf = sum(l.kind == "infinite" for l in pair)
    return LimitEstimate(f0, finf, F0, Finf, i0, iinf, source)


def compute_thresholds(system: DelaySystem, samples: int = DEFAULT_SAMPLES,
                       declared_Mm: tuple | None = None) -> Thresholds:
    system.check_h1()
    sig_i, sig = compute_sigma(system)
    gamma, chi = compute_gamma_chi(system)
    Mm = estimate_M_m(system.F, 1.0, sig, samples, declared_Mm)
    lim = estimate_limits(system.F)
    return Thresholds(tuple(float(s) for s in sig_i), sig, gamma, chi, Mm.M, Mm.m,
                      lim.F0, lim.Finf, lim.i0, lim.iinf, lim.f0, lim.finf,
                      Mm.source, lim.source, system.F.c1, system.F.c2)


def _claims(th: Thresholds) -> list[tuple]:
    """Open lambda intervals (lo, hi, count, source) asserted by the theory."""
    claims = []
    if th.i0 in (1, 2) and th.m_of_1 > 0:
        claims.append((th.lambda_large, math.inf, th.i0, "large-lambda-index"))
    if th.iinf in (1, 2):
        claims.append((0.0, th.lambda_small, th.iinf, "small-lambda-index"))
    if th.i0 == 1 and th.iinf == 1:
        claims.append((0.0, math.inf, 1, "mixed-limits-all-lambda"))
    if th.c1 is not None:
        claims.append((1.0 / (th.sigma * th.Gamma * th.c1), math.inf, 0, "large-lambda-nonexistence"))
    if th.c2 is not None:
        claims.append((0.0, 1.0 / (th.c2 * th.chi), 0, "small-lambda-nonexistence"))
    if th.i0 == 0 and th.iinf == 0:
        hi_lim = max(th.F0.number, th.Finf.number)
        lo_lim = min(th.F0.number, th.Finf.number)
        lo, hi = 1.0 / (th.sigma * th.Gamma * hi_lim), 1.0 / (th.chi * lo_lim)
        if lo < hi:
            claims.append((lo, hi, 1, "finite-limits-window"))
    return claims


def _combine(covering: list[tuple]):
    if not covering:
        return "unknown", ()
    counts = {c[2] for c in covering}
    if 0 in counts and len(counts) > 1:
        raise ValueError("declared linear bounds contradict the existence intervals: "
                         + ", ".join(c[3] for c in covering))
    return max(counts), tuple(sorted({c[3] for c in covering}))


def decompose(claims: list[tuple]) -> tuple:
    """Split (0, inf) into pieces with a single guaranteed count."""
    points = sorted({p for c in claims for p in c[:2] if 0 < p < math.inf})
    edges = [0.0, *points, math.inf]
    pieces = []
    for j in range(len(edges) - 1):
        lo, hi = edges[j], edges[j + 1]
        if j > 0:
            cov = [c for c in claims if c[0] < lo < c[1]]
            pieces.append(Interval(lo, lo, False, False, *_combine(cov)))
        cov = [c for c in claims if c[0] <= lo and c[1] >= hi]
        pieces.append(Interval(lo, hi, True, True, *_combine(cov)))
    merged = [pieces[0]]
    for p in pieces[1:]:
        q = merged[-1]
        if p.count == q.count and p.sources == q.sources:
            merged[-1] = Interval(q.lo, p.hi, q.lo_open, p.hi_open, q.count, q.sources)
        else:
            merged.append(p)
    return tuple(merged)


def classify(system: DelaySystem, thresholds: Thresholds | None = None) -> ExistenceReport:
    """Interval decomposition in lambda and the count at ``system.lam``."""
    th = thresholds if thresholds is not None else compute_thresholds(system)
    intervals = decompose(_claims(th))
    report = ExistenceReport(th, intervals, system.lam)
    return ExistenceReport(th, intervals, system.lam, report.count_at(system.lam))
