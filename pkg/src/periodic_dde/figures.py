"""Figure reproduction: each target runs simulations and writes CSV, SVG and a JSON summary.

Targets are keyed by caption content:

    4.1  negative feedback, parameter sets small and medium: periodic orbit
    4.2  negative feedback: two history pairs merge (small / medium sets)
    4.3  positive feedback: two history pairs merge (small / medium sets)
    4.4  large set, negative and positive feedback: one history pair each
    5.1  delayed exponential system, lam = 0.1 and 401, tau = 0.1
    5.2  lam = 0.1: histories (0.02, 0.08) and (0.07, 0.01) merge
    5.3  lam = 401: histories (1, 4) and (3, 2) merge
    5.4  delay effect: lam in {0.1, 401} with tau in {5, 10}
"""
from __future__ import annotations

from pathlib import Path

from . import io
from .scenarios import delayed_exp_system, feedback_system, PARAMETER_SETS
from .simulator import HistoryFn, detect_periodic, measure_orbit, simulate, trajectories_merge

T_END = 40.0


def _tag(v) -> str:
    return ",".join(f"{x:g}" for x in v)


def _merge_panel(system, histories, out: Path, stem: str, title: str, t_end=T_END, dt=None):
    hs = [HistoryFn.constant(h, system.max_delay()) for h in histories]
    rep = trajectories_merge(system, hs, t_end, dt)
    files, series = [], []
    for h, run in zip(histories, rep.runs):
        files.append(io.write_csv(out / f"{stem}_{_tag(h)}.csv", run.times, run.states, downsample=10))
        for i in range(run.n):
            series.append((f"x{i + 1} from ({_tag(h)})", run.times, run.states[:, i]))
    files.append(io.write_svg(out / f"{stem}.svg", series, title=title))
    summary = {"panel": stem, "histories": [list(h) for h in histories], "merged": rep.merged,
               "merge_time": rep.merge_time, "final_distance": rep.final_distance}
    return files, summary


def _orbit_panel(system, history, out: Path, stem: str, title: str, t_end=T_END, dt=None):
    run = simulate(system, HistoryFn.constant(history, system.max_delay()), t_end, dt)
    files = [io.write_csv(out / f"{stem}.csv", run.times, run.states, downsample=10)]
    series = [(f"x{i + 1}", run.times, run.states[:, i]) for i in range(run.n)]
    files.append(io.write_svg(out / f"{stem}.svg", series, title=title))
    summary = {"panel": stem, "history": list(history), "blew_up": run.blew_up}
    if not run.blew_up:
        per = detect_periodic(run, system.omega)
        m = measure_orbit(run, omega=system.omega)
        summary.update(last_period_distance=float(per.distances[-1]), converged=per.converged,
                       amplitude=m.amplitude.tolist(), period=m.period, dt=run.dt)
    return files, summary


def _fig41(out):
    panels = []
    for key, ps in zip("ab", ("small", "medium")):
        s = feedback_system("negative-feedback", **PARAMETER_SETS[ps])
        panels.append(_orbit_panel(s, (0.02, 0.08), out, key, f"negative feedback, {ps} set"))
    return panels


def _feedback_merge(kind, pairs):
    def run(out):
        panels = []
        for key, ps, hs in zip("ab", ("small", "medium"), pairs):
            s = feedback_system(kind, **PARAMETER_SETS[ps])
            panels.append(_merge_panel(s, hs, out, key, f"{kind}, {ps} set"))
        return panels
    return run


def _fig44(out):
    hs = ((0.5, 4.5), (3.0, 1.5))
    return [_merge_panel(feedback_system(kind, **PARAMETER_SETS["large"]), hs, out, key,
                         f"{kind}, large set")
            for key, kind in zip("ab", ("negative-feedback", "positive-feedback"))]


def _fig51(out):
    return [_orbit_panel(delayed_exp_system(lam, 0.1), h, out, key, f"lambda={lam:g}, tau=0.1")
            for key, lam, h in (("a", 0.1, (0.02, 0.08)), ("b", 401.0, (1.0, 4.0)))]


def _fig52(out):
    return [_merge_panel(delayed_exp_system(0.1, 0.1), ((0.02, 0.08), (0.07, 0.01)), out, "a",
                         "lambda=0.1, tau=0.1")]


def _fig53(out):
    return [_merge_panel(delayed_exp_system(401.0, 0.1), ((1.0, 4.0), (3.0, 2.0)), out, "a",
                         "lambda=401, tau=0.1")]


def _fig54(out):
    cases = (("a", 0.1, 5.0), ("b", 0.1, 10.0), ("c", 401.0, 5.0), ("d", 401.0, 10.0))
    return [_orbit_panel(delayed_exp_system(lam, tau), (0.02, 0.08), out, key,
                         f"lambda={lam:g}, tau={tau:g}", t_end=60.0, dt=1e-3)
            for key, lam, tau in cases]


FIGURES = {
    "4.1": ("negative feedback admits a positive periodic solution", _fig41),
    "4.2": ("negative feedback: solutions from two histories merge",
            _feedback_merge("negative-feedback", (((0.02, 0.08), (0.07, 0.03)), ((0.1, 0.9), (0.8, 0.2))))),
    "4.3": ("positive feedback: solutions from two histories merge",
            _feedback_merge("positive-feedback", (((0.07, 0.05), (0.01, 0.09)), ((0.1, 0.9), (0.8, 0.2))))),
    "4.4": ("large a and c: merging for both feedback types", _fig44),
    "5.1": ("delayed exponential system: periodic solutions at lambda 0.1 and 401", _fig51),
    "5.2": ("lambda = 0.1: merging histories", _fig52),
    "5.3": ("lambda = 401: merging histories", _fig53),
    "5.4": ("effect of the delay on amplitude and period", _fig54),
}


def reproduce(figure: str, outdir) -> tuple[list[Path], dict]:
    """Run one figure target. Files go to ``outdir/fig<figure>/``."""
    if figure not in FIGURES:
        raise KeyError(f"unknown figure {figure!r}; known: {', '.join(FIGURES)}")
    desc, fn = FIGURES[figure]
    out = Path(outdir) / f"fig{figure}"
    files, panels = [], []
    for f, summary in fn(out):
        files.extend(f)
        panels.append(summary)
    summary = {"figure": figure, "description": desc, "panels": panels,
               "files": [p.name for p in files]}
    files.append(io.write_json(out / "summary.json", summary))
    return files, summary

