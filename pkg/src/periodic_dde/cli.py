"""Command-line entry point: ``periodic-dde <command> ...``.

Exit codes: 0 success, 2 invalid input, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

import numpy as np

from . import io, scenarios
from .config import ConfigError, load_config
from .existence import InconclusiveLimitError, classify
from .expressions import ExpressionError
from .figures import FIGURES, reproduce
from .model import HypothesisError
from .operator import DEFAULT_GRID, NumericalFailure, PeriodicTrajectory, solve_fixed_point
from .periodic import NonFiniteError, PeriodicFn
from .simulator import HistoryFn, detect_periodic, simulate
from .stability import NotLipschitz, certify

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 2, 3


class Failure(Exception):
    """Numerical failure with a JSON payload to report."""

    def __init__(self, message: str, payload: dict | None = None):
        super().__init__(message)
        self.payload = payload


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _load(args):
    """System, run options and default histories for a scenario id or config path."""
    target = args.scenario
    if target.endswith(".json") or Path(target).is_file():
        system, options = load_config(target)
        if args.lam is not None:
            system = system.with_lambda(args.lam)
        if getattr(args, "tau", None) is not None:
            system = system.with_tau(PeriodicFn.constant(args.tau, system.omega, "tau"))
        return system, options, [tuple(h) for h in options.get("histories", [])]
    sc = scenarios.get(target)
    overrides = {"lam": args.lam, "tau": getattr(args, "tau", None)}
    if getattr(args, "param_set", None):
        if "param_set" not in sc.defaults:
            raise ValueError(f"scenario {target!r} has no parameter sets")
        overrides["param_set"] = args.param_set
    return sc.build(**overrides), {}, list(sc.default_histories)


def _emit(obj):
    sys.stdout.write(io.json_text(obj))


def _outdir(args) -> Path:
    return Path(args.out) if args.out else io.output_dir()


def _slug(system) -> str:
    return system.label.replace(" ", "_").replace("=", "")


def cmd_classify(args):
    system, _, _ = _load(args)
    report = classify(system)
    _emit(report.to_json())


def _solve(system, options, args):
    grid = getattr(args, "grid", None) or options.get("grid", DEFAULT_GRID)
    tol = getattr(args, "tol", None) or options.get("tol", 1e-10)
    x0 = PeriodicTrajectory.constant(np.full(system.n, 0.1), system.omega, grid)
    res = solve_fixed_point(system, x0, tol=tol)
    if not res.converged:
        raise Failure("fixed-point iteration did not converge", res.to_json())
    return res


def cmd_solve(args):
    system, options, _ = _load(args)
    res = _solve(system, options, args)
    x = res.solution
    path = io.write_csv(_outdir(args) / f"orbit_{_slug(system)}.csv",
                        x.grid, x.values)
    _emit({**res.to_json(), "csv": str(path)})


def cmd_stability(args):
    system, options, _ = _load(args)
    if args.estimate_kl:
        system = dataclasses.replace(system, F=system.F.replace(lipschitz=None))
    x_star = None
    if args.about_orbit:
        x_star = _solve(system, options, args).solution
    cert = certify(system, x_star, L=args.L, K_L=args.kl)
    _emit(cert.to_json())


def cmd_simulate(args):
    system, options, histories = _load(args)
    if args.history is not None:
        h = args.history
    elif histories:
        h = histories[0]
    else:
        h = [0.1] * system.n
    if len(h) != system.n:
        raise ValueError(f"history has {len(h)} components, system has n={system.n}")
    t_end = args.t_end or options.get("t_end", 40 * system.omega)
    dt = args.dt or options.get("dt")
    run = simulate(system, HistoryFn.constant(h, system.max_delay()), t_end, dt)
    path = io.write_csv(_outdir(args) / f"run_{_slug(system)}_{','.join(f'{v:g}' for v in h)}.csv",
                        run.times, run.states, args.downsample)
    summary = {"csv": str(path), "dt": run.dt, "t_end": run.t_end, "blew_up": run.blew_up}
    if run.blew_up:
        raise Failure(f"blow-up at t={run.t_end:g}", summary)
    if run.t_end - run.t0 >= 5 * system.omega:
        per = detect_periodic(run, system.omega)
        summary.update(converged=per.converged, last_period_distance=float(per.distances[-1]))
    _emit(summary)


def cmd_reproduce(args):
    files, summary = reproduce(args.figure, _outdir(args))
    _emit({**summary, "files": [str(f) for f in files]})


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="periodic-dde",
                                description="Periodic solutions of delay systems with parameter lambda.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("scenario", help="scenario id (" + ", ".join(s.id for s in scenarios.registry())
                        + ") or path to a JSON config")
        sp.add_argument("--lambda", dest="lam", type=float, help="parameter lambda")
        sp.add_argument("--tau", type=float, help="constant delay")
        sp.add_argument("--param-set", choices=sorted(scenarios.PARAMETER_SETS),
                        help="feedback scenarios: parameter set")
        sp.add_argument("--out", help=f"output directory (default ${io.OUTPUT_ENV} or ./out)")

    sp = sub.add_parser("classify", help="existence thresholds and lambda intervals")
    common(sp)
    sp.set_defaults(func=cmd_classify)

    sp = sub.add_parser("solve", help="positive periodic solution by fixed-point iteration")
    common(sp)
    sp.add_argument("--tol", type=float)
    sp.add_argument("--grid", type=int)
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("stability", help="stability certificate")
    common(sp)
    kl = sp.add_mutually_exclusive_group()
    kl.add_argument("--kl", type=float, help="Lipschitz constant K_L")
    kl.add_argument("--estimate-kl", action="store_true", help="ignore declared K_L and sample it")
    sp.add_argument("--about-orbit", action="store_true", help="certify the computed periodic orbit")
    sp.add_argument("--L", type=float, help="radius of the Lipschitz ball")
    sp.set_defaults(func=cmd_stability)

    sp = sub.add_parser("simulate", help="integrate from a constant history")
    common(sp)
    sp.add_argument("--history", type=_floats, help="constant history, e.g. 0.02,0.08")
    sp.add_argument("--t-end", type=float)
    sp.add_argument("--dt", type=float)
    sp.add_argument("--downsample", type=int, default=1)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("reproduce", help="write CSV and SVG for a figure target")
    sp.add_argument("--figure", required=True, choices=list(FIGURES))
    sp.add_argument("--out", help=f"output directory (default ${io.OUTPUT_ENV} or ./out)")
    sp.set_defaults(func=cmd_reproduce)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except Failure as exc:
        if exc.payload is not None:
            _emit(exc.payload)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (NumericalFailure, NonFiniteError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (KeyError, ValueError, ExpressionError, HypothesisError, InconclusiveLimitError,
            NotLipschitz, OSError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {msg}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
