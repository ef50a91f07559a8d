"""JSON system configs: load, validate and serialize.

A config looks like::

    {
      "omega": 1,
      "lambda": 0.1,
      "tau": "0.1",
      "a": ["5+sin(2*pi*t)", "5+cos(2*pi*t)"],
      "b": ["1+0.6*cos(2*pi*t)", "1+0.5*sin(2*pi*t)"],
      "nonlinearity": {"name": "delayed-exp"},
      "options": {"histories": [[0.02, 0.08]], "t_end": 40}
    }

Coefficients are numbers or expressions in ``t``. The nonlinearity is either
a registry name with ``params`` or a list of ``exprs`` in ``x1..xn`` with
optional declared ``limits`` (per component ``[f0, finf]``, numbers or
``"inf"``), ``lipschitz`` (a constant) and ``c1``/``c2``.
"""
from __future__ import annotations

import json
from pathlib import Path

import jsonschema

from .expressions import ExpressionError
from .model import DelaySystem, HypothesisError, Limit, Nonlinearity
from .periodic import PeriodicFn
from .scenarios import nonlinearity as named_nonlinearity


class ConfigError(ValueError):
    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("invalid config:\n  " + "\n  ".join(self.errors))


_COEFF = {"type": ["number", "string"]}
_LIMIT = {"type": ["number", "string"]}

SCHEMA = {
    "type": "object",
    "required": ["a", "b", "nonlinearity"],
    "additionalProperties": False,
    "properties": {
        "label": {"type": "string"},
        "omega": {"type": "number", "exclusiveMinimum": 0},
        "lambda": {"type": "number", "minimum": 0},
        "tau": _COEFF,
        "a": {"type": "array", "items": _COEFF, "minItems": 1},
        "b": {"type": "array", "items": _COEFF, "minItems": 1},
        "nonlinearity": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "name": {"type": "string"},
                "params": {"type": "object"},
                "exprs": {"type": "array", "items": {"type": "string"}, "minItems": 1},
                "limits": {"type": "array",
                           "items": {"type": "array", "items": _LIMIT, "minItems": 2, "maxItems": 2}},
                "lipschitz": {"type": "number", "exclusiveMinimum": 0},
                "c1": {"type": "number", "exclusiveMinimum": 0},
                "c2": {"type": "number", "exclusiveMinimum": 0},
            },
            "oneOf": [{"required": ["name"]}, {"required": ["exprs"]}],
        },
        "options": {
            "type": "object",
            "properties": {
                "histories": {"type": "array", "items": {"type": "array", "items": {"type": "number"}}},
                "t_end": {"type": "number", "exclusiveMinimum": 0},
                "dt": {"type": "number", "exclusiveMinimum": 0},
                "tol": {"type": "number", "exclusiveMinimum": 0},
                "grid": {"type": "integer", "minimum": 8},
            },
        },
    },
}


def _field(path) -> str:
    out = ""
    for p in path:
        out += f"[{p}]" if isinstance(p, int) else (f".{p}" if out else str(p))
    return out or "<root>"


def _coeff(value, omega: float, name: str, errors: list) -> PeriodicFn | None:
    try:
        if isinstance(value, (int, float)):
            return PeriodicFn.constant(value, omega, name)
        return PeriodicFn.from_expr(value, omega, name)
    except ExpressionError as exc:
        errors.append(f"{name}: {exc}")
        return None


def parse_config(doc: dict, validate: bool = True) -> tuple[DelaySystem, dict]:
    """Build a system and its run options from an already-decoded document."""
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = [f"{_field(e.absolute_path)}: {e.message}"
              for e in sorted(validator.iter_errors(doc), key=lambda e: list(map(str, e.absolute_path)))]
    if errors:
        raise ConfigError(errors)
    omega = float(doc.get("omega", 1.0))
    a = [_coeff(v, omega, f"a[{i}]", errors) for i, v in enumerate(doc["a"])]
    b = [_coeff(v, omega, f"b[{i}]", errors) for i, v in enumerate(doc["b"])]
    tau = _coeff(doc.get("tau", 0.0), omega, "tau", errors)
    if len(a) != len(b):
        errors.append(f"a has {len(a)} entries but b has {len(b)}")
    n = len(a)
    spec = doc["nonlinearity"]
    F = None
    extras = {k: spec[k] for k in ("c1", "c2") if k in spec}
    if "lipschitz" in spec:
        K = float(spec["lipschitz"])
        extras["lipschitz"] = lambda L, K=K: K
    try:
        if "limits" in spec:
            extras["limits"] = tuple((Limit.of(p[0]), Limit.of(p[1])) for p in spec["limits"])
            if len(extras["limits"]) != n:
                errors.append(f"nonlinearity.limits: expected {n} pairs")
    except ValueError as exc:
        errors.append(f"nonlinearity.limits: {exc}")
    if "name" in spec:
        try:
            F = named_nonlinearity(spec["name"], **{"n": n, **spec.get("params", {})})
            if extras:
                F = F.replace(**extras)
        except (KeyError, TypeError) as exc:
            errors.append(f"nonlinearity.name: {exc}")
    else:
        try:
            F = Nonlinearity.from_exprs(spec["exprs"], **extras)
            if F.n != n:
                errors.append(f"nonlinearity.exprs: {F.n} components for n={n}")
        except ExpressionError as exc:
            errors.append(f"nonlinearity.exprs: {exc}")
    if errors:
        raise ConfigError(errors)
    try:
        system = DelaySystem(a, b, F, tau, omega, float(doc.get("lambda", 1.0)), doc.get("label", ""))
    except ValueError as exc:
        raise ConfigError([str(exc)]) from None
    if validate:
        try:
            system.check_h1()
        except HypothesisError as exc:
            raise ConfigError([str(exc)]) from None
    return system, dict(doc.get("options", {}))


def load_config(path, validate: bool = True) -> tuple[DelaySystem, dict]:
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}"]) from None
    return parse_config(doc, validate)


def system_to_config(system: DelaySystem, options: dict | None = None) -> dict:
    """Inverse of :func:`parse_config` for systems built from expressions or the registry."""
    def expr(fn: PeriodicFn):
        if fn.expr is None:
            raise ValueError(f"coefficient {fn.label!r} has no expression form")
        return fn.expr

    F = system.F
    if F.name is not None:
        nl = {"name": F.name, "params": {k: v for k, v in F.params.items() if k != "n"}}
    elif F.exprs is not None:
        nl = {"exprs": list(F.exprs)}
        if F.limits is not None:
            nl["limits"] = [[l0.to_json(), l1.to_json()] for l0, l1 in F.limits]
        if F.lipschitz is not None:
            nl["lipschitz"] = float(F.lipschitz(1.0))
        for k in ("c1", "c2"):
            if getattr(F, k) is not None:
                nl[k] = getattr(F, k)
    else:
        raise ValueError("nonlinearity has no serializable form")
    doc = {
        "label": system.label,
        "omega": system.omega,
        "lambda": system.lam,
        "tau": expr(system.tau),
        "a": [expr(f) for f in system.a],
        "b": [expr(f) for f in system.b],
        "nonlinearity": nl,
    }
    if options:
        doc["options"] = options
    return doc
