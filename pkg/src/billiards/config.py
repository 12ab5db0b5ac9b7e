"""Experiment configuration: JSON schema, loading, and validation.

A config selects a domain (builder shorthand or explicit scatterer list),
initial conditions (one explicit phase point plus covector, or a seeded
sampler), a horizon, tolerances, and the checks to run.  Validation errors
carry a JSON-path-style location; JSON syntax errors keep their line/column.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import BilliardError, ConfigError
from .geometry import (
    Box,
    Cylinder,
    Domain,
    Halfspace,
    Sphere,
    Torus,
    build_hardball_gas,
    build_sinai,
    reduce_pair_to_sinai,
)
from .tolerances import EPS_GRAZE, MAX_EVENTS_DEFAULT

VALID_CHECKS = ("monotonicity", "growth", "adjoint")


@dataclass(eq=False)
class SamplerSpec:
    count: int
    seed: int
    c0: float | None = None


@dataclass(eq=False)
class ExplicitSpec:
    q: np.ndarray
    v: np.ndarray
    z: np.ndarray
    w: np.ndarray


@dataclass(eq=False)
class ExperimentConfig:
    domain: Domain
    domain_spec: dict
    horizon: float
    sampler: SamplerSpec | None = None
    explicit: ExplicitSpec | None = None
    checks: tuple[str, ...] = ("monotonicity",)
    tol_check: float = 1e-9
    eps_graze: float = EPS_GRAZE
    grid_interior: int = 8
    max_events: int = MAX_EVENTS_DEFAULT
    out_dir: str | None = None
    c0: float | None = None           # bound used by the growth check

    @property
    def trajectory_count(self) -> int:
        return self.sampler.count if self.sampler is not None else 1


def _expect(cond: bool, path: str, message: str):
    if not cond:
        raise ConfigError(f"{path}: {message}")


def _get(obj: dict, key: str, path: str, kind, required: bool = True, default=None):
    if key not in obj:
        _expect(not required, f"{path}.{key}", "missing required field")
        return default
    val = obj[key]
    if kind is float:
        _expect(isinstance(val, (int, float)) and not isinstance(val, bool),
                f"{path}.{key}", "must be a number")
        return float(val)
    if kind is int:
        _expect(isinstance(val, int) and not isinstance(val, bool),
                f"{path}.{key}", "must be an integer")
        return val
    _expect(isinstance(val, kind), f"{path}.{key}", f"must be of type {kind.__name__}")
    return val


def _vector(obj, path: str, d: int | None = None) -> np.ndarray:
    _expect(isinstance(obj, list) and all(isinstance(x, (int, float)) for x in obj),
            path, "must be a list of numbers")
    v = np.asarray(obj, dtype=float)
    if d is not None:
        _expect(v.shape[0] == d, path, f"must have {d} components, got {v.shape[0]}")
    return v


def domain_from_spec(spec: dict, path: str = "domain") -> Domain:
    """Build a domain from its JSON description.

    Kinds: ``sinai`` (d, r, L, centers), ``hardball_gas`` (N, d, r, L),
    ``pair_reduced`` (d, r, L), or ``custom`` (d, ambient, scatterers).
    """
    _expect(isinstance(spec, dict), path, "must be an object")
    kind = _get(spec, "kind", path, str)
    try:
        if kind == "sinai":
            d = _get(spec, "d", path, int)
            centers = _get(spec, "centers", path, list)
            return build_sinai(d, _get(spec, "r", path, float), _get(spec, "L", path, float),
                               [_vector(c, f"{path}.centers[{i}]", d) for i, c in enumerate(centers)])
        if kind == "hardball_gas":
            return build_hardball_gas(_get(spec, "N", path, int), _get(spec, "d", path, int),
                                      _get(spec, "r", path, float), _get(spec, "L", path, float))
        if kind == "pair_reduced":
            return reduce_pair_to_sinai(_get(spec, "d", path, int), _get(spec, "r", path, float),
                                        _get(spec, "L", path, float))
        if kind == "custom":
            return _custom_domain(spec, path)
    except BilliardError as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(f"{path}: {e}") from e
    raise ConfigError(f"{path}.kind: unknown domain kind {kind!r}")


def _custom_domain(spec: dict, path: str) -> Domain:
    d = _get(spec, "d", path, int)
    amb = _get(spec, "ambient", path, dict)
    amb_type = _get(amb, "type", f"{path}.ambient", str)
    if amb_type == "torus":
        ambient = Torus(_get(amb, "side", f"{path}.ambient", float))
    elif amb_type == "box":
        sides = _get(amb, "sides", f"{path}.ambient", list)
        ambient = Box(tuple(float(s) for s in sides))
    else:
        raise ConfigError(f"{path}.ambient.type: unknown ambient {amb_type!r}")
    raw = _get(spec, "scatterers", path, list)
    scatterers = []
    for i, s in enumerate(raw):
        sp = f"{path}.scatterers[{i}]"
        _expect(isinstance(s, dict), sp, "must be an object")
        skind = _get(s, "kind", sp, str)
        if skind == "sphere":
            scatterers.append(Sphere(_vector(s.get("center"), f"{sp}.center", d),
                                     _get(s, "radius", sp, float)))
        elif skind == "cylinder":
            dirs = _get(s, "axis_directions", sp, list)
            axis = np.array([_vector(a, f"{sp}.axis_directions[{k}]", d)
                             for k, a in enumerate(dirs)])
            scatterers.append(Cylinder(_vector(s.get("axis_point"), f"{sp}.axis_point", d),
                                       axis, _get(s, "radius", sp, float)))
        elif skind == "halfspace":
            scatterers.append(Halfspace(_vector(s.get("plane_point"), f"{sp}.plane_point", d),
                                        _vector(s.get("plane_normal"), f"{sp}.plane_normal", d)))
        else:
            raise ConfigError(f"{sp}.kind: unknown scatterer kind {skind!r}")
    labels = spec.get("labels")
    return Domain(d, ambient, scatterers, labels=labels)


def load_config(path: str | Path) -> ExperimentConfig:
    """Load and validate an experiment config; raises :class:`ConfigError`."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"{path}: cannot read config: {e}") from e
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}:{e.lineno}:{e.colno}: {e.msg}") from e
    return parse_config(raw)


def parse_config(raw: dict) -> ExperimentConfig:
    _expect(isinstance(raw, dict), "config", "top level must be an object")
    domain_spec = _get(raw, "domain", "config", dict)
    domain = domain_from_spec(domain_spec)

    horizon = _get(raw, "horizon", "config", float)
    _expect(horizon > 0.0, "config.horizon", "must be positive")

    initial = _get(raw, "initial", "config", dict)
    has_explicit = "q" in initial
    has_sampler = "sampler" in initial
    _expect(has_explicit != has_sampler, "config.initial",
            "exactly one of an explicit phase point or a sampler is required")

    sampler = explicit = None
    if has_sampler:
        s = _get(initial, "sampler", "config.initial", dict)
        count = _get(s, "count", "config.initial.sampler", int)
        _expect(count >= 1, "config.initial.sampler.count", "must be at least 1")
        seed = _get(s, "seed", "config.initial.sampler", int)
        c0 = _get(s, "c0", "config.initial.sampler", float, required=False)
        if c0 is not None:
            _expect(0.0 < c0 <= 0.5, "config.initial.sampler.c0", "must lie in (0, 1/2]")
        sampler = SamplerSpec(count, seed, c0)
    else:
        d = domain.d
        explicit = ExplicitSpec(
            q=_vector(initial.get("q"), "config.initial.q", d),
            v=_vector(initial.get("v"), "config.initial.v", d),
            z=_vector(_get(initial, "covector", "config.initial", dict).get("z"),
                      "config.initial.covector.z", d),
            w=_vector(initial["covector"].get("w"), "config.initial.covector.w", d),
        )

    checks = raw.get("checks")
    if checks is None:
        checks = ["monotonicity"]
        if (sampler is not None and sampler.c0 is not None) or "c0" in raw:
            checks.append("growth")
    _expect(isinstance(checks, list) and all(c in VALID_CHECKS for c in checks),
            "config.checks", f"must be a list drawn from {VALID_CHECKS}")

    tolerances = raw.get("tolerances", {})
    _expect(isinstance(tolerances, dict), "config.tolerances", "must be an object")
    tol_check = _get(tolerances, "tol_check", "config.tolerances", float,
                     required=False, default=1e-9)
    eps_graze = _get(tolerances, "eps_graze", "config.tolerances", float,
                     required=False, default=EPS_GRAZE)

    c0 = _get(raw, "c0", "config", float, required=False)
    if c0 is None and sampler is not None:
        c0 = sampler.c0
    if "growth" in checks:
        _expect(c0 is not None, "config.checks",
                "growth check needs c0 (from the sampler or a top-level c0)")

    output = raw.get("output", {})
    _expect(isinstance(output, dict), "config.output", "must be an object")
    out_dir = output.get("dir")

    return ExperimentConfig(
        domain=domain, domain_spec=domain_spec, horizon=horizon,
        sampler=sampler, explicit=explicit, checks=tuple(checks),
        tol_check=tol_check, eps_graze=eps_graze,
        grid_interior=int(raw.get("grid_interior", 8)),
        max_events=int(raw.get("max_events", MAX_EVENTS_DEFAULT)),
        out_dir=out_dir, c0=c0,
    )
