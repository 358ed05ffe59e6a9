"""Experiment configuration: TOML text -> fully resolved :class:`ExperimentConfig`.

Example::

    [field]
    preset = "paper-gaussian"

    [gains]
    k0 = 0.7
    k1 = 0.05
    k2 = 0.05

    [formation]
    size = 0.4
    angle_deg = 90

    [initial]
    x0 = [300.0, 250.0]

    [simulation]
    dt = 0.05
    t_max = 1000.0

Every section is optional; unknown keys are rejected.
"""

from __future__ import annotations

import math
import os
import sys
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np

from .controller import Gains
from .errors import ConfigError, FormseekError
from .field import PRESETS, ScalarField
from .geometry import FormationSpec, SwarmState
from .simulator import SimConfig

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

OUTPUT_DIR_ENV = "FORMSEEK_OUTPUT_DIR"
DEFAULT_X0 = (300.0, 250.0)


@dataclass(frozen=True)
class AnalysisOptions:
    lmi_budget: int = 4000
    seed: int = 0
    quadrature_order: int = 16
    lmi_lambda: float = 0.01
    lmi_objective: str = "margin"
    certification_half_width: float = 50.0
    grid_step: float = 1.0
    taylor_samples: int = 10000
    tail_fraction: float = 0.25


@dataclass(frozen=True)
class OutputOptions:
    dir: str = "out"
    trajectory: str = "trajectory.csv"
    report: str = "report.json"


@dataclass(frozen=True, eq=False)
class ExperimentConfig:
    field: ScalarField
    gains: Gains
    spec: FormationSpec
    initial: SwarmState
    sim: SimConfig
    analysis: AnalysisOptions = AnalysisOptions()
    output: OutputOptions = OutputOptions()
    source: dict = dc_field(default_factory=dict)


_SECTIONS = {"field", "gains", "formation", "initial", "simulation", "analysis", "output"}


def _take(table: dict, path: str, allowed: set[str]) -> dict:
    if not isinstance(table, dict):
        raise ConfigError("expected a table", key=path)
    for k in table:
        if k not in allowed:
            raise ConfigError(f"unknown key (allowed: {', '.join(sorted(allowed))})", key=f"{path}.{k}" if path else k)
    return table


def _number(table, key, path, default=None, *, positive=False, nonneg=False, integer=False):
    if key not in table:
        return default
    v = table[key]
    kp = f"{path}.{key}"
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"expected a number, got {v!r}", key=kp)
    if integer and int(v) != v:
        raise ConfigError("expected an integer", key=kp)
    v = int(v) if integer else float(v)
    if not math.isfinite(v):
        raise ConfigError("must be finite", key=kp)
    if positive and not v > 0:
        raise ConfigError(f"must be positive, got {v}", key=kp)
    if nonneg and not v >= 0:
        raise ConfigError(f"must be nonnegative, got {v}", key=kp)
    return v


def _vector(table, key, path, default=None):
    if key not in table:
        return default
    v = table[key]
    kp = f"{path}.{key}"
    if not (isinstance(v, list) and len(v) == 2 and all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in v)):
        raise ConfigError(f"expected a 2-vector of numbers, got {v!r}", key=kp)
    return np.array([float(c) for c in v])


def _matrix(table, key, path):
    v = table.get(key)
    kp = f"{path}.{key}"
    if not (isinstance(v, list) and len(v) == 2 and all(isinstance(r, list) and len(r) == 2 for r in v)):
        raise ConfigError(f"expected a 2x2 matrix, got {v!r}", key=kp)
    try:
        return np.array(v, dtype=float)
    except (TypeError, ValueError):
        raise ConfigError("matrix entries must be numbers", key=kp) from None


def _semantic(fn, key):
    try:
        return fn()
    except ConfigError:
        raise
    except (FormseekError, ValueError) as exc:
        raise ConfigError(str(exc), key=key) from None


def _parse_field(t: dict | None) -> ScalarField:
    t = {} if t is None else t
    _take(t, "field", {"preset", "kind", "amplitude", "center", "shape", "terms", "a", "b", "q", "offset"})
    if "preset" in t:
        if len(t) > 1:
            raise ConfigError("preset cannot be combined with inline parameters", key="field")
        name = t["preset"]
        if name not in PRESETS:
            raise ConfigError(f"unknown preset {name!r}; known: {sorted(PRESETS)}", key="field.preset")
        return PRESETS[name]
    if not t:
        return PRESETS["paper-gaussian"]
    kind = t.get("kind")
    if kind == "gaussian":
        _take(t, "field", {"kind", "amplitude", "center", "shape"})
        amp = _number(t, "amplitude", "field", positive=True)
        center = _vector(t, "center", "field")
        if amp is None or center is None or "shape" not in t:
            raise ConfigError("gaussian needs amplitude, center and shape", key="field")
        shape = _matrix(t, "shape", "field")
        return _semantic(lambda: ScalarField.gaussian(amp, center, shape), "field")
    if kind == "sum_of_gaussians":
        _take(t, "field", {"kind", "terms"})
        terms = t.get("terms")
        if not isinstance(terms, list) or not terms:
            raise ConfigError("sum_of_gaussians needs a non-empty [[field.terms]] array", key="field.terms")
        built = []
        for i, term in enumerate(terms):
            p = f"field.terms[{i}]"
            _take(term, p, {"amplitude", "center", "shape"})
            amp = _number(term, "amplitude", p, positive=True)
            center = _vector(term, "center", p)
            if amp is None or center is None or "shape" not in term:
                raise ConfigError("term needs amplitude, center and shape", key=p)
            built.append((amp, center, _matrix(term, "shape", p)))
        return _semantic(lambda: ScalarField.sum_of_gaussians(built), "field.terms")
    if kind == "affine":
        _take(t, "field", {"kind", "a", "b"})
        a = _vector(t, "a", "field")
        if a is None:
            raise ConfigError("affine needs a", key="field.a")
        return ScalarField.affine(a, _number(t, "b", "field", 0.0))
    if kind == "quadratic":
        _take(t, "field", {"kind", "q", "center", "offset"})
        q = _matrix(t, "q", "field")
        center = _vector(t, "center", "field", np.zeros(2))
        return _semantic(lambda: ScalarField.quadratic(q, center, _number(t, "offset", "field", 0.0)), "field")
    raise ConfigError(f"kind must be one of gaussian, sum_of_gaussians, affine, quadratic; got {kind!r}", key="field.kind")


def _parse_gains(t: dict | None) -> Gains:
    t = _take({} if t is None else t, "gains", {"k0", "k1", "k2"})
    d = Gains()
    return Gains(
        k0=_number(t, "k0", "gains", d.k0, positive=True),
        k1=_number(t, "k1", "gains", d.k1, positive=True),
        k2=_number(t, "k2", "gains", d.k2, positive=True),
    )


def _parse_formation(t: dict | None) -> FormationSpec:
    t = _take({} if t is None else t, "formation", {"r1", "r2", "size", "size2", "angle_deg"})
    if "r1" in t or "r2" in t:
        if any(k in t for k in ("size", "size2", "angle_deg")):
            raise ConfigError("give either r1/r2 or size/angle_deg, not both", key="formation")
        r1, r2 = _vector(t, "r1", "formation"), _vector(t, "r2", "formation")
        if r1 is None or r2 is None:
            raise ConfigError("both r1 and r2 are required", key="formation")
        return _semantic(lambda: FormationSpec(r1, r2), "formation")
    size = _number(t, "size", "formation", 0.4, positive=True)
    size2 = _number(t, "size2", "formation", None, positive=True)
    angle = _number(t, "angle_deg", "formation", 90.0)
    return _semantic(lambda: FormationSpec.from_size_angle(size, angle, size2), "formation")


def default_initial(spec: FormationSpec, x0=DEFAULT_X0) -> SwarmState:
    """``x1 = x0 + 2 r1*``, ``x2 = x0 + 1.5 r2* + 0.5 r1*``; satisfies assumption 2."""
    x0 = np.asarray(x0, dtype=float)
    return SwarmState(0.0, x0, x0 + 2.0 * spec.r1_star, x0 + 1.5 * spec.r2_star + 0.5 * spec.r1_star)


def _parse_initial(t: dict | None, spec: FormationSpec) -> SwarmState:
    t = _take({} if t is None else t, "initial", {"x0", "x1", "x2"})
    x0 = _vector(t, "x0", "initial", np.array(DEFAULT_X0))
    base = default_initial(spec, x0)
    x1 = _vector(t, "x1", "initial", base.x1)
    x2 = _vector(t, "x2", "initial", base.x2)
    return _semantic(lambda: SwarmState(0.0, x0, x1, x2), "initial")


def _parse_sim(t: dict | None) -> SimConfig:
    t = _take({} if t is None else t, "simulation", {"dt", "t_max", "record_stride", "stop_tolerance", "singularity_floor"})
    d = SimConfig()
    kw = dict(
        dt=_number(t, "dt", "simulation", d.dt, positive=True),
        t_max=_number(t, "t_max", "simulation", d.t_max, positive=True),
        record_stride=_number(t, "record_stride", "simulation", d.record_stride, positive=True, integer=True),
        stop_tolerance=_number(t, "stop_tolerance", "simulation", None, positive=True),
        singularity_floor=_number(t, "singularity_floor", "simulation", None, nonneg=True),
    )
    return _semantic(lambda: SimConfig(**kw), "simulation")


def _parse_analysis(t: dict | None) -> AnalysisOptions:
    d = AnalysisOptions()
    t = _take({} if t is None else t, "analysis", set(d.__dataclass_fields__))
    objective = t.get("lmi_objective", d.lmi_objective)
    if objective not in ("margin", "bound"):
        raise ConfigError("must be 'margin' or 'bound'", key="analysis.lmi_objective")
    frac = _number(t, "tail_fraction", "analysis", d.tail_fraction, positive=True)
    if frac > 1:
        raise ConfigError("must be in (0, 1]", key="analysis.tail_fraction")
    return AnalysisOptions(
        lmi_budget=_number(t, "lmi_budget", "analysis", d.lmi_budget, positive=True, integer=True),
        seed=_number(t, "seed", "analysis", d.seed, nonneg=True, integer=True),
        quadrature_order=_number(t, "quadrature_order", "analysis", d.quadrature_order, positive=True, integer=True),
        lmi_lambda=_number(t, "lmi_lambda", "analysis", d.lmi_lambda, positive=True),
        lmi_objective=objective,
        certification_half_width=_number(t, "certification_half_width", "analysis", d.certification_half_width, positive=True),
        grid_step=_number(t, "grid_step", "analysis", d.grid_step, positive=True),
        taylor_samples=_number(t, "taylor_samples", "analysis", d.taylor_samples, positive=True, integer=True),
        tail_fraction=frac,
    )


def _parse_output(t: dict | None) -> OutputOptions:
    t = _take({} if t is None else t, "output", {"dir", "trajectory", "report"})
    for k, v in t.items():
        if not isinstance(v, str) or not v:
            raise ConfigError("expected a non-empty string", key=f"output.{k}")
    return OutputOptions(
        dir=t.get("dir", os.environ.get(OUTPUT_DIR_ENV, OutputOptions.dir)),
        trajectory=t.get("trajectory", OutputOptions.trajectory),
        report=t.get("report", OutputOptions.report),
    )


def parse_config(text: str) -> ExperimentConfig:
    """Parse and resolve a TOML experiment description, applying defaults."""
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        line = getattr(exc, "lineno", None)
        if line is None:
            import re

            m = re.search(r"line (\d+)", str(exc))
            line = int(m.group(1)) if m else None
        raise ConfigError(f"syntax error: {exc}", line=line) from None
    _take(raw, "", _SECTIONS)
    field = _parse_field(raw.get("field"))
    gains = _parse_gains(raw.get("gains"))
    spec = _parse_formation(raw.get("formation"))
    initial = _parse_initial(raw.get("initial"), spec)
    return ExperimentConfig(
        field=field,
        gains=gains,
        spec=spec,
        initial=initial,
        sim=_parse_sim(raw.get("simulation")),
        analysis=_parse_analysis(raw.get("analysis")),
        output=_parse_output(raw.get("output")),
        source=raw,
    )


def load_config(path) -> ExperimentConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"))
