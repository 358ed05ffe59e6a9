"""Experiment driver: simulate, analyse, verify, and write outputs."""

from __future__ import annotations

import dataclasses
import math
from pathlib import Path

import numpy as np

from . import analysis as an
from .config import ExperimentConfig
from .errors import AssumptionViolationError, NoMaximizerError, PreconditionError
from .field import Rect, RegularityConstants, ScalarField, estimate_regularity, spectral_norm_2x2
from .io import write_report, write_trajectory_csv
from .simulator import Trajectory, formation_error_series, run

MAX_GRID_POINTS_PER_AXIS = 500
POINTS_PER_LENGTH_SCALE = 20


def _grid_step(field: ScalarField, region: Rect, requested: float) -> float:
    """Refine the step to resolve the field's length scale, then cap the point count."""
    span = max(region.xmax - region.xmin, region.ymax - region.ymin)
    step = min(requested, field.length_scale / POINTS_PER_LENGTH_SCALE)
    return max(step, span / MAX_GRID_POINTS_PER_AXIS)


def _regularity(field: ScalarField, region: Rect, step: float) -> RegularityConstants:
    return estimate_regularity(field, region, _grid_step(field, region, step))


def _reg_dict(reg: RegularityConstants) -> dict:
    return {"m_h": reg.m_h, "l_h": reg.l_h, "g_h": reg.g_h, "region": list(reg.region.as_tuple())}


def _asdict(obj) -> dict:
    return {f.name: getattr(obj, f.name) for f in dataclasses.fields(obj) if f.name != "candidate"}


def _tail_max(traj: Trajectory, values: np.ndarray, fraction: float) -> float:
    t = traj.t
    cut = t[-1] - fraction * (t[-1] - t[0])
    return float(np.max(values[t >= cut]))


def simulate(config: ExperimentConfig) -> Trajectory:
    return run(config.initial, config.field, config.spec, config.gains, config.sim)


def describe(config: ExperimentConfig) -> dict:
    f = config.field
    return {
        "field": f.name or f.kind,
        "gains": {"k0": config.gains.k0, "k1": config.gains.k1, "k2": config.gains.k2},
        "formation": {"r1_star": config.spec.r1_star.tolist(), "r2_star": config.spec.r2_star.tolist()},
        "initial": {"x0": config.initial.x0.tolist(), "x1": config.initial.x1.tolist(), "x2": config.initial.x2.tolist()},
        "simulation": dataclasses.asdict(config.sim),
        "seed": config.analysis.seed,
    }


def lmi_section(config: ExperimentConfig, x_star=None) -> dict:
    """LMI search and ultimate bound for the configured system.

    Constants are estimated on the certification box around ``x*``.
    """
    field, spec, gains, opts = config.field, config.spec, config.gains, config.analysis
    if gains.k0 <= 0:
        raise PreconditionError("certification needs k0 > 0")
    sys = an.build_system_matrices(field, spec, gains)
    x_star = sys.x_star if x_star is None else x_star
    region = an.certification_region(x_star, spec, opts.certification_half_width)
    reg = _regularity(field, region, opts.grid_step)
    alpha1, alpha2 = an.alpha_constants(reg, spec, gains)
    res = an.lmi_search(sys, alpha1, opts.lmi_lambda, budget=opts.lmi_budget, seed=opts.seed, objective=opts.lmi_objective)
    out = {
        "certification_half_width": opts.certification_half_width,
        "regularity": _reg_dict(reg),
        "alpha1": alpha1,
        "alpha2_star": alpha2,
        "lambda": opts.lmi_lambda,
        "feasible": res.feasible,
        "trials": res.trials,
        "first_feasible_trial": res.first_feasible_trial,
        "margin": res.margin if res.feasible else None,
        "candidate": None,
        "scaled": None,
        "reference": dict(an.LMI_REFERENCE),
        "bound": None,
    }
    if res.feasible:
        out["candidate"] = res.candidate.to_dict()
        out["scaled"] = res.candidate.scaled_quantities()
        b = an.theorem_bound(res.candidate, spec, gains, reg.m_h, sys, alpha1)
        out["bound"] = {
            "radius": b.radius,
            "radius_loose": b.radius_loose,
            # the constants only hold on the box, so a larger radius certifies nothing
            "within_certification_box": bool(b.radius_loose <= opts.certification_half_width),
        }
    return out


def analyze(traj: Trajectory, config: ExperimentConfig) -> dict:
    """Certification report for a recorded trajectory.

    Uses only the stored samples, so a trajectory read back from CSV yields
    the same report as the in-memory one.
    """
    field, opts = config.field, config.analysis
    a2 = traj.assumption2
    report = {
        "config": describe(config),
        "samples": len(traj),
        "assumption2": None if a2 is None else {
            "passed": a2.passed, "same_direction": a2.same_direction, "same_half_plane": a2.same_half_plane,
            "rho0": a2.rho0, "rho_star": a2.rho_star, "message": a2.message,
        },
        "x_star": None if traj.x_star is None else traj.x_star.tolist(),
    }
    report["formation"] = _asdict(an.formation_oracle_check(traj))
    report["lemma1"] = _asdict(an.lemma1_corollary2_check(traj))
    report["inverse_decay"] = _asdict(an.inverse_decay_check(traj))

    d = formation_error_series(traj)
    final = {
        "t": float(traj.t[-1]),
        "x0": traj.x[-1, 0].tolist(),
        "delta_norms": d[-1].tolist(),
        "grad_norm": float(np.linalg.norm(field.gradient(traj.x[-1, 0]))),
        "z_norm": None,
        "limsup_z_norm": None,
    }
    report["final"] = final

    region = an.trajectory_region(traj)
    reg = _regularity(field, region, opts.grid_step)
    report["regularity"] = _reg_dict(reg)

    report["lemma2"] = None
    report["lmi"] = None
    report["bound_holds"] = None
    if traj.x_star is None:
        report["notes"] = "field has no maximizer; error-dynamics certification skipped"
        return report
    zn = traj.z_norm
    final["z_norm"] = float(zn[-1])
    final["limsup_z_norm"] = _tail_max(traj, zn, opts.tail_fraction)
    final["entry_time"] = an.entry_time(traj, traj.x_star, opts.certification_half_width)

    if traj.gains.k0 <= 0:
        report["notes"] = "k0 = 0; error-dynamics certification skipped"
        return report
    report["lemma2"] = _asdict(an.lemma2_check(traj, field, reg, opts.quadrature_order))
    try:
        lmi = lmi_section(config, traj.x_star)
    except AssumptionViolationError as exc:
        report["notes"] = str(exc)
        return report
    report["lmi"] = lmi
    if lmi["bound"] is not None:
        report["bound_holds"] = bool(final["limsup_z_norm"] <= lmi["bound"]["radius_loose"])
    return report


def run_experiment(config: ExperimentConfig, out_dir=None) -> tuple[Trajectory, dict, Path, Path]:
    """Simulate, analyse and write the CSV and JSON report.

    Nothing is written when the initial state violates assumption 2.
    """
    traj = simulate(config)
    report = analyze(traj, config)
    out = Path(out_dir if out_dir is not None else config.output.dir)
    csv_path = write_trajectory_csv(traj, out / config.output.trajectory)
    report_path = write_report(report, out / config.output.report)
    return traj, report, csv_path, report_path


# ---------------------------------------------------------------------------
# Verification suite

def _fd_checks(field: ScalarField, region: Rect, rng, n: int = 200) -> dict:
    lo = np.array([region.xmin, region.ymin])
    hi = np.array([region.xmax, region.ymax])
    pts = rng.uniform(lo, hi, size=(n, 2))
    h = 1e-3 * max(1.0, region.xmax - region.xmin, region.ymax - region.ymin) ** 0.5
    worst_g = worst_h = 0.0
    for p in pts:
        e = np.eye(2) * h
        fd_g = np.array([(field.value(p + e[k]) - field.value(p - e[k])) / (2 * h) for k in range(2)])
        fd_h = np.column_stack([(field.gradient(p + e[k]) - field.gradient(p - e[k])) / (2 * h) for k in range(2)])
        g = field.gradient(p)
        hs = field.hessian(p)
        gs = max(1e-12, float(np.max(np.abs(g))), float(np.max(np.abs(fd_g))))
        hsc = max(1e-12, float(np.max(np.abs(hs))))
        worst_g = max(worst_g, float(np.max(np.abs(fd_g - g))) / gs)
        worst_h = max(worst_h, float(np.max(np.abs(fd_h - hs))) / hsc)
    # central differences of smooth fields at this step are accurate to ~1e-5 relative
    return {"passed": bool(worst_g <= 1e-4 and worst_h <= 1e-4), "worst_gradient_rel": worst_g, "worst_hessian_rel": worst_h}


def _lipschitz_check(field: ScalarField, reg: RegularityConstants, rng, n: int = 2000, factor: float = 1.1) -> dict:
    r = reg.region
    step = 2.0 * _grid_step(field, r, 1.0)
    lo = np.array([r.xmin, r.ymin])
    hi = np.array([r.xmax, r.ymax])
    a = rng.uniform(lo, hi, size=(n, 2))
    b = np.clip(a + rng.uniform(-step, step, size=(n, 2)), lo, hi)
    worst = 0.0
    for p, q in zip(a, b):
        dist = float(np.linalg.norm(p - q))
        if dist == 0.0:
            continue
        diff = spectral_norm_2x2(field.hessian(p) - field.hessian(q))
        if diff <= 1e-15:
            continue
        worst = max(worst, diff / (dist * factor * reg.l_h) if reg.l_h > 0 else math.inf)
    return {"passed": bool(worst <= 1.0), "worst_ratio": worst, "l_h": reg.l_h, "factor": factor}


def _estimator_check(traj: Trajectory, field: ScalarField, reg: RegularityConstants) -> dict:
    """``||g - grad f(x0)|| <= (m_h/2) ||R^-1|| (||r1||^2 + ||r2||^2)`` along the run."""
    worst = 0.0
    for i in range(len(traj)):
        r1, r2 = traj.r1[i], traj.r2[i]
        rinv = np.linalg.inv(np.array([r1, r2]))
        bound = 0.5 * reg.m_h * spectral_norm_2x2(rinv) * float(r1 @ r1 + r2 @ r2)
        err = float(np.linalg.norm(traj.g[i] - field.gradient(traj.x[i, 0])))
        if err <= 1e-12:
            continue
        worst = max(worst, err / bound if bound > 0 else math.inf)
    return {"passed": bool(worst <= 1.0), "worst_ratio": worst}


def verify(config: ExperimentConfig) -> dict:
    """Run every invariant suite that applies to the configured field."""
    field, opts = config.field, config.analysis
    rng = np.random.default_rng(opts.seed)
    traj = simulate(config)
    region = an.trajectory_region(traj)
    reg = _regularity(field, region, opts.grid_step)
    suites = {}
    suites["derivatives"] = _fd_checks(field, region, rng)
    suites["taylor"] = _asdict(an.taylor_checks(field, region, opts.taylor_samples, seed=opts.seed, regularity=reg))
    suites["lipschitz"] = _lipschitz_check(field, reg, rng)
    suites["estimator"] = _estimator_check(traj, field, reg)
    suites["formation"] = _asdict(an.formation_oracle_check(traj))
    suites["lemma1"] = _asdict(an.lemma1_corollary2_check(traj))
    suites["inverse_decay"] = _asdict(an.inverse_decay_check(traj))
    if traj.x_star is not None and config.gains.k0 > 0:
        suites["lemma2"] = _asdict(an.lemma2_check(traj, field, reg, opts.quadrature_order))
        try:
            lmi = lmi_section(config, traj.x_star)
        except (AssumptionViolationError, NoMaximizerError):
            lmi = None
        if lmi is not None:
            # an infeasible search leaves the bound uncertified rather than violated
            suite = {"passed": None, "feasible": lmi["feasible"], "margin": lmi["margin"], "trials": lmi["trials"]}
            if lmi["feasible"]:
                limsup = _tail_max(traj, traj.z_norm, opts.tail_fraction)
                suite["radius_loose"] = lmi["bound"]["radius_loose"]
                suite["limsup_z_norm"] = limsup
                suite["passed"] = bool(limsup <= lmi["bound"]["radius_loose"])
            suites["lmi_bound"] = suite
    ran = [s["passed"] for s in suites.values() if s["passed"] is not None]
    return {"passed": all(ran), "suites": suites}
