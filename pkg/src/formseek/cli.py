"""Command-line entry point: ``formseek {simulate,analyze,lmi-check,verify}``."""

from __future__ import annotations

import argparse
import sys

from . import analysis as an
from .config import OUTPUT_DIR_ENV, load_config
from .errors import FormseekError
from .experiment import analyze, lmi_section, run_experiment, verify
from .field import maximizer
from .io import read_trajectory_csv, report_to_json, write_report


def _cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    _, report, csv_path, report_path = run_experiment(cfg, args.out)
    print(f"trajectory: {csv_path}")
    print(f"report:     {report_path}")
    fz = report["final"]["z_norm"]
    if fz is not None:
        print(f"final |z| = {fz:.6g} m")
    return 0


def _cmd_analyze(args) -> int:
    cfg = load_config(args.config)
    try:
        x_star = maximizer(cfg.field)
    except FormseekError:
        x_star = None
    traj = read_trajectory_csv(args.csv, cfg.spec, cfg.gains, cfg.sim, x_star, cfg.field.name)
    report = analyze(traj, cfg)
    if args.report:
        write_report(report, args.report)
    else:
        sys.stdout.write(report_to_json(report))
    return 0


def _cmd_lmi_check(args) -> int:
    cfg = load_config(args.config)
    res = lmi_section(cfg)
    print(f"alpha1 = {res['alpha1']:.6g}  (certification box half-width {res['certification_half_width']:g} m)")
    print(f"feasible: {res['feasible']}  trials: {res['trials']}  first feasible at: {res['first_feasible_trial']}")
    if not res["feasible"]:
        return 1
    print(f"margin = {res['margin']:.6g}")
    print(f"{'quantity':<26}{'found':>14}{'reference':>14}")
    for key, label in (
        ("tau_over_gamma1", "tau/gamma1"),
        ("gamma2_over_gamma1", "gamma2/gamma1"),
        ("sigma_min_p_over_gamma1", "sigma_min(P)/gamma1"),
    ):
        print(f"{label:<26}{res['scaled'][key]:>14.6g}{an.LMI_REFERENCE[key]:>14.6g}")
    print(f"ultimate radius: {res['bound']['radius']:.6g} m, loose form: {res['bound']['radius_loose']:.6g} m")
    return 0


def _cmd_verify(args) -> int:
    cfg = load_config(args.config)
    result = verify(cfg)
    for name, suite in result["suites"].items():
        status = "SKIP" if suite["passed"] is None else "PASS" if suite["passed"] else "FAIL"
        print(f"{status}  {name}")
    if args.report:
        write_report(result, args.report)
    return 0 if result["passed"] else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="formseek", description="Formation extremum-seeking simulator and certifier.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="integrate the closed loop and write CSV + report")
    s.add_argument("--config", required=True)
    s.add_argument("--out", default=None, help=f"output directory (default: [output].dir, ${OUTPUT_DIR_ENV}, or ./out)")
    s.set_defaults(func=_cmd_simulate)

    a = sub.add_parser("analyze", help="recompute the report from a stored trajectory CSV")
    a.add_argument("csv")
    a.add_argument("--config", required=True)
    a.add_argument("--report", default=None, help="write JSON here instead of stdout")
    a.set_defaults(func=_cmd_analyze)

    l = sub.add_parser("lmi-check", help="search for an LMI certificate and print the scaled quantities")
    l.add_argument("--config", required=True)
    l.set_defaults(func=_cmd_lmi_check)

    v = sub.add_parser("verify", help="run the full invariant suite")
    v.add_argument("--config", required=True)
    v.add_argument("--report", default=None)
    v.set_defaults(func=_cmd_verify)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FormseekError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
