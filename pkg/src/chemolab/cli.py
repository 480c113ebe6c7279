"""Command-line entry points: scenario runs with bit-stable outputs,
threshold reports, weight-function tables and refinement studies.

Exit codes for ``run``: 0 completed with all checks passing, 2 completed
with a failed check, 3 blow-up, 1 configuration or I/O error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, config_digest, parse_config
from .convergence import refinement_study
from .diagnostics import RECORD_FIELDS, DiagnosticsRecord, verify_run
from .model import threshold_check, write_field_raw
from .solver import RunResult, SolverError, run
from .weight import epsilon_for_threshold, make_weight, p_for_equality

__all__ = ["main", "write_diagnostics_csv"]


def _fnum(x: float) -> str:
    """Full-precision decimal form; round-trips to the same float."""
    return repr(float(x))


def write_diagnostics_csv(records, path) -> None:
    """One header row, one row per sample, columns in record-field order."""
    lines = [",".join(RECORD_FIELDS)]
    for rec in records:
        cells = []
        for name in RECORD_FIELDS:
            value = getattr(rec, name)
            cells.append("" if value is None else _fnum(value))
        lines.append(",".join(cells))
    Path(path).write_text("\n".join(lines) + "\n")


def read_diagnostics_csv(path) -> list[DiagnosticsRecord]:
    """Inverse of :func:`write_diagnostics_csv` (round-trip exact)."""
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0].split(",") != list(RECORD_FIELDS):
        raise ValueError(f"{path} is not a diagnostics CSV")
    out = []
    for line in lines[1:]:
        cells = line.split(",")
        kwargs = {
            name: (None if cell == "" else float(cell))
            for name, cell in zip(RECORD_FIELDS, cells)
        }
        out.append(DiagnosticsRecord(**kwargs))
    return out


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _out_dir(args) -> Path:
    env = os.environ.get("CHEMOLAB_OUT")
    return Path(env if env else args.out)


def _write_snapshot(result: RunResult, outdir: Path) -> list[str]:
    """Final fields in the raw format plus a grid-metadata sidecar, so a
    later config can restart from them via file initializers."""
    state, grid = result.final_state, result.context.grid
    files = []
    for name, arr in (("u", state.u), ("v", state.v), ("w", state.w)):
        fname = f"final_{name}.raw"
        write_field_raw(arr, outdir / fname)
        files.append(fname)
    params = result.context.params
    sidecar = {
        "t": state.t,
        "grid": {"lengths": list(grid.lengths), "cells": list(grid.cells)},
        "params": {
            "chi1": params.chi1,
            "chi2": params.chi2,
            "alpha": params.alpha,
            "beta": params.beta,
        },
        "fields": {name: f"final_{name}.raw" for name in ("u", "v", "w")},
    }
    (outdir / "final_state.json").write_text(json.dumps(sidecar, indent=2) + "\n")
    files.append("final_state.json")
    return files


def cmd_run(args) -> int:
    config = parse_config(args.config)
    outdir = _out_dir(args)
    outdir.mkdir(parents=True, exist_ok=True)
    started = _now()

    def say(msg: str) -> None:
        if not args.quiet:
            print(msg)

    w0 = config.initial.w.sample(config.grid)
    advisory = threshold_check(config.params, float(np.max(w0)), config.grid.dim)
    say(
        f"threshold advisory: max(m1, m2) = {max(advisory.m1, advisory.m2):.6g} "
        f"vs bound {advisory.bound:.6g} -> "
        f"{'within' if advisory.within else 'ABOVE (run proceeds anyway)'}"
    )

    result = run(config)
    if result.context.weight_note:
        say(f"weight note: {result.context.weight_note}")

    files = []
    write_diagnostics_csv(result.records, outdir / "diagnostics.csv")
    files.append("diagnostics.csv")
    files.extend(_write_snapshot(result, outdir))

    manifest = {
        "config_digest": config_digest(config),
        "tool_version": __version__,
        "started": started,
        "outcome": result.outcome,
        "files": files,
    }

    if result.outcome == "blowup":
        manifest["blowup"] = result.blowup.to_dict()
        manifest["finished"] = _now()
        (outdir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
        say(
            f"BLOW-UP at t={result.blowup.time:.6g} in {result.blowup.field} "
            f"at cell {result.blowup.cell} (value {result.blowup.value:.6g})"
        )
        return 3

    report = verify_run(result.records, result.context)
    (outdir / "verification.json").write_text(
        json.dumps(report.to_dict(), indent=2) + "\n"
    )
    files.append("verification.json")
    manifest["checks_passed"] = report.passed
    manifest["finished"] = _now()
    (outdir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")

    for check in report:
        say(
            f"check {check.name}: {'pass' if check.passed else 'FAIL'} "
            f"(value {check.value:.6g}, threshold {check.threshold:.6g})"
        )
    say(f"outputs in {outdir}")
    return 0 if report.passed else 2


def cmd_threshold(args) -> int:
    from .model import ModelParams

    params = ModelParams(chi1=args.chi1, chi2=args.chi2, alpha=1.0, beta=1.0)
    report = threshold_check(params, args.w0max, args.n)
    m = max(report.m1, report.m2)
    rows = [
        ("n", str(args.n)),
        ("chi1, chi2", f"{args.chi1:.12g}, {args.chi2:.12g}"),
        ("||w0||_inf", f"{args.w0max:.12g}"),
        ("m1 = chi1*||w0||_inf", f"{report.m1:.12g}"),
        ("m2 = chi2*||w0||_inf", f"{report.m2:.12g}"),
        ("bound sqrt(2/n)*pi", f"{report.bound:.12g}"),
        ("within", "yes" if report.within else "no"),
    ]
    if not report.within:
        rows.append(("construction", "n/a (above threshold)"))
    elif m == 0.0:
        rows.append(("eps", f"{epsilon_for_threshold(0.0, args.n):.12g}"))
        rows.append(("p", "n/a (zero signal amplitude)"))
    else:
        eps = epsilon_for_threshold(m, args.n)
        p = p_for_equality(m, eps)
        rows.append(("eps", f"{eps:.12g}"))
        rows.append(("p", f"{p:.12g}"))
        rows.append(("p > n/2", "yes" if p > args.n / 2.0 else "no"))
    width = max(len(label) for label, _ in rows)
    for label, value in rows:
        print(f"{label:<{width}} : {value}")
    return 0


def cmd_analyze_weight(args) -> int:
    wf = make_weight(args.p, args.eps, args.m)
    s = np.linspace(0.0, wf.m, args.samples)
    phi = wf.phi(s)
    dphi = wf.phi_prime(s)
    ddphi = wf.phi_second(s)
    res = wf.identity_residual(s)
    print(f"{'s':>24} {'phi':>24} {'phi_prime':>24} {'phi_second':>24} {'residual':>13}")
    for row in zip(s, phi, dphi, ddphi, res):
        print(
            f"{row[0]:>24.16e} {row[1]:>24.16e} {row[2]:>24.16e} "
            f"{row[3]:>24.16e} {row[4]:>13.3e}"
        )
    max_res = float(np.max(np.abs(res)))
    phi_m = float(wf.phi(wf.m))
    print(
        f"max |residual| = {max_res:.3e} over {args.samples} samples "
        f"(scale max(1, phi(m)) = {max(1.0, phi_m):.6g})"
    )
    return 0


def cmd_convergence(args) -> int:
    config = parse_config(args.config)
    study = refinement_study(config, levels=args.levels)
    header = f"{'cells':>14}"
    for name in ("u", "v", "w"):
        header += f" {'err_' + name:>12} {'ord_' + name:>8}"
    print(header)
    for level in study.levels:
        row = f"{'x'.join(str(m) for m in level.cells):>14}"
        for name in ("u", "v", "w"):
            err = f"{level.errors[name]:.4e}" if level.errors else "-"
            order = f"{level.orders[name]:.3f}" if level.orders else "-"
            row += f" {err:>12} {order:>8}"
        print(row)
    print(f"observed order (u) = {study.observed_order('u'):.3f}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chemolab",
        description=(
            "Finite-volume simulator and analysis toolkit for two-species "
            "chemotaxis with signal absorption"
        ),
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", default=".", help="output directory (env CHEMOLAB_OUT overrides)")
        p.add_argument("--quiet", action="store_true", help="suppress progress messages")
        p.add_argument("--seed", type=int, default=None, help="reserved, unused")

    p_run = sub.add_parser("run", help="integrate a scenario and emit diagnostics")
    p_run.add_argument("--config", required=True, help="scenario config JSON")
    common(p_run)
    p_run.set_defaults(func=cmd_run)

    p_thr = sub.add_parser("threshold", help="boundedness threshold report")
    p_thr.add_argument("--n", type=int, required=True, help="spatial dimension")
    p_thr.add_argument("--chi1", type=float, required=True)
    p_thr.add_argument("--chi2", type=float, required=True)
    p_thr.add_argument("--w0max", type=float, required=True, help="||w0||_inf")
    common(p_thr)
    p_thr.set_defaults(func=cmd_threshold)

    p_aw = sub.add_parser("analyze-weight", help="weight function sample table")
    p_aw.add_argument("--p", type=float, required=True)
    p_aw.add_argument("--eps", type=float, required=True)
    p_aw.add_argument("--m", type=float, required=True, help="signal amplitude bound")
    p_aw.add_argument("--samples", type=int, default=1000)
    common(p_aw)
    p_aw.set_defaults(func=cmd_analyze_weight)

    p_cv = sub.add_parser("convergence", help="grid-refinement order study")
    p_cv.add_argument("--config", required=True, help="base scenario config JSON")
    p_cv.add_argument("--levels", type=int, default=3)
    common(p_cv)
    p_cv.set_defaults(func=cmd_convergence)

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, SolverError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
