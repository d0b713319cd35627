"""Command-line entry point: run verification suites, simulations, and reports.

Exit codes: 0 success, 1 check failure, 2 usage/configuration error,
3 simulation blow-up.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from typing import List, Optional, Sequence

from .numerics import (
    BlowUpError,
    evolve,
    initial_state,
    load_config,
    mask_label,
    residual_check,
    write_series_csv,
    write_state_csv,
)
from .reporting import (
    CheckResult,
    VerificationReport,
    make_metadata,
    write_atomic,
)
from .structures import SUITE_NAMES, run_suite

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_BLOWUP = 3


def _parse_suite(raw: Sequence[str]) -> List[str]:
    names: List[str] = []
    for chunk in raw:
        names.extend(part for part in chunk.split(",") if part)
    if names == ["all"]:
        return list(SUITE_NAMES)
    unknown = [n for n in names if n not in SUITE_NAMES]
    if unknown:
        raise ValueError(
            f"unknown suite name(s) {', '.join(unknown)}; "
            f"choose from: all, {', '.join(SUITE_NAMES)}"
        )
    if not names:
        raise ValueError("suite selection is empty")
    return names


def _print_table(entries: Sequence[CheckResult]) -> None:
    width = max(len(e.check_id) for e in entries)
    for e in entries:
        status = "PASS" if e.passed else "FAIL"
        line = f"{status}  {e.check_id:<{width}}  {e.elapsed:8.3f}s"
        if e.detail:
            line += f"  {e.detail}"
        print(line)
        if not e.passed and e.residual:
            print(f"      residual: {e.residual[:200]}")


def cmd_verify(args: argparse.Namespace) -> int:
    try:
        names = _parse_suite(args.suite)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    entries = run_suite(names)
    config_hash = hashlib.sha256(",".join(names).encode()).hexdigest()[:16]
    report = VerificationReport(entries=entries, metadata=make_metadata(config_hash))
    _print_table(entries)
    if args.out:
        write_atomic(args.out, report.to_json())
        print(f"report written to {args.out}")
    return EXIT_OK if report.all_passed() else EXIT_CHECK_FAILED


def _drift_summary(traj, n_grassmann: int) -> dict:
    out = {}
    for name in ("h1", "h2"):
        series = [getattr(s, name) for s in traj.samples]
        masks = sorted({m for g in series for m in g.coeffs} | {0})
        for m in masks:
            values = [g.coeffs.get(m, 0.0) for g in series]
            initial = values[0]
            drift = max(abs(v - initial) for v in values)
            scale = max(abs(initial), 1e-30)
            out[f"{name.upper()}_{mask_label(m, n_grassmann)}"] = {
                "initial": initial,
                "max_abs_drift": drift,
                "max_rel_drift": drift / scale,
            }
    return out


def cmd_simulate(args: argparse.Namespace) -> int:
    try:
        cfg, init_spec = load_config(args.config)
        state0 = initial_state(init_spec, cfg)
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: bad configuration: {exc}", file=sys.stderr)
        return EXIT_USAGE
    os.makedirs(args.out_dir, exist_ok=True)
    summary: dict = {"config": args.config, "n_grassmann": cfg.n_grassmann}
    try:
        traj = evolve(state0, cfg)
    except BlowUpError as exc:
        summary["status"] = "blowup"
        summary["blowup_time"] = exc.time
        summary["diagnostics"] = exc.diagnostics
        write_atomic(os.path.join(args.out_dir, "summary.json"), json.dumps(summary, indent=2))
        print(f"simulation aborted: {exc}", file=sys.stderr)
        return EXIT_BLOWUP
    write_series_csv(os.path.join(args.out_dir, "series.csv"), traj, cfg.n_grassmann)
    write_state_csv(os.path.join(args.out_dir, "final_state.csv"), traj.final, cfg.n_grassmann)
    summary["status"] = "ok"
    summary["final_time"] = traj.final.time
    summary["conservation"] = _drift_summary(traj, cfg.n_grassmann)
    summary["max_abs_ux"] = max(s.max_abs_ux for s in traj.samples)
    if len(traj.states) >= 3:
        summary["residual_check"] = residual_check(traj)
    write_atomic(os.path.join(args.out_dir, "summary.json"), json.dumps(summary, indent=2))
    print(f"simulation complete at t = {traj.final.time:g}; outputs in {args.out_dir}")
    return EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    any_fail = False
    for path in args.files:
        try:
            with open(path) as handle:
                report = VerificationReport.from_json(handle.read())
        except (OSError, ValueError, KeyError) as exc:
            print(f"error: cannot read report {path}: {exc}", file=sys.stderr)
            return EXIT_USAGE
        print(f"== {path}")
        _print_table(report.entries)
        any_fail = any_fail or not report.all_passed()
    return EXIT_CHECK_FAILED if any_fail else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="superhs",
        description=(
            "Verify the algebraic identities of the supersymmetric "
            "Hunter-Saxton system and integrate it on the circle."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_verify = sub.add_parser("verify", help="run identity checks")
    p_verify.add_argument(
        "--suite",
        action="append",
        required=True,
        help=f"comma-separated check names or 'all' ({', '.join(SUITE_NAMES)})",
    )
    p_verify.add_argument("--out", help="write the JSON report here")
    p_verify.set_defaults(func=cmd_verify)

    p_sim = sub.add_parser("simulate", help="run a simulation from a JSON config")
    p_sim.add_argument("--config", required=True, help="JSON configuration file")
    p_sim.add_argument("--out-dir", required=True, help="output directory")
    p_sim.set_defaults(func=cmd_simulate)

    p_rep = sub.add_parser("report", help="summarize report files")
    p_rep.add_argument("files", nargs="+", help="verification report JSON files")
    p_rep.set_defaults(func=cmd_report)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
