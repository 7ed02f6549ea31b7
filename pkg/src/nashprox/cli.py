"""Command-line entry point.

Exit codes: 0 success (solve converged, certificate passed, diagnostic
passed), 1 usage or load error (stderr only), 2 solver did not converge,
3 certificate failed or diagnostic violation found.  Report files are JSON
with floats rounded to 12 significant digits, so identical runs produce
byte-identical bytes.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import certify as certify_mod
from . import instances, oracle
from .model import (
    InstanceError,
    SchemaError,
    load_candidate,
    load_diagnostic,
    load_instance,
)
from .response import ResponseConfig
from .solver import SolveConfig, SolveError, solve

__all__ = ["main", "run"]


class _Failure(Exception):
    def __init__(self, message: str, code: int = 1):
        super().__init__(message)
        self.code = code


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems exit 1, not argparse's default 2
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise _Failure(f"cannot read '{path}': {e.strerror or e}") from e


def _load_instance_file(path: str):
    try:
        return load_instance(_read(path))
    except InstanceError as e:
        raise _Failure(f"cannot load instance '{path}': {e}") from e


def _round_floats(obj):
    if isinstance(obj, float):
        return float(f"{obj:.12g}") + 0.0
    if isinstance(obj, dict):
        return {k: _round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_floats(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _round_floats(obj.tolist())
    if isinstance(obj, (np.floating,)):
        return _round_floats(float(obj))
    if isinstance(obj, (np.integer,)):
        return int(obj)
    return obj


def _write_report(path: str | None, payload: dict) -> None:
    if not path:
        return
    text = json.dumps(_round_floats(payload), indent=2, sort_keys=True) + "\n"
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as e:
        raise _Failure(f"cannot write '{path}': {e.strerror or e}") from e


def _residuals_payload(rep) -> dict:
    return {
        "feas_x": list(rep.feas_x),
        "projection": list(rep.proj_residual),
        "feas_f": list(rep.feas_f),
        "optimality": list(rep.opt_residual),
        "max": rep.max_residual,
        "tol": rep.tol,
        "pass": rep.passed,
        "search_resolution": rep.search_resolution,
    }


def _cmd_solve(args) -> int:
    inst = _load_instance_file(args.instance)
    cfg = SolveConfig(
        tol_fp=args.tol_fp,
        tol_cert=args.tol,
        max_iter=args.max_iter,
        damping=args.damping,
        multistart=args.starts,
        seed=args.seed,
        keep_trace=args.trace,
    )
    try:
        report = solve(inst, cfg)
    except (SolveError, InstanceError) as e:
        raise _Failure(f"solver failed: {e}") from e
    payload = {
        "converged": report.converged,
        "x_tilde": [v.tolist() for v in report.solution.x_tilde],
        "y_tilde": [v.tolist() for v in report.solution.y_tilde],
        "residuals": _residuals_payload(report.residuals),
        "iterations": report.iterations,
        "seed": args.seed,
    }
    if args.trace:
        payload["trace"] = [
            {"x": [v.tolist() for v in profile], "step": step}
            for profile, step in (report.trace or ())
        ]
    _write_report(args.report, payload)
    status = "converged" if report.converged else "did not converge"
    print(
        f"{status} in {report.iterations} iteration(s) using "
        f"{report.starts_used} start(s); max residual "
        f"{report.residuals.max_residual:.3e}; seed {args.seed}"
    )
    return 0 if report.converged else 2


def _cmd_certify(args) -> int:
    inst = _load_instance_file(args.instance)
    try:
        cand = load_candidate(_read(args.candidate), inst)
    except InstanceError as e:
        raise _Failure(f"cannot load candidate '{args.candidate}': {e}") from e
    try:
        rep = certify_mod.certify(
            inst, cand, tol=args.tol, cfg=ResponseConfig(seed=args.seed)
        )
    except certify_mod.CertifyError as e:
        raise _Failure(f"certification failed: {e}") from e
    _write_report(args.report, {
        "pass": rep.passed,
        "residuals": _residuals_payload(rep),
        "tol": rep.tol,
        "seed": args.seed,
    })
    verdict = "pass" if rep.passed else "fail"
    print(f"certificate {verdict}: max residual {rep.max_residual:.3e} at tol {rep.tol:.1e}")
    return 0 if rep.passed else 3


def _cmd_oracle(args) -> int:
    inst = _load_instance_file(args.instance)
    fn = oracle.brute_force_gnep if inst.kind == "gnep" else oracle.brute_force_quopt
    try:
        res = fn(inst, args.grid, match_tol=args.match_tol, budget=args.budget)
    except (oracle.BudgetExceededError, ValueError) as e:
        raise _Failure(f"oracle failed: {e}") from e
    _write_report(args.report, {
        "candidates": [
            {
                "x": [v.tolist() for v in c.x],
                "y": [v.tolist() for v in c.y],
                "residual": c.residual,
            }
            for c in res.candidates
        ],
        "resolution": res.resolution,
        "match_tol": res.match_tol,
        "grid_spacing": res.grid_spacing,
        "evaluations": res.evaluations,
        "skipped_realizations": res.skipped_realizations,
        "seed": args.seed,
    })
    print(
        f"{len(res.candidates)} candidate(s) at resolution {res.resolution} "
        f"(match tol {res.match_tol:.4g}, {res.evaluations} evaluations)"
    )
    return 0


def _cmd_example(args) -> int:
    try:
        text = instances.instance_text(args.name)
    except KeyError:
        known = ", ".join(instances.instance_names())
        raise _Failure(f"unknown example '{args.name}'; available: {known}") from None
    if args.emit:
        try:
            Path(args.emit).write_text(text, encoding="utf-8")
        except OSError as e:
            raise _Failure(f"cannot write '{args.emit}': {e.strerror or e}") from e
        print(f"wrote {args.emit}")
    else:
        sys.stdout.write(text)
    return 0


def _parse_point(text: str) -> list[float]:
    try:
        return [float(part) for part in text.split(",")]
    except ValueError as e:
        raise _Failure(f"cannot parse point '{text}': {e}") from e


def _witness_payload(w) -> dict | None:
    if w is None:
        return None
    return {"u": w.u.tolist(), "v": w.v.tolist(), "t": w.t, "lhs": w.lhs, "rhs": w.rhs}


def _cmd_diagnose(args) -> int:
    if bool(args.function) == bool(args.instance):
        raise _Failure("exactly one of --function or --instance is required")
    if args.check == "quasiconcave":
        if args.function:
            try:
                spec = load_diagnostic(_read(args.function))
            except InstanceError as e:
                raise _Failure(f"cannot load '{args.function}': {e}") from e
            if spec.domain is None:
                raise _Failure("the function file has no 'domain' to sample")
            rep = certify_mod.check_quasiconcave(
                spec.function, spec.domain, tol=args.tol, seed=args.seed
            )
            reports = [("function", rep)]
        else:
            inst = _load_instance_file(args.instance)
            reports = []
            for i, p in enumerate(inst.players):
                from .geometry import bounding_box, project, SemiNorm
                from .model import realize_constraint

                seed_profile = [
                    project(
                        q.strategy_set,
                        SemiNorm(np.ones(q.dim)),
                        0.5 * (bounding_box(q.strategy_set)[0] + bounding_box(q.strategy_set)[1]),
                    ).point
                    for q in inst.players
                ]
                realized = realize_constraint(inst, i, seed_profile)
                from .model import _public_env

                rep = certify_mod.check_quasiconcave(
                    p.objective,
                    realized,
                    tol=args.tol,
                    seed=args.seed,
                    bound_env=_public_env(inst, i, seed_profile),
                )
                reports.append((p.name, rep))
        ok = all(rep.quasiconcave for _, rep in reports)
        payload = {
            "check": "quasiconcave",
            "seed": args.seed,
            "note": certify_mod.EVIDENCE_NOTE,
            "results": [
                {
                    "subject": name,
                    "quasiconcave": rep.quasiconcave,
                    "quasiconcave_witness": _witness_payload(rep.quasiconcave_witness),
                    "midpoint_concave": rep.midpoint_concave,
                    "midpoint_witness": _witness_payload(rep.midpoint_witness),
                }
                for name, rep in reports
            ],
        }
        _write_report(args.report, payload)
        for name, rep in reports:
            qc = "pass" if rep.quasiconcave else "violation"
            mc = "pass" if rep.midpoint_concave else "violation"
            print(f"{name}: quasi-concavity {qc}; midpoint concavity probe {mc}")
        return 0 if ok else 3

    # lsc / fptlsc need a function file
    if not args.function:
        raise _Failure(f"--check {args.check} requires --function")
    try:
        spec = load_diagnostic(_read(args.function))
    except InstanceError as e:
        raise _Failure(f"cannot load '{args.function}': {e}") from e
    point = _parse_point(args.point) if args.point else spec.point
    epsilon = args.epsilon if args.epsilon is not None else spec.epsilon
    if point is None:
        raise _Failure("no point given (use --point or a 'point' field in the file)")
    if epsilon is None:
        raise _Failure("no epsilon given (use --epsilon or an 'epsilon' field in the file)")

    if args.check == "lsc":
        rep = certify_mod.check_lsc_at(spec.function, point, epsilon, seed=args.seed)
        _write_report(args.report, {
            "check": "lsc",
            "violated": rep.violated,
            "value_at_point": rep.value_at_point,
            "epsilon": rep.epsilon,
            "seed": rep.seed,
            "note": rep.note,
            "radii": [
                {
                    "radius": r.radius,
                    "violation_found": r.violation_found,
                    "witness": None if r.witness is None else r.witness.tolist(),
                    "witness_value": r.witness_value,
                }
                for r in rep.records
            ],
        })
        if rep.violated:
            print(
                f"lower semi-continuity violation at {list(point)}: values drop by "
                f">= {epsilon} at every sampled radius"
            )
            return 3
        print(f"no persistent lower semi-continuity violation found at {list(point)}")
        return 0

    if spec.map is None:
        raise _Failure("the function file has no 'map' for the feasible-path check")
    try:
        rep = certify_mod.check_fpt_lsc_at(
            spec.function, spec.map, point, epsilon, seed=args.seed
        )
    except ValueError as e:
        raise _Failure(str(e)) from e
    _write_report(args.report, {
        "check": "fptlsc",
        "passed": rep.passed,
        "value_at_point": rep.value_at_point,
        "epsilon": rep.epsilon,
        "seed": rep.seed,
        "note": rep.note,
        "radii": [
            {
                "radius": r.radius,
                "transfer_ok": r.transfer_ok,
                "witness_u": None if r.witness_u is None else r.witness_u.tolist(),
            }
            for r in rep.records
        ],
    })
    if rep.passed:
        print("feasible-path transfer holds at every sampled radius")
        return 0
    print("feasible-path transfer fails at the finest sampled radius")
    return 3


def build_parser() -> _Parser:
    parser = _Parser(
        prog="nashprox",
        description=(
            "Compute and verify best approximate solutions of generalized "
            "Nash games with non-self constraint maps, and of "
            "quasi-optimization problems."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="run the fixed-point solver on an instance")
    p.add_argument("--instance", required=True, help="instance file to solve")
    p.add_argument("--report", help="write a JSON report here")
    p.add_argument("--tol", type=float, default=1e-6, help="certificate tolerance")
    p.add_argument("--tol-fp", type=float, default=1e-8, help="fixed-point step tolerance")
    p.add_argument("--max-iter", type=int, default=500, help="iterations per start")
    p.add_argument("--starts", type=int, default=8, help="number of restarts")
    p.add_argument("--damping", type=float, default=1.0, help="averaging factor in (0,1]")
    p.add_argument("--seed", type=int, default=42, help="seed for all randomness")
    p.add_argument("--trace", action="store_true", help="record per-iteration profiles")
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("certify", help="check a candidate pair against an instance")
    p.add_argument("--instance", required=True)
    p.add_argument("--candidate", required=True, help="JSON file with x_tilde and y_tilde")
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--report", help="write a JSON report here")
    p.set_defaults(func=_cmd_certify)

    p = sub.add_parser("oracle", help="exhaustive grid search for solutions")
    p.add_argument("--instance", required=True)
    p.add_argument("--grid", type=int, default=21, help="grid resolution per axis")
    p.add_argument("--match-tol", type=float, default=None,
                   help="residual acceptance radius (default 1.5 grid spacings)")
    p.add_argument("--budget", type=int, default=10**7,
                   help="maximum number of objective evaluations")
    p.add_argument("--report", help="write the candidate list here")
    p.add_argument("--seed", type=int, default=42)
    p.set_defaults(func=_cmd_oracle)

    p = sub.add_parser("example", help="emit a bundled example file")
    p.add_argument("--name", required=True, help="one of: " + ", ".join(instances.instance_names()))
    p.add_argument("--emit", help="output path (default: stdout)")
    p.set_defaults(func=_cmd_example)

    p = sub.add_parser("diagnose", help="sampling checks of the standing assumptions")
    p.add_argument("--check", required=True, choices=["quasiconcave", "lsc", "fptlsc"])
    p.add_argument("--function", help="diagnostic function file")
    p.add_argument("--instance", help="game instance (quasiconcave check only)")
    p.add_argument("--point", help="comma-separated coordinates")
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--report", help="write a JSON report here")
    p.set_defaults(func=_cmd_diagnose)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return args.func(args)
    except _Failure as e:
        print(f"nashprox: error: {e}", file=sys.stderr)
        return e.code


def run() -> None:
    sys.exit(main())
