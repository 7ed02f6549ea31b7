"""Damped fixed-point iteration of best response followed by projection.

Each sweep computes every player's best response to the current profile,
projects it back into that player's strategy set under the player's own
semi-norm, and averages with the previous iterate (Krasnoselskii damping).
A run is declared converged only when the step stagnates and the resulting
candidate pair passes the certificate; step stagnation alone never counts,
since a selected single-valued iteration can stall at non-solutions.  Failed
runs restart from fresh seeded points, and the report keeps the best
candidate by certificate residual when nothing converges.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .certify import CertReport, CertifyError, certify
from .geometry import SemiNorm, bounding_box, project
from .model import (
    CandidateSolution,
    GameInstance,
    InstanceError,
    RealizationError,
    validate,
)
from .response import ResponseConfig, ResponseError, best_response

__all__ = ["SolveConfig", "SolveError", "SolveReport", "solve", "solve_gnep", "solve_quopt"]


class SolveError(Exception):
    pass


@dataclass(frozen=True)
class SolveConfig:
    tol_fp: float = 1e-8  # max per-player semi-norm step between iterates
    tol_cert: float = 1e-6  # certificate residual bound for convergence
    max_iter: int = 500
    damping: float = 1.0  # averaging factor; 1.0 is the undamped iteration
    multistart: int = 8
    seed: int = 42
    response: ResponseConfig | None = None  # defaults to ResponseConfig(seed=seed)
    keep_trace: bool = False

    def __post_init__(self):
        if not self.tol_fp > 0:
            raise ValueError("tol_fp must be positive")
        if not self.tol_cert > 0:
            raise ValueError("tol_cert must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be positive")
        if not 0 < self.damping <= 1:
            raise ValueError("damping must lie in (0, 1]")
        if self.multistart < 1:
            raise ValueError("multistart must be positive")


@dataclass(frozen=True)
class SolveReport:
    converged: bool
    solution: CandidateSolution
    residuals: CertReport
    iterations: int
    starts_used: int
    trace: tuple | None  # per-iteration (profile, step) when keep_trace is set


def solve(inst: GameInstance, cfg: SolveConfig = SolveConfig()) -> SolveReport:
    """Dispatch on the instance kind."""
    if inst.kind == "gnep":
        return solve_gnep(inst, cfg)
    return solve_quopt(inst, cfg)


def solve_gnep(inst: GameInstance, cfg: SolveConfig = SolveConfig()) -> SolveReport:
    if inst.kind != "gnep":
        raise ValueError(f"expected a gnep instance, got kind '{inst.kind}'")
    return _solve_fixed_point(inst, cfg)


def solve_quopt(inst: GameInstance, cfg: SolveConfig = SolveConfig()) -> SolveReport:
    if inst.kind != "quopt":
        raise ValueError(f"expected a quopt instance, got kind '{inst.kind}'")
    return _solve_fixed_point(inst, cfg)


def _solve_fixed_point(inst: GameInstance, cfg: SolveConfig) -> SolveReport:
    problems = [d for d in validate(inst) if d.severity == "error"]
    if problems:
        raise InstanceError(
            "; ".join(f"{d.location}: {d.message}" for d in problems)
        )
    rcfg = cfg.response if cfg.response is not None else ResponseConfig(seed=cfg.seed)
    rng = np.random.default_rng(cfg.seed)
    players = inst.players
    boxes = [bounding_box(p.strategy_set) for p in players]
    euclids = [SemiNorm(np.ones(p.dim)) for p in players]

    best = None  # (max_residual, candidate, report, iterations, trace)
    for start_idx in range(cfg.multistart):
        if start_idx == 0:
            # Interior-ish seed: the box midpoint of each strategy set, projected in.
            x = [
                project(p.strategy_set, euclids[i], 0.5 * (boxes[i][0] + boxes[i][1])).point
                for i, p in enumerate(players)
            ]
        else:
            x = [
                project(p.strategy_set, euclids[i], rng.uniform(boxes[i][0], boxes[i][1])).point
                for i, p in enumerate(players)
            ]
        trace: list = []
        y = None
        stagnated = False
        iterations = 0
        for k in range(cfg.max_iter):
            try:
                y = [best_response(inst, i, x, rcfg).point for i in range(len(players))]
            except (RealizationError, ResponseError) as e:
                raise SolveError(f"start {start_idx + 1}, iteration {k + 1}: {e}") from e
            x_new = []
            for i, p in enumerate(players):
                proj = project(p.strategy_set, p.seminorm, y[i]).point
                x_new.append((1.0 - cfg.damping) * x[i] + cfg.damping * proj)
            step = max(
                p.seminorm(x_new[i] - x[i]) for i, p in enumerate(players)
            )
            if cfg.keep_trace:
                trace.append((tuple(v.copy() for v in x_new), float(step)))
            x = x_new
            iterations = k + 1
            if step <= cfg.tol_fp:
                stagnated = True
                break
        cand = CandidateSolution(tuple(x), tuple(y))
        try:
            report = certify(inst, cand, tol=cfg.tol_cert, cfg=rcfg)
        except CertifyError as e:
            raise SolveError(f"start {start_idx + 1}: {e}") from e
        if stagnated and report.passed:
            return SolveReport(
                converged=True,
                solution=cand,
                residuals=report,
                iterations=iterations,
                starts_used=start_idx + 1,
                trace=tuple(trace) if cfg.keep_trace else None,
            )
        if best is None or report.max_residual < best[0]:
            best = (
                report.max_residual,
                cand,
                report,
                iterations,
                tuple(trace) if cfg.keep_trace else None,
            )
    _, cand, report, iterations, trace_kept = best
    return SolveReport(
        converged=False,
        solution=cand,
        residuals=report,
        iterations=iterations,
        starts_used=cfg.multistart,
        trace=trace_kept,
    )
