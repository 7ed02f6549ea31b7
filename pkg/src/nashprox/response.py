"""Best responses: maximize one player's payoff over its realized feasible set.

The maximizer set of a merely quasi-concave, possibly nonsmooth payoff has no
exact algorithm here; the search combines seeded multi-start projected
gradient ascent with a deterministic grid polish whose spacing bounds the
optimality gap on the bundled corpus.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .expr import EvalError, grad_fd
from .geometry import (
    SemiNorm,
    bounding_box,
    diameter,
    project,
    sample_grid,
    violation,
)
from .model import GameInstance, objective_env, objective_value, objective_value_many, realize_constraint

__all__ = [
    "BestResponse",
    "InfeasiblePointError",
    "ResponseConfig",
    "ResponseError",
    "best_response",
    "response_value_gap",
]

_ASCENT_MIN_STEP = 1e-12


class ResponseError(Exception):
    pass


class InfeasiblePointError(ResponseError):
    def __init__(self, message: str, max_violation: float):
        super().__init__(message)
        self.max_violation = max_violation


@dataclass(frozen=True)
class ResponseConfig:
    starts: int = 16
    ascent_steps: int = 500
    step_init: float | None = None  # default 0.1 * bounding-box diameter
    step_shrink: float = 0.5
    polish_resolution: int = 33
    tol_value: float = 1e-9
    seed: int = 42

    def __post_init__(self):
        if self.starts < 1:
            raise ValueError("starts must be positive")
        if self.ascent_steps < 1:
            raise ValueError("ascent_steps must be positive")
        if self.step_init is not None and not self.step_init > 0:
            raise ValueError("step_init must be positive")
        if not 0 < self.step_shrink < 1:
            raise ValueError("step_shrink must lie in (0, 1)")
        if self.polish_resolution < 2:
            raise ValueError("polish_resolution must be at least 2")
        if not self.tol_value > 0:
            raise ValueError("tol_value must be positive")


class BestResponse(NamedTuple):
    point: np.ndarray
    value: float
    status: str  # "start" | "ascent" | "grid": the phase that produced the winner


def _euclidean(dim: int) -> SemiNorm:
    return SemiNorm(np.ones(dim))


def best_response(
    inst: GameInstance, i: int, profile, cfg: ResponseConfig = ResponseConfig()
) -> BestResponse:
    """A maximizer of player *i*'s payoff over its realized feasible set.

    Three phases, all deterministic under ``cfg.seed``: seeded uniform draws
    over the realized set's bounding box projected into the set, projected
    gradient ascent from each draw (finite-difference gradients, backtracking
    by ``step_shrink`` on non-improvement, stopping below step 1e-12), and a
    grid polish at ``polish_resolution``.  Candidates within ``tol_value`` of
    the best value tie-break to the lexicographically smallest point.

    Gradient failures at kinks or domain edges silently end that ascent; the
    grid phase anchors correctness.  An objective that cannot be evaluated at
    a feasible point raises :class:`ResponseError`.
    """
    player = inst.players[i]
    realized = realize_constraint(inst, i, profile)
    lo, hi = bounding_box(realized)
    eu = _euclidean(len(lo))
    rng = np.random.default_rng(cfg.seed)
    step0 = cfg.step_init if cfg.step_init is not None else 0.1 * diameter(realized)
    z_names = [f"z_{j + 1}" for j in range(player.dim)]

    def value_at(z: np.ndarray) -> float:
        try:
            return objective_value(inst, i, profile, z)
        except EvalError as e:
            raise ResponseError(
                f"player '{player.name}': objective evaluation failed at feasible "
                f"point {z.tolist()}: {e}"
            ) from e

    pool: list[tuple[np.ndarray, float, str]] = []
    for _ in range(cfg.starts):
        y = project(realized, eu, rng.uniform(lo, hi)).point
        val = value_at(y)
        pool.append((y, val, "start"))
        step = step0
        for _ in range(cfg.ascent_steps):
            if step < _ASCENT_MIN_STEP:
                break
            try:
                g = grad_fd(player.objective, objective_env(inst, i, profile, y), z_names)
            except EvalError:
                break
            cand = project(realized, eu, y + step * g).point
            cand_val = value_at(cand)
            if cand_val > val:
                y, val = cand, cand_val
            else:
                step *= cfg.step_shrink
        pool.append((y, val, "ascent"))

    grid = sample_grid(realized, cfg.polish_resolution)
    grid_vals = None
    if len(grid):
        try:
            grid_vals = objective_value_many(inst, i, profile, grid)
        except EvalError as e:
            raise ResponseError(
                f"player '{player.name}': objective evaluation failed on the "
                f"feasible grid: {e}"
            ) from e

    best_val = max(val for _, val, _ in pool)
    if grid_vals is not None and len(grid_vals):
        best_val = max(best_val, float(np.max(grid_vals)))
    threshold = best_val - cfg.tol_value

    winner = None  # (coords tuple, point, value, status)
    for y, val, phase in pool:
        if val >= threshold:
            key = tuple(y)
            if winner is None or key < winner[0]:
                winner = (key, y, val, phase)
    if grid_vals is not None and len(grid_vals):
        qualifying = np.nonzero(grid_vals >= threshold)[0]
        if len(qualifying):
            k = int(qualifying[0])  # grid rows are lexicographically ordered
            key = tuple(grid[k])
            if winner is None or key < winner[0]:
                winner = (key, grid[k], float(grid_vals[k]), "grid")
    _, point, value, status = winner
    return BestResponse(np.array(point, dtype=float), float(value), status)


def response_value_gap(
    inst: GameInstance, i: int, profile, y, cfg: ResponseConfig = ResponseConfig()
) -> float:
    """Best attainable payoff minus the payoff at *y*; 0 within ``tol_value``.

    *y* must lie in the realized feasible set within 1e-6, else
    :class:`InfeasiblePointError` carries the worst constraint violation.
    """
    y = np.asarray(y, dtype=float)
    realized = realize_constraint(inst, i, profile)
    viol = violation(realized, y)
    if viol > 1e-6:
        raise InfeasiblePointError(
            f"player '{inst.players[i].name}': point {y.tolist()} is outside its "
            f"feasible set (violation {viol:.3e})",
            viol,
        )
    br = best_response(inst, i, profile, cfg)
    gap = br.value - objective_value(inst, i, profile, y)
    return 0.0 if gap <= cfg.tol_value else float(gap)
