"""Exhaustive grid search for fixed points of the discretized
best-response-then-project map.

For every grid profile x, each player's best response is taken over a grid of
its realized feasible set and projected back into its strategy set; the
profile is emitted when the worst per-player semi-norm mismatch between the
projected responses and x stays within a matching tolerance.  Because both
the feasible set and the payoff of a player depend only on the parameterizing
players (rivals, or the player itself for quasi-optimization), responses are
cached per parameter combination instead of per profile.

Exact fixed points rarely sit on a grid, so the matching tolerance defaults
to 1.5 grid spacings, the natural consistency radius of the discretization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import project, sample_grid
from .model import GameInstance, RealizationError, objective_value_many, realize_constraint

__all__ = [
    "BudgetExceededError",
    "OracleCandidate",
    "OracleResult",
    "brute_force_gnep",
    "brute_force_quopt",
    "grid_spacing",
]


class BudgetExceededError(Exception):
    pass


@dataclass(frozen=True)
class OracleCandidate:
    x: tuple[np.ndarray, ...]
    y: tuple[np.ndarray, ...]
    residual: float


@dataclass(frozen=True)
class OracleResult:
    candidates: tuple[OracleCandidate, ...]
    resolution: int
    match_tol: float
    grid_spacing: float
    evaluations: int
    skipped_realizations: int


def grid_spacing(inst: GameInstance, resolution: int) -> float:
    """Largest axis spacing across all players' strategy-set grids."""
    if resolution < 2:
        raise ValueError("resolution must be at least 2")
    from .geometry import bounding_box

    spacing = 0.0
    for p in inst.players:
        lo, hi = bounding_box(p.strategy_set)
        spacing = max(spacing, float(np.max(hi - lo)) / (resolution - 1))
    return spacing


def brute_force_gnep(
    inst: GameInstance,
    resolution: int,
    match_tol: float | None = None,
    budget: int = 10**7,
) -> OracleResult:
    if inst.kind != "gnep":
        raise ValueError(f"expected a gnep instance, got kind '{inst.kind}'")
    return _brute_force(inst, resolution, match_tol, budget)


def brute_force_quopt(
    inst: GameInstance,
    resolution: int,
    match_tol: float | None = None,
    budget: int = 10**7,
) -> OracleResult:
    if inst.kind != "quopt":
        raise ValueError(f"expected a quopt instance, got kind '{inst.kind}'")
    return _brute_force(inst, resolution, match_tol, budget)


def _param_players(inst: GameInstance, i: int) -> list[int]:
    if inst.kind == "quopt":
        return [i]
    return [j for j in range(len(inst.players)) if j != i]


def _brute_force(
    inst: GameInstance, resolution: int, match_tol: float | None, budget: int
) -> OracleResult:
    n_players = len(inst.players)
    dims = [p.dim for p in inst.players]

    # Conservative bound on objective evaluations from bounding-box grid
    # sizes; the filtered grids can only be smaller.
    estimate = 0
    for i in range(n_players):
        combos = math.prod(resolution**dims[j] for j in _param_players(inst, i))
        estimate += combos * resolution ** dims[i]
    if estimate > budget:
        raise BudgetExceededError(
            f"estimated {estimate:.4g} objective evaluations exceed the budget {budget:.4g}"
        )

    spacing = grid_spacing(inst, resolution)
    tol = 1.5 * spacing if match_tol is None else float(match_tol)
    grids = [sample_grid(p.strategy_set, resolution) for p in inst.players]
    sizes = [len(g) for g in grids]
    if min(sizes) == 0:
        return OracleResult((), resolution, tol, spacing, 0, 0)

    evaluations = 0
    skipped = 0
    responses: list[np.ndarray] = []  # cached best responses per parameter combo
    dist_mats: list[np.ndarray] = []  # p_i(projected response - own grid point)
    combo_shapes: list[tuple[int, ...]] = []
    for i, player in enumerate(inst.players):
        params = _param_players(inst, i)
        shape = tuple(sizes[j] for j in params)
        count = math.prod(shape)
        Y = np.full((count, dims[i]), np.nan)
        XP = np.full((count, dims[i]), np.nan)
        ok = np.zeros(count, dtype=bool)
        for c, multi in enumerate(np.ndindex(*shape)):
            profile = [np.zeros(d) for d in dims]
            for pos, j in enumerate(params):
                profile[j] = grids[j][multi[pos]]
            try:
                realized = realize_constraint(inst, i, profile)
                feasible = sample_grid(realized, resolution)
            except RealizationError:
                skipped += 1
                continue
            if len(feasible) == 0:
                skipped += 1
                continue
            values = objective_value_many(inst, i, profile, feasible)
            evaluations += len(feasible)
            # argmax takes the first maximum: the lexicographically smallest
            # maximizer, because grid rows are lexicographically ordered.
            y_hat = feasible[int(np.argmax(values))]
            Y[c] = y_hat
            XP[c] = project(player.strategy_set, player.seminorm, y_hat).point
            ok[c] = True
        diffs = XP[:, None, :] - grids[i][None, :, :]
        D = np.sqrt(np.einsum("cnd,d->cn", diffs * diffs, player.seminorm.weights))
        D[~ok] = np.inf
        responses.append(Y)
        dist_mats.append(D)
        combo_shapes.append(shape)

    if inst.kind == "quopt":
        residual = dist_mats[0][np.arange(sizes[0]), np.arange(sizes[0])]
    else:
        residual = None
        for i in range(n_players):
            full = dist_mats[i].reshape(combo_shapes[i] + (sizes[i],))
            aligned = np.moveaxis(full, -1, i)
            residual = aligned if residual is None else np.maximum(residual, aligned)

    hits = np.argwhere(residual <= tol)
    candidates = []
    for idx in hits:
        idx = tuple(int(k) for k in idx)
        x = tuple(grids[i][idx[i]].copy() for i in range(n_players))
        y = []
        for i in range(n_players):
            params = _param_players(inst, i)
            if combo_shapes[i]:
                c = int(np.ravel_multi_index([idx[j] for j in params], combo_shapes[i]))
            else:
                c = 0
            y.append(responses[i][c].copy())
        candidates.append(OracleCandidate(x, tuple(y), float(residual[idx])))
    candidates.sort(key=lambda cand: cand.residual)  # stable: ties stay lexicographic
    return OracleResult(
        tuple(candidates), resolution, tol, spacing, evaluations, skipped
    )
