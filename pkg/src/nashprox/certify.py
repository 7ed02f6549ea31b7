"""Certificates for candidate pairs and sampling-based hypothesis checks.

A candidate pair (x~, y~) is a best approximate solution when, for every
player, x~ lies in the strategy set, y~ lies in the realized feasible set,
p(y~ - x~) equals the semi-norm distance from y~ to the strategy set, and y~
maximizes the payoff over the realized feasible set.  ``certify`` reports the
numerical slack in those four conditions.

The quasi-concavity and semicontinuity checks are sampling evidence only and
say so in their reports; exact verification is out of reach for this
expression class.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .expr import EvalError, Expression, evaluate, variables
from .geometry import SemiNorm, bounding_box, distance, project, violation, violation_many
from .model import (
    CandidateSolution,
    ConstraintMapSpec,
    EmptyConstraintError,
    GameInstance,
    RealizationError,
    _public_env,
    objective_value,
    realize_constraint,
)
from .response import ResponseConfig, ResponseError, best_response

__all__ = [
    "CertReport",
    "CertifyError",
    "ClassicalGneReport",
    "EVIDENCE_NOTE",
    "FptLscReport",
    "FptRadiusRecord",
    "LscRadiusRecord",
    "LscReport",
    "QuasiconcaveReport",
    "SampleWitness",
    "certify",
    "check_fpt_lsc_at",
    "check_lsc_at",
    "check_quasiconcave",
    "is_classical_gne",
]

EVIDENCE_NOTE = "sampling evidence only, not a proof"


class CertifyError(Exception):
    pass


@dataclass(frozen=True)
class CertReport:
    feas_x: tuple[float, ...]
    proj_residual: tuple[float, ...]
    feas_f: tuple[float, ...]
    opt_residual: tuple[float, ...]
    max_residual: float
    tol: float
    passed: bool
    search_resolution: int  # grid resolution behind the optimality residuals


def certify(
    inst: GameInstance,
    cand: CandidateSolution,
    tol: float = 1e-6,
    cfg: ResponseConfig = ResponseConfig(),
) -> CertReport:
    """Residuals of the four defining conditions for the pair (x~, y~)."""
    n = len(inst.players)
    if len(cand.x_tilde) != n or len(cand.y_tilde) != n:
        raise ValueError("candidate has the wrong number of players")
    for i, p in enumerate(inst.players):
        if len(cand.x_tilde[i]) != p.dim or len(cand.y_tilde[i]) != p.dim:
            raise ValueError(f"candidate dimension mismatch for player '{p.name}'")
    feas_x, proj_res, feas_f, opt_res = [], [], [], []
    profile = list(cand.x_tilde)
    for i, p in enumerate(inst.players):
        xt, yt = cand.x_tilde[i], cand.y_tilde[i]
        feas_x.append(violation(p.strategy_set, xt))
        d = distance(p.strategy_set, p.seminorm, yt)
        proj_res.append(abs(p.seminorm(yt - xt) - d))
        try:
            realized = realize_constraint(inst, i, profile)
            feas_f.append(violation(realized, yt))
            br = best_response(inst, i, profile, cfg)
            gap = br.value - objective_value(inst, i, profile, yt)
        except (RealizationError, EvalError, ResponseError) as e:
            raise CertifyError(f"player '{p.name}': {e}") from e
        opt_res.append(0.0 if gap <= cfg.tol_value else float(gap))
    max_residual = max(max(feas_x), max(proj_res), max(feas_f), max(opt_res))
    return CertReport(
        feas_x=tuple(feas_x),
        proj_residual=tuple(proj_res),
        feas_f=tuple(feas_f),
        opt_residual=tuple(opt_res),
        max_residual=float(max_residual),
        tol=float(tol),
        passed=bool(max_residual <= tol),
        search_resolution=cfg.polish_resolution,
    )


@dataclass(frozen=True)
class ClassicalGneReport:
    is_gne: bool
    residual: float
    feasibility: tuple[float, ...]
    gaps: tuple[float, ...] | None  # None when some player is infeasible


def is_classical_gne(
    inst: GameInstance,
    x,
    tol: float = 1e-6,
    cfg: ResponseConfig = ResponseConfig(),
) -> ClassicalGneReport:
    """Does the profile itself solve every player's constrained maximization?

    True iff each x_i lies in its realized feasible set within *tol* and its
    payoff gap there is at most *tol*.  Feasibility is checked first; the
    expensive gap computation is skipped when any player is infeasible.
    """
    profile = [np.asarray(v, dtype=float) for v in x]
    feas = []
    for i in range(len(inst.players)):
        try:
            feas.append(violation(realize_constraint(inst, i, profile), profile[i]))
        except RealizationError as e:
            raise CertifyError(f"player '{inst.players[i].name}': {e}") from e
    if max(feas) > tol:
        return ClassicalGneReport(False, float(max(feas)), tuple(feas), None)
    gaps = []
    for i in range(len(inst.players)):
        br = best_response(inst, i, profile, cfg)
        gap = br.value - objective_value(inst, i, profile, profile[i])
        gaps.append(0.0 if gap <= cfg.tol_value else float(gap))
    residual = max(max(feas), max(gaps))
    return ClassicalGneReport(bool(residual <= tol), float(residual), tuple(feas), tuple(gaps))


# ---------------------------------------------------------------------------
# Sampling diagnostics


_NAT_SPLIT = re.compile(r"([0-9]+)")


def _natural_key(name: str):
    return tuple(int(p) if p.isdigit() else p for p in _NAT_SPLIT.split(name))


def _euclid(dim: int) -> SemiNorm:
    return SemiNorm(np.ones(dim))


def _sample_in_set(S, n: int, rng: np.random.Generator) -> np.ndarray:
    lo, hi = bounding_box(S)
    out = np.empty((n, len(lo)))
    have = 0
    attempts = 0
    while have < n:
        batch = rng.uniform(lo, hi, size=(max(n, 64), len(lo)))
        good = batch[violation_many(S, batch) <= 1e-9]
        take = good[: n - have]
        out[have : have + len(take)] = take
        have += len(take)
        attempts += 1
        if attempts > 1000:
            raise RuntimeError("rejection sampling starved; set too thin to sample")
    return out


@dataclass(frozen=True)
class SampleWitness:
    u: np.ndarray
    v: np.ndarray
    t: float
    lhs: float  # value at the combination point
    rhs: float  # bound it fell short of


@dataclass(frozen=True)
class QuasiconcaveReport:
    quasiconcave: bool
    quasiconcave_witness: SampleWitness | None
    midpoint_concave: bool
    midpoint_witness: SampleWitness | None
    samples: int
    seed: int
    note: str = EVIDENCE_NOTE


def check_quasiconcave(
    e: Expression,
    S,
    samples: int = 10000,
    tol: float = 1e-9,
    seed: int = 42,
    bound_env: dict | None = None,
) -> QuasiconcaveReport:
    """Probe f(t*u + (1-t)*v) >= min(f(u), f(v)) on seeded pairs in *S*.

    A separate midpoint probe tests f((u+v)/2) >= (f(u)+f(v))/2, which
    already fails for quasi-concave but non-concave functions.  *e* is an
    expression over z variables; *bound_env* supplies any additional fixed
    bindings.
    """
    if samples < 1:
        raise ValueError("samples must be positive")
    d = S.dim
    names = [f"z_{j + 1}" for j in range(d)]
    rng = np.random.default_rng(seed)
    U = _sample_in_set(S, samples, rng)
    V = _sample_in_set(S, samples, rng)
    t = rng.uniform(size=samples)

    def values(points: np.ndarray) -> np.ndarray:
        env = dict(bound_env or {})
        for j, name in enumerate(names):
            env[name] = points[:, j]
        vals = np.asarray(evaluate(e, env), dtype=float)
        return np.full(len(points), float(vals)) if vals.ndim == 0 else vals

    fu, fv = values(U), values(V)
    fmix = values(t[:, None] * U + (1.0 - t)[:, None] * V)
    fmid = values(0.5 * (U + V))

    qc_witness = None
    bad = np.nonzero(fmix < np.minimum(fu, fv) - tol)[0]
    if len(bad):
        k = int(bad[0])
        qc_witness = SampleWitness(
            U[k].copy(), V[k].copy(), float(t[k]),
            float(fmix[k]), float(min(fu[k], fv[k])),
        )
    mc_witness = None
    bad = np.nonzero(fmid < 0.5 * (fu + fv) - tol)[0]
    if len(bad):
        k = int(bad[0])
        mc_witness = SampleWitness(
            U[k].copy(), V[k].copy(), 0.5,
            float(fmid[k]), float(0.5 * (fu[k] + fv[k])),
        )
    return QuasiconcaveReport(
        quasiconcave=qc_witness is None,
        quasiconcave_witness=qc_witness,
        midpoint_concave=mc_witness is None,
        midpoint_witness=mc_witness,
        samples=samples,
        seed=seed,
    )


def check_instance_quasiconcave(
    inst: GameInstance,
    samples: int = 10000,
    tol: float = 1e-9,
    seed: int = 42,
) -> list[tuple[str, QuasiconcaveReport]]:
    """Probe each player's payoff in its own decision variables.

    Sampling runs over the feasible set realized at an interior seed profile
    (each player's bounding-box midpoint projected into its strategy set),
    with rival coordinates held fixed there.
    """
    seed_profile = [
        project(
            p.strategy_set,
            _euclid(p.dim),
            0.5 * (bounding_box(p.strategy_set)[0] + bounding_box(p.strategy_set)[1]),
        ).point
        for p in inst.players
    ]
    out = []
    for i, p in enumerate(inst.players):
        realized = realize_constraint(inst, i, seed_profile)
        rep = check_quasiconcave(
            p.objective,
            realized,
            samples=samples,
            tol=tol,
            seed=seed,
            bound_env=_public_env(inst, i, seed_profile),
        )
        out.append((p.name, rep))
    return out


@dataclass(frozen=True)
class LscRadiusRecord:
    radius: float
    violation_found: bool
    witness: np.ndarray | None
    witness_value: float | None


@dataclass(frozen=True)
class LscReport:
    violated: bool  # low values persist at every radius
    value_at_point: float
    epsilon: float
    records: tuple[LscRadiusRecord, ...]
    seed: int
    note: str = EVIDENCE_NOTE


def check_lsc_at(
    f: Expression,
    point,
    epsilon: float,
    radii: tuple[float, ...] = (1.0, 0.1, 0.01, 0.001),
    samples: int = 400,
    seed: int = 42,
) -> LscReport:
    """Sampling surrogate for a lower semi-continuity failure at *point*.

    Variables are bound in natural order (u_1, u_2, ..., v_1, ...).  For each
    radius, sampled points q in the surrounding box are searched for
    f(q) <= f(point) - epsilon; a violation is reported only when such points
    appear at every radius, i.e. the drop survives all sampled scales.
    """
    radii = tuple(float(r) for r in radii)
    if not radii or any(r <= 0 for r in radii) or list(radii) != sorted(radii, reverse=True):
        raise ValueError("radii must be a decreasing list of positive numbers")
    names = sorted(variables(f), key=_natural_key)
    point = np.asarray(point, dtype=float)
    if point.shape != (len(names),):
        raise ValueError(f"point of shape {point.shape} for variables {names}")
    f0 = float(evaluate(f, dict(zip(names, point))))
    rng = np.random.default_rng(seed)
    records = []
    for r in radii:
        Q = point + rng.uniform(-r, r, size=(samples, len(names)))
        env = {name: Q[:, j] for j, name in enumerate(names)}
        vals = np.asarray(evaluate(f, env), dtype=float)
        if vals.ndim == 0:
            vals = np.full(len(Q), float(vals))
        bad = np.nonzero(vals <= f0 - epsilon)[0]
        if len(bad):
            k = int(bad[0])
            records.append(LscRadiusRecord(r, True, Q[k].copy(), float(vals[k])))
        else:
            records.append(LscRadiusRecord(r, False, None, None))
    violated = all(rec.violation_found for rec in records)
    return LscReport(violated, f0, float(epsilon), tuple(records), seed)


@dataclass(frozen=True)
class FptRadiusRecord:
    radius: float
    transfer_ok: bool
    witness_u: np.ndarray | None  # a nearby u' with no qualifying v'


@dataclass(frozen=True)
class FptLscReport:
    passed: bool  # transfer holds at the finest sampled radius
    value_at_point: float
    epsilon: float
    records: tuple[FptRadiusRecord, ...]
    seed: int
    note: str = EVIDENCE_NOTE


def check_fpt_lsc_at(
    f: Expression,
    K: ConstraintMapSpec,
    point,
    epsilon: float,
    radii: tuple[float, ...] = (0.5, 0.1, 0.02),
    samples: int = 200,
    seed: int = 42,
) -> FptLscReport:
    """Sampling surrogate for lower semi-continuity along feasible paths.

    *f* is an expression over u and v variables, *K* maps u to a set in v
    space, and *point* concatenates (u, v) with v in K(u) within 1e-6.  For
    each sampled u' near u the realized set K(u') is searched for a v' with
    f(u, v) < f(u', v') + epsilon.  The check fails when some u' at the
    finest radius admits no such v'; coarser radii are reported as context.
    """
    radii = tuple(float(r) for r in radii)
    if not radii or any(r <= 0 for r in radii) or list(radii) != sorted(radii, reverse=True):
        raise ValueError("radii must be a decreasing list of positive numbers")
    f_vars = set(variables(f))
    for expr in K.expressions():
        f_vars |= variables(expr)
    u_names = sorted((n for n in f_vars if n.startswith("u")), key=_natural_key)
    v_names = sorted(
        (n for n in variables(f) if n.startswith("v")), key=_natural_key
    )
    vdim = K.dim
    point = np.asarray(point, dtype=float)
    udim = len(point) - vdim
    if udim != len(u_names) or len(v_names) > vdim:
        raise ValueError(
            f"point of length {len(point)} does not split into u {u_names} "
            f"and a map of dimension {vdim}"
        )
    u0, v0 = point[:udim], point[udim:]

    def u_env(u: np.ndarray) -> dict:
        return {name: float(u[j]) for j, name in enumerate(u_names)}

    realized0 = K.realize(u_env(u0))
    viol = violation(realized0, v0)
    if viol > 1e-6:
        raise ValueError(f"v is not in K(u): violation {viol:.3e}")
    env0 = u_env(u0)
    for j, name in enumerate(v_names):
        env0[name] = float(v0[j])
    f_uv = float(evaluate(f, env0))

    rng = np.random.default_rng(seed)
    v_draws = 64
    records = []
    for r in radii:
        witness = None
        for _ in range(samples):
            up = u0 + rng.uniform(-r, r, size=udim)
            try:
                realized = K.realize(u_env(up))
            except EmptyConstraintError:
                witness = up  # no feasible v' at all
                break
            lo, hi = bounding_box(realized)
            mid = project(realized, _euclid(vdim), 0.5 * (lo + hi)).point
            cands = np.vstack([[mid], _sample_in_set(realized, v_draws, rng)])
            env = u_env(up)
            for j, name in enumerate(v_names):
                env[name] = cands[:, j]
            vals = np.asarray(evaluate(f, env), dtype=float)
            best = float(np.max(vals))
            if not f_uv < best + epsilon:
                witness = up
                break
        records.append(FptRadiusRecord(r, witness is None, witness))
    return FptLscReport(
        passed=records[-1].transfer_ok,
        value_at_point=f_uv,
        epsilon=float(epsilon),
        records=tuple(records),
        seed=seed,
    )
