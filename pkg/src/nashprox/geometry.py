"""Finite-dimensional convex compact sets, diagonal weighted-Euclidean
semi-norms, and nearest-point projections under those semi-norms.

All values are immutable; every operation is pure.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Union

import numpy as np
from scipy.optimize import brentq, linprog

__all__ = [
    "Ball",
    "Box",
    "ConvexSet",
    "DimensionMismatchError",
    "GeometryError",
    "Halfspace",
    "Polytope",
    "ProjectionResult",
    "RealizedSet",
    "SemiNorm",
    "UnsupportedProjectionError",
    "bounding_box",
    "contains",
    "diameter",
    "dim_of",
    "distance",
    "polytope_nonempty",
    "project",
    "sample_grid",
    "violation",
    "violation_many",
]

MEMBERSHIP_TOL = 1e-9
_DYKSTRA_TOL = 1e-12
_DYKSTRA_MAX_SWEEPS = 10000


class GeometryError(Exception):
    pass


class DimensionMismatchError(GeometryError):
    pass


class UnsupportedProjectionError(GeometryError):
    pass


def _locked(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    if arr.ndim != 1:
        raise DimensionMismatchError(f"expected a vector, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class SemiNorm:
    """p(v) = sqrt(sum_j w_j * v_j^2) with nonnegative weights w.

    Positive weights give a norm; zero weights collapse the corresponding
    coordinates, which is a genuine semi-norm.
    """

    weights: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "weights", _locked(self.weights))

    @property
    def dim(self) -> int:
        return len(self.weights)

    def __call__(self, v) -> float:
        v = np.asarray(v, dtype=float)
        if v.shape != (self.dim,):
            raise DimensionMismatchError(
                f"semi-norm of dimension {self.dim} applied to shape {v.shape}"
            )
        return float(np.sqrt(np.dot(self.weights, v * v)))

    def of_many(self, vs: np.ndarray) -> np.ndarray:
        """Semi-norm of each row of *vs*."""
        vs = np.asarray(vs, dtype=float)
        if vs.ndim != 2 or vs.shape[1] != self.dim:
            raise DimensionMismatchError(
                f"semi-norm of dimension {self.dim} applied to shape {vs.shape}"
            )
        return np.sqrt((vs * vs) @ self.weights)


@dataclass(frozen=True, eq=False)
class Box:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = _locked(self.lower)
        hi = _locked(self.upper)
        if len(lo) != len(hi):
            raise DimensionMismatchError("box lower/upper lengths differ")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self) -> int:
        return len(self.lower)


@dataclass(frozen=True, eq=False)
class Ball:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", _locked(self.center))
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def dim(self) -> int:
        return len(self.center)


@dataclass(frozen=True, eq=False)
class Halfspace:
    """The set {z : normal . z <= offset}."""

    normal: np.ndarray
    offset: float

    def __post_init__(self):
        object.__setattr__(self, "normal", _locked(self.normal))
        object.__setattr__(self, "offset", float(self.offset))

    @property
    def dim(self) -> int:
        return len(self.normal)


@dataclass(frozen=True, eq=False)
class Polytope:
    """A bounding box intersected with finitely many halfspaces."""

    box: Box
    halfspaces: tuple[Halfspace, ...]

    def __post_init__(self):
        object.__setattr__(self, "halfspaces", tuple(self.halfspaces))
        for h in self.halfspaces:
            if h.dim != self.box.dim:
                raise DimensionMismatchError(
                    f"halfspace dimension {h.dim} does not match box dimension {self.box.dim}"
                )

    @property
    def dim(self) -> int:
        return self.box.dim


ConvexSet = Union[Box, Ball, Polytope]


@dataclass(frozen=True, eq=False)
class RealizedSet:
    """A base set translated by a shift: z is a member iff z - shift is in base."""

    shift: np.ndarray
    base: ConvexSet

    def __post_init__(self):
        sh = _locked(self.shift)
        if len(sh) != dim_of(self.base):
            raise DimensionMismatchError("shift dimension does not match base set")
        object.__setattr__(self, "shift", sh)

    @property
    def dim(self) -> int:
        return len(self.shift)


AnySet = Union[Box, Ball, Polytope, RealizedSet]


def dim_of(S: AnySet) -> int:
    return S.dim


def violation_many(S: AnySet, pts: np.ndarray) -> np.ndarray:
    """Worst constraint violation of each row of *pts*; 0 for members."""
    pts = np.asarray(pts, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != dim_of(S):
        raise DimensionMismatchError(
            f"points of shape {pts.shape} against a set of dimension {dim_of(S)}"
        )
    if isinstance(S, Box):
        v = np.maximum(S.lower - pts, pts - S.upper).max(axis=1)
        return np.maximum(v, 0.0)
    if isinstance(S, Ball):
        v = np.linalg.norm(pts - S.center, axis=1) - S.radius
        return np.maximum(v, 0.0)
    if isinstance(S, Polytope):
        v = violation_many(S.box, pts)
        for h in S.halfspaces:
            v = np.maximum(v, pts @ h.normal - h.offset)
        return np.maximum(v, 0.0)
    if isinstance(S, RealizedSet):
        return violation_many(S.base, pts - S.shift)
    raise TypeError(f"not a set: {S!r}")


def violation(S: AnySet, v) -> float:
    v = np.asarray(v, dtype=float)
    return float(violation_many(S, v[None, :])[0])


def contains(S: AnySet, v, tol: float = MEMBERSHIP_TOL) -> bool:
    """True iff every defining inequality of *S* holds at *v* within *tol*."""
    return violation(S, v) <= tol


def bounding_box(S: AnySet) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(S, Box):
        return S.lower, S.upper
    if isinstance(S, Ball):
        return S.center - S.radius, S.center + S.radius
    if isinstance(S, Polytope):
        return S.box.lower, S.box.upper
    if isinstance(S, RealizedSet):
        lo, hi = bounding_box(S.base)
        return lo + S.shift, hi + S.shift
    raise TypeError(f"not a set: {S!r}")


def diameter(S: AnySet) -> float:
    lo, hi = bounding_box(S)
    return float(np.linalg.norm(hi - lo))


def sample_grid(S: AnySet, resolution: int) -> np.ndarray:
    """Axis-aligned grid of the bounding box, kept where membership holds.

    *resolution* points per axis; rows come out in lexicographic order.
    Degenerate axes collapse to a single value.
    """
    if resolution < 2:
        raise ValueError("resolution must be at least 2")
    lo, hi = bounding_box(S)
    axes = [np.unique(np.linspace(lo[j], hi[j], resolution)) for j in range(len(lo))]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    keep = violation_many(S, pts) <= MEMBERSHIP_TOL
    return pts[keep]


class ProjectionResult(NamedTuple):
    point: np.ndarray
    distance: float


def _require_positive_weights(p: SemiNorm, what: str) -> None:
    if np.any(p.weights <= 0):
        raise UnsupportedProjectionError(
            f"projection onto a {what} needs strictly positive semi-norm weights"
        )


def _project_ball(S: Ball, p: SemiNorm, v: np.ndarray) -> np.ndarray:
    d = v - S.center
    if np.linalg.norm(d) <= S.radius:
        return v.copy()
    w = p.weights
    wd2 = (w * d) ** 2

    def excess(lam: float) -> float:
        return float(np.sum(wd2 / (w + lam) ** 2) - S.radius**2)

    hi = max(float(np.max(w)), 1.0)
    for _ in range(200):
        if excess(hi) < 0:
            break
        hi *= 2.0
    lam = brentq(excess, 0.0, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    return S.center + w * d / (w + lam)


def _project_polytope(S: Polytope, p: SemiNorm, v: np.ndarray) -> np.ndarray:
    winv = 1.0 / p.weights
    projectors = []
    for h in S.halfspaces:
        denom = float(h.normal @ (h.normal * winv))

        def proj(x, a=h.normal, b=h.offset, dn=denom):
            viol = float(a @ x - b)
            if viol <= 0 or dn == 0:
                return x
            return x - (viol / dn) * (a * winv)

        projectors.append(proj)
    # Box last, so the returned point satisfies the bounds exactly.
    projectors.append(lambda x: np.clip(x, S.box.lower, S.box.upper))

    x = v.copy()
    corrections = [np.zeros_like(v) for _ in projectors]
    for _ in range(_DYKSTRA_MAX_SWEEPS):
        x_start = x.copy()
        for s, proj in enumerate(projectors):
            shifted = x + corrections[s]
            y = proj(shifted)
            corrections[s] = shifted - y
            x = y
        if np.max(np.abs(x - x_start)) <= _DYKSTRA_TOL:
            break
    return x


def project(S: AnySet, p: SemiNorm, v) -> ProjectionResult:
    """Nearest point of *S* to *v* under semi-norm *p*, with its distance.

    Boxes clamp per coordinate under any weights; when weights vanish the
    clamp also minimizes the Euclidean distance among all semi-norm
    minimizers, which is the deterministic selection used throughout.  Balls
    solve the single Lagrange multiplier of the weighted nearest-point
    conditions by bracketed root finding.  Polytopes run Dykstra's
    alternating projections in the weighted inner product over the box and
    the halfspaces.  Ball and polytope projections require strictly positive
    weights.
    """
    v = np.asarray(v, dtype=float)
    d = dim_of(S)
    if v.shape != (d,):
        raise DimensionMismatchError(
            f"point of shape {v.shape} against a set of dimension {d}"
        )
    if p.dim != d:
        raise DimensionMismatchError(
            f"semi-norm of dimension {p.dim} against a set of dimension {d}"
        )
    if isinstance(S, RealizedSet):
        inner = project(S.base, p, v - S.shift)
        return ProjectionResult(inner.point + S.shift, inner.distance)
    if isinstance(S, Box):
        point = np.clip(v, S.lower, S.upper)
    elif isinstance(S, Ball):
        _require_positive_weights(p, "ball")
        point = _project_ball(S, p, v)
    elif isinstance(S, Polytope):
        _require_positive_weights(p, "polytope")
        point = _project_polytope(S, p, v)
    else:
        raise TypeError(f"not a set: {S!r}")
    return ProjectionResult(point, p(v - point))


def distance(S: AnySet, p: SemiNorm, v) -> float:
    """d_p(v, S) = inf over members u of p(v - u)."""
    return project(S, p, v).distance


def polytope_nonempty(S: Polytope) -> bool:
    """Feasibility probe: does the box meet all halfspaces?"""
    if np.any(S.box.lower > S.box.upper):
        return False
    if not S.halfspaces:
        return True
    A = np.stack([h.normal for h in S.halfspaces])
    b = np.array([h.offset for h in S.halfspaces])
    res = linprog(
        c=np.zeros(S.dim),
        A_ub=A,
        b_ub=b,
        bounds=list(zip(S.box.lower, S.box.upper)),
        method="highs",
    )
    return bool(res.success)
