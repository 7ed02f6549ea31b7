"""Problem data model and instance files.

An instance file is UTF-8 JSON with top-level fields ``kind`` ("gnep" or
"quopt"), ``metadata``, and ``players``; each player object carries ``name``,
``dim``, ``strategy_set``, ``seminorm``, ``objective``, and
``constraint_map``.  Sets are encoded as ``{"type": "box", "lower": [...],
"upper": [...]}``, ``{"type": "ball", "center": [...], "radius": r}``, or
``{"type": "polytope", "box": {...}, "halfspaces": [{"normal": [...],
"offset": r}]}`` where a halfspace means ``normal . z <= offset``.
Constraint maps are ``{"type": "translate", "shift": [expr...], "base":
set}`` or ``{"type": "parambox", "lower": [expr...], "upper": [expr...]}``.

Variable naming convention: ``x{i}_{j}`` is coordinate j of player i's
public strategy (players are numbered from 1 in file order) and ``z_{j}`` is
coordinate j of the evaluating player's own decision variable.  Objectives
may use the player's own ``z`` and rivals' ``x`` variables.  Constraint-map
expressions may reference only rival ``x`` variables, except in
quasi-optimization instances, whose single constraint map is parameterized
by the player's own current point ``x1_*``.
"""

from __future__ import annotations

import json
import numbers
import re
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .expr import EvalError, Expression, ParseError, evaluate, parse, unparse, variables
from .geometry import (
    Ball,
    Box,
    ConvexSet,
    Halfspace,
    Polytope,
    RealizedSet,
    SemiNorm,
    dim_of,
    polytope_nonempty,
)

__all__ = [
    "CandidateSolution",
    "ConstraintMapSpec",
    "Diagnostic",
    "DiagnosticSpec",
    "EmptyConstraintError",
    "GameInstance",
    "InstanceError",
    "ParamBoxMap",
    "PlayerSpec",
    "RealizationError",
    "SchemaError",
    "TranslateMap",
    "load_candidate",
    "load_diagnostic",
    "load_instance",
    "objective_value",
    "objective_value_many",
    "realize_constraint",
    "serialize_instance",
    "validate",
]

_OWN_VAR = re.compile(r"z_([0-9]+)\Z")
_PUBLIC_VAR = re.compile(r"x([0-9]+)_([0-9]+)\Z")


class InstanceError(Exception):
    """Problem with instance data: structure, expressions, or invariants."""


class SchemaError(InstanceError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path or '<root>'}: {message}")
        self.path = path


class RealizationError(Exception):
    """A constraint map could not be realized at the given point."""


class EmptyConstraintError(RealizationError):
    """A realized constraint set came out empty."""


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning"
    location: str
    message: str


@dataclass(frozen=True, eq=False)
class TranslateMap:
    """Realizes to shift(params) + base, a translated copy of a fixed compact set."""

    shift: tuple[Expression, ...]
    base: ConvexSet

    def __post_init__(self):
        object.__setattr__(self, "shift", tuple(self.shift))

    @property
    def dim(self) -> int:
        return len(self.shift)

    def expressions(self) -> tuple[Expression, ...]:
        return self.shift

    def realize(self, env: dict) -> RealizedSet:
        vals = np.array([evaluate(e, env) for e in self.shift], dtype=float)
        return RealizedSet(vals, self.base)


@dataclass(frozen=True, eq=False)
class ParamBoxMap:
    """Realizes to the box [lower(params), upper(params)]."""

    lower: tuple[Expression, ...]
    upper: tuple[Expression, ...]

    def __post_init__(self):
        object.__setattr__(self, "lower", tuple(self.lower))
        object.__setattr__(self, "upper", tuple(self.upper))
        if len(self.lower) != len(self.upper):
            raise SchemaError("", "parambox lower/upper lengths differ")

    @property
    def dim(self) -> int:
        return len(self.lower)

    def expressions(self) -> tuple[Expression, ...]:
        return self.lower + self.upper

    def realize(self, env: dict) -> Box:
        lo = np.array([evaluate(e, env) for e in self.lower], dtype=float)
        hi = np.array([evaluate(e, env) for e in self.upper], dtype=float)
        bad = np.nonzero(lo > hi)[0]
        if len(bad):
            k = int(bad[0])
            raise EmptyConstraintError(
                f"realized constraint is empty: lower {lo[k]!r} > upper {hi[k]!r} "
                f"at coordinate {k + 1}"
            )
        return Box(lo, hi)


ConstraintMapSpec = Union[TranslateMap, ParamBoxMap]


@dataclass(frozen=True, eq=False)
class PlayerSpec:
    name: str
    dim: int
    strategy_set: ConvexSet
    seminorm: SemiNorm
    objective: Expression
    constraint_map: ConstraintMapSpec


@dataclass(frozen=True, eq=False)
class GameInstance:
    kind: str  # "gnep" | "quopt"
    players: tuple[PlayerSpec, ...]
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "players", tuple(self.players))


@dataclass(frozen=True, eq=False)
class CandidateSolution:
    """The projected profile together with its auxiliary best-response profile."""

    x_tilde: tuple[np.ndarray, ...]
    y_tilde: tuple[np.ndarray, ...]

    def __post_init__(self):
        object.__setattr__(
            self, "x_tilde", tuple(np.asarray(v, dtype=float) for v in self.x_tilde)
        )
        object.__setattr__(
            self, "y_tilde", tuple(np.asarray(v, dtype=float) for v in self.y_tilde)
        )


# ---------------------------------------------------------------------------
# JSON loading


def _need(obj: dict, key: str, path: str):
    if not isinstance(obj, dict):
        raise SchemaError(path, f"expected an object, got {type(obj).__name__}")
    if key not in obj:
        raise SchemaError(path, f"missing field '{key}'")
    return obj[key]


def _number(x, path: str) -> float:
    if isinstance(x, bool) or not isinstance(x, numbers.Real):
        raise SchemaError(path, f"expected a number, got {type(x).__name__}")
    return float(x)


def _vector(x, path: str) -> np.ndarray:
    if not isinstance(x, list) or not x:
        raise SchemaError(path, "expected a non-empty array of numbers")
    return np.array([_number(v, f"{path}[{k}]") for k, v in enumerate(x)])


def _string(x, path: str) -> str:
    if not isinstance(x, str):
        raise SchemaError(path, f"expected a string, got {type(x).__name__}")
    return x


def _expression(x, path: str) -> Expression:
    text = _string(x, path)
    try:
        return parse(text)
    except ParseError as e:
        raise SchemaError(path, f"expression syntax error: {e}") from e


def _set_from_dict(obj, path: str) -> ConvexSet:
    kind = _string(_need(obj, "type", path), f"{path}.type")
    if kind == "box":
        return Box(
            _vector(_need(obj, "lower", path), f"{path}.lower"),
            _vector(_need(obj, "upper", path), f"{path}.upper"),
        )
    if kind == "ball":
        return Ball(
            _vector(_need(obj, "center", path), f"{path}.center"),
            _number(_need(obj, "radius", path), f"{path}.radius"),
        )
    if kind == "polytope":
        box = _set_from_dict(
            {"type": "box", **_need(obj, "box", path)}, f"{path}.box"
        )
        hs_raw = _need(obj, "halfspaces", path)
        if not isinstance(hs_raw, list):
            raise SchemaError(f"{path}.halfspaces", "expected an array")
        halfspaces = tuple(
            Halfspace(
                _vector(_need(h, "normal", f"{path}.halfspaces[{k}]"),
                        f"{path}.halfspaces[{k}].normal"),
                _number(_need(h, "offset", f"{path}.halfspaces[{k}]"),
                        f"{path}.halfspaces[{k}].offset"),
            )
            for k, h in enumerate(hs_raw)
        )
        return Polytope(box, halfspaces)
    raise SchemaError(f"{path}.type", f"unknown set type '{kind}'")


def _expr_vector(x, path: str) -> tuple[Expression, ...]:
    if not isinstance(x, list) or not x:
        raise SchemaError(path, "expected a non-empty array of expressions")
    return tuple(_expression(e, f"{path}[{k}]") for k, e in enumerate(x))


def _map_from_dict(obj, path: str) -> ConstraintMapSpec:
    kind = _string(_need(obj, "type", path), f"{path}.type")
    if kind == "translate":
        return TranslateMap(
            _expr_vector(_need(obj, "shift", path), f"{path}.shift"),
            _set_from_dict(_need(obj, "base", path), f"{path}.base"),
        )
    if kind == "parambox":
        return ParamBoxMap(
            _expr_vector(_need(obj, "lower", path), f"{path}.lower"),
            _expr_vector(_need(obj, "upper", path), f"{path}.upper"),
        )
    raise SchemaError(f"{path}.type", f"unknown constraint map type '{kind}'")


def _player_from_dict(obj, path: str) -> PlayerSpec:
    name = _string(_need(obj, "name", path), f"{path}.name")
    dim = _need(obj, "dim", path)
    if isinstance(dim, bool) or not isinstance(dim, int) or dim < 1:
        raise SchemaError(f"{path}.dim", "expected a positive integer")
    weights = _vector(
        _need(_need(obj, "seminorm", path), "weights", f"{path}.seminorm"),
        f"{path}.seminorm.weights",
    )
    return PlayerSpec(
        name=name,
        dim=dim,
        strategy_set=_set_from_dict(_need(obj, "strategy_set", path), f"{path}.strategy_set"),
        seminorm=SemiNorm(weights),
        objective=_expression(_need(obj, "objective", path), f"{path}.objective"),
        constraint_map=_map_from_dict(_need(obj, "constraint_map", path), f"{path}.constraint_map"),
    )


def load_instance(text: str) -> GameInstance:
    """Parse and validate an instance file; raise on any error diagnostic."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise SchemaError("", f"invalid JSON: {e}") from e
    kind = _string(_need(data, "kind", ""), "kind")
    metadata = data.get("metadata", {})
    if not isinstance(metadata, dict):
        raise SchemaError("metadata", "expected an object")
    players_raw = _need(data, "players", "")
    if not isinstance(players_raw, list) or not players_raw:
        raise SchemaError("players", "expected a non-empty array")
    players = tuple(
        _player_from_dict(p, f"players[{i}]") for i, p in enumerate(players_raw)
    )
    inst = GameInstance(kind=kind, players=players, metadata=metadata)
    problems = [d for d in validate(inst) if d.severity == "error"]
    if problems:
        raise InstanceError(
            "; ".join(f"{d.location}: {d.message}" for d in problems)
        )
    return inst


def load_candidate(text: str, inst: GameInstance) -> CandidateSolution:
    """Parse a candidate file {"x_tilde": [[...]], "y_tilde": [[...]]}."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise SchemaError("", f"invalid JSON: {e}") from e
    out = {}
    for key in ("x_tilde", "y_tilde"):
        rows = _need(data, key, "")
        if not isinstance(rows, list) or len(rows) != len(inst.players):
            raise SchemaError(
                key, f"expected one vector per player ({len(inst.players)})"
            )
        vecs = []
        for i, row in enumerate(rows):
            vec = _vector(row, f"{key}[{i}]")
            if len(vec) != inst.players[i].dim:
                raise SchemaError(
                    f"{key}[{i}]",
                    f"dimension mismatch: expected {inst.players[i].dim}, got {len(vec)}",
                )
            vecs.append(vec)
        out[key] = tuple(vecs)
    return CandidateSolution(out["x_tilde"], out["y_tilde"])


# ---------------------------------------------------------------------------
# Serialization


def _set_to_dict(S: ConvexSet) -> dict:
    if isinstance(S, Box):
        return {"type": "box", "lower": S.lower.tolist(), "upper": S.upper.tolist()}
    if isinstance(S, Ball):
        return {"type": "ball", "center": S.center.tolist(), "radius": S.radius}
    if isinstance(S, Polytope):
        return {
            "type": "polytope",
            "box": {"lower": S.box.lower.tolist(), "upper": S.box.upper.tolist()},
            "halfspaces": [
                {"normal": h.normal.tolist(), "offset": h.offset} for h in S.halfspaces
            ],
        }
    raise TypeError(f"not a serializable set: {S!r}")


def _map_to_dict(m: ConstraintMapSpec) -> dict:
    if isinstance(m, TranslateMap):
        return {
            "type": "translate",
            "shift": [unparse(e) for e in m.shift],
            "base": _set_to_dict(m.base),
        }
    return {
        "type": "parambox",
        "lower": [unparse(e) for e in m.lower],
        "upper": [unparse(e) for e in m.upper],
    }


def instance_to_dict(inst: GameInstance) -> dict:
    return {
        "kind": inst.kind,
        "metadata": dict(inst.metadata),
        "players": [
            {
                "name": p.name,
                "dim": p.dim,
                "strategy_set": _set_to_dict(p.strategy_set),
                "seminorm": {"weights": p.seminorm.weights.tolist()},
                "objective": unparse(p.objective),
                "constraint_map": _map_to_dict(p.constraint_map),
            }
            for p in inst.players
        ],
    }


def serialize_instance(inst: GameInstance) -> str:
    return json.dumps(instance_to_dict(inst), indent=2) + "\n"


# ---------------------------------------------------------------------------
# Validation


def _check_set(S: ConvexSet, loc: str, expected_dim: int, out: list[Diagnostic]) -> None:
    err = lambda msg: out.append(Diagnostic("error", loc, msg))
    if dim_of(S) != expected_dim:
        err(f"dimension mismatch: set has dimension {dim_of(S)}, player has {expected_dim}")
        return
    if isinstance(S, Box):
        if not (np.all(np.isfinite(S.lower)) and np.all(np.isfinite(S.upper))):
            err("non-finite bound")
            return
        bad = np.nonzero(S.lower > S.upper)[0]
        if len(bad):
            err(f"lower <= upper violated at coordinate {int(bad[0]) + 1}")
    elif isinstance(S, Ball):
        if not np.all(np.isfinite(S.center)):
            err("non-finite center")
        if not (np.isfinite(S.radius) and S.radius > 0):
            err("radius must be positive and finite")
    elif isinstance(S, Polytope):
        _check_set(S.box, f"{loc}.box", expected_dim, out)
        clean = True
        for k, h in enumerate(S.halfspaces):
            if not (np.all(np.isfinite(h.normal)) and np.isfinite(h.offset)):
                err(f"halfspaces[{k}]: non-finite entries")
                clean = False
            elif not np.any(h.normal != 0):
                err(f"halfspaces[{k}]: zero normal vector")
                clean = False
        if clean and np.all(S.box.lower <= S.box.upper) and not polytope_nonempty(S):
            err("empty polytope: box and halfspaces have no common point")


def _scope_message(var: str, where: str) -> str:
    return f"scope violation: {where} may not reference '{var}'"


def _check_expression_scope(
    e: Expression,
    inst: GameInstance,
    i: int,
    where: str,
    loc: str,
    allow_own_public: bool,
    allow_own_decision: bool,
    out: list[Diagnostic],
) -> None:
    dims = [p.dim for p in inst.players]
    for var in sorted(variables(e)):
        m = _OWN_VAR.match(var)
        if m:
            if not allow_own_decision:
                out.append(Diagnostic("error", loc, _scope_message(var, where)))
            elif not 1 <= int(m.group(1)) <= dims[i]:
                out.append(Diagnostic(
                    "error", loc,
                    f"'{var}' out of range: player dimension is {dims[i]}",
                ))
            continue
        m = _PUBLIC_VAR.match(var)
        if m:
            k, j = int(m.group(1)), int(m.group(2))
            if not 1 <= k <= len(dims):
                out.append(Diagnostic(
                    "error", loc, f"'{var}' references unknown player index {k}"
                ))
            elif k == i + 1 and not allow_own_public:
                out.append(Diagnostic("error", loc, _scope_message(var, where)))
            elif not 1 <= j <= dims[k - 1]:
                out.append(Diagnostic(
                    "error", loc,
                    f"'{var}' out of range: player {k} has dimension {dims[k - 1]}",
                ))
            continue
        out.append(Diagnostic(
            "error", loc,
            f"unknown variable '{var}': expected x<player>_<coord> or z_<coord>",
        ))


def validate(inst: GameInstance) -> list[Diagnostic]:
    """Check every structural invariant; return diagnostics instead of raising."""
    out: list[Diagnostic] = []
    if inst.kind not in ("gnep", "quopt"):
        out.append(Diagnostic("error", "kind", f"unknown kind '{inst.kind}'"))
        return out
    if not inst.players:
        out.append(Diagnostic("error", "players", "at least one player is required"))
        return out
    if inst.kind == "quopt" and len(inst.players) != 1:
        out.append(Diagnostic("error", "players", "quopt requires exactly one player"))
        return out
    seen: set[str] = set()
    for i, p in enumerate(inst.players):
        loc = f"players[{i}]"
        if p.name in seen:
            out.append(Diagnostic("error", f"{loc}.name", f"duplicate player name '{p.name}'"))
        seen.add(p.name)
        if p.dim < 1:
            out.append(Diagnostic("error", f"{loc}.dim", "dimension must be positive"))
            continue
        _check_set(p.strategy_set, f"{loc}.strategy_set", p.dim, out)
        if p.seminorm.dim != p.dim:
            out.append(Diagnostic(
                "error", f"{loc}.seminorm",
                f"dimension mismatch: {p.seminorm.dim} weights for dimension {p.dim}",
            ))
        elif np.any(p.seminorm.weights < 0) or not np.all(np.isfinite(p.seminorm.weights)):
            out.append(Diagnostic(
                "error", f"{loc}.seminorm", "weights must be nonnegative and finite"
            ))
        cm = p.constraint_map
        if cm.dim != p.dim:
            out.append(Diagnostic(
                "error", f"{loc}.constraint_map",
                f"dimension mismatch: map produces dimension {cm.dim}, player has {p.dim}",
            ))
        if isinstance(cm, TranslateMap):
            _check_set(cm.base, f"{loc}.constraint_map.base", p.dim, out)
        # The single quopt player's map is parameterized by its own point.
        own_public_in_map = inst.kind == "quopt"
        for e in cm.expressions():
            _check_expression_scope(
                e, inst, i, "constraint map", f"{loc}.constraint_map",
                allow_own_public=own_public_in_map, allow_own_decision=False, out=out,
            )
        _check_expression_scope(
            p.objective, inst, i, "objective", f"{loc}.objective",
            allow_own_public=False, allow_own_decision=True, out=out,
        )
        if inst.kind == "quopt":
            for var in sorted(variables(p.objective)):
                if _PUBLIC_VAR.match(var):
                    out.append(Diagnostic(
                        "error", f"{loc}.objective",
                        f"scope violation: quopt objective must use only z variables, found '{var}'",
                    ))
    return out


# ---------------------------------------------------------------------------
# Realization and objective evaluation


def _public_env(inst: GameInstance, i: int, profile) -> dict:
    if inst.kind == "quopt":
        indices = [i]
    else:
        indices = [k for k in range(len(inst.players)) if k != i]
    env = {}
    for k in indices:
        vec = np.asarray(profile[k], dtype=float)
        for j in range(inst.players[k].dim):
            env[f"x{k + 1}_{j + 1}"] = float(vec[j])
    return env


def realize_constraint(inst: GameInstance, i: int, profile):
    """The feasible set of player *i* given the full strategy profile.

    For gnep instances only rival entries of *profile* are read; for quopt
    the single player's own entry parameterizes the map.
    """
    player = inst.players[i]
    env = _public_env(inst, i, profile)
    try:
        return player.constraint_map.realize(env)
    except EmptyConstraintError as e:
        raise EmptyConstraintError(f"player '{player.name}': {e}") from e
    except EvalError as e:
        raise RealizationError(
            f"player '{player.name}': constraint map evaluation failed: {e}"
        ) from e


def objective_env(inst: GameInstance, i: int, profile, z) -> dict:
    env = _public_env(inst, i, profile)
    z = np.asarray(z, dtype=float)
    for j in range(inst.players[i].dim):
        env[f"z_{j + 1}"] = float(z[j])
    return env


def objective_value(inst: GameInstance, i: int, profile, z) -> float:
    return float(evaluate(inst.players[i].objective, objective_env(inst, i, profile, z)))


def objective_value_many(inst: GameInstance, i: int, profile, zs: np.ndarray) -> np.ndarray:
    """Objective of player *i* at each row of *zs*, in one vectorized pass."""
    zs = np.asarray(zs, dtype=float)
    env = _public_env(inst, i, profile)
    for j in range(inst.players[i].dim):
        env[f"z_{j + 1}"] = zs[:, j]
    vals = np.asarray(evaluate(inst.players[i].objective, env), dtype=float)
    if vals.ndim == 0:
        vals = np.full(len(zs), float(vals))
    return vals


# ---------------------------------------------------------------------------
# Diagnostic function files


@dataclass(frozen=True, eq=False)
class DiagnosticSpec:
    """A standalone function (plus optional domain, map, point, epsilon) for
    the semicontinuity and quasi-concavity checks."""

    function: Expression
    domain: ConvexSet | None = None
    map: ConstraintMapSpec | None = None
    point: np.ndarray | None = None
    epsilon: float | None = None
    metadata: dict = field(default_factory=dict)


def load_diagnostic(text: str) -> DiagnosticSpec:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise SchemaError("", f"invalid JSON: {e}") from e
    kind = _string(_need(data, "kind", ""), "kind")
    if kind != "diagnostic":
        raise SchemaError("kind", f"expected 'diagnostic', got '{kind}'")
    metadata = data.get("metadata", {})
    if not isinstance(metadata, dict):
        raise SchemaError("metadata", "expected an object")
    return DiagnosticSpec(
        function=_expression(_need(data, "function", ""), "function"),
        domain=_set_from_dict(data["domain"], "domain") if "domain" in data else None,
        map=_map_from_dict(data["map"], "map") if "map" in data else None,
        point=_vector(data["point"], "point") if "point" in data else None,
        epsilon=_number(data["epsilon"], "epsilon") if "epsilon" in data else None,
        metadata=metadata,
    )
