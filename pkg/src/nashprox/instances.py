"""Bundled example files.

Three game/optimization instances (`paper-gnep`, `paper-quopt`,
`selfmap-box`) and two diagnostic function files (`fpt-example`,
`cube-quasiconcave`).  The discontinuous reference function and map behind
`fpt-example` are encoded as steep indicator-style expressions (scale 1e6),
which behave identically at sampling resolution, with the unbounded branch
truncated to [-10, 10].
"""

from __future__ import annotations

import json

from .model import GameInstance, load_instance

__all__ = ["instance_names", "instance_text", "load_builtin"]

_UNIT_BOX_2D = {"type": "box", "lower": [0.0, 0.0], "upper": [1.0, 1.0]}

# The square [0,1]^2 cut down to x1 + x2 >= 1.
_TRIANGLE_2D = {
    "type": "polytope",
    "box": {"lower": [0.0, 0.0], "upper": [1.0, 1.0]},
    "halfspaces": [{"normal": [-1.0, -1.0], "offset": -1.0}],
}

_PAPER_GNEP = {
    "kind": "gnep",
    "metadata": {
        "name": "paper-gnep",
        "description": (
            "Two players on the unit-square triangle x1 + x2 >= 1 whose "
            "feasible boxes are pushed outside the strategy sets, so no "
            "classical equilibrium exists; the best approximate solution "
            "is ((1,1),(1,1))."
        ),
    },
    "players": [
        {
            "name": "P1",
            "dim": 2,
            "strategy_set": _TRIANGLE_2D,
            "seminorm": {"weights": [1.0, 1.0]},
            "objective": "2*z_1 + 2*z_2 + 3*x2_2",
            "constraint_map": {
                "type": "translate",
                "shift": [
                    "2*x2_1/sqrt(x2_1^2 + x2_2^2)",
                    "2*x2_2/sqrt(x2_1^2 + x2_2^2)",
                ],
                "base": _UNIT_BOX_2D,
            },
        },
        {
            "name": "P2",
            "dim": 2,
            "strategy_set": _TRIANGLE_2D,
            "seminorm": {"weights": [1.0, 1.0]},
            "objective": "2*x1_1 + z_1 + z_2",
            "constraint_map": {
                "type": "translate",
                "shift": [
                    "sqrt(2)*x1_1/sqrt(x1_1^2 + x1_2^2)",
                    "sqrt(2)*x1_2/sqrt(x1_1^2 + x1_2^2)",
                ],
                "base": _UNIT_BOX_2D,
            },
        },
    ],
}

_PAPER_QUOPT = {
    "kind": "quopt",
    "metadata": {
        "name": "paper-quopt",
        "description": (
            "Single decision maker on the unit-square triangle with the "
            "constraint region pushed outward by 2u/|u|; the best "
            "approximate solution is u=(1,1) with auxiliary maximizer "
            "(1+sqrt(2), 1+sqrt(2))."
        ),
    },
    "players": [
        {
            "name": "U",
            "dim": 2,
            "strategy_set": _TRIANGLE_2D,
            "seminorm": {"weights": [1.0, 1.0]},
            "objective": "z_1 + z_2",
            "constraint_map": {
                "type": "translate",
                "shift": [
                    "2*x1_1/sqrt(x1_1^2 + x1_2^2)",
                    "2*x1_2/sqrt(x1_1^2 + x1_2^2)",
                ],
                "base": _UNIT_BOX_2D,
            },
        },
    ],
}

_SELFMAP_BOX = {
    "kind": "gnep",
    "metadata": {
        "name": "selfmap-box",
        "description": (
            "Two players on [0,1] with feasible interval [0, rival]; the "
            "constraint maps stay inside the strategy sets, so every "
            "diagonal point is a classical equilibrium.  Use damping 0.5; "
            "the undamped iteration swaps the coordinates forever."
        ),
    },
    "players": [
        {
            "name": "A",
            "dim": 1,
            "strategy_set": {"type": "box", "lower": [0.0], "upper": [1.0]},
            "seminorm": {"weights": [1.0]},
            "objective": "z_1",
            "constraint_map": {"type": "parambox", "lower": ["0"], "upper": ["x2_1"]},
        },
        {
            "name": "B",
            "dim": 1,
            "strategy_set": {"type": "box", "lower": [0.0], "upper": [1.0]},
            "seminorm": {"weights": [1.0]},
            "objective": "z_1",
            "constraint_map": {"type": "parambox", "lower": ["0"], "upper": ["x1_1"]},
        },
    ],
}

# f(u,v) is 1 on the diagonal v = u and 0 away from it (ramped over width
# 1e-6); K(u) is the single point {u} away from u = 0 and widens to the
# truncated interval [-10, 10] at u = 0.  f is not lower semi-continuous at
# (0,0), yet picking v' = u' transfers the value 1 along any feasible path.
_FPT_EXAMPLE = {
    "kind": "diagnostic",
    "metadata": {
        "name": "fpt-example",
        "description": (
            "Diagonal indicator payoff with a pinched constraint map: not "
            "lower semi-continuous at (0,0), but lower semi-continuous "
            "along feasible paths."
        ),
    },
    "function": "1 - min(1, 1000000*abs(v_1 - u_1))",
    "map": {
        "type": "parambox",
        "lower": ["u_1 - 10*(1 - min(1, 1000000*abs(u_1)))"],
        "upper": ["u_1 + 10*(1 - min(1, 1000000*abs(u_1)))"],
    },
    "point": [0.0, 0.0],
    "epsilon": 0.5,
}

_CUBE_QUASICONCAVE = {
    "kind": "diagnostic",
    "metadata": {
        "name": "cube-quasiconcave",
        "description": "z^3 on [-1, 1]: quasi-concave but not concave.",
    },
    "function": "z_1^3",
    "domain": {"type": "box", "lower": [-1.0], "upper": [1.0]},
}

_REGISTRY = {
    "paper-gnep": _PAPER_GNEP,
    "paper-quopt": _PAPER_QUOPT,
    "selfmap-box": _SELFMAP_BOX,
    "fpt-example": _FPT_EXAMPLE,
    "cube-quasiconcave": _CUBE_QUASICONCAVE,
}


def instance_names() -> list[str]:
    return sorted(_REGISTRY)


def instance_text(name: str) -> str:
    """The bundled file body for *name*; KeyError if unknown."""
    return json.dumps(_REGISTRY[name], indent=2) + "\n"


def load_builtin(name: str) -> GameInstance:
    """Load one of the bundled game instances (not the diagnostic files)."""
    return load_instance(instance_text(name))
