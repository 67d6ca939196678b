"""Pressure allocation for the three-bellow antagonistic actuator set.

Maps between absolute actuator pressures (p_a, p_b, p_c) and the decoupled
representation (dp_alpha, dp_beta, p_bar): two pressure differences roughly
aligned with the two arm axes plus the lower pressure level that sets joint
stiffness. Also builds the polytope of feasible (dp_alpha, dp_beta) set
points induced by the per-actuator pressure box.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import config

# Difference-pair to axis-aligned transform and its inverse.
T_MAP = np.array([[0.0, math.sqrt(3.0) / 2.0], [-1.0, -0.5]])
_DET_T = float(np.linalg.det(T_MAP))
assert _DET_T != 0.0, "allocation transform must be invertible"
T_INV = np.linalg.inv(T_MAP)


@dataclass(frozen=True)
class ActuatorPressures:
    """Absolute pressures of the three bellows, bar."""

    p_a: float
    p_b: float
    p_c: float

    def as_array(self) -> np.ndarray:
        return np.array([self.p_a, self.p_b, self.p_c])


@dataclass(frozen=True)
class AllocatedInput:
    """Axis-aligned pressure differences plus the lower pressure level, bar."""

    dp_alpha: float
    dp_beta: float
    p_bar: float


def xi(p: ActuatorPressures) -> AllocatedInput:
    """Forward allocation: actuator pressures -> (dp_alpha, dp_beta, p_bar)."""
    dp_ab = p.p_a - p.p_b
    dp_bc = p.p_b - p.p_c
    dp_alpha, dp_beta = T_MAP @ (dp_ab, dp_bc)
    return AllocatedInput(float(dp_alpha), float(dp_beta), min(p.p_a, p.p_b, p.p_c))


def xi_inv(v: AllocatedInput) -> ActuatorPressures:
    """Inverse allocation: exact right-inverse of xi for p_bar > 0.

    The three-way max picks each pressure as p_bar plus that actuator's
    height above the minimum, so min(output) == p_bar always holds.
    """
    dp_ab, dp_bc = T_INV @ (v.dp_alpha, v.dp_beta)
    pb = v.p_bar
    p_a = max(pb, pb + dp_ab, pb + dp_ab + dp_bc)
    p_b = max(pb, pb + dp_bc, pb - dp_ab)
    p_c = max(pb, pb - dp_bc, pb - dp_ab - dp_bc)
    return ActuatorPressures(float(p_a), float(p_b), float(p_c))


@dataclass(frozen=True)
class InputPolytope:
    """Feasible (dp_alpha, dp_beta) set as half-planes normals @ v <= offsets."""

    normals: np.ndarray  # (m, 2)
    offsets: np.ndarray  # (m,)

    def contains(self, v: np.ndarray, tol: float = 0.0) -> np.ndarray:
        """Membership of points v with shape (..., 2); closed set."""
        v = np.asarray(v, dtype=float)
        slack = self.offsets - v @ self.normals.T
        return np.all(slack >= -tol, axis=-1)

    def as_inequalities(self) -> tuple[np.ndarray, np.ndarray]:
        return self.normals.copy(), self.offsets.copy()


def build_input_polytope(
    p_min: float = config.P_MIN,
    p_max: float = config.P_MAX,
    p_bar: float = config.P_BAR,
) -> InputPolytope:
    """Half-plane description of the feasible pressure-difference set points.

    With the lower level fixed at p_bar, the per-actuator box [p_min, p_max]
    is equivalent to the hexagon |dp_ab| <= c, |dp_bc| <= c, |dp_ab + dp_bc| <= c
    with c = p_max - p_bar, expressed here in (dp_alpha, dp_beta) coordinates.
    """
    if not p_min <= p_bar:
        raise ValueError(f"p_bar={p_bar} below p_min={p_min}")
    if p_bar >= p_max:
        raise ValueError(f"p_bar={p_bar} >= p_max={p_max}: empty interior")
    c = p_max - p_bar
    pair_normals = np.array(
        [[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0], [1.0, 1.0], [-1.0, -1.0]]
    )
    # n^T w <= c with w = T_INV v  =>  (T_INV^T n)^T v <= c
    normals = pair_normals @ T_INV
    offsets = np.full(len(pair_normals), c)
    return InputPolytope(normals, offsets)
