"""Great-circle setpoint trajectory from the current orientation to a target.

Both endpoints are lifted to unit directions through the shared chart, the
connecting arc is traversed at a constant angular velocity, and the evenly
spaced directions are mapped back to angle pairs. Interpolation happens on
the sphere; a straight line in the angle plane is NOT a shortest path for
off-axis motions and is deliberately not used.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import config, geometry


@dataclass(frozen=True)
class PlannedTrajectory:
    setpoints: np.ndarray  # (N+1, 2) angle pairs, rad
    arc_angle: float       # total subtended angle, rad
    segments: int          # M, number of equal arc pieces (0 for zero arc)


def plan(
    current: tuple[float, float],
    target: tuple[float, float],
    omega_sp: float = config.OMEGA_SP,
    ts: float = config.TS,
    n: int = config.N_HORIZON,
) -> PlannedTrajectory:
    """Constant-rate geodesic setpoints, padded to exactly n+1 entries.

    The arc is split into M = ceil(theta / (omega_sp * ts)) equal pieces, so
    consecutive setpoints never subtend more than omega_sp * ts. When the
    plan is shorter than the horizon the final setpoint repeats.
    """
    ca, cb = float(current[0]), float(current[1])
    ta, tb = float(target[0]), float(target[1])
    if not geometry.in_chart(ca, cb):
        raise ValueError(f"current orientation ({ca}, {cb}) outside chart domain")
    if not geometry.in_chart(ta, tb):
        raise ValueError(f"target orientation ({ta}, {tb}) outside chart domain")
    if omega_sp <= 0.0 or ts <= 0.0:
        raise ValueError("omega_sp and ts must be positive")

    v0 = geometry.direction(ca, cb)
    v1 = geometry.direction(ta, tb)
    theta = geometry.subtended_angle(v0, v1)
    # antipodal pairs cannot occur inside the open chart
    assert theta < math.pi - 1e-9, "antipodal endpoints are outside the chart"

    max_step = omega_sp * ts
    m = int(math.ceil(theta / max_step - 1e-12)) if theta > 1e-12 else 0
    setpoints = np.empty((n + 1, 2))
    if m == 0:
        setpoints[:] = (ca, cb)
        return PlannedTrajectory(setpoints, 0.0, 0)
    for i in range(n + 1):
        if i >= m:
            setpoints[i] = (ta, tb)
            continue
        if i == 0:
            setpoints[i] = (ca, cb)
            continue
        setpoints[i] = geometry.angles_from_direction(geometry.slerp(v0, v1, i / m))
    return PlannedTrajectory(setpoints, float(theta), m)
