"""Angle chart shared by the planner, ball predictor, and simulator.

The arm tip direction for angles (alpha, beta) is

    v(alpha, beta) = R_x(alpha) @ R_y(beta) @ e_z
                   = (sin(beta), -sin(alpha)cos(beta), cos(alpha)cos(beta))

with extrinsic rotations about the fixed x- then y-axis. At (0, 0) the tip
points along +z, alpha moves it along -y and beta along +x, so the two axes
act in orthogonal tangent directions. Valid chart domain: |alpha|, |beta|
strictly below 90 deg. This module is the single source of truth for that
convention; do not re-derive it elsewhere.
"""

from __future__ import annotations

import math

import numpy as np

CHART_LIMIT = math.pi / 2.0


def direction(alpha: float, beta: float) -> np.ndarray:
    """Unit direction of the arm tip for chart angles (rad)."""
    ca, sa = math.cos(alpha), math.sin(alpha)
    cb, sb = math.cos(beta), math.sin(beta)
    return np.array([sb, -sa * cb, ca * cb])


def angles_from_direction(v: np.ndarray) -> tuple[float, float]:
    """Inverse chart: unit direction -> (alpha, beta), rad.

    Well-defined for directions inside the chart (v_z > 0 region reached by
    |alpha|, |beta| < 90 deg, where cos(beta) > 0).
    """
    v = np.asarray(v, dtype=float)
    n = float(np.linalg.norm(v))
    if n == 0.0:
        raise ValueError("zero direction vector")
    x, y, z = v / n
    beta = math.asin(min(1.0, max(-1.0, x)))
    alpha = math.atan2(-y, z)
    return alpha, beta


def in_chart(alpha: float, beta: float) -> bool:
    return abs(alpha) < CHART_LIMIT and abs(beta) < CHART_LIMIT


def subtended_angle(v0: np.ndarray, v1: np.ndarray) -> float:
    """Sphere angle between two direction vectors, rad (atan2 form, accurate near 0)."""
    v0 = np.asarray(v0, dtype=float)
    v1 = np.asarray(v1, dtype=float)
    cross = np.linalg.norm(np.cross(v0, v1))
    dot = float(np.dot(v0, v1))
    return math.atan2(cross, dot)


def slerp(v0: np.ndarray, v1: np.ndarray, t: float) -> np.ndarray:
    """Spherical linear interpolation between unit vectors at parameter t in [0, 1]."""
    theta = subtended_angle(v0, v1)
    if theta < 1e-12:
        return np.asarray(v0, dtype=float).copy()
    s = math.sin(theta)
    w = (math.sin((1.0 - t) * theta) * np.asarray(v0) + math.sin(t * theta) * np.asarray(v1)) / s
    return w / np.linalg.norm(w)
