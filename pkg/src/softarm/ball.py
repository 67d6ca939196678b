"""Ball flight estimation and sphere-intercept prediction.

The ball is a point mass under gravity and quadratic aerodynamic drag with
an unknown drag coefficient, estimated online by an EKF from position
measurements:

    state (7,): (r_x, r_y, r_z, v_x, v_y, v_z, k_d)
    r_ddot = g - k_d ||v|| v,   k_d_dot = 0

Prediction integrates the estimated mean forward (RK4, 0.005 s) until the
trajectory first crosses the arm sphere from outside; the crossing time is
refined by bisection and the contact point mapped to chart angles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import backend, config, geometry

NBALL = 7
GRAVITY_VEC = np.array([0.0, 0.0, -config.GRAVITY])


def ball_dynamics(x: np.ndarray) -> np.ndarray:
    """State derivative; the drag term vanishes smoothly at zero velocity."""
    x = np.asarray(x, dtype=float)
    v = x[3:6]
    speed = float(np.linalg.norm(v))
    dx = np.empty(NBALL)
    dx[:3] = v
    dx[3:6] = GRAVITY_VEC - x[6] * speed * v
    dx[6] = 0.0
    return dx


def ball_jacobian(x: np.ndarray) -> np.ndarray:
    """Jacobian of ball_dynamics. d(drag)/dv = -k_d (||v|| I + v v'/||v||)."""
    x = np.asarray(x, dtype=float)
    v = x[3:6]
    speed = float(np.linalg.norm(v))
    jac = np.zeros((NBALL, NBALL))
    jac[0:3, 3:6] = np.eye(3)
    if speed > 0.0:
        jac[3:6, 3:6] = -x[6] * (speed * np.eye(3) + np.outer(v, v) / speed)
        jac[3:6, 6] = -speed * v
    return jac


def rk4_step(x: np.ndarray, dt: float) -> np.ndarray:
    k1 = ball_dynamics(x)
    k2 = ball_dynamics(x + 0.5 * dt * k1)
    k3 = ball_dynamics(x + 0.5 * dt * k2)
    k4 = ball_dynamics(x + dt * k3)
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def rk4_jacobian(x: np.ndarray, dt: float) -> np.ndarray:
    """Exact Jacobian of the RK4 map, chain rule through the four stages."""
    eye = np.eye(NBALL)
    k1 = ball_dynamics(x)
    a1 = ball_jacobian(x)
    x2 = x + 0.5 * dt * k1
    k2 = ball_dynamics(x2)
    a2 = ball_jacobian(x2) @ (eye + 0.5 * dt * a1)
    x3 = x + 0.5 * dt * k2
    k3 = ball_dynamics(x3)
    a3 = ball_jacobian(x3) @ (eye + 0.5 * dt * a2)
    x4 = x + dt * k3
    a4 = ball_jacobian(x4) @ (eye + dt * a3)
    return eye + (dt / 6.0) * (a1 + 2.0 * a2 + 2.0 * a3 + a4)


def default_process_noise() -> np.ndarray:
    return np.diag(
        [config.BALL_Q_POS] * 3 + [config.BALL_Q_VEL] * 3 + [config.BALL_Q_KD]
    )


H_MEAS = np.hstack([np.eye(3), np.zeros((3, 4))])


class BallFilter:
    """EKF over (position, velocity, drag coefficient) from position fixes."""

    def __init__(
        self,
        x0: np.ndarray,
        p0: np.ndarray,
        q: np.ndarray | None = None,
        r: np.ndarray | None = None,
        dt: float = config.BALL_DT,
    ):
        self.x = np.asarray(x0, dtype=float).copy()
        self.p = np.asarray(p0, dtype=float).copy()
        self.q = default_process_noise() if q is None else np.asarray(q, dtype=float)
        self.r = (
            config.BALL_MEAS_VAR * np.eye(3) if r is None else np.asarray(r, dtype=float)
        )
        self.dt = float(dt)

    def predict(self) -> None:
        f = rk4_jacobian(self.x, self.dt)
        self.x = rk4_step(self.x, self.dt)
        self.p = f @ self.p @ f.T + self.q
        self._symmetrize()

    def update(self, z: np.ndarray) -> None:
        z = np.asarray(z, dtype=float)
        s = H_MEAS @ self.p @ H_MEAS.T + self.r
        k = np.linalg.solve(s.T, (self.p @ H_MEAS.T).T).T
        self.x = self.x + k @ (z - H_MEAS @ self.x)
        ikh = np.eye(NBALL) - k @ H_MEAS
        # Joseph form keeps the covariance PSD over long runs
        self.p = ikh @ self.p @ ikh.T + k @ self.r @ k.T
        self.x[6] = max(self.x[6], 0.0)  # negative drag is unphysical
        self._symmetrize()

    def step(self, z: np.ndarray) -> None:
        self.predict()
        self.update(z)

    def _symmetrize(self) -> None:
        drift = float(np.abs(self.p - self.p.T).max())
        if drift > 1e-8:
            raise RuntimeError(f"ball covariance lost symmetry (drift {drift:.2e})")
        self.p = 0.5 * (self.p + self.p.T)


@dataclass(frozen=True)
class InterceptPrediction:
    """Predicted sphere crossing in chart angles; valid=False when no crossing."""

    alpha: float
    beta: float
    time_to_intercept: float
    point: np.ndarray
    valid: bool

    @staticmethod
    def invalid() -> "InterceptPrediction":
        return InterceptPrediction(0.0, 0.0, math.inf, np.zeros(3), False)


def _integrate_to_sphere_py(
    x0: np.ndarray,
    center: np.ndarray,
    radius: float,
    dt: float,
    max_horizon: float,
) -> tuple[bool, float, np.ndarray]:
    """Pure twin of the compiled kernel: RK4 scan + bisection refinement."""
    x = np.asarray(x0, dtype=float).copy()
    center = np.asarray(center, dtype=float)
    n_steps = int(math.ceil(max_horizon / dt))
    dist = float(np.linalg.norm(x[:3] - center)) - radius
    t = 0.0
    for _ in range(n_steps):
        x_next = rk4_step(x, dt)
        dist_next = float(np.linalg.norm(x_next[:3] - center)) - radius
        if dist > 0.0 and dist_next <= 0.0:
            # bisection on the fractional step, re-integrating from x
            lo, hi = 0.0, dt
            for _ in range(60):
                if hi - lo <= 1e-6:
                    break
                mid = 0.5 * (lo + hi)
                d_mid = float(np.linalg.norm(rk4_step(x, mid)[:3] - center)) - radius
                if d_mid > 0.0:
                    lo = mid
                else:
                    hi = mid
            t_hit = t + hi
            hit = rk4_step(x, hi)[:3]
            return True, t_hit, hit
        x = x_next
        dist = dist_next
        t += dt
    return False, math.inf, np.zeros(3)


def predict_intercept(
    est: np.ndarray,
    sphere_center: np.ndarray = None,
    sphere_radius: float = config.SPHERE_RADIUS,
    max_horizon: float = 3.0,
    dt: float = config.BALL_DT,
) -> InterceptPrediction:
    """Forward-predict the mean state to the first outside-in sphere crossing."""
    if sphere_center is None:
        sphere_center = np.zeros(3)
    valid, t_hit, hit = backend.integrate_to_sphere(
        est, sphere_center, sphere_radius, dt, max_horizon
    )
    if not valid:
        return InterceptPrediction.invalid()
    direction = (hit - np.asarray(sphere_center, dtype=float)) / sphere_radius
    alpha, beta = geometry.angles_from_direction(direction)
    return InterceptPrediction(alpha, beta, t_hit, np.asarray(hit), True)


@dataclass
class BallDetector:
    """Flags the ball as airborne after a few consecutive fast, high fixes."""

    height_threshold: float = config.DETECT_HEIGHT
    speed_threshold: float = config.DETECT_SPEED
    frames_required: int = config.DETECT_FRAMES
    _count: int = 0
    _prev: np.ndarray | None = field(default=None, repr=False)
    detected: bool = False

    def update(self, z: np.ndarray, dt: float) -> bool:
        z = np.asarray(z, dtype=float)
        if self.detected:
            return True
        speed = 0.0
        if self._prev is not None:
            speed = float(np.linalg.norm(z - self._prev)) / dt
        self._prev = z.copy()
        if z[2] > self.height_threshold and speed > self.speed_threshold:
            self._count += 1
        else:
            self._count = 0
        self.detected = self._count >= self.frames_required
        return self.detected
