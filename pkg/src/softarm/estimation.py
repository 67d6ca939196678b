"""Disturbance observer: augmented model and steady-state Kalman filter.

The discrete model is augmented with a constant-dynamics disturbance state
(12 states total), the steady-state gain comes from iterating the filter
Riccati recursion to a fixed point, and the runtime update is the resulting
constant-gain one-step recursion. The disturbance estimate feeds the target
calculation; the raw state measurement is used as MPC feedback directly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import config
from .dynamics import NX, DiscreteModel


@dataclass(frozen=True)
class NoiseConfig:
    """Process / measurement covariances for the augmented filter."""

    q_proc: np.ndarray  # (12, 12) PSD
    r_meas: np.ndarray  # (6, 6) PD

    def validate(self) -> None:
        for name, m in (("q_proc", self.q_proc), ("r_meas", self.r_meas)):
            m = np.asarray(m)
            if not np.allclose(m, m.T, atol=1e-12):
                raise ValueError(f"{name} must be symmetric")
            w = np.linalg.eigvalsh(m)
            if name == "r_meas" and w.min() <= 0.0:
                raise ValueError("r_meas must be positive definite")
            if w.min() < -1e-12:
                raise ValueError(f"{name} must be positive semidefinite")


def default_noise_config() -> NoiseConfig:
    r_diag = np.array(
        [config.KF_R_ANGLE, config.KF_R_RATE, config.KF_R_PRESSURE] * 2
    ) ** 2
    q_diag = np.concatenate(
        [np.full(NX, config.KF_Q_STATE), np.full(NX, config.KF_Q_DIST)]
    )
    return NoiseConfig(q_proc=np.diag(q_diag), r_meas=np.diag(r_diag))


@dataclass
class DisturbanceEstimate:
    """Filtered state and disturbance estimate (disturbance in state-rate units)."""

    x_hat: np.ndarray = field(default_factory=lambda: np.zeros(NX))
    d_hat: np.ndarray = field(default_factory=lambda: np.zeros(NX))

    def stacked(self) -> np.ndarray:
        return np.concatenate([self.x_hat, self.d_hat])


@dataclass(frozen=True)
class AugmentedModel:
    """Augmented matrices, converged gain, and the filter recursion matrices."""

    a_aug: np.ndarray  # (12, 12)
    b_aug: np.ndarray  # (12, 2)
    c_aug: np.ndarray  # (6, 12)
    k_inf: np.ndarray  # (12, 6)
    p_inf: np.ndarray  # (12, 12)
    a_hat: np.ndarray  # (12, 12) = (I - K C) A
    b_hat: np.ndarray  # (12, 2)  = (I - K C) B
    d_sat: float


class DareError(RuntimeError):
    """Riccati fixed-point iteration failed to converge or lost symmetry."""


def solve_dare(
    a: np.ndarray,
    c: np.ndarray,
    q: np.ndarray,
    r: np.ndarray,
    tol: float = 1e-10,
    max_iter: int = 10000,
) -> tuple[np.ndarray, np.ndarray]:
    """Steady a-priori covariance and gain of the constant-gain filter.

    Fixed-point iteration of P <- A(P - P C'(C P C' + R)^-1 C P)A' + Q until
    the max-norm change drops below tol. Each iterate is re-symmetrized; a
    symmetry drift beyond 1e-8 or hitting the iteration cap raises DareError.
    Returns (P, K) with K = P C'(C P C' + R)^-1.
    """
    a = np.atleast_2d(np.asarray(a, dtype=float))
    c = np.atleast_2d(np.asarray(c, dtype=float))
    q = np.atleast_2d(np.asarray(q, dtype=float))
    r = np.atleast_2d(np.asarray(r, dtype=float))
    p = q.copy()
    for _ in range(max_iter):
        s = c @ p @ c.T + r
        k = np.linalg.solve(s.T, (p @ c.T).T).T
        p_next = a @ (p - k @ c @ p) @ a.T + q
        drift = np.abs(p_next - p_next.T).max()
        if drift > 1e-8:
            raise DareError(f"Riccati iterate lost symmetry (drift {drift:.2e})")
        p_next = 0.5 * (p_next + p_next.T)
        if np.abs(p_next - p).max() < tol:
            p = p_next
            s = c @ p @ c.T + r
            k = np.linalg.solve(s.T, (p @ c.T).T).T
            return p, k
        p = p_next
    raise DareError(f"Riccati iteration did not converge within {max_iter} steps")


def _check_detectable(a: np.ndarray, c: np.ndarray) -> None:
    """PBH test on marginally/unstable eigenvalues."""
    n = a.shape[0]
    eigvals = np.linalg.eigvals(a)
    for lam in eigvals:
        if abs(lam) < 1.0 - 1e-9:
            continue
        m = np.vstack([a - lam * np.eye(n), c])
        if np.linalg.matrix_rank(m, tol=1e-9) < n:
            raise ValueError(f"augmented pair not detectable at eigenvalue {lam:.6g}")


def build_augmented(
    model: DiscreteModel,
    noise: NoiseConfig | None = None,
    d_sat: float = config.D_HAT_SAT,
) -> AugmentedModel:
    """Build the augmented model and solve for the steady-state gain."""
    noise = noise if noise is not None else default_noise_config()
    noise.validate()
    a_aug = np.block([[model.a, model.e], [np.zeros((NX, NX)), np.eye(NX)]])
    b_aug = np.vstack([model.b, np.zeros((NX, model.b.shape[1]))])
    c_aug = np.hstack([np.eye(NX), np.zeros((NX, NX))])
    _check_detectable(a_aug, c_aug)
    p_inf, k_inf = solve_dare(a_aug, c_aug, noise.q_proc, noise.r_meas)
    ikc = np.eye(2 * NX) - k_inf @ c_aug
    a_hat = ikc @ a_aug
    rho = np.abs(np.linalg.eigvals(a_hat)).max()
    if rho >= 1.0:
        raise DareError(f"filter recursion unstable (spectral radius {rho:.6f})")
    return AugmentedModel(
        a_aug=a_aug,
        b_aug=b_aug,
        c_aug=c_aug,
        k_inf=k_inf,
        p_inf=p_inf,
        a_hat=a_hat,
        b_hat=ikc @ b_aug,
        d_sat=float(d_sat),
    )


def kf_update(
    est: DisturbanceEstimate,
    u_prev: np.ndarray,
    z: np.ndarray,
    model: AugmentedModel,
) -> DisturbanceEstimate:
    """One constant-gain filter step: propagate previous estimate, blend in z."""
    xd = model.a_hat @ est.stacked() + model.b_hat @ np.asarray(u_prev, dtype=float)
    xd += model.k_inf @ np.asarray(z, dtype=float)
    d_hat = np.clip(xd[NX:], -model.d_sat, model.d_sat)
    return DisturbanceEstimate(x_hat=xd[:NX], d_hat=d_hat)
