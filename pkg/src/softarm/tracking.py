"""Disturbance-aware target calculation for setpoints and setpoint trajectories.

For a reference r = (alpha_sp, beta_sp) and disturbance estimate d_hat, the
target pair (x_bar, u_bar) solves

    [A - I  B] [x_bar]   [-E d_hat]
    [  H    0] [u_bar] = [   r    ]

so that holding u_bar keeps the state at x_bar under the estimated
disturbance while the selected angles equal the reference.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgWarning, lu_factor, lu_solve

from .dynamics import NU, NX, DiscreteModel

# Selects the two angle entries out of the state.
H_SELECT = np.zeros((2, NX))
H_SELECT[0, 0] = 1.0
H_SELECT[1, 3] = 1.0

COND_LIMIT = 1e12


@dataclass(frozen=True)
class Setpoint:
    alpha_sp: float
    beta_sp: float

    def as_array(self) -> np.ndarray:
        return np.array([self.alpha_sp, self.beta_sp])


@dataclass(frozen=True)
class TargetPair:
    x_bar: np.ndarray  # (6,)
    u_bar: np.ndarray  # (2,)


class TargetCalculator:
    """Factors the target system once per model and reuses it per solve."""

    def __init__(self, model: DiscreteModel):
        self.model = model
        m = np.zeros((NX + NU, NX + NU))
        m[:NX, :NX] = model.a - np.eye(NX)
        m[:NX, NX:] = model.b
        m[NX:, :NX] = H_SELECT
        self._matrix = m
        self._cond = float(np.linalg.cond(m))
        self.degraded = not np.isfinite(self._cond) or self._cond > COND_LIMIT
        if self.degraded:
            warnings.warn(
                f"target system condition {self._cond:.3g} above {COND_LIMIT:.0e}; "
                "falling back to minimum-norm pseudo-inverse targets",
                LinAlgWarning,
                stacklevel=2,
            )
            self._pinv = np.linalg.pinv(m)
            self._lu = None
        else:
            self._lu = lu_factor(m)
            self._pinv = None

    def solve(self, r: Setpoint | np.ndarray, d_hat: np.ndarray) -> TargetPair:
        rhs = np.empty(NX + NU)
        rhs[:NX] = -self.model.e @ np.asarray(d_hat, dtype=float)
        rhs[NX:] = r.as_array() if isinstance(r, Setpoint) else np.asarray(r, dtype=float)
        if self._lu is not None:
            sol = lu_solve(self._lu, rhs)
        else:
            sol = self._pinv @ rhs
        return TargetPair(x_bar=sol[:NX], u_bar=sol[NX:])

    def solve_trajectory(self, refs: np.ndarray, d_hat: np.ndarray) -> list[TargetPair]:
        """Element-wise targets for refs of shape (N+1, 2) under one shared d_hat."""
        refs = np.atleast_2d(np.asarray(refs, dtype=float))
        rhs = np.empty((NX + NU, len(refs)))
        rhs[:NX, :] = (-self.model.e @ np.asarray(d_hat, dtype=float))[:, None]
        rhs[NX:, :] = refs.T
        if self._lu is not None:
            sol = lu_solve(self._lu, rhs)
        else:
            sol = self._pinv @ rhs
        return [TargetPair(x_bar=sol[:NX, i], u_bar=sol[NX:, i]) for i in range(len(refs))]


def compute_target(r: Setpoint | np.ndarray, d_hat: np.ndarray, model: DiscreteModel) -> TargetPair:
    return TargetCalculator(model).solve(r, d_hat)


def compute_target_trajectory(
    refs: np.ndarray, d_hat: np.ndarray, model: DiscreteModel
) -> list[TargetPair]:
    return TargetCalculator(model).solve_trajectory(refs, d_hat)
