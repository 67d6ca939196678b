"""Dense convex QP solver: primal-dual interior point with Mehrotra steps.

Solves   min 0.5 u'Hu + g'u   s.t.  G u <= h   for H positive definite.

This is the pure-numpy reference implementation; softarm._core carries a
C-level port of the identical algorithm (same iteration, same update order)
used when the compiled extension is available. Keep the two in sync.

Notes on the iteration:
  * infeasible-start: slacks are initialized positive even if G u0 > h,
    and the linear residuals then shrink by exactly (1 - alpha) per step;
  * one common step length for primal and dual variables (H couples them);
  * the complementarity gap is driven below a tolerance tighter than the
    KKT residual tolerances so inactive constraints leave no visible bias
    in the returned minimizer;
  * a converged warm start (u, lam, s from a previous solve of the same
    problem) passes the residual check immediately and costs 0 iterations.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from . import config

STATUS_OK = 0
STATUS_MAX_ITER = 1
STATUS_NUMERICAL = 2


@dataclass
class QpResult:
    u: np.ndarray
    lam: np.ndarray
    s: np.ndarray
    iterations: int
    r_primal: float
    r_dual: float
    gap: float
    status: int
    # per-iteration traces of the KKT residual max-norm and the gap,
    # including the accepted final iterate
    res_trace: np.ndarray = field(default_factory=lambda: np.zeros(0))
    gap_trace: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def converged(self) -> bool:
        return self.status == STATUS_OK


def _max_step(v: np.ndarray, dv: np.ndarray) -> float:
    """Largest alpha in (0, 1] with v + alpha dv >= 0 for positive v."""
    neg = dv < 0.0
    if not np.any(neg):
        return 1.0
    return min(1.0, float(np.min(-v[neg] / dv[neg])))


def solve_qp_dense(
    h_mat: np.ndarray,
    g_vec: np.ndarray,
    g_ineq: np.ndarray,
    h_ineq: np.ndarray,
    u0: np.ndarray | None = None,
    lam0: np.ndarray | None = None,
    s0: np.ndarray | None = None,
    tol_primal: float = config.QP_TOL_PRIMAL,
    tol_dual: float = config.QP_TOL_DUAL,
    tol_comp: float = config.QP_TOL_COMP,
    max_iter: int = config.QP_MAX_ITER,
) -> QpResult:
    h_mat = np.asarray(h_mat, dtype=float)
    g_vec = np.asarray(g_vec, dtype=float)
    g_ineq = np.asarray(g_ineq, dtype=float).reshape(-1, g_vec.size)
    h_ineq = np.asarray(h_ineq, dtype=float)
    n = g_vec.size
    m = h_ineq.size

    if m == 0:
        u = cho_solve(cho_factor(h_mat), -g_vec)
        r_d = float(np.abs(h_mat @ u + g_vec).max())
        return QpResult(u, np.zeros(0), np.zeros(0), 0, 0.0, r_d, 0.0, STATUS_OK,
                        np.array([r_d]), np.array([0.0]))

    u = np.zeros(n) if u0 is None else np.asarray(u0, dtype=float).copy()
    slack_guess = h_ineq - g_ineq @ u
    if s0 is None:
        s = np.maximum(slack_guess, 1.0)
    else:
        s = np.maximum(np.asarray(s0, dtype=float), 1e-10)
    if lam0 is None:
        lam = np.ones(m)
    else:
        lam = np.maximum(np.asarray(lam0, dtype=float), 1e-10)

    scale_p = 1.0 + float(np.abs(h_ineq).max())
    scale_d = 1.0 + float(np.abs(g_vec).max())
    res_trace: list[float] = []
    gap_trace: list[float] = []
    status = STATUS_MAX_ITER
    iterations = 0
    r_p_norm = r_d_norm = gap = np.inf

    for it in range(max_iter + 1):
        r_d = h_mat @ u + g_vec + g_ineq.T @ lam
        r_p = g_ineq @ u + s - h_ineq
        gap = float(s @ lam) / m
        r_p_norm = float(np.abs(r_p).max())
        r_d_norm = float(np.abs(r_d).max())
        res_trace.append(max(r_p_norm / scale_p, r_d_norm / scale_d))
        gap_trace.append(gap)
        if (
            r_p_norm <= tol_primal * scale_p
            and r_d_norm <= tol_dual * scale_d
            and gap <= tol_comp * scale_d
        ):
            status = STATUS_OK
            iterations = it
            break
        if it == max_iter:
            iterations = it
            break

        d = lam / s
        kkt = h_mat + (g_ineq * d[:, None]).T @ g_ineq
        ridge = 0.0
        for attempt in range(4):
            try:
                chol = cho_factor(kkt + ridge * np.eye(n), lower=True)
                break
            except np.linalg.LinAlgError:
                ridge = 1e-10 * max(1.0, np.trace(kkt) / n) * 10.0**attempt
        else:
            status = STATUS_NUMERICAL
            iterations = it
            break

        # affine (predictor) direction
        rc = -s * lam
        rhs = -r_d - g_ineq.T @ ((rc + lam * r_p) / s)
        du_a = cho_solve(chol, rhs)
        ds_a = -r_p - g_ineq @ du_a
        dl_a = (rc - lam * ds_a) / s
        alpha_a = min(_max_step(s, ds_a), _max_step(lam, dl_a))
        mu_aff = float((s + alpha_a * ds_a) @ (lam + alpha_a * dl_a)) / m
        sigma = (max(mu_aff, 0.0) / gap) ** 3 if gap > 0.0 else 0.0

        # corrector direction with centering
        rc = -s * lam + sigma * gap - ds_a * dl_a
        rhs = -r_d - g_ineq.T @ ((rc + lam * r_p) / s)
        du = cho_solve(chol, rhs)
        ds = -r_p - g_ineq @ du
        dl = (rc - lam * ds) / s

        alpha = 0.995 * min(_max_step(s, ds), _max_step(lam, dl))
        alpha = min(alpha, 1.0)
        u = u + alpha * du
        s = s + alpha * ds
        lam = lam + alpha * dl

    return QpResult(
        u=u,
        lam=lam,
        s=s,
        iterations=iterations,
        r_primal=r_p_norm,
        r_dual=r_d_norm,
        gap=gap,
        status=status,
        res_trace=np.asarray(res_trace),
        gap_trace=np.asarray(gap_trace),
    )
