"""Receding-horizon constrained MPC over the allocated pressure inputs.

The horizon states are eliminated by forward substitution (condensed form),
leaving the stacked inputs as decision variables of a dense QP with the
input polytope replicated per step. The cost penalizes state and input
deviations from the disturbance-aware targets, terminal deviation, and the
input rate (first step coupled to the previously applied input). The first
optimal input is converted to actuator pressure set points.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import backend, config
from .allocation import ActuatorPressures, AllocatedInput, InputPolytope, build_input_polytope, xi_inv
from .dynamics import NU, NX, DiscreteModel
from .qp import STATUS_OK, QpResult
from .tracking import TargetCalculator, TargetPair


def default_weights() -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    q = np.diag([config.Q_ANGLE, config.Q_RATE, config.Q_PRESSURE] * 2)
    r = config.R_INPUT * np.eye(NU)
    p = q.copy()
    r_d = config.RD_RATE * np.eye(NU)
    return q, r, p, r_d


@dataclass(frozen=True)
class MpcConfig:
    n: int = config.N_HORIZON
    ts: float = config.TS
    q: np.ndarray = field(default_factory=lambda: default_weights()[0])
    r: np.ndarray = field(default_factory=lambda: default_weights()[1])
    p: np.ndarray = field(default_factory=lambda: default_weights()[2])
    r_d: np.ndarray = field(default_factory=lambda: default_weights()[3])
    polytope: InputPolytope | None = field(default_factory=build_input_polytope)
    tol_primal: float = config.QP_TOL_PRIMAL
    tol_dual: float = config.QP_TOL_DUAL
    tol_comp: float = config.QP_TOL_COMP
    max_iter: int = config.QP_MAX_ITER

    def validate(self) -> None:
        if self.n < 1:
            raise ValueError("horizon must be at least 1")
        for name, m, pd in (("q", self.q, False), ("r", self.r, True),
                            ("p", self.p, False), ("r_d", self.r_d, False)):
            m = np.asarray(m)
            if m.shape != ((NX, NX) if name in ("q", "p") else (NU, NU)):
                raise ValueError(f"{name} has wrong shape {m.shape}")
            if not np.allclose(m, m.T, atol=1e-12):
                raise ValueError(f"{name} must be symmetric")
            w = np.linalg.eigvalsh(m)
            if pd and w.min() <= 0.0:
                raise ValueError(f"{name} must be positive definite")
            if w.min() < -1e-12:
                raise ValueError(f"{name} must be positive semidefinite")


@dataclass
class QpData:
    h_mat: np.ndarray
    g_vec: np.ndarray
    g_ineq: np.ndarray
    h_ineq: np.ndarray
    x0: np.ndarray
    d_hat: np.ndarray
    u_prev: np.ndarray
    targets: list[TargetPair]


@dataclass
class MpcSolution:
    u0: np.ndarray
    u_seq: np.ndarray       # (N, 2)
    x_seq: np.ndarray       # (N+1, 6) predicted under d_hat
    cost: float
    iterations: int
    r_primal: float
    r_dual: float
    gap: float
    status: int
    raw: QpResult | None = None

    @property
    def converged(self) -> bool:
        return self.status == STATUS_OK


class CondensedMpc:
    """Precomputes the prediction/cost matrices for one (model, config) pair."""

    def __init__(self, model: DiscreteModel, cfg: MpcConfig):
        cfg.validate()
        self.model = model
        self.cfg = cfg
        n = cfg.n
        a, b, e = model.a, model.b, model.e

        powers = [np.eye(NX)]
        for _ in range(n):
            powers.append(a @ powers[-1])
        self._sx = np.vstack([powers[i] for i in range(1, n + 1)])  # (6N, 6)
        csum = np.zeros((NX, NX))
        sd_blocks = []
        for i in range(1, n + 1):
            csum = csum + powers[i - 1]
            sd_blocks.append(csum @ e)
        self._sd = np.vstack(sd_blocks)  # (6N, 6)

        su = np.zeros((NX * n, NU * n))
        ab = [powers[p] @ b for p in range(n)]
        for i in range(1, n + 1):
            for j in range(i):
                su[(i - 1) * NX : i * NX, j * NU : (j + 1) * NU] = ab[i - 1 - j]
        self._su = su

        qbar = np.zeros((NX * n, NX * n))
        for i in range(n - 1):
            qbar[i * NX : (i + 1) * NX, i * NX : (i + 1) * NX] = cfg.q
        qbar[(n - 1) * NX :, (n - 1) * NX :] = cfg.p
        rbar = np.kron(np.eye(n), cfg.r)
        diff = np.kron(np.eye(n), np.eye(NU)) - np.kron(np.eye(n, k=-1), np.eye(NU))
        rdbar = np.kron(np.eye(n), cfg.r_d)

        self._su_t_qbar = su.T @ qbar
        self._diff = diff
        self._diff_t_rd = diff.T @ rdbar
        self._rbar = rbar
        self.h_mat = 2.0 * (self._su_t_qbar @ su + rbar + self._diff_t_rd @ diff)
        self.h_mat = 0.5 * (self.h_mat + self.h_mat.T)

        if cfg.polytope is not None:
            m_poly, b_poly = cfg.polytope.as_inequalities()
            self.g_ineq = np.kron(np.eye(n), m_poly)
            self.h_ineq = np.tile(b_poly, n)
        else:
            self.g_ineq = np.zeros((0, NU * n))
            self.h_ineq = np.zeros(0)

    def build_qp(
        self,
        x_meas: np.ndarray,
        u_prev: np.ndarray,
        d_hat: np.ndarray,
        targets: list[TargetPair],
    ) -> QpData:
        n = self.cfg.n
        if len(targets) != n + 1:
            raise ValueError(f"expected {n + 1} targets, got {len(targets)}")
        x0 = np.asarray(x_meas, dtype=float)
        u_prev = np.asarray(u_prev, dtype=float)
        d_hat = np.asarray(d_hat, dtype=float)
        x_bar = np.concatenate([t.x_bar for t in targets[1:]])
        u_bar = np.concatenate([t.u_bar for t in targets[:n]])
        w = self._sx @ x0 + self._sd @ d_hat
        b_rate = np.zeros(NU * n)
        b_rate[:NU] = u_prev
        g_vec = 2.0 * (
            self._su_t_qbar @ (w - x_bar) - self._rbar @ u_bar - self._diff_t_rd @ b_rate
        )
        return QpData(
            h_mat=self.h_mat,
            g_vec=g_vec,
            g_ineq=self.g_ineq,
            h_ineq=self.h_ineq,
            x0=x0,
            d_hat=d_hat,
            u_prev=u_prev,
            targets=list(targets),
        )

    def predict_states(self, x0: np.ndarray, u_seq: np.ndarray, d_hat: np.ndarray) -> np.ndarray:
        xs = np.empty((self.cfg.n + 1, NX))
        xs[0] = x0
        ed = self.model.e @ d_hat
        for i in range(self.cfg.n):
            xs[i + 1] = self.model.a @ xs[i] + self.model.b @ u_seq[i] + ed
        return xs

    def objective(self, qp: QpData, u_seq: np.ndarray) -> float:
        """Full horizon cost including the constant x_0 deviation term."""
        cfg = self.cfg
        xs = self.predict_states(qp.x0, u_seq, qp.d_hat)
        cost = 0.0
        prev = qp.u_prev
        for i in range(cfg.n):
            ex = xs[i] - qp.targets[i].x_bar
            eu = u_seq[i] - qp.targets[i].u_bar
            du = u_seq[i] - prev
            cost += ex @ cfg.q @ ex + eu @ cfg.r @ eu + du @ cfg.r_d @ du
            prev = u_seq[i]
        exn = xs[cfg.n] - qp.targets[cfg.n].x_bar
        cost += exn @ cfg.p @ exn
        return float(cost)

    def solve(self, qp: QpData, warm_start: QpResult | None = None) -> MpcSolution:
        w_u = w_lam = w_s = None
        if warm_start is not None:
            w_u, w_lam, w_s = shift_warm_start(warm_start, self.cfg.n, self.g_ineq.shape[0])
        res = backend.solve_qp_dense(
            qp.h_mat,
            qp.g_vec,
            qp.g_ineq,
            qp.h_ineq,
            u0=w_u,
            lam0=w_lam,
            s0=w_s,
            tol_primal=self.cfg.tol_primal,
            tol_dual=self.cfg.tol_dual,
            tol_comp=self.cfg.tol_comp,
            max_iter=self.cfg.max_iter,
        )
        u_seq = res.u.reshape(self.cfg.n, NU)
        xs = self.predict_states(qp.x0, u_seq, qp.d_hat)
        return MpcSolution(
            u0=u_seq[0].copy(),
            u_seq=u_seq,
            x_seq=xs,
            cost=self.objective(qp, u_seq),
            iterations=res.iterations,
            r_primal=res.r_primal,
            r_dual=res.r_dual,
            gap=res.gap,
            status=res.status,
            raw=res,
        )


def shift_warm_start(prev: QpResult, n: int, m_total: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Shift the previous solution one step: drop u_0, repeat the tail block."""
    u = np.empty_like(prev.u)
    u[: NU * (n - 1)] = prev.u[NU:]
    u[NU * (n - 1) :] = prev.u[NU * (n - 1) :]
    if m_total == 0 or prev.lam.size != m_total:
        return u, None, None
    m_per = m_total // n
    lam = np.empty_like(prev.lam)
    s = np.empty_like(prev.s)
    lam[: m_per * (n - 1)] = prev.lam[m_per:]
    lam[m_per * (n - 1) :] = prev.lam[m_per * (n - 1) :]
    s[: m_per * (n - 1)] = prev.s[m_per:]
    s[m_per * (n - 1) :] = prev.s[m_per * (n - 1) :]
    return u, lam, s


def build_qp(
    x_meas: np.ndarray,
    u_prev: np.ndarray,
    d_hat: np.ndarray,
    targets: list[TargetPair],
    cfg: MpcConfig,
    model: DiscreteModel,
) -> QpData:
    return CondensedMpc(model, cfg).build_qp(x_meas, u_prev, d_hat, targets)


def solve_qp(qp: QpData, cfg: MpcConfig, model: DiscreteModel,
             warm_start: QpResult | None = None) -> MpcSolution:
    return CondensedMpc(model, cfg).solve(qp, warm_start)


class MpcController:
    """Stateful receding-horizon controller emitting pressure set points.

    mode "offset_free" feeds the disturbance estimate into both the target
    calculation and the prediction; mode "standard" forces it to zero,
    which reproduces a conventional MPC. On a solver failure the previous
    pressures are re-applied (fail-safe) and the failure is counted.
    """

    def __init__(
        self,
        model: DiscreteModel,
        cfg: MpcConfig | None = None,
        p_bar: float = config.P_BAR,
        mode: str = "offset_free",
    ):
        if mode not in ("offset_free", "standard"):
            raise ValueError(f"unknown controller mode {mode!r}")
        self.cfg = cfg if cfg is not None else MpcConfig()
        self.engine = CondensedMpc(model, self.cfg)
        self.targets = TargetCalculator(model)
        self.p_bar = float(p_bar)
        self.mode = mode
        self.u_prev = np.zeros(NU)  # equilibrium input before the first step
        self._warm: QpResult | None = None
        self._last_pressures = xi_inv(AllocatedInput(0.0, 0.0, self.p_bar))
        self.failures = 0

    def control_step(
        self,
        x_meas: np.ndarray,
        d_hat: np.ndarray,
        refs: np.ndarray,
    ) -> tuple[ActuatorPressures, MpcSolution]:
        """One receding-horizon step: refs is the (N+1, 2) angle preview."""
        d_used = np.zeros(NX) if self.mode == "standard" else np.asarray(d_hat, dtype=float)
        targets = self.targets.solve_trajectory(refs, d_used)
        qp = self.engine.build_qp(x_meas, self.u_prev, d_used, targets)
        sol = self.engine.solve(qp, warm_start=self._warm)
        if sol.converged:
            self._warm = sol.raw
            self.u_prev = sol.u0.copy()
            self._last_pressures = xi_inv(
                AllocatedInput(float(sol.u0[0]), float(sol.u0[1]), self.p_bar)
            )
        else:
            self.failures += 1
        return self._last_pressures, sol
