"""Linear arm/pressure model, exact discretization, and the simulated plant.

State vector (length 6): (alpha, alpha_dot, dp_alpha, beta, beta_dot, dp_beta).
The nominal model is two decoupled spring-damper axes driven by first-order
closed-loop pressure dynamics. The "true" plant used by the simulator adds
cross-axis coupling, a slow relaxation-like drift torque, and is what the
controller's nominal model has to absorb via disturbance estimation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
from scipy.linalg import expm

from . import config

NX = 6
NU = 2


@dataclass(frozen=True)
class ModelParams:
    """Mass-normalized per-axis coefficients of the nominal model."""

    k_alpha: float = config.K_STIFF
    k_beta: float = config.K_STIFF
    d_alpha: float = config.D_DAMP
    d_beta: float = config.D_DAMP
    h_alpha: float = config.H_GAIN
    h_beta: float = config.H_GAIN
    tau_alpha: float = config.TAU_PRESS
    tau_beta: float = config.TAU_PRESS
    c_alpha: float = config.C_COUPLE
    c_beta: float = config.C_COUPLE

    def validate(self) -> None:
        for name in ("k_alpha", "k_beta", "d_alpha", "d_beta", "tau_alpha", "tau_beta"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be strictly positive")
        if self.h_alpha == 0.0 or self.h_beta == 0.0:
            raise ValueError("pressure gains h must be nonzero")

    def to_dict(self) -> dict[str, float]:
        return {name: float(getattr(self, name)) for name in self.__dataclass_fields__}

    @classmethod
    def from_dict(cls, values: dict[str, float]) -> "ModelParams":
        fields = set(cls.__dataclass_fields__)
        return cls(**{k: float(v) for k, v in values.items() if k in fields})


@dataclass(frozen=True)
class ContinuousModel:
    a_c: np.ndarray  # (6, 6)
    b_c: np.ndarray  # (6, 2)


@dataclass(frozen=True)
class DiscreteModel:
    a: np.ndarray   # (6, 6)
    b: np.ndarray   # (6, 2)
    e: np.ndarray   # (6, 6), gain of a constant additive state-rate disturbance
    ts: float


def build_continuous(params: ModelParams) -> ContinuousModel:
    """Assemble the block-decoupled continuous model from per-axis coefficients."""
    params.validate()
    a = np.zeros((NX, NX))
    b = np.zeros((NX, NU))
    for blk, (k, d, h, tau, c) in enumerate(
        [
            (params.k_alpha, params.d_alpha, params.h_alpha, params.tau_alpha, params.c_alpha),
            (params.k_beta, params.d_beta, params.h_beta, params.tau_beta, params.c_beta),
        ]
    ):
        i = 3 * blk
        a[i, i + 1] = 1.0
        a[i + 1, i] = -k
        a[i + 1, i + 1] = -d
        a[i + 1, i + 2] = h
        a[i + 2, i + 1] = c
        a[i + 2, i + 2] = -1.0 / tau
        b[i + 2, blk] = 1.0 / tau
    return ContinuousModel(a, b)


def discretize(m: ContinuousModel, ts: float) -> DiscreteModel:
    """Exact zero-order-hold discretization, disturbance entering with unit gain.

    One augmented matrix exponential yields A = exp(A_c Ts) together with
    B = (int_0^Ts exp(A_c s) ds) B_c and E = int_0^Ts exp(A_c s) ds without
    requiring A_c to be invertible.
    """
    if ts <= 0.0:
        raise ValueError("sampling time must be positive")
    a_c = np.asarray(m.a_c, dtype=float)
    b_c = np.asarray(m.b_c, dtype=float)
    n = a_c.shape[0]
    nu = b_c.shape[1]
    aug = np.zeros((n + nu + n, n + nu + n))
    aug[:n, :n] = a_c
    aug[:n, n : n + nu] = b_c
    aug[:n, n + nu :] = np.eye(n)
    phi = expm(aug * ts)
    return DiscreteModel(
        a=phi[:n, :n],
        b=phi[:n, n : n + nu],
        e=phi[:n, n + nu :],
        ts=ts,
    )


@lru_cache(maxsize=32)
def _continuous_cached(params: ModelParams) -> ContinuousModel:
    return build_continuous(params)


@dataclass(frozen=True)
class TruePlantConfig:
    """Simulated ground-truth plant: nominal model plus mismatch knobs.

    coupling_gain scales a cross-axis torque sin(alpha)sin(beta) on both
    angular accelerations; the relaxation term is a slowly developing drift
    torque on the alpha axis, approximately (but not exactly) constant over
    a prediction horizon. Noise std devs are consumed by the measurement
    model in the harness, not by the integrator here.
    """

    base: ModelParams = field(default_factory=ModelParams)
    coupling_gain: float = config.COUPLING_GAIN
    relaxation_amplitude: float = config.RELAXATION_AMPLITUDE
    relaxation_timescale: float = config.RELAXATION_TIMESCALE
    noise_std_angle: float = config.NOISE_STD_ANGLE
    noise_std_pressure: float = config.NOISE_STD_PRESSURE

    def validate(self) -> None:
        self.base.validate()
        for name in (
            "coupling_gain",
            "relaxation_amplitude",
            "relaxation_timescale",
            "noise_std_angle",
            "noise_std_pressure",
        ):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be nonnegative")

    def linear_only(self) -> "TruePlantConfig":
        return replace(self, coupling_gain=0.0, relaxation_amplitude=0.0,
                       noise_std_angle=0.0, noise_std_pressure=0.0)


def _true_plant_rhs(
    x: np.ndarray,
    u_sp: np.ndarray,
    cfg: TruePlantConfig,
    c_model: ContinuousModel,
    t: float,
    extra_accel: np.ndarray,
) -> np.ndarray:
    dx = c_model.a_c @ x + c_model.b_c @ u_sp
    if cfg.coupling_gain != 0.0:
        cross = cfg.coupling_gain * math.sin(x[0]) * math.sin(x[3])
        dx[1] += cross
        dx[4] += cross
    if cfg.relaxation_amplitude != 0.0:
        ts = cfg.relaxation_timescale
        growth = 1.0 if ts == 0.0 else 1.0 - math.exp(-t / ts)
        dx[1] += cfg.relaxation_amplitude * growth
    dx[1] += extra_accel[0]
    dx[4] += extra_accel[1]
    return dx


def step_true_plant(
    state: np.ndarray,
    u_sp: np.ndarray,
    cfg: TruePlantConfig,
    t: float,
    dt: float,
    rng: np.random.Generator | None = None,
    extra_accel: np.ndarray | None = None,
) -> np.ndarray:
    """Advance the simulated plant by dt starting at absolute time t.

    RK4 with substeps no longer than the 200 Hz sensor interval (at least 4
    per controller period), so harness-level stepping at 0.005 s and test
    stepping at 0.02 s traverse the identical grid. extra_accel is an
    externally scheduled constant (alpha_dd, beta_dd) disturbance; rng is
    accepted for interface stability but unused (measurement noise is the
    caller's job).
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    del rng
    x = np.asarray(state, dtype=float).copy()
    u_sp = np.asarray(u_sp, dtype=float)
    extra = np.zeros(2) if extra_accel is None else np.asarray(extra_accel, dtype=float)
    c_model = _continuous_cached(cfg.base)
    n_sub = max(1, math.ceil(dt / config.SENSOR_DT - 1e-12))
    h = dt / n_sub
    for j in range(n_sub):
        tj = t + j * h
        k1 = _true_plant_rhs(x, u_sp, cfg, c_model, tj, extra)
        k2 = _true_plant_rhs(x + 0.5 * h * k1, u_sp, cfg, c_model, tj + 0.5 * h, extra)
        k3 = _true_plant_rhs(x + 0.5 * h * k2, u_sp, cfg, c_model, tj + 0.5 * h, extra)
        k4 = _true_plant_rhs(x + h * k3, u_sp, cfg, c_model, tj + h, extra)
        x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return x
