"""Central numeric defaults and plain-text ``name = value`` config files.

Every tunable constant of the simulator/controller stack lives here so the
system identification pipeline can re-derive model parameters against one
authoritative set of defaults.
"""

from __future__ import annotations

import math
from pathlib import Path

# --- pressures (bar) ---
P_MIN = 1.0            # ambient pressure, lower set-point bound
P_MAX = 1.9            # maximum allowed actuator pressure
P_BAR = 1.05           # fixed lower pressure level (stiffness held constant)

# --- timing ---
TS = 0.02              # controller sampling time, s
SENSOR_DT = 0.005      # sensor / plant substep, s (200 Hz)
N_HORIZON = 50         # prediction horizon steps

# --- arm model defaults (per axis, mass-normalized) ---
K_STIFF = 230.0        # 1/s^2, gives a natural frequency of ~2.4 Hz
D_DAMP = 6.0           # 1/s
H_GAIN = 530.0         # (rad/s^2)/bar
TAU_PRESS = 0.05       # s, closed-loop pressure time constant
C_COUPLE = 0.01        # bar*s/rad, arm-motion -> pressure interaction

# --- true-plant mismatch defaults ---
COUPLING_GAIN = 25.0          # rad/s^2 cross-axis torque scale
RELAXATION_AMPLITUDE = 60.0   # rad/s^2 slow drift torque on the alpha axis
RELAXATION_TIMESCALE = 1.0    # s
NOISE_STD_ANGLE = 2e-4        # rad, mocap-class angle noise
NOISE_STD_PRESSURE = 1e-3     # bar

# --- MPC weights ---
Q_ANGLE = 100.0
Q_RATE = 1.0
Q_PRESSURE = 0.1
R_INPUT = 0.1
RD_RATE = 1.0

# --- solver tolerances ---
QP_TOL_PRIMAL = 1e-6
QP_TOL_DUAL = 1e-6
QP_TOL_COMP = 1e-9     # complementarity pushed tighter than the KKT residuals
QP_MAX_ITER = 50

# --- disturbance filter covariances ---
KF_R_ANGLE = 1e-3      # rad, assumed angle sensor noise
KF_R_RATE = 1e-2       # rad/s
KF_R_PRESSURE = 1e-3   # bar
KF_Q_STATE = 1e-6      # process variance on physical states
KF_Q_DIST = 1e-4       # process variance on disturbance states (~1 Hz tracking)
D_HAT_SAT = 1e3        # per-channel saturation guard on the disturbance estimate

# --- ball / catching geometry ---
GRAVITY = 9.81
SPHERE_RADIUS = 0.4    # m, arm sphere around the joint
NET_RADIUS = 0.031     # m, net opening radius = catch success disc
OMEGA_SP = math.radians(240.0)  # rad/s planner angular velocity
BALL_DT = 0.005        # s, ball filter / prediction step
BALL_MEAS_VAR = 1e-6   # m^2 position measurement variance
BALL_Q_POS = 1e-6      # per-step process variances
BALL_Q_VEL = 1e-3
BALL_Q_KD = 1e-5
DETECT_HEIGHT = 0.05   # m, ball considered airborne above this height...
DETECT_SPEED = 1.0     # m/s ...and faster than this,
DETECT_FRAMES = 3      # for this many consecutive frames

# --- catch scenario defaults ---
THROW_DISTANCE = 2.0   # m from sphere center to the thrower
CATCH_WARMUP = 2.5     # s of holding before the throw is released
WIND_ACCEL_X = 0.5     # m/s^2, documented gust magnitude along +x


class ConfigError(ValueError):
    """Malformed or unknown entry in a key=value config file."""


def read_config(path: str | Path) -> dict[str, float | str]:
    """Parse a flat ``name = value`` file.

    Values parse as float when possible, else stay strings. Blank lines and
    ``#`` comments are skipped. Malformed lines raise ConfigError with the
    line number.
    """
    out: dict[str, float | str] = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'name = value', got {raw.strip()!r}")
            name, _, value = line.partition("=")
            name = name.strip()
            value = value.strip()
            if not name or not value:
                raise ConfigError(f"{path}:{lineno}: expected 'name = value', got {raw.strip()!r}")
            if name in out:
                raise ConfigError(f"{path}:{lineno}: duplicate key {name!r}")
            try:
                out[name] = float(value)
            except ValueError:
                out[name] = value
    return out


def write_config(path: str | Path, values: dict[str, float | str]) -> None:
    """Write a flat ``name = value`` file readable by read_config."""
    with open(path, "w") as fh:
        for name, value in values.items():
            if isinstance(value, float):
                fh.write(f"{name} = {format_number(value)}\n")
            else:
                fh.write(f"{name} = {value}\n")


def format_number(x: float) -> str:
    """Fixed, locale-independent numeric formatting used in all text output."""
    return format(float(x), ".12g")
