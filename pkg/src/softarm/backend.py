"""Kernel backend selection: compiled extension when available, numpy otherwise.

The two hot kernels (dense QP interior-point solve, ball forward prediction
to sphere intercept) exist twice: a Cython extension (softarm._core) and
pure-numpy twins (softarm.qp, softarm.ball). Importing this module picks the
compiled version when it built successfully; set SOFTARM_PURE=1 to force the
fallback. benchmarks/bench_core.py compares the two.
"""

from __future__ import annotations

import os

_FORCE_PURE = os.environ.get("SOFTARM_PURE", "").strip() not in ("", "0")

_core = None
if not _FORCE_PURE:
    try:
        from . import _core  # type: ignore[attr-defined]
    except ImportError:
        _core = None

HAVE_COMPILED = _core is not None
BACKEND_NAME = "compiled" if HAVE_COMPILED else "pure"


def solve_qp_dense(h_mat, g_vec, g_ineq, h_ineq, u0=None, lam0=None, s0=None,
                   tol_primal=None, tol_dual=None, tol_comp=None, max_iter=None):
    """Dispatch to the selected QP kernel; see softarm.qp for the contract."""
    from . import config, qp

    kwargs = dict(
        tol_primal=config.QP_TOL_PRIMAL if tol_primal is None else tol_primal,
        tol_dual=config.QP_TOL_DUAL if tol_dual is None else tol_dual,
        tol_comp=config.QP_TOL_COMP if tol_comp is None else tol_comp,
        max_iter=config.QP_MAX_ITER if max_iter is None else max_iter,
    )
    if HAVE_COMPILED:
        import numpy as np

        res = _core.solve_qp_dense(
            np.ascontiguousarray(h_mat, dtype=float),
            np.ascontiguousarray(g_vec, dtype=float),
            np.ascontiguousarray(g_ineq, dtype=float),
            np.ascontiguousarray(h_ineq, dtype=float),
            None if u0 is None else np.ascontiguousarray(u0, dtype=float),
            None if lam0 is None else np.ascontiguousarray(lam0, dtype=float),
            None if s0 is None else np.ascontiguousarray(s0, dtype=float),
            kwargs["tol_primal"],
            kwargs["tol_dual"],
            kwargs["tol_comp"],
            kwargs["max_iter"],
        )
        return qp.QpResult(*res)
    return qp.solve_qp_dense(h_mat, g_vec, g_ineq, h_ineq, u0, lam0, s0, **kwargs)


def integrate_to_sphere(x0, center, radius, dt, max_horizon):
    """Dispatch ball forward prediction; returns (valid, t_hit, hit_point)."""
    if HAVE_COMPILED:
        import numpy as np

        valid, t_hit, hit = _core.integrate_to_sphere(
            np.ascontiguousarray(x0, dtype=float),
            np.ascontiguousarray(center, dtype=float),
            float(radius),
            float(dt),
            float(max_horizon),
        )
        return bool(valid), float(t_hit), hit
    from .ball import _integrate_to_sphere_py

    return _integrate_to_sphere_py(x0, center, radius, dt, max_horizon)
