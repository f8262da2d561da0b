"""Nonlinear power iteration for the spectral radius of a Jacobian.

Only right-hand-side evaluations are used: the Jacobian-vector product is
replaced by a forward difference f(y + q v) - f(y) along the current
direction.
"""
import math
from dataclasses import dataclass

import numpy as np

FD_EPSILON = 1e-8
TOLERANCE = 1e-2
DEFAULT_SAFETY = 1.05


@dataclass
class RhoEstimate:
    rho: float
    v: np.ndarray
    iterations: int
    safety: float = DEFAULT_SAFETY
    converged: bool = True
    rho_raw: float = 0.0


def _initial_direction(n, seed):
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(n)
    return v / np.linalg.norm(v)


def estimate_spectral_radius(t, y, f, v0=None, rho0=0.0, safety=DEFAULT_SAFETY, max_iter=50, seed=0):
    """Estimate rho(df/dy) at (t, y).

    ``v0`` warm-starts the iteration (pass the ``v`` of a previous estimate).
    The perturbation size is ``FD_EPSILON * max(|y|, 1)`` so that a zero state
    still gets a usable difference step.
    """
    y = np.atleast_1d(np.asarray(y, dtype=float))
    v = _initial_direction(y.size, seed) if v0 is None else np.array(v0, dtype=float).reshape(y.shape)
    if not np.linalg.norm(v) > 0:
        raise ValueError("initial direction must be nonzero")

    delta = FD_EPSILON * max(float(np.linalg.norm(y)), 1.0)
    fy = np.asarray(f(t, y), dtype=float)
    rho = float(rho0)
    for it in range(1, max_iter + 1):
        nv = float(np.linalg.norm(v))
        if nv < 1e-300:
            return RhoEstimate(0.0, v, it - 1, safety, True, 0.0)
        z = y + (delta / nv) * v
        v = np.asarray(f(t, z), dtype=float) - fy
        rho_old, rho = rho, float(np.linalg.norm(v)) / delta
        if rho == 0.0:
            return RhoEstimate(0.0, v, it, safety, True, 0.0)
        if abs(rho - rho_old) < TOLERANCE * rho:
            return RhoEstimate(rho * safety, v, it, safety, True, rho)
    if not math.isfinite(rho):
        raise FloatingPointError("power iteration produced a non-finite estimate")
    return RhoEstimate(rho * safety, v, max_iter, safety, False, rho)
