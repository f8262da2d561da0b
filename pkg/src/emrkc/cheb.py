"""Damped first-order Runge-Kutta-Chebyshev machinery.

Stage-count selection, coefficient tables, the three-term stage iteration and
the stability polynomial R_s(z) = T_s(w0 + w1 z) / T_s(w0).
"""
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import kernels
from .errors import NonFiniteStageError

DEFAULT_EPSILON = 0.05


def cheb_T(j, x):
    """Chebyshev polynomial of the first kind and its derivative at ``x``.

    Both are propagated jointly through the three-term recurrence, which
    stays well defined for ``x > 1`` (the damped case).

    >>> cheb_T(2, 1.0125)
    (1.0503125..., 4.05)
    """
    if j < 0:
        raise ValueError(f"degree must be >= 0, got {j}")
    if j == 0:
        return 1.0, 0.0
    t_prev, t = 1.0, x
    d_prev, d = 0.0, 1.0
    for _ in range(2, j + 1):
        t_prev, t, d_prev, d = t, 2.0 * x * t - t_prev, d, 2.0 * t + 2.0 * x * d - d_prev
    return t, d


def stability_beta(epsilon=DEFAULT_EPSILON):
    return 2.0 - 4.0 * epsilon / 3.0


@dataclass(frozen=True)
class StagePlan:
    s: int
    ell_s: float
    beta: float


def get_stages(dt, rho, epsilon=DEFAULT_EPSILON):
    """Smallest stage count whose stability interval beta*s^2 covers dt*rho.

    The count is clamped to at least one stage.
    """
    if not (math.isfinite(dt) and math.isfinite(rho) and math.isfinite(epsilon)):
        raise ValueError(f"non-finite stage planning input: dt={dt}, rho={rho}, epsilon={epsilon}")
    if dt <= 0 or rho < 0:
        raise ValueError(f"need dt > 0 and rho >= 0, got dt={dt}, rho={rho}")
    if not 0 <= epsilon < 1.5:
        raise ValueError(f"damping must lie in [0, 1.5), got {epsilon}")
    beta = stability_beta(epsilon)
    s = max(1, math.ceil(math.sqrt(dt * rho / beta)))
    return StagePlan(s=s, ell_s=beta * s * s, beta=beta)


@dataclass(frozen=True, eq=False)
class RkcCoeffs:
    """Coefficient table of the damped RKC method.

    ``mu``, ``nu``, ``kappa``, ``b`` and ``c`` all have length ``s + 1`` and
    are indexed by stage; unused leading entries of ``nu``/``kappa`` are 0.
    """

    s: int
    epsilon: float
    omega0: float
    omega1: float
    b: np.ndarray
    mu: np.ndarray
    nu: np.ndarray
    kappa: np.ndarray
    c: np.ndarray


@lru_cache(maxsize=512)
def rkc_coeffs(s, epsilon=DEFAULT_EPSILON):
    if s < 1:
        raise ValueError(f"stage count must be >= 1, got {s}")
    omega0 = 1.0 + epsilon / (s * s)
    # w1 = T_s(w0)/T_s'(w0) in closed form (w0 = cosh theta): the recurrence
    # value drifts by O(s eps), which large |z| amplifies
    d0 = omega0 - 1.0
    theta = math.log1p(d0 + math.sqrt(d0 * (d0 + 2.0)))
    omega1 = math.sinh(theta) / (s * math.tanh(s * theta)) if theta > 0 else 1.0 / (s * s)

    # b_j from the recurrence itself keeps nu_j + kappa_j = 1 to rounding
    b = np.empty(s + 1)
    t_prev, t = 1.0, omega0
    b[0] = 1.0
    b[1] = 1.0 / omega0
    for j in range(2, s + 1):
        t_prev, t = t, 2.0 * omega0 * t - t_prev
        b[j] = 1.0 / t

    mu = np.zeros(s + 1)
    nu = np.zeros(s + 1)
    kappa = np.zeros(s + 1)
    c = np.zeros(s + 1)
    mu[1] = omega1 / omega0
    c[1] = mu[1]
    for j in range(2, s + 1):
        mu[j] = 2.0 * omega1 * b[j] / b[j - 1]
        nu[j] = 2.0 * omega0 * b[j] / b[j - 1]
        kappa[j] = -b[j] / b[j - 2]
        c[j] = nu[j] * c[j - 1] + kappa[j] * c[j - 2] + mu[j]
    for arr in (b, mu, nu, kappa, c):
        arr.flags.writeable = False
    return RkcCoeffs(s, epsilon, omega0, omega1, b, mu, nu, kappa, c)


def _check_stage(g, j):
    if not math.isfinite(float(np.sum(g))):
        raise NonFiniteStageError(j)


def _as_vec(a):
    # compiled kernels want contiguous float64
    return np.ascontiguousarray(a, dtype=float)


def rkc_iteration(t, y, dt, f, s, epsilon=DEFAULT_EPSILON):
    """Advance ``y`` over ``dt`` with the s-stage damped RKC recurrence.

    ``f(t, y)`` is called exactly ``s`` times. Arrays are handled with three
    rotating work vectors; Python/numpy scalars take a scalar path. A
    non-finite stage raises :class:`NonFiniteStageError` carrying its index.
    """
    co = rkc_coeffs(s, epsilon)
    mu, nu, kappa, c = co.mu, co.nu, co.kappa, co.c

    if np.ndim(y) == 0:
        g2 = float(y)
        g1 = g2 + mu[1] * dt * f(t, g2)
        if not math.isfinite(g1):
            raise NonFiniteStageError(1)
        for j in range(2, s + 1):
            g1, g2 = g1 + (g2 - g1) * kappa[j] + mu[j] * dt * f(t + c[j - 1] * dt, g1), g1
            if not math.isfinite(g1):
                raise NonFiniteStageError(j)
        return g1

    y = np.asarray(y, dtype=float)
    g2 = y.copy()
    g1 = np.empty_like(y)
    kernels.axpy(g1, g2, mu[1] * dt, _as_vec(f(t, g2)))
    _check_stage(g1, 1)
    if s == 1:
        return g1
    g0 = np.empty_like(y)
    for j in range(2, s + 1):
        fj = _as_vec(f(t + c[j - 1] * dt, g1))
        kernels.rkc_combine(g0, g1, kappa[j], g2, mu[j] * dt, fj)
        _check_stage(g0, j)
        g0, g1, g2 = g2, g0, g1
    return g1


def stability_poly(s, epsilon, z):
    """R_s(z): one RKC step of size 1 on y' = z*y from y = 1."""
    return rkc_iteration(0.0, 1.0, 1.0, lambda t, y: z * y, s, epsilon)


def stability_phi(s, epsilon, z):
    """Phi_s(z) = (R_s(z) - 1) / z, with Phi_s(0) = 1.

    Evaluated through the recurrence for e_j = (R_j(z) - 1)/z, which has no
    division by ``z`` and so no cancellation near the removable singularity.
    """
    co = rkc_coeffs(s, epsilon)
    e2 = 0.0
    e1 = co.mu[1]
    for j in range(2, s + 1):
        e1, e2 = co.nu[j] * e1 + co.kappa[j] * e2 + co.mu[j] * (1.0 + z * e1), e1
    return e1
