"""Multirate RKC (mRKC) and exponential multirate RKC (emRKC) steppers.

Both integrate y' = f_F(y) + f_S(y) [+ f_E(y)] by an outer s-stage RKC
iteration on an averaged force, each evaluation of which runs an inner
m-stage RKC iteration over a short span eta with the slow term frozen.
emRKC additionally advances the diagonal term f_E = Lambda(y)(y - y_inf(y))
with one exponential Euler step per averaged-force evaluation.
"""
import math
import os
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .cheb import DEFAULT_EPSILON, get_stages, rkc_iteration
from .counters import EvalCounters
from .errors import NonFiniteStageError, NumericalAbort

DEBUG = bool(os.environ.get("EMRKC_DEBUG"))

STANDARD = "standard"
PROGRESSIVE = "progressive"


def phi(z):
    """(e^z - 1)/z, with phi(0) = 1. Accepts scalars or arrays."""
    if np.ndim(z) == 0:
        z = float(z)
        if abs(z) < 1e-5:
            return 1.0 + z / 2.0 + z * z / 6.0 + z ** 3 / 24.0
        return math.expm1(z) / z
    z = np.asarray(z, dtype=float)
    small = np.abs(z) < 1e-5
    safe = np.where(small, 1.0, z)
    return np.where(small, 1.0 + z / 2.0 + z * z / 6.0 + z ** 3 / 24.0, np.expm1(safe) / safe)


def exponential_euler_step(y, eta, lambda_diag, y_inf):
    """y + (exp(eta*Lambda) - 1)(y - y_inf) for diagonal Lambda <= 0.

    This equals y + eta*phi(eta*Lambda)*Lambda*(y - y_inf) but stays accurate
    when eta*Lambda is tiny. Components with Lambda = 0 are returned unchanged.
    """
    if DEBUG and np.any(np.asarray(lambda_diag) > 0):
        raise ValueError("positive diagonal entry in Lambda; the gating model is inconsistent")
    if np.ndim(y) == 0:
        return y + math.expm1(eta * lambda_diag) * (y - y_inf)
    return y + np.expm1(eta * np.asarray(lambda_diag)) * (y - y_inf)


@dataclass
class SplitRhs:
    """Right-hand side split into fast, slow and (optionally) diagonal parts.

    ``f_F`` and ``f_S`` are callbacks ``(t, y) -> array``. ``lam`` and
    ``y_inf`` are callbacks ``y -> array`` defining f_E = lam(y)*(y - y_inf(y)).
    ``exp_step(y, eta)`` may replace the generic exponential Euler step with a
    fused implementation.
    """

    f_F: Callable
    f_S: Callable
    rho_F: float = 0.0
    rho_S: float = 0.0
    lam: Optional[Callable] = None
    y_inf: Optional[Callable] = None
    exp_step: Optional[Callable] = None

    def __post_init__(self):
        if self.rho_F < 0 or self.rho_S < 0:
            raise ValueError("spectral radii must be non-negative")

    @property
    def has_exp_part(self):
        return self.exp_step is not None or self.lam is not None

    def exponential_euler(self, y, eta):
        if self.exp_step is not None:
            return self.exp_step(y, eta)
        return exponential_euler_step(y, eta, self.lam(y), self.y_inf(y))

    def f_E(self, t, y):
        return self.lam(y) * (y - self.y_inf(y))


@dataclass
class MultirateStepReport:
    s: int
    m: int
    eta: float
    ell_s: float
    ell_m: float
    counters: EvalCounters


def _plan(dt, rhs, epsilon):
    outer = get_stages(dt, rhs.rho_S, epsilon)
    eta = 2.0 * dt / outer.ell_s
    inner = get_stages(eta, rhs.rho_F, epsilon)
    return outer, eta, inner


def _inner(t, y, eta, f, m, epsilon):
    try:
        return rkc_iteration(t, y, eta, f, m, epsilon)
    except NonFiniteStageError as exc:
        raise NonFiniteStageError(exc.stage, "inner") from exc


def averaged_force_mrkc(t, y, eta, rhs, m, epsilon=DEFAULT_EPSILON, counters=None):
    """(u_eta - y)/eta where u' = f_F(r, u) + f_S(t, y), u(0) = y."""
    counters = counters if counters is not None else EvalCounters()
    slow = rhs.f_S(t, y)
    counters.n_fS += 1

    def f_u(r, u):
        counters.n_fF += 1
        return rhs.f_F(r, u) + slow

    u = _inner(t, y, eta, f_u, m, epsilon)
    return (u - y) / eta


def averaged_force_emrkc(t, y, eta, rhs, m, epsilon=DEFAULT_EPSILON, variant=STANDARD, counters=None):
    """Averaged force of the split auxiliary problem.

    standard: y_E = expEuler(y, eta); u' = f_F(u) + f_S(y_E), u(0) = y_E.
    progressive: u' = f_F(u) + f_S(y_E) + (y_E - y)/eta, u(0) = y, so the
    exponential increment is added along the inner integration.
    """
    if not rhs.has_exp_part:
        raise ValueError("emRKC needs the diagonal part (lam, y_inf) of the right-hand side")
    counters = counters if counters is not None else EvalCounters()
    y_e = rhs.exponential_euler(y, eta)
    counters.n_exp_steps += 1
    slow = rhs.f_S(t, y_e)
    counters.n_fS += 1

    if variant == STANDARD:
        start = y_e
    elif variant == PROGRESSIVE:
        start = y
        slow = slow + (y_e - y) / eta
    else:
        raise ValueError(f"unknown emRKC variant {variant!r}")

    def f_u(r, u):
        counters.n_fF += 1
        return rhs.f_F(r, u) + slow

    u = _inner(t, start, eta, f_u, m, epsilon)
    return (u - y) / eta


def mrkc_step(t, y, dt, rhs, epsilon=DEFAULT_EPSILON):
    """One mRKC step. Returns ``(y_new, MultirateStepReport)``."""
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    outer, eta, inner = _plan(dt, rhs, epsilon)
    counters = EvalCounters()

    def force(r, v):
        return averaged_force_mrkc(r, v, eta, rhs, inner.s, epsilon, counters)

    return _run_outer(t, y, dt, force, outer, eta, inner, counters, epsilon)


def emrkc_step(t, y, dt, rhs, epsilon=DEFAULT_EPSILON, variant=STANDARD):
    """One emRKC step. Returns ``(y_new, MultirateStepReport)``."""
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    outer, eta, inner = _plan(dt, rhs, epsilon)
    counters = EvalCounters()

    def force(r, v):
        return averaged_force_emrkc(r, v, eta, rhs, inner.s, epsilon, variant, counters)

    return _run_outer(t, y, dt, force, outer, eta, inner, counters, epsilon)


def _run_outer(t, y, dt, force, outer, eta, inner, counters, epsilon):
    try:
        y_new = rkc_iteration(t, y, dt, force, outer.s, epsilon)
    except NonFiniteStageError as exc:
        where = "inner stage" if exc.where == "inner" else "outer stage"
        raise NumericalAbort(f"non-finite state in {where} {exc.stage} at t={t}, dt={dt}",
                             t=t, dt=dt, stage=exc.stage) from exc
    return y_new, MultirateStepReport(outer.s, inner.s, eta, outer.ell_s, inner.ell_s, counters)


def rkc_step(t, y, dt, f, rho, epsilon=DEFAULT_EPSILON):
    """Plain single-rate RKC step on f = f_F + f_S + f_E. Returns ``(y_new, s)``."""
    plan = get_stages(dt, rho, epsilon)
    try:
        return rkc_iteration(t, y, dt, f, plan.s, epsilon), plan.s
    except NonFiniteStageError as exc:
        raise NumericalAbort(f"non-finite state in stage {exc.stage} at t={t}, dt={dt}",
                             t=t, dt=dt, stage=exc.stage) from exc
