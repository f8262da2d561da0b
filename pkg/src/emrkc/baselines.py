"""Rush-Larsen reference integrators and the matrix-free CG solver.

IMEX-RL treats diffusion implicitly and EXEX-RL explicitly. Both relax the
gates exponentially with V frozen, then update any auxiliary ionic
variables and V with the new gate values.
"""
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import kernels
from .counters import EvalCounters
from .errors import CgNotConverged
from .ionic import HodgkinHuxley


@dataclass(frozen=True)
class CgConfig:
    rel_tol: float = 1e-8
    max_iters: Optional[int] = None
    preconditioner: str = "jacobi"

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be positive")
        if self.preconditioner not in ("none", "jacobi"):
            raise ValueError(f"unknown preconditioner {self.preconditioner!r}")

    def iteration_cap(self, n):
        return self.max_iters if self.max_iters is not None else max(10, int(10 * math.sqrt(n)))


def cg_solve(op, b, x0=None, cfg=CgConfig(), weights=None, diag=None):
    """Preconditioned CG for an operator self-adjoint in <u, v> = sum(weights*u*v).

    Convergence is declared when the Euclidean residual satisfies
    |b - op(x)| <= rel_tol |b|. Returns ``(x, iterations)``.
    """
    b = np.asarray(b, dtype=float)
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=float)
    q = np.ones_like(b) if weights is None else np.asarray(weights, dtype=float)
    inv_diag = 1.0 / diag if (cfg.preconditioner == "jacobi" and diag is not None) else None
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        return np.zeros_like(b), 0
    r = b - op(x)
    target = cfg.rel_tol * bnorm
    if np.linalg.norm(r) <= target:
        return x, 0
    z = r * inv_diag if inv_diag is not None else r
    p = z.copy()
    rz = float(np.dot(q * r, z))
    cap = cfg.iteration_cap(b.size)
    for it in range(1, cap + 1):
        ap = op(p)
        alpha = rz / float(np.dot(q * p, ap))
        x += alpha * p
        r -= alpha * ap
        if np.linalg.norm(r) <= target:
            return x, it
        z = r * inv_diag if inv_diag is not None else r
        rz_new = float(np.dot(q * r, z))
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise CgNotConverged(cap, float(np.linalg.norm(r)) / bnorm)


def _relax_gates(problem, y, dt):
    gl, gz = problem.model.lambda_zinf(problem.V(y))
    z = np.ascontiguousarray(problem.gates(y))
    out = np.empty_like(z)
    kernels.exp_relax(z, gl, gz, dt, out)
    return out


def _ionic_part(problem, t, y, dt):
    """Gate and auxiliary updates shared by both schemes, plus the ionic V increment."""
    V = problem.V(y)
    z_new = _relax_gates(problem, y, dt)
    aux = problem.aux(y)
    aux_new = aux + dt * problem.model.g_S(V, z_new, aux) if problem.n_aux else aux
    source = (problem.stimulus_current(t) - problem.model.i_ion(V, z_new, aux_new)) * problem.inv_cm
    return z_new, aux_new, source


def _assemble(problem, V, z, aux):
    out = np.empty(problem.size)
    out[: problem.n] = V
    out[problem.n:(1 + problem.n_gates) * problem.n] = z.ravel()
    if problem.n_aux:
        out[(1 + problem.n_gates) * problem.n:] = aux.ravel()
    return out


def implicit_diffusion_operator(problem, dt):
    """(op, diag) for I - dt*L, L the diffusion operator."""
    def op(v):
        return v - dt * problem.diffusion(v)
    shape = problem.grid.shape
    d = 1.0 + dt * sum(2.0 * w for w, n in zip(problem.weights, shape) if n > 1)
    return op, np.full(problem.n, d)


def imex_rl_step(t, y, dt, problem, cfg=CgConfig(), counters=None):
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    V = problem.V(y)
    z_new, aux_new, source = _ionic_part(problem, t, y, dt)
    op, diag = implicit_diffusion_operator(problem, dt)
    V_new, iters = cg_solve(op, V + dt * source, V, cfg, problem.grid.quadrature_weights(), diag)
    if counters is not None:
        counters.n_linsolves += 1
        counters.cg_iters_total += iters
    return _assemble(problem, V_new, z_new, aux_new)


def exex_rl_step(t, y, dt, problem, counters=None):
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    V = np.ascontiguousarray(problem.V(y))
    lap = problem.diffusion(V)
    if isinstance(problem.model, HodgkinHuxley):
        m = problem.model
        out = np.empty(problem.size)
        kernels.hh_exex_step(V, np.ascontiguousarray(problem.gates(y)), lap, problem.stimulus_current(t), dt,
                             problem.inv_cm, m.g_na, m.g_k, m.g_leak, m.e_na, m.e_k, m.e_leak,
                             out[: problem.n], out[problem.n:].reshape(3, problem.n))
        return out
    z_new, aux_new, source = _ionic_part(problem, t, y, dt)
    return _assemble(problem, V + dt * (lap + source), z_new, aux_new)
