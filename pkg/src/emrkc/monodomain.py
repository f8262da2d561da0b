"""Finite-difference monodomain model on axis-aligned structured grids.

The state is variable-major: all V values, then each gate over all nodes,
then any auxiliary variables. The right-hand side splits into

    f_F  diffusion of V (zero elsewhere)
    f_S  (I_stim - I_ion)/C_m on V and g_S on auxiliary variables
    f_E  lam(V)(z - z_inf(V)) on the gates
"""
import csv
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .multirate import SplitRhs


@dataclass(frozen=True)
class Grid:
    """Uniform node-centred grid; node counts are extent/spacing + 1 per axis."""

    extents: tuple
    spacing: tuple

    def __post_init__(self):
        ext = tuple(float(e) for e in np.atleast_1d(self.extents))
        sp = tuple(float(h) for h in np.atleast_1d(self.spacing))
        if len(sp) == 1 and len(ext) > 1:
            sp = sp * len(ext)
        if not 1 <= len(ext) <= 3 or len(sp) != len(ext):
            raise ValueError("grid needs 1 to 3 axes with one spacing per axis")
        for e, h in zip(ext, sp):
            if not (h > 0 and e >= 0):
                raise ValueError(f"invalid extent/spacing {e}/{h}")
            cells = e / h
            if abs(cells - round(cells)) > 1e-9 * max(1.0, cells):
                raise ValueError(f"extent {e} is not a multiple of spacing {h}")
        object.__setattr__(self, "extents", ext)
        object.__setattr__(self, "spacing", sp)

    @property
    def dim(self):
        return len(self.extents)

    @property
    def shape(self):
        return tuple(int(round(e / h)) + 1 for e, h in zip(self.extents, self.spacing))

    @property
    def n_nodes(self):
        return math.prod(self.shape)

    def axis_coordinates(self, axis):
        return np.arange(self.shape[axis]) * self.spacing[axis]

    def coordinates(self):
        """(n_nodes, dim) array in flat (C) node order."""
        mesh = np.meshgrid(*[self.axis_coordinates(a) for a in range(self.dim)], indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def quadrature_weights(self):
        """Trapezoidal weights: product of spacings, halved per boundary axis."""
        w = np.ones(self.shape)
        for a, n in enumerate(self.shape):
            axis_w = np.full(n, self.spacing[a])
            if n > 1:
                axis_w[0] *= 0.5
                axis_w[-1] *= 0.5
            shape = [1] * self.dim
            shape[a] = n
            w = w * axis_w.reshape(shape)
        return w.ravel()


def _harmonic(a, b):
    return a * b / (a + b)


@dataclass(frozen=True)
class Conductivity:
    """Intra/extracellular conductivities [mS/mm] per axis, chi [1/mm], C_m [uF/mm^2]."""

    sigma_i: tuple = (0.17, 0.019, 0.019)
    sigma_e: tuple = (0.62, 0.24, 0.24)
    chi: float = 140.0
    cm: float = 0.01

    def __post_init__(self):
        if min(self.sigma_i) <= 0 or min(self.sigma_e) <= 0 or self.chi <= 0 or self.cm <= 0:
            raise ValueError("conductivities, chi and C_m must be positive")
        if len(self.sigma_i) != len(self.sigma_e):
            raise ValueError("sigma_i and sigma_e need the same number of axes")

    @property
    def sigma(self):
        return tuple(_harmonic(a, b) for a, b in zip(self.sigma_i, self.sigma_e))

    def stencil_weights(self, grid):
        if len(self.sigma) < grid.dim:
            raise ValueError(f"conductivity given for {len(self.sigma)} axes, grid has {grid.dim}")
        return tuple(self.sigma[a] / (self.chi * self.cm * grid.spacing[a] ** 2) for a in range(grid.dim))


@dataclass(frozen=True)
class StimulusProtocol:
    """Amplitude stored as chi*I_stim [uA/mm^3], applied in a box over a time window."""

    amplitude: float = 50.0
    box: Sequence = ((0.0, 1.5),)
    t_start: float = 0.0
    t_end: float = 2.0

    def __post_init__(self):
        if self.amplitude < 0:
            raise ValueError("stimulus amplitude must be >= 0")
        if self.t_start > self.t_end:
            raise ValueError("stimulus window starts after it ends")
        object.__setattr__(self, "box", tuple(tuple(map(float, iv)) for iv in self.box))

    @classmethod
    def ball(cls, center, radius, **kw):
        """Sup-norm ball around ``center``."""
        return cls(box=[(c - radius, c + radius) for c in center], **kw)

    @classmethod
    def off(cls):
        return cls(amplitude=0.0)

    def mask(self, grid):
        """Boolean node mask; a single interval applies to every axis."""
        box = self.box if len(self.box) > 1 else self.box * grid.dim
        if len(box) < grid.dim:
            raise ValueError("stimulus box has fewer intervals than grid axes")
        x = grid.coordinates()
        tol = 1e-12
        inside = np.ones(grid.n_nodes, dtype=bool)
        for a in range(grid.dim):
            lo, hi = box[a]
            inside &= (x[:, a] >= lo - tol) & (x[:, a] <= hi + tol)
        return inside

    def active(self, t):
        return self.amplitude > 0 and self.t_start <= t <= self.t_end


def diffusion_apply(grid, conductivity, V, out=None):
    """Anisotropic FD diffusion divided by chi*C_m, zero-flux boundaries."""
    w = conductivity.stencil_weights(grid)
    V = np.ascontiguousarray(V, dtype=float)
    if V.size != grid.n_nodes:
        raise ValueError(f"field has {V.size} entries, grid has {grid.n_nodes} nodes")
    out = np.empty(grid.n_nodes) if out is None else out
    shaped = V.reshape(grid.shape)
    if grid.dim == 1:
        kernels.diffusion_1d(shaped, w[0], out)
    elif grid.dim == 2:
        kernels.diffusion_2d(shaped, w[0], w[1], out.reshape(grid.shape))
    else:
        kernels.diffusion_3d(shaped, w[0], w[1], w[2], out.reshape(grid.shape))
    return out


def analytic_rho_F(grid, conductivity):
    """Largest |eigenvalue| of the diffusion operator.

    With mirror ghosts the axis eigenvalues are -4w sin^2(k pi / (2(n-1))),
    k = 0..n-1, so the extreme one is exactly -4w.
    """
    w = conductivity.stencil_weights(grid)
    return sum(4.0 * w[a] for a, n in enumerate(grid.shape) if n > 1)


def rel_l2_error(a, b, grid):
    """Relative error in the trapezoid-weighted L2 norm."""
    q = grid.quadrature_weights()
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    denom = math.sqrt(float(np.sum(q * b * b)))
    if denom == 0:
        raise ZeroDivisionError("reference field has zero norm")
    d = a - b
    return math.sqrt(float(np.sum(q * d * d))) / denom


@dataclass
class MonodomainProblem:
    grid: Grid
    conductivity: Conductivity
    model: object
    stimulus: StimulusProtocol = field(default_factory=StimulusProtocol)
    stiff_gates: Optional[tuple] = None

    def __post_init__(self):
        self.weights = self.conductivity.stencil_weights(self.grid)
        self.n = self.grid.n_nodes
        spec = self.model.spec
        self.n_gates = spec.n_gates
        self.n_aux = spec.n_aux
        self.n_vars = spec.n_vars
        self.size = self.n_vars * self.n
        self.inv_cm = 1.0 / self.conductivity.cm
        if self.stiff_gates is None:
            self.stiff_gates = tuple(spec.stiff_gate_indices)
        self._stim_profile = np.where(self.stimulus.mask(self.grid),
                                      self.stimulus.amplitude / self.conductivity.chi, 0.0)
        self._no_stim = np.zeros(self.n)
        self._gate_slice = slice(self.n, (1 + self.n_gates) * self.n)

    # state access
    def V(self, y):
        return y[: self.n]

    def gates(self, y):
        return y[self._gate_slice].reshape(self.n_gates, self.n)

    def aux(self, y):
        return y[(1 + self.n_gates) * self.n:].reshape(self.n_aux, self.n)

    def check_state(self, y):
        if np.shape(y) != (self.size,):
            raise ValueError(f"state must have shape ({self.size},), got {np.shape(y)}")

    def pack(self, V, gates, aux=None):
        parts = [np.broadcast_to(V, (self.n,)), np.broadcast_to(np.asarray(gates).reshape(self.n_gates, -1),
                                                               (self.n_gates, self.n)).ravel()]
        if self.n_aux:
            parts.append(np.broadcast_to(np.asarray(aux).reshape(self.n_aux, -1), (self.n_aux, self.n)).ravel())
        return np.concatenate(parts).astype(float)

    def initial_state(self):
        v0, ze, zs = self.model.resting_state()
        return self.pack(v0, ze[:, None], zs[:, None] if self.n_aux else None)

    def stimulus_current(self, t):
        """I_stim per node [uA/mm^2] at time t."""
        return self._stim_profile if self.stimulus.active(t) else self._no_stim

    # split right-hand side
    def diffusion(self, V, out=None):
        return diffusion_apply(self.grid, self.conductivity, V, out)

    def f_F(self, t, y):
        out = np.zeros(self.size)
        self.diffusion(self.V(y), out[: self.n])
        return out

    def f_S(self, t, y):
        out = np.zeros(self.size)
        V, z = self.V(y), self.gates(y)
        out[: self.n] = (self.stimulus_current(t) - self.model.i_ion(V, z, self.aux(y))) * self.inv_cm
        if self.n_aux:
            out[(1 + self.n_gates) * self.n:] = self.model.g_S(V, z, self.aux(y)).ravel()
        return out

    def lam_yinf(self, y):
        lam = np.zeros(self.size)
        yinf = np.array(y, dtype=float)
        gl, gz = self.model.lambda_zinf(self.V(y))
        lam[self._gate_slice] = gl.ravel()
        yinf[self._gate_slice] = gz.ravel()
        return lam, yinf

    def lam(self, y):
        return self.lam_yinf(y)[0]

    def y_inf(self, y):
        return self.lam_yinf(y)[1]

    def f_E(self, t, y, gates=None):
        """Gating term, optionally restricted to a subset of gate indices."""
        out = np.zeros(self.size)
        gl, gz = self.model.lambda_zinf(self.V(y))
        z = self.gates(y)
        block = out[self._gate_slice].reshape(self.n_gates, self.n)
        rows = range(self.n_gates) if gates is None else gates
        for k in rows:
            block[k] = gl[k] * (z[k] - gz[k])
        return out

    def exp_step(self, y, eta):
        """Exponential Euler on the gates with V frozen; other blocks copied."""
        out = np.array(y, dtype=float)
        gl, gz = self.model.lambda_zinf(self.V(y))
        z = np.ascontiguousarray(self.gates(y))
        kernels.exp_relax(z, gl, gz, eta, out[self._gate_slice].reshape(self.n_gates, self.n))
        return out

    def rhs(self, t, y):
        """Monolithic right-hand side written from the unsplit equations."""
        out = np.empty(self.size)
        V, z = self.V(y), self.gates(y)
        out[: self.n] = self.diffusion(V) + (self.stimulus_current(t) - self.model.i_ion(V, z)) / self.conductivity.cm
        out[self._gate_slice] = self.model.gate_rhs(V, z).ravel()
        if self.n_aux:
            out[(1 + self.n_gates) * self.n:] = self.model.g_S(V, z, self.aux(y)).ravel()
        return out

    # splittings used by the integrators
    def emrkc_split(self, rho_F=0.0, rho_S=0.0):
        return SplitRhs(self.f_F, self.f_S, rho_F, rho_S, lam=self.lam, y_inf=self.y_inf, exp_step=self.exp_step)

    def mrkc_fast(self, t, y):
        return self.f_F(t, y) + self.f_E(t, y, self.stiff_gates)

    def mrkc_slow(self, t, y):
        rest = [k for k in range(self.n_gates) if k not in self.stiff_gates]
        return self.f_S(t, y) + self.f_E(t, y, rest)

    def mrkc_split(self, rho_F=0.0, rho_S=0.0):
        return SplitRhs(self.mrkc_fast, self.mrkc_slow, rho_F, rho_S)


def build_problem(grid, conductivity, model, stimulus=None, stiff_gates=None):
    if len(conductivity.sigma) < grid.dim:
        raise ValueError("conductivity has fewer axes than the grid")
    return MonodomainProblem(grid, conductivity, model, stimulus or StimulusProtocol(), stiff_gates)


def write_snapshot_csv(path, problem, y, t=None):
    """Columns: node, x[, y, z], V, then one column per gate and aux variable."""
    coords = problem.grid.coordinates()
    axes = ("x", "y", "z")[: problem.grid.dim]
    names = problem.model.spec.names[1:]
    V = problem.V(y)
    z = problem.gates(y)
    a = problem.aux(y)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["node", *axes, "V", *names])
        for i in range(problem.n):
            row = [i, *(repr(float(c)) for c in coords[i]), repr(float(V[i]))]
            row += [repr(float(z[k, i])) for k in range(problem.n_gates)]
            row += [repr(float(a[k, i])) for k in range(problem.n_aux)]
            w.writerow(row)
