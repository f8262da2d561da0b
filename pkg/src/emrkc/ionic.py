"""Ionic models in gating form, with Hodgkin-Huxley as the concrete instance.

Gates obey z' = alpha(V)(1 - z) - beta(V) z, rewritten as
z' = lam(V) (z - z_inf(V)) with lam = -(alpha + beta) <= 0 and
z_inf = alpha / (alpha + beta). Units: mV, ms, mS/mm^2, uA/mm^2.
"""
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.optimize import brentq

from . import kernels


@dataclass(frozen=True)
class IonicModelSpec:
    n_gates: int
    n_aux: int
    names: tuple
    stiff_gate_indices: tuple = ()

    def __post_init__(self):
        if len(self.names) != 1 + self.n_gates + self.n_aux:
            raise ValueError("names must label V, every gate and every auxiliary variable")
        if not set(self.stiff_gate_indices) <= set(range(self.n_gates)):
            raise ValueError("stiff gate indices must refer to gates")

    @property
    def n_vars(self):
        return 1 + self.n_gates + self.n_aux


@dataclass(frozen=True)
class GateKinetics:
    """Rate pair of one gate; ``alpha`` and ``beta`` map V [mV] to 1/ms."""

    name: str
    alpha: object
    beta: object

    def lam(self, V):
        return -(self.alpha(V) + self.beta(V))

    def z_inf(self, V):
        a = self.alpha(V)
        return a / (a + self.beta(V))


def _vec(V):
    return np.ascontiguousarray(np.atleast_1d(np.asarray(V, dtype=float)))


def hh_rates(V):
    """Return ``(alpha, beta)``, each of shape (3, N) in gate order m, h, n."""
    V = _vec(V)
    alpha = np.empty((3, V.size))
    beta = np.empty((3, V.size))
    kernels.hh_rates(V, alpha, beta)
    return alpha, beta


def _single_gate(k, which):
    def rate(V):
        a, b = hh_rates(V)
        out = (a if which == "alpha" else b)[k]
        return out if np.ndim(V) else float(out[0])
    return rate


class HodgkinHuxley:
    """Classical squid-axon model scaled to per-mm^2 units (C_m = 0.01 uF/mm^2)."""

    spec = IonicModelSpec(n_gates=3, n_aux=0, names=("V", "m", "h", "n"), stiff_gate_indices=(0,))
    g_na = 1.2
    g_k = 0.36
    g_leak = 0.003
    e_na = 50.0
    e_k = -77.0
    e_leak = -54.387

    gates = tuple(GateKinetics(name, _single_gate(k, "alpha"), _single_gate(k, "beta"))
                  for k, name in enumerate(("m", "h", "n")))

    def rates(self, V):
        return hh_rates(V)

    def lambda_zinf(self, V):
        V = _vec(V)
        lam = np.empty((3, V.size))
        zinf = np.empty((3, V.size))
        kernels.hh_lambda_zinf(V, lam, zinf)
        return lam, zinf

    def gate_rhs(self, V, z_e):
        """alpha (1 - z) - beta z, the unrewritten gate equations."""
        a, b = hh_rates(V)
        return a * (1.0 - z_e) - b * z_e

    def i_ion(self, V, z_e, z_s=None):
        V = _vec(V)
        z_e = np.asarray(z_e, dtype=float).reshape(3, V.size)
        out = np.empty(V.size)
        kernels.hh_current(V, np.ascontiguousarray(z_e[0]), np.ascontiguousarray(z_e[1]),
                           np.ascontiguousarray(z_e[2]), self.g_na, self.g_k, self.g_leak,
                           self.e_na, self.e_k, self.e_leak, out)
        return out

    def g_S(self, V, z_e, z_s):
        return np.empty((0, np.size(V)))

    def steady_current(self, V):
        """Membrane current with every gate at its steady state."""
        _, zinf = self.lambda_zinf(V)
        return float(self.i_ion(V, zinf)[0])

    @cached_property
    def _rest(self):
        v0 = brentq(self.steady_current, -75.0, -60.0, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=200)
        _, zinf = self.lambda_zinf(v0)
        return v0, zinf[:, 0].copy(), np.empty(0)

    def resting_state(self):
        """``(V0, z_E0, z_S0)`` with V0 the zero of the steady-state current near -65 mV."""
        v0, ze, zs = self._rest
        return v0, ze.copy(), zs.copy()


_MODELS = {"hh": HodgkinHuxley}


def get_model(name):
    try:
        return _MODELS[name.lower()]()
    except KeyError:
        raise ValueError(f"unknown ionic model {name!r}; known: {sorted(_MODELS)}") from None


def identify_stiff_gates(model, trajectory):
    """Gate indices sorted by decreasing max |lam| over a trajectory.

    ``trajectory`` is an iterable of ``(t, state)`` with variable-major states.
    Lambda is diagonal, so the maxima are exact rather than estimated.
    """
    n_vars = model.spec.n_vars
    worst = np.zeros(model.spec.n_gates)
    seen = False
    for _, y in trajectory:
        V = np.asarray(y, dtype=float).reshape(n_vars, -1)[0]
        lam, _ = model.lambda_zinf(V)
        worst = np.maximum(worst, np.abs(lam).max(axis=1))
        seen = True
    if not seen:
        raise ValueError("trajectory is empty")
    return [int(k) for k in np.argsort(-worst, kind="stable")]
