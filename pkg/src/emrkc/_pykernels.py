"""Pure numpy implementations of the hot kernels.

Every function writes into a caller-owned ``out`` array and mirrors the
signature of the compiled ``_ckernels`` module, so the two are drop-in
replacements for each other.
"""
import numpy as np


def rkc_combine(out, g1, kappa, g2, mu_dt, f):
    """out = g1 + kappa*(g2 - g1) + mu_dt*f, i.e. nu*g1 + kappa*g2 + mu_dt*f with nu = 1 - kappa."""
    np.subtract(g2, g1, out=out)
    out *= kappa
    out += g1
    out += mu_dt * f
    return out


def axpy(out, y, a, x):
    """out = y + a*x."""
    np.multiply(x, a, out=out)
    out += y
    return out


def diffusion_1d(v, w, out):
    n = v.shape[0]
    if n == 1:
        out[0] = 0.0
        return out
    out[1:-1] = w * ((v[:-2] - 2.0 * v[1:-1]) + v[2:])
    out[0] = w * ((v[1] - 2.0 * v[0]) + v[1])
    out[-1] = w * ((v[-2] - 2.0 * v[-1]) + v[-2])
    return out


def _axis_second_difference(v, axis, w):
    # mirror ghost nodes: v[-1] := v[1], v[n] := v[n-2]
    n = v.shape[axis]
    if n == 1:
        return np.zeros_like(v)
    lo = np.concatenate([np.take(v, [1], axis=axis), np.take(v, range(n - 1), axis=axis)], axis=axis)
    hi = np.concatenate([np.take(v, range(1, n), axis=axis), np.take(v, [n - 2], axis=axis)], axis=axis)
    return w * ((lo - 2.0 * v) + hi)


def diffusion_2d(v, wx, wy, out):
    out[...] = _axis_second_difference(v, 0, wx)
    out += _axis_second_difference(v, 1, wy)
    return out


def diffusion_3d(v, wx, wy, wz, out):
    out[...] = _axis_second_difference(v, 0, wx)
    out += _axis_second_difference(v, 1, wy)
    out += _axis_second_difference(v, 2, wz)
    return out


def _x_over_expm1(x):
    # 0.1*x / (1 - exp(-x/10)) with the removable singularity at x = 0
    u = x / 10.0
    small = np.abs(x) < 1e-4
    safe_u = np.where(small, 1.0, u)
    exact = safe_u / -np.expm1(-safe_u)
    series = 1.0 + u / 2.0 + u * u / 12.0
    return np.where(small, series, exact)


def hh_rates(V, alpha, beta):
    """Fill alpha/beta (shape (3, N), gate order m, h, n) from V."""
    alpha[0] = _x_over_expm1(V + 40.0)
    beta[0] = 4.0 * np.exp(-(V + 65.0) / 18.0)
    alpha[1] = 0.07 * np.exp(-(V + 65.0) / 20.0)
    beta[1] = 1.0 / (1.0 + np.exp(-(V + 35.0) / 10.0))
    alpha[2] = 0.1 * _x_over_expm1(V + 55.0)
    beta[2] = 0.125 * np.exp(-(V + 65.0) / 80.0)
    return alpha, beta


def hh_lambda_zinf(V, lam, zinf):
    """Fill lam = -(alpha+beta) and zinf = alpha/(alpha+beta)."""
    alpha = np.empty_like(lam)
    beta = np.empty_like(lam)
    hh_rates(V, alpha, beta)
    total = alpha + beta
    np.negative(total, out=lam)
    np.divide(alpha, total, out=zinf)
    return lam, zinf


def hh_current(V, m, h, n, g_na, g_k, g_leak, e_na, e_k, e_leak, out):
    m3h = m * m * m * h
    n2 = n * n
    out[...] = g_na * m3h * (V - e_na) + g_k * (n2 * n2) * (V - e_k) + g_leak * (V - e_leak)
    return out


def exp_relax(z, lam, zinf, eta, out):
    """out = z + expm1(eta*lam) * (z - zinf), elementwise."""
    np.subtract(z, zinf, out=out)
    out *= np.expm1(eta * lam)
    out += z
    return out


def hh_exex_step(V, gates, lap_V, stim, dt, inv_cm, g_na, g_k, g_leak, e_na, e_k, e_leak, out_V, out_gates):
    """One EXEX-RL step for HH given the precomputed diffusion term ``lap_V``."""
    lam = np.empty_like(gates)
    zinf = np.empty_like(gates)
    hh_lambda_zinf(V, lam, zinf)
    exp_relax(gates, lam, zinf, dt, out_gates)
    iion = np.empty_like(V)
    hh_current(V, out_gates[0], out_gates[1], out_gates[2], g_na, g_k, g_leak, e_na, e_k, e_leak, iion)
    out_V[...] = V + dt * (lap_V + (stim - iion) * inv_cm)
    return out_V, out_gates
