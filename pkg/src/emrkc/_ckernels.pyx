# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels. Same signatures and arithmetic order as ``_pykernels``."""
from libc.math cimport exp, expm1, fabs


def rkc_combine(double[::1] out, const double[::1] g1, double kappa,
                const double[::1] g2, double mu_dt, const double[::1] f):
    cdef Py_ssize_t i, n = out.shape[0]
    with nogil:
        for i in range(n):
            out[i] = (g1[i] + (g2[i] - g1[i]) * kappa) + mu_dt * f[i]
    return out.base


def axpy(double[::1] out, const double[::1] y, double a, const double[::1] x):
    cdef Py_ssize_t i, n = out.shape[0]
    with nogil:
        for i in range(n):
            out[i] = x[i] * a + y[i]
    return out.base


def diffusion_1d(const double[::1] v, double w, double[::1] out):
    cdef Py_ssize_t i, n = v.shape[0]
    with nogil:
        if n == 1:
            out[0] = 0.0
        else:
            out[0] = w * ((v[1] - 2.0 * v[0]) + v[1])
            for i in range(1, n - 1):
                out[i] = w * ((v[i - 1] - 2.0 * v[i]) + v[i + 1])
            out[n - 1] = w * ((v[n - 2] - 2.0 * v[n - 1]) + v[n - 2])
    return out.base


cdef inline double _second_diff(double lo, double c, double hi, double w) noexcept nogil:
    return w * ((lo - 2.0 * c) + hi)


cdef inline Py_ssize_t _lo(Py_ssize_t i, Py_ssize_t n) noexcept nogil:
    return 1 if i == 0 else i - 1


cdef inline Py_ssize_t _hi(Py_ssize_t i, Py_ssize_t n) noexcept nogil:
    return n - 2 if i == n - 1 else i + 1


def diffusion_2d(const double[:, ::1] v, double wx, double wy, double[:, ::1] out):
    cdef Py_ssize_t i, j, nx = v.shape[0], ny = v.shape[1]
    cdef double ax, ay
    with nogil:
        for i in range(nx):
            for j in range(ny):
                ax = 0.0 if nx == 1 else _second_diff(v[_lo(i, nx), j], v[i, j], v[_hi(i, nx), j], wx)
                ay = 0.0 if ny == 1 else _second_diff(v[i, _lo(j, ny)], v[i, j], v[i, _hi(j, ny)], wy)
                out[i, j] = ax + ay
    return out.base


def diffusion_3d(const double[:, :, ::1] v, double wx, double wy, double wz, double[:, :, ::1] out):
    cdef Py_ssize_t i, j, k
    cdef Py_ssize_t nx = v.shape[0], ny = v.shape[1], nz = v.shape[2]
    cdef double ax, ay, az
    with nogil:
        for i in range(nx):
            for j in range(ny):
                for k in range(nz):
                    ax = 0.0 if nx == 1 else _second_diff(v[_lo(i, nx), j, k], v[i, j, k], v[_hi(i, nx), j, k], wx)
                    ay = 0.0 if ny == 1 else _second_diff(v[i, _lo(j, ny), k], v[i, j, k], v[i, _hi(j, ny), k], wy)
                    az = 0.0 if nz == 1 else _second_diff(v[i, j, _lo(k, nz)], v[i, j, k], v[i, j, _hi(k, nz)], wz)
                    out[i, j, k] = (ax + ay) + az
    return out.base


cdef inline double _x_over_expm1(double x) noexcept nogil:
    cdef double u = x / 10.0
    if fabs(x) < 1e-4:
        return 1.0 + u / 2.0 + u * u / 12.0
    return u / -expm1(-u)


cdef inline void _rates(double V, double* a, double* b) noexcept nogil:
    a[0] = _x_over_expm1(V + 40.0)
    b[0] = 4.0 * exp(-(V + 65.0) / 18.0)
    a[1] = 0.07 * exp(-(V + 65.0) / 20.0)
    b[1] = 1.0 / (1.0 + exp(-(V + 35.0) / 10.0))
    a[2] = 0.1 * _x_over_expm1(V + 55.0)
    b[2] = 0.125 * exp(-(V + 65.0) / 80.0)


def hh_rates(const double[::1] V, double[:, ::1] alpha, double[:, ::1] beta):
    cdef Py_ssize_t i, g, n = V.shape[0]
    cdef double a[3]
    cdef double b[3]
    with nogil:
        for i in range(n):
            _rates(V[i], a, b)
            for g in range(3):
                alpha[g, i] = a[g]
                beta[g, i] = b[g]
    return alpha.base, beta.base


def hh_lambda_zinf(const double[::1] V, double[:, ::1] lam, double[:, ::1] zinf):
    cdef Py_ssize_t i, g, n = V.shape[0]
    cdef double a[3]
    cdef double b[3]
    cdef double total
    with nogil:
        for i in range(n):
            _rates(V[i], a, b)
            for g in range(3):
                total = a[g] + b[g]
                lam[g, i] = -total
                zinf[g, i] = a[g] / total
    return lam.base, zinf.base


def hh_current(const double[::1] V, const double[::1] m, const double[::1] h, const double[::1] n,
               double g_na, double g_k, double g_leak, double e_na, double e_k, double e_leak,
               double[::1] out):
    cdef Py_ssize_t i, size = V.shape[0]
    cdef double m3h, n2
    with nogil:
        for i in range(size):
            m3h = m[i] * m[i] * m[i] * h[i]
            n2 = n[i] * n[i]
            out[i] = (g_na * m3h * (V[i] - e_na) + g_k * (n2 * n2) * (V[i] - e_k)) + g_leak * (V[i] - e_leak)
    return out.base


def exp_relax(const double[:, ::1] z, const double[:, ::1] lam, const double[:, ::1] zinf,
              double eta, double[:, ::1] out):
    cdef Py_ssize_t g, i, ng = z.shape[0], n = z.shape[1]
    with nogil:
        for g in range(ng):
            for i in range(n):
                out[g, i] = (z[g, i] - zinf[g, i]) * expm1(eta * lam[g, i]) + z[g, i]
    return out.base


def hh_exex_step(const double[::1] V, const double[:, ::1] gates, const double[::1] lap_V,
                 const double[::1] stim, double dt, double inv_cm,
                 double g_na, double g_k, double g_leak, double e_na, double e_k, double e_leak,
                 double[::1] out_V, double[:, ::1] out_gates):
    cdef Py_ssize_t i, g, n = V.shape[0]
    cdef double a[3]
    cdef double b[3]
    cdef double total, zi, m, h, nn, m3h, n2, iion
    with nogil:
        for i in range(n):
            _rates(V[i], a, b)
            for g in range(3):
                total = a[g] + b[g]
                zi = a[g] / total
                out_gates[g, i] = (gates[g, i] - zi) * expm1(dt * (-total)) + gates[g, i]
            m = out_gates[0, i]
            h = out_gates[1, i]
            nn = out_gates[2, i]
            m3h = m * m * m * h
            n2 = nn * nn
            iion = (g_na * m3h * (V[i] - e_na) + g_k * (n2 * n2) * (V[i] - e_k)) + g_leak * (V[i] - e_leak)
            out_V[i] = V[i] + dt * (lap_V[i] + (stim[i] - iion) * inv_cm)
    return out_V.base, out_gates.base
