"""Closed-form amplification factors of mRKC/emRKC on scalar test equations.

For y' = (lambda_F + lambda_S + lambda_E) y, one mRKC/emRKC step multiplies
y by

    R = P_s(dt * [Phi_m(eta*lambda_F)(lambda_F + lambda_S) e^{eta*lambda_E}
                  + phi(eta*lambda_E) lambda_E])

where P_s is the outer RKC stability polynomial and Phi_m(z) = (P_m(z)-1)/z.
Polynomials are evaluated through T_s(cos a) = cos(s a) and
T_s(cosh a) = cosh(s a), sharing nothing with the three-term recurrences the
steppers run, so the two can be checked against each other.
"""
import csv
import itertools
import math
from dataclasses import dataclass, field

from .cheb import DEFAULT_EPSILON, get_stages

HYPOTHESIS_A = "A"
HYPOTHESIS_B = "B"

SWEEP_COLUMNS = ("lambda_F", "lambda_S", "lambda_E", "dt", "s", "m", "eta", "R", "stable")


@dataclass(frozen=True)
class TestEqParams:
    lambda_F: float
    lambda_S: float
    lambda_E: float = 0.0
    dt: float = 1.0
    epsilon: float = DEFAULT_EPSILON

    __test__ = False  # not a pytest class

    def __post_init__(self):
        for name in ("lambda_F", "lambda_S", "lambda_E"):
            value = getattr(self, name)
            if not math.isfinite(value) or value > 0:
                raise ValueError(f"{name} must be finite and <= 0, got {value}")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")


@dataclass
class StabilityVerdict:
    s: int
    m: int
    eta: float
    ell_s: float
    ell_m: float
    R: float
    averaged_coefficient: float
    condition_checks: dict = field(default_factory=dict)

    @property
    def stable(self):
        return abs(self.R) <= 1.0 + 1e-12

    @property
    def rho_eta(self):
        """|d fbar/dy|, the stiffness the outer iteration sees."""
        return abs(self.averaged_coefficient)


def _acosh1p(d):
    """acosh(1 + d) for d >= 0 without forming 1 + d."""
    return math.log1p(d + math.sqrt(d * (d + 2.0)))


def _cheb_trig(s, d):
    """T_s(1 + d) through cos/cosh of s times the angle; d is the offset from 1."""
    if d >= 0.0:
        return math.cosh(s * _acosh1p(d))
    if d >= -2.0:
        # x = 1 + d in [-1, 1); acos(1 - u) = 2 asin(sqrt(u/2))
        return math.cos(s * 2.0 * math.asin(math.sqrt(-d / 2.0)))
    value = math.cosh(s * _acosh1p(-d - 2.0))
    return -value if s % 2 else value


def _omegas(s, epsilon):
    """(w0 - 1, w1, T_s(w0)) from theta = acosh(w0).

    w0 is rounded to double first, as any stepper has to store it; with
    epsilon/s^2 near 1e-6 that rounding alone moves the polynomial by more
    than the tolerances the comparisons use.
    """
    d0 = (1.0 + epsilon / (s * s)) - 1.0
    theta = _acosh1p(d0)
    if theta == 0.0:
        return d0, 1.0 / (s * s), 1.0
    w1 = math.sinh(theta) / (s * math.tanh(s * theta))
    return d0, w1, math.cosh(s * theta)


def rkc_polynomial(s, z, epsilon=DEFAULT_EPSILON):
    """P_s(z) = T_s(w0 + w1 z) / T_s(w0)."""
    d0, w1, ts = _omegas(s, epsilon)
    return _cheb_trig(s, d0 + w1 * z) / ts


def rkc_polynomial_phi(s, z, epsilon=DEFAULT_EPSILON):
    """(P_s(z) - 1)/z without the cancellation of the quotient for small z.

    For |z| <= 1 the difference T_s(w0 + w1 z) - T_s(w0) is expanded in the
    exact Taylor series of T_s about 1 (offsets a = w0 + w1 z - 1, b = w0 - 1),
    so z divides out analytically. Both offsets are O(1/s^2) there, which
    keeps the series free of cancellation.
    """
    if abs(z) > 1.0:
        return (rkc_polynomial(s, z, epsilon) - 1.0) / z
    d0, w1, _ = _omegas(s, epsilon)
    a = d0 + w1 * z
    b = d0
    n2 = float(s * s)
    c = 1.0          # Taylor coefficient T_s^{(k)}(1)/k!
    q = 0.0          # (a^k - b^k)/(a - b)
    bk = 1.0         # b^(k-1)
    ts = 1.0
    diff = 0.0
    for k in range(1, s + 1):
        c *= (n2 - (k - 1) ** 2) / ((2 * k - 1) * k)
        q = a * q + bk
        bk *= b
        ts += c * bk
        diff += c * q
    return w1 * diff / ts


def exp_phi(z):
    if abs(z) < 1e-5:
        return 1.0 + z / 2.0 + z * z / 6.0 + z ** 3 / 24.0
    return math.expm1(z) / z


def _plan(p):
    outer = get_stages(p.dt, -p.lambda_S, p.epsilon)
    eta = 2.0 * p.dt / outer.ell_s
    inner = get_stages(eta, -p.lambda_F, p.epsilon)
    return outer, eta, inner


def _verdict(p, include_exp):
    outer, eta, inner = _plan(p)
    phi_m = rkc_polynomial_phi(inner.s, eta * p.lambda_F, p.epsilon)
    mrkc_part = phi_m * (p.lambda_F + p.lambda_S)
    coeff = mrkc_part
    if include_exp:
        coeff = mrkc_part * math.exp(eta * p.lambda_E) + exp_phi(eta * p.lambda_E) * p.lambda_E
    R = rkc_polynomial(outer.s, p.dt * coeff, p.epsilon)
    checks = check_conditions(outer.s, inner.s, eta, p.dt, -p.lambda_F, -p.lambda_S, HYPOTHESIS_B, p.epsilon)
    checks["mrkc_bracket"] = -outer.ell_s <= p.dt * mrkc_part <= 0.0
    checks["averaged_bracket"] = -outer.ell_s <= p.dt * coeff <= 0.0
    return StabilityVerdict(outer.s, inner.s, eta, outer.ell_s, inner.ell_s, R, coeff, checks)


def amplification_mrkc(p):
    if p.lambda_E != 0:
        raise ValueError("the mRKC test equation has lambda_E = 0")
    return _verdict(p, include_exp=False)


def amplification_emrkc(p):
    return _verdict(p, include_exp=True)


def amplification_imex_rl(p):
    """e^{dt lambda_E} (1 + dt lambda_S) / (1 - dt lambda_F): exponential gating,
    explicit slow term, implicit fast term."""
    return math.exp(p.dt * p.lambda_E) * (1.0 + p.dt * p.lambda_S) / (1.0 - p.dt * p.lambda_F)


def check_conditions(s, m, eta, dt, rho_F, rho_S, hypothesis=HYPOTHESIS_B, epsilon=DEFAULT_EPSILON):
    """Evaluate the stage/eta conditions of hypothesis A or B.

    ``separation`` records whether the fast term is at least four times
    stiffer than the slow one (|lambda_F| >= 4|lambda_S|), the scale
    separation hypothesis B presumes.
    """
    beta = 2.0 - 4.0 * epsilon / 3.0
    ell_s = beta * s * s
    ell_m = beta * m * m
    if hypothesis == HYPOTHESIS_A:
        if m < 2:
            raise ZeroDivisionError("hypothesis A needs m >= 2 (eta involves m^2/(m^2 - 1))")
        eta_expected = 6.0 * dt / ell_s * m * m / (m * m - 1.0)
    elif hypothesis == HYPOTHESIS_B:
        eta_expected = 2.0 * dt / ell_s
    else:
        raise ValueError(f"unknown hypothesis {hypothesis!r}")
    checks = {
        "dt_rho_S<=ell_s": dt * rho_S <= ell_s,
        "eta_rho_F<=ell_m": eta * rho_F <= ell_m,
        "eta_formula": abs(eta - eta_expected) <= 1e-12 * max(1.0, abs(eta_expected)),
    }
    if hypothesis == HYPOTHESIS_B:
        checks["separation"] = rho_F >= 4.0 * rho_S
    return checks


def sweep(lambdas_F, lambdas_S, lambdas_E, dts, epsilon=DEFAULT_EPSILON):
    """Verdicts over the tensor grid; yields ``(params, verdict)`` pairs."""
    for lf, ls, le, dt in itertools.product(lambdas_F, lambdas_S, lambdas_E, dts):
        p = TestEqParams(lf, ls, le, dt, epsilon)
        yield p, amplification_emrkc(p)


def write_sweep_csv(path_or_file, results):
    own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
    fh = open(path_or_file, "w", newline="") if own else path_or_file
    try:
        writer = csv.writer(fh)
        writer.writerow(SWEEP_COLUMNS)
        for p, v in results:
            writer.writerow([repr(float(p.lambda_F)), repr(float(p.lambda_S)), repr(float(p.lambda_E)),
                             repr(float(p.dt)), v.s, v.m, repr(v.eta), repr(v.R), int(v.stable)])
    finally:
        if own:
            fh.close()
