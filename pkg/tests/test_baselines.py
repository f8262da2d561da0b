import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from emrkc.baselines import CgConfig, cg_solve, exex_rl_step, imex_rl_step, implicit_diffusion_operator
from emrkc.counters import EvalCounters
from emrkc.errors import CgNotConverged
from emrkc.ionic import IonicModelSpec, get_model
from emrkc.monodomain import Conductivity, Grid, StimulusProtocol, analytic_rho_F, build_problem
from emrkc.stability import TestEqParams, amplification_imex_rl


class Passive:
    """One frozen gate and no membrane current: V only diffuses."""

    spec = IonicModelSpec(1, 0, ("V", "q"))

    def lambda_zinf(self, V):
        n = np.size(V)
        return np.full((1, n), -2.0), np.full((1, n), 0.3)

    def i_ion(self, V, z_e, z_s=None):
        return np.zeros(np.size(V))

    def g_S(self, V, z_e, z_s):
        return np.empty((0, np.size(V)))


def thomas(lower, diag, upper, rhs):
    n = len(diag)
    c, d = np.zeros(n), np.zeros(n)
    c[0], d[0] = upper[0] / diag[0], rhs[0] / diag[0]
    for i in range(1, n):
        den = diag[i] - lower[i] * c[i - 1]
        c[i] = upper[i] / den if i < n - 1 else 0.0
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / den
    x = np.zeros(n)
    x[-1] = d[-1]
    for i in range(n - 2, -1, -1):
        x[i] = d[i] - c[i] * x[i + 1]
    return x


@pytest.fixture(scope="module")
def passive():
    return build_problem(Grid((5.0,), (0.1,)), Conductivity(), Passive(), StimulusProtocol.off())


class TestCg:
    def test_identity_one_iteration(self, rng):
        b = rng.standard_normal(9)
        x, it = cg_solve(lambda v: v.copy(), b)
        np.testing.assert_allclose(x, b, rtol=1e-15)
        assert it == 1

    def test_zero_rhs(self):
        x, it = cg_solve(lambda v: 2 * v, np.zeros(4))
        assert not x.any() and it == 0

    def test_against_thomas_on_51_nodes(self, rng):
        p = build_problem(Grid((5.0,), (0.1,)), Conductivity(), get_model("hh"))
        dt = 0.3
        w = p.weights[0]
        op, diag = implicit_diffusion_operator(p, dt)
        b = rng.standard_normal(p.n)
        x, _ = cg_solve(op, b, cfg=CgConfig(rel_tol=1e-12), weights=p.grid.quadrature_weights(), diag=diag)
        n = p.n
        lower = np.full(n, -dt * w)
        upper = np.full(n, -dt * w)
        upper[0] = lower[-1] = -2 * dt * w
        ref = thomas(lower, np.full(n, 1 + 2 * dt * w), upper, b)
        np.testing.assert_allclose(x, ref, rtol=0, atol=1e-8 * np.abs(ref).max())

    def test_residual_meets_tolerance(self, rng):
        p = build_problem(Grid((3.0, 2.0), (0.1,)), Conductivity(), get_model("hh"))
        op, diag = implicit_diffusion_operator(p, 1.0)
        b = rng.standard_normal(p.n)
        x, _ = cg_solve(op, b, weights=p.grid.quadrature_weights(), diag=diag)
        assert np.linalg.norm(b - op(x)) <= 1e-8 * np.linalg.norm(b)

    def test_unpreconditioned_also_converges(self, rng):
        p = build_problem(Grid((3.0,), (0.1,)), Conductivity(), get_model("hh"))
        op, _ = implicit_diffusion_operator(p, 0.5)
        b = rng.standard_normal(p.n)
        x, _ = cg_solve(op, b, cfg=CgConfig(preconditioner="none"), weights=p.grid.quadrature_weights())
        assert np.linalg.norm(b - op(x)) <= 1e-8 * np.linalg.norm(b)

    def test_reports_non_convergence(self, rng):
        p = build_problem(Grid((20.0,), (0.1,)), Conductivity(), get_model("hh"))
        op, diag = implicit_diffusion_operator(p, 10.0)
        with pytest.raises(CgNotConverged):
            cg_solve(op, rng.standard_normal(p.n), cfg=CgConfig(max_iters=2), diag=diag)

    def test_default_cap(self):
        assert CgConfig().iteration_cap(10_000) == 1000

    @pytest.mark.parametrize("kw", [{"rel_tol": 0.0}, {"preconditioner": "amg"}])
    def test_config_validation(self, kw):
        with pytest.raises(ValueError):
            CgConfig(**kw)


def cosine_mode(p, k):
    x = p.grid.axis_coordinates(0)
    lam = -4 * p.weights[0] * math.sin(k * math.pi * 0.1 / (2 * 5.0)) ** 2
    return np.cos(k * math.pi * x / 5.0), lam


class TestImexRl:
    @pytest.mark.parametrize("dt", [0.01, 0.5, 20.0])
    def test_implicit_euler_on_eigenmode(self, passive, dt):
        v, lam = cosine_mode(passive, 7)
        y = passive.pack(v, np.full(passive.n, 0.9))
        out = imex_rl_step(0.0, y, dt, passive, CgConfig(rel_tol=1e-13))
        np.testing.assert_allclose(passive.V(out), v / (1 - dt * lam), rtol=0, atol=1e-10)

    @pytest.mark.parametrize("dt", [1e-3, 0.1, 5.0, 100.0])
    def test_gating_exact_with_frozen_voltage(self, cable, dt):
        y = cable.pack(np.linspace(-80, 20, cable.n), np.full((3, cable.n), 0.5))
        lam, zinf = cable.model.lambda_zinf(cable.V(y))
        exact = zinf + (0.5 - zinf) * np.exp(dt * lam)
        for step in (lambda: imex_rl_step(0.0, y, dt, cable), lambda: exex_rl_step(0.0, y, dt, cable)):
            np.testing.assert_allclose(cable.gates(step()), exact, rtol=1e-12, atol=1e-15)

    def test_counts_linear_solves(self, cable):
        c = EvalCounters()
        y = cable.initial_state()
        imex_rl_step(0.0, y, 0.1, cable, counters=c)
        imex_rl_step(0.1, y, 0.1, cable, counters=c)
        assert c.n_linsolves == 2 and c.cg_iters_total >= 2

    def test_one_step_difference_is_second_order(self, cable):
        y = cable.initial_state()
        y = exex_rl_step(0.0, y, 0.01, cable)  # leave the constant state so diffusion acts
        diffs = [np.linalg.norm(imex_rl_step(0.5, y, dt, cable, CgConfig(rel_tol=1e-14))
                                - exex_rl_step(0.5, y, dt, cable)) for dt in (2.0 ** -8, 2.0 ** -9)]
        assert math.log2(diffs[0] / diffs[1]) == pytest.approx(2.0, abs=0.1)

    @pytest.mark.parametrize("dt", [0.0, -0.1])
    def test_rejects_bad_dt(self, cable, dt):
        with pytest.raises(ValueError):
            imex_rl_step(0.0, cable.initial_state(), dt, cable)

    @given(st.floats(-1e6, 0.0), st.floats(-2.0, 0.0), st.floats(-1e6, 0.0), st.floats(1e-4, 1.0))
    def test_unconditionally_stable_in_fast_term(self, lf, ls_dt, le, dt):
        ls = ls_dt / dt
        assert abs(amplification_imex_rl(TestEqParams(lf, ls, le, dt))) <= 1.0 + 1e-15


class TestExexRl:
    def test_explicit_euler_on_eigenmode(self, passive):
        v, lam = cosine_mode(passive, 3)
        y = passive.pack(v, np.full(passive.n, 0.3))
        out = exex_rl_step(0.0, y, 0.01, passive)
        np.testing.assert_allclose(passive.V(out), (1 + 0.01 * lam) * v, rtol=0, atol=1e-13)
        np.testing.assert_allclose(passive.gates(out), 0.3, rtol=1e-15)

    def test_zero_rhs_keeps_state(self, quiet_cable):
        y = quiet_cable.initial_state()
        out = exex_rl_step(0.0, y, 0.01, quiet_cable)
        np.testing.assert_allclose(out, y, rtol=0, atol=1e-12)

    def test_fused_kernel_matches_generic_path(self, cable, rng):
        y = cable.pack(rng.uniform(-80, 30, cable.n), rng.uniform(size=(3, cable.n)))

        class Wrapped:
            spec = cable.model.spec
            lambda_zinf = cable.model.lambda_zinf
            i_ion = cable.model.i_ion
            g_S = cable.model.g_S

        generic = build_problem(cable.grid, cable.conductivity, Wrapped(), cable.stimulus)
        np.testing.assert_allclose(exex_rl_step(0.3, y, 0.01, cable), exex_rl_step(0.3, y, 0.01, generic),
                                   rtol=1e-14, atol=1e-14)

    @pytest.mark.parametrize("factor,blows_up", [(1.9, False), (2.2, True)])
    def test_explicit_limit(self, factor, blows_up):
        p = build_problem(Grid((20.0,), (0.1,)), Conductivity(), get_model("hh"), StimulusProtocol.off())
        dt = factor / analytic_rho_F(p.grid, p.conductivity)
        y = p.initial_state()
        y[: p.n] += 1e-3 * np.cos(np.arange(p.n) * math.pi)  # excite the stiffest mode
        y0 = np.linalg.norm(y)
        with np.errstate(over="ignore", invalid="ignore"):
            for _ in range(400):
                y = exex_rl_step(0.0, y, dt, p)
        grew = not np.isfinite(y).all() or np.linalg.norm(y) > 1e6 * y0
        assert grew == blows_up
