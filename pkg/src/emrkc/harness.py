"""Experiment drivers: single runs, convergence tables, stability scans, efficiency.

Spectral radii are estimated once from the initial state and kept fixed for
the whole run. A run aborts with :class:`NumericalAbort` as soon as
max|V| exceeds ``NORM_GUARD`` or turns non-finite.
"""
import csv
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import baselines
from .cheb import get_stages
from .config import MULTIRATE, RunConfig, steps_for
from .counters import EvalCounters
from .errors import NumericalAbort
from .monodomain import analytic_rho_F, rel_l2_error
from .multirate import PROGRESSIVE, STANDARD, SplitRhs, emrkc_step, mrkc_step, rkc_step
from .spectral import estimate_spectral_radius

NORM_GUARD = 1e6


@dataclass
class StepReport:
    step: int
    t: float
    s: Optional[int]
    m: Optional[int]
    eta: Optional[float]


@dataclass
class SimulationResult:
    state: np.ndarray
    reports: list
    counters: EvalCounters
    rho_F: float
    rho_S: float
    rho_F_analytic: float
    dt: float
    n_steps: int
    gate_min: float = math.inf
    gate_max: float = -math.inf
    arrival_time: Optional[float] = None


def _timed(fn, counters, slot):
    def wrapped(*args):
        t0 = time.perf_counter()
        out = fn(*args)
        setattr(counters, slot, getattr(counters, slot) + time.perf_counter() - t0)
        return out
    return wrapped


def plan_stages(dt, rho_F, rho_S, epsilon=0.05):
    """``(s, m, eta)`` as the multirate steppers would choose them."""
    outer = get_stages(dt, rho_S, epsilon)
    eta = 2.0 * dt / outer.ell_s
    return outer.s, get_stages(eta, rho_F, epsilon).s, eta


def _radii(method, problem, y0):
    """(rho_F, rho_S) of the parts each method treats as fast and slow."""
    if method == "mrkc":
        fast, slow = problem.mrkc_fast, problem.mrkc_slow
    elif method == "rkc":
        rho = estimate_spectral_radius(0.0, y0, problem.rhs).rho
        return rho, rho
    else:
        fast, slow = problem.f_F, problem.f_S
    return (estimate_spectral_radius(0.0, y0, fast).rho,
            estimate_spectral_radius(0.0, y0, slow).rho)


def make_stepper(method, problem, rho_F, rho_S, epsilon, counters):
    """Return ``step(t, y, dt) -> (y_new, s, m, eta)`` for ``method``."""
    if method in ("emrkc", "emrkc-progressive"):
        variant = PROGRESSIVE if method.endswith("progressive") else STANDARD
        rhs = SplitRhs(_timed(problem.f_F, counters, "time_F"), _timed(problem.f_S, counters, "time_S"),
                       rho_F, rho_S, exp_step=_timed(problem.exp_step, counters, "time_E"))

        def step(t, y, dt):
            y_new, rep = emrkc_step(t, y, dt, rhs, epsilon, variant)
            counters.add(rep.counters)
            return y_new, rep.s, rep.m, rep.eta
    elif method == "mrkc":
        rhs = SplitRhs(_timed(problem.mrkc_fast, counters, "time_F"),
                       _timed(problem.mrkc_slow, counters, "time_S"), rho_F, rho_S)

        def step(t, y, dt):
            y_new, rep = mrkc_step(t, y, dt, rhs, epsilon)
            counters.add(rep.counters)
            return y_new, rep.s, rep.m, rep.eta
    elif method == "rkc":
        f = _timed(problem.rhs, counters, "time_S")

        def step(t, y, dt):
            y_new, s = rkc_step(t, y, dt, f, rho_F, epsilon)
            counters.n_fF += s
            counters.n_fS += s
            return y_new, s, None, None
    elif method == "imex-rl":
        def step(t, y, dt):
            counters.n_fS += 1
            counters.n_exp_steps += 1
            return baselines.imex_rl_step(t, y, dt, problem, counters=counters), None, None, None
    elif method == "exex-rl":
        def step(t, y, dt):
            counters.n_fF += 1
            counters.n_fS += 1
            counters.n_exp_steps += 1
            return baselines.exex_rl_step(t, y, dt, problem), None, None, None
    else:
        raise ValueError(f"unknown method {method!r}")
    return step


def run_simulation(config, problem=None, dt=None, n_steps=None, radii=None, keep_reports=True):
    """Integrate ``config`` to its final time; returns a :class:`SimulationResult`.

    ``n_steps`` overrides the step count (then ``dt`` is used as given, with
    no divisibility check); ``radii`` skips the power iteration.
    """
    problem = problem or config.build()
    dt = config.dt if dt is None else dt
    n_steps = steps_for(config.t_end, dt) if n_steps is None else n_steps
    method = config.method
    y = problem.initial_state()
    rho_F, rho_S = radii if radii is not None else _radii(method, problem, y)
    counters = EvalCounters()
    step = make_stepper(method, problem, rho_F, rho_S, config.epsilon, counters)
    t0 = time.perf_counter()
    with np.errstate(over="ignore", invalid="ignore"):
        y, reports, gmin, gmax, arrival = _step_loop(step, y, dt, n_steps, method, problem, keep_reports)
    counters.wall_time = time.perf_counter() - t0
    return SimulationResult(y, reports, counters, rho_F, rho_S, analytic_rho_F(problem.grid, problem.conductivity),
                            dt, n_steps, gmin, gmax, arrival)


def _step_loop(step, y, dt, n_steps, method, problem, keep_reports):
    # overflow is caught by the guard below, so numpy's warnings are silenced by the caller
    n = problem.n
    far = n - 1
    reports = []
    gmin, gmax = math.inf, -math.inf
    arrival = None
    t = 0.0
    for k in range(n_steps):
        try:
            y, s, m, eta = step(t, y, dt)
        except NumericalAbort as exc:
            raise NumericalAbort(f"{method}: {exc} (step {k})", step=k, t=t, dt=dt, stage=exc.stage) from exc
        t = (k + 1) * dt
        V = y[:n]
        vmax = float(np.max(np.abs(V)))
        if not vmax <= NORM_GUARD:
            raise NumericalAbort(f"{method}: max|V| = {vmax:.3e} exceeds {NORM_GUARD:g} mV at step {k + 1}, "
                                 f"t = {t:g} ms, dt = {dt:g} ms", step=k + 1, t=t, dt=dt)
        gates = y[n:(1 + problem.n_gates) * n]
        gmin = min(gmin, float(gates.min()))
        gmax = max(gmax, float(gates.max()))
        if arrival is None and V[far] > 0.0:
            arrival = t
        if keep_reports:
            reports.append(StepReport(k + 1, t, s, m, eta))
    return y, reports, gmin, gmax, arrival


# reference solutions

def reference_dt(config, dts):
    return config.reference_dt if config.reference_dt is not None else min(1e-4, min(dts) / 20.0)


def reference_solution(config, dt_ref, cache_dir=None):
    """EXEX-RL solution at ``dt_ref``, cached by physical configuration."""
    path = None
    if cache_dir:
        os.makedirs(cache_dir, exist_ok=True)
        path = os.path.join(cache_dir, f"ref_{config.physical_key()}_{dt_ref!r}.npy")
        if os.path.exists(path):
            return np.load(path)
    res = run_simulation(config.replace(method="exex-rl"), dt=dt_ref, radii=(0.0, 0.0), keep_reports=False)
    if path:
        tmp = path + ".tmp.npy"
        np.save(tmp, res.state)
        os.replace(tmp, path)
    return res.state


def _map(fn, items, threads):
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _error_rows(config, cells, ref, problem):
    n = problem.n

    def run_cell(cell):
        method, dt = cell
        cfg = config.replace(method=method)
        try:
            res = run_simulation(cfg, problem=problem, dt=dt, keep_reports=True)
        except NumericalAbort:
            return {"method": method, "dt": dt, "rel_l2_err": math.nan, "stable": False,
                    "s": None, "m": None, "counters": EvalCounters(), "gate_min": math.nan, "gate_max": math.nan}
        s = max((r.s for r in res.reports if r.s is not None), default=None)
        m = max((r.m for r in res.reports if r.m is not None), default=None)
        return {"method": method, "dt": dt, "rel_l2_err": rel_l2_error(res.state[:n], ref[:n], problem.grid),
                "stable": True, "s": s, "m": m, "counters": res.counters,
                "gate_min": res.gate_min, "gate_max": res.gate_max, "rho_F": res.rho_F, "rho_S": res.rho_S}

    return _map(run_cell, cells, config.threads)


def _add_orders(rows):
    prev = None
    for row in rows:
        row["order"] = math.nan
        if prev is not None and prev["stable"] and row["stable"] and row["rel_l2_err"] > 0 and prev["rel_l2_err"] > 0:
            row["order"] = math.log(prev["rel_l2_err"] / row["rel_l2_err"]) / math.log(prev["dt"] / row["dt"])
        prev = row
    return rows


def run_convergence(config, dts=None, cache_dir=None):
    """Rows (dt, rel_l2_err, order, s, m, counters) for ``config.method``."""
    dts = tuple(sorted(dts or config.dts, reverse=True))
    for dt in dts:
        steps_for(config.t_end, dt)
    problem = config.build()
    ref = reference_solution(config, reference_dt(config, dts), cache_dir)
    rows = _error_rows(config, [(config.method, dt) for dt in dts], ref, problem)
    return _add_orders(rows)


def run_efficiency(config, dts=None, methods=None, cache_dir=None):
    dts = tuple(sorted(dts or config.dts, reverse=True))
    methods = tuple(methods or config.methods)
    for dt in dts:
        steps_for(config.t_end, dt)
    problem = config.build()
    ref = reference_solution(config, reference_dt(config, dts), cache_dir)
    rows = _error_rows(config, [(m, dt) for m in methods for dt in dts], ref, problem)
    out = []
    for m in methods:
        out += _add_orders([r for r in rows if r["method"] == m])
    return out


def _stable_run(config, problem, n_steps, radii=None):
    dt = config.t_end / n_steps
    try:
        res = run_simulation(config, problem=problem, dt=dt, n_steps=n_steps, radii=radii, keep_reports=False)
    except NumericalAbort:
        return None
    return res


def explicit_stability_limit(config, problem=None, dt_start=1e-4):
    """Largest dt = t_end/n for which EXEX-RL completes without tripping the guard.

    The search grows dt from a surely stable ``dt_start`` and bisects on the
    step count once a run fails. Approaching from below matters: a handful
    of huge steps from a uniform resting state never excites the unstable
    modes and would pass the guard spuriously.
    """
    cfg = config.replace(method="exex-rl")
    problem = problem or cfg.build()
    radii = (0.0, 0.0)
    n_hi = max(1, math.ceil(cfg.t_end / dt_start))
    if _stable_run(cfg, problem, n_hi, radii) is None:
        raise NumericalAbort(f"EXEX-RL is unstable already at dt = {cfg.t_end / n_hi:g} ms")
    n_lo = n_hi
    while n_lo > 1:
        n_lo = max(1, n_lo // 2)
        if _stable_run(cfg, problem, n_lo, radii) is None:
            break
        n_hi = n_lo
    else:
        return cfg.t_end / n_hi
    while n_hi - n_lo > 1:
        mid = (n_lo + n_hi) // 2
        if _stable_run(cfg, problem, mid, radii) is not None:
            n_hi = mid
        else:
            n_lo = mid
    return cfg.t_end / n_hi


def run_effective_stability(config, dts=None):
    """Rows (dt, |V_N|/|V*|, stable, s, m) plus the bisected EXEX-RL limit."""
    problem = config.build()
    limit = explicit_stability_limit(config, problem)
    n_ref = math.ceil(2 * config.t_end / limit)
    ref = _stable_run(config.replace(method="exex-rl"), problem, n_ref, (0.0, 0.0))
    ref_norm = math.sqrt(float(np.sum(problem.grid.quadrature_weights() * ref.state[: problem.n] ** 2)))
    radii = _radii(config.method, problem, problem.initial_state())
    dts = tuple(sorted(dts or config.scan_dts))

    def cell(dt):
        n = max(1, round(config.t_end / dt))
        res = _stable_run(config, problem, n, radii)
        s, m, eta = plan_stages(config.t_end / n, radii[0], radii[1], config.epsilon)
        if config.method not in MULTIRATE:
            m = None
        if res is None:
            return {"dt": config.t_end / n, "rel_norm": math.nan, "stable": False, "s": s, "m": m}
        V = res.state[: problem.n]
        norm = math.sqrt(float(np.sum(problem.grid.quadrature_weights() * V ** 2)))
        return {"dt": config.t_end / n, "rel_norm": norm / ref_norm, "stable": True, "s": s, "m": m,
                "gate_min": res.gate_min, "gate_max": res.gate_max}

    rows = _map(cell, dts, config.threads)
    return rows, limit


# CSV output

def fmt(value):
    """Shortest round-trip text for floats; blanks for missing values."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


COUNTER_COLUMNS = ("n_fF", "n_fS", "n_exp_steps", "n_linsolves", "cg_iters_total", "wall_time",
                   "time_F", "time_S", "time_E", "time_other")


def table_rows(rows, leading):
    header = list(leading) + list(COUNTER_COLUMNS)
    out = []
    for r in rows:
        c = r["counters"].as_dict()
        out.append([r.get(k) for k in leading] + [c[k] for k in COUNTER_COLUMNS])
    return header, out
