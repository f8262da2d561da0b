"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--nodes N] [--repeat R]

Prints one line per kernel with the best-of-R time per call for each
backend and the speed-up. Results of both backends are also compared so a
drifting kernel shows up here before it shows up in a test.
"""
import argparse
import timeit

import numpy as np

from emrkc import kernels


def _cases(n, rng):
    V = rng.uniform(-80.0, 40.0, n)
    gates = np.ascontiguousarray(rng.uniform(0.0, 1.0, (3, n)))
    lam = -rng.uniform(0.1, 10.0, (3, n))
    zinf = rng.uniform(0.0, 1.0, (3, n))
    side = int(np.sqrt(n))
    sheet = rng.standard_normal((side, side))
    a, b, f = rng.standard_normal((3, n))
    hh = (1.2, 0.36, 0.003, 50.0, -77.0, -54.387)
    stim = np.zeros(n)
    lap = rng.standard_normal(n)
    return {
        "rkc_combine": (lambda k, out: k.rkc_combine(out, a, -0.9, b, 0.01, f), (n,)),
        "diffusion_1d": (lambda k, out: k.diffusion_1d(V, 9.53, out), (n,)),
        "diffusion_2d": (lambda k, out: k.diffusion_2d(sheet, 9.53, 1.2, out), (side, side)),
        "hh_current": (lambda k, out: k.hh_current(V, gates[0], gates[1], gates[2], *hh, out), (n,)),
        "exp_relax": (lambda k, out: k.exp_relax(gates, lam, zinf, 0.05, out), (3, n)),
        "hh_lambda_zinf": (lambda k, out: k.hh_lambda_zinf(V, out, np.empty((3, n))), (3, n)),
        "hh_exex_step": (lambda k, out: k.hh_exex_step(V, gates, lap, stim, 1e-3, 100.0, *hh, out,
                                                       np.empty((3, n))), (n,)),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--nodes", type=int, default=40_000)
    ap.add_argument("--repeat", type=int, default=7)
    args = ap.parse_args(argv)

    fast = kernels.compiled_backend
    slow = kernels.python_backend
    if fast is None:
        print("compiled kernels are not built; run `pip install -e . --no-build-isolation` first")
        return 1
    rng = np.random.default_rng(0)
    print(f"{'kernel':<16}{'cython [us]':>14}{'numpy [us]':>14}{'speed-up':>10}{'max diff':>12}")
    for name, (call, shape) in _cases(args.nodes, rng).items():
        out_f = np.empty(shape)
        out_s = np.empty(shape)
        number = 20
        t_f = min(timeit.repeat(lambda: call(fast, out_f), number=number, repeat=args.repeat)) / number
        t_s = min(timeit.repeat(lambda: call(slow, out_s), number=number, repeat=args.repeat)) / number
        diff = float(np.max(np.abs(out_f - out_s)))
        print(f"{name:<16}{t_f * 1e6:>14.1f}{t_s * 1e6:>14.1f}{t_s / t_f:>10.1f}{diff:>12.2e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
