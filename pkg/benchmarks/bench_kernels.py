"""Compiled vs pure-Python kernels, alone and inside a full solve.

    python benchmarks/bench_kernels.py [--repeat 5]

Prints the best-of-``repeat`` wall time per case and backend and the
speedup. Cases without the compiled extension are reported as skipped.
"""
import argparse
import time
from pathlib import Path

import numpy as np

from spde_yosida import config, kernels, solver
from spde_yosida.monotone import ExpMinusOne, Power, SignGraph, Tabulated, resolvent

CUBIC = Path(config.__file__).parent / "scenarios" / "cubic.toml"


def best(fn, repeat):
    out = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        out.append(time.perf_counter() - t0)
    return min(out)


def cases():
    x = np.random.default_rng(0).uniform(-20.0, 20.0, 10 ** 6)
    table = Tabulated.from_graph(Power(3.0), np.linspace(-25.0, 25.0, 50001))
    sign = Tabulated.from_graph(SignGraph(), np.linspace(-25.0, 25.0, 50001))
    cubic, _ = config.load_scenario(CUBIC)
    z = cubic.noise_path()
    return {
        "power(3) resolvent, 1e6 nodes": lambda: resolvent(Power(3.0), 1e-2, x),
        "power(2.5) resolvent, 1e6 nodes": lambda: resolvent(Power(2.5), 1e-2, x),
        "expm1 resolvent, 1e6 nodes": lambda: resolvent(ExpMinusOne(), 1e-2, np.minimum(x, 15.0)),
        "tabulated r^3 resolvent, 1e6 nodes": lambda: resolvent(table, 1e-2, x),
        "tabulated sign resolvent, 1e6 nodes": lambda: resolvent(sign, 1e-2, x),
        "cubic scenario solve (semi_implicit)": lambda: solver.solve(cubic, z=z),
        "cubic scenario solve (exp_euler)": lambda: solver.solve(cubic, z=z, scheme="exp_euler"),
    }


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args(argv)
    backends = kernels.available_backends()
    print(f"backends: {', '.join(sorted(backends))} (default {kernels.BACKEND})")
    print(f"{'case':<40} {'python [s]':>11} {'compiled [s]':>13} {'speedup':>8}")
    for name, fn in cases().items():
        times = {}
        for b in ("python", "compiled"):
            if b in backends:
                with kernels.use_backend(b):
                    fn()  # warm up caches
                    times[b] = best(fn, args.repeat)
        if "compiled" in times:
            print(f"{name:<40} {times['python']:>11.4f} {times['compiled']:>13.4f} {times['python'] / times['compiled']:>7.1f}x")
        else:
            print(f"{name:<40} {times['python']:>11.4f} {'skipped':>13} {'':>8}")


if __name__ == "__main__":
    main()
