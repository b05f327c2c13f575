"""Time the compiled kernels against the NumPy fallback.

Run with ``python benchmarks/bench_kernels.py``.  Each kernel is timed on a
workload close to how the library uses it: long CMV application on a wide
state, many walk steps, and the Carathéodory ratio iteration near the circle.
"""
import argparse
import timeit

import numpy as np

from qrw import _kernels_py

try:
    from qrw import _kernels
except ImportError:
    _kernels = None


def workloads(rng):
    psi = rng.standard_normal((4, 4000)) + 1j * rng.standard_normal((4, 4000))
    q, _ = np.linalg.qr(rng.standard_normal((1999, 2, 2)) + 1j * rng.standard_normal((1999, 2, 2)))
    blocks = np.ascontiguousarray(q)
    up = rng.standard_normal((4, 2000)) + 1j * rng.standard_normal((4, 2000))
    down = rng.standard_normal((4, 2000)) + 1j * rng.standard_normal((4, 2000))
    coins = np.tile(np.array([1, 1, 1, -1], complex) / np.sqrt(2), (2000, 1))
    r = 0.7 * np.sqrt(rng.uniform(0, 1, 10_000))
    alphas = np.ascontiguousarray(r * np.exp(2j * np.pi * rng.uniform(0, 1, 10_000)))
    zs = 0.995 * np.exp(2j * np.pi * np.arange(64) / 64)
    return {
        "theta_pairs": lambda m: m.theta_pairs(psi.copy(), blocks, 1),
        "coin_step": lambda m: m.coin_step(up, down, coins, True),
        "szego_ratio": lambda m: m.szego_ratio(alphas, zs, 1e-13, 10),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    impls = {"python": _kernels_py}
    if _kernels is not None:
        impls["cython"] = _kernels
    else:
        print("compiled kernels not built; timing the fallback only")
    jobs = workloads(np.random.default_rng(0))
    print(f"{'kernel':<14}" + "".join(f"{name:>12}" for name in impls) + f"{'speedup':>10}")
    for kernel, job in jobs.items():
        times = {}
        for name, mod in impls.items():
            job(mod)  # warm up
            times[name] = min(timeit.repeat(lambda: job(mod), number=1, repeat=args.repeat))
        speed = times["python"] / times["cython"] if "cython" in times else float("nan")
        cells = "".join(f"{1e3 * t:>10.2f}ms" for t in times.values())
        print(f"{kernel:<14}{cells}{speed:>9.1f}x")


if __name__ == "__main__":
    main()
