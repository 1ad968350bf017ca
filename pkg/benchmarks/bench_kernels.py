"""Time the compiled kernels against the NumPy fallback.

    python3 benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import time

import numpy as np

from tunneltime import kernels
from tunneltime.scattering import LayeredStack, RectangularBarrier, transfer_matrix_amplitude


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if kernels.BACKEND != "cython":
        raise SystemExit("compiled extension not built; run pip install -e . first")

    rng = np.random.default_rng(0)
    k = np.sort(rng.uniform(2.0, 3.2, 4000))
    amp = rng.normal(size=k.size) + 1j * rng.normal(size=k.size)
    y = np.linspace(-400.0, 400.0, 1500)
    t = np.linspace(0.0, 50.0, 4)
    stack = LayeredStack.nineteen_layer()
    omega = rng.uniform(0.1, 8.0, 200_000)
    barrier = RectangularBarrier(5.0, 20.0)
    energy = rng.uniform(0.01, 4.99, 200_000)

    cases = [
        ("synthesize 4000 modes x 1500 y x 4 t",
         lambda b: kernels.synthesize(y, t, k, 0.5 * k**2, amp, 0.0, backend=b)),
        ("transfer matrix, stack, 2e5 frequencies",
         lambda b: transfer_matrix_amplitude(omega, stack, backend=b)),
        ("transfer matrix, barrier, 2e5 energies",
         lambda b: transfer_matrix_amplitude(energy, barrier, backend=b)),
    ]
    print(f"{'kernel':44s} {'cython [s]':>11s} {'numpy [s]':>11s} {'speedup':>8s} {'max rel diff':>13s}")
    for name, fn in cases:
        tc, oc = best_of(lambda: fn("cython"), args.repeat)
        tp, op = best_of(lambda: fn("python"), args.repeat)
        diff = float(np.max(np.abs(oc - op)) / np.max(np.abs(op)))
        print(f"{name:44s} {tc:11.4f} {tp:11.4f} {tp / tc:8.1f} {diff:13.2e}")


if __name__ == "__main__":
    main()
