"""Time the classical ensemble kernel on both backends.

    python benchmarks/bench_kernels.py [--traj 4096] [--kicks 20000] [--repeat 3]

Both backends run the same chunk (same phases, same kick terms); the script
also reports how far their escape statistics drift apart. The compiled
backend is warmed up once so JIT time is excluded.
"""
import argparse
import time

import numpy as np

from darkkepler import _kernels
from darkkepler.binary import epsilon, preset
from darkkepler.classical import _harmonic_arrays, initial_phases


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - start)
    return min(times), out


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--traj", type=int, default=4096)
    parser.add_argument("--kicks", type=int, default=20_000)
    parser.add_argument("--w0", type=float, default=-0.2)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()

    system = preset("sun-jupiter")
    index, amp, phase = _harmonic_arrays(system.kick_terms())
    phi0 = initial_phases(1, 0, args.traj)
    call = (args.w0, phi0, index, amp, phase, args.kicks, 100, 1e-4)
    print(f"sun-jupiter, eps={epsilon(system):.4g}, w0={args.w0}, {args.traj} trajectories x {args.kicks} kicks")

    results = {}
    t_np, results["numpy"] = best_of(lambda: _kernels.ensemble_chunk_numpy(*call), args.repeat)
    print(f"numpy  {t_np:8.3f} s")
    if not _kernels.HAVE_NUMBA:
        print("numba  unavailable (not installed or DARKKEPLER_DISABLE_NUMBA set)")
        return
    _kernels.ensemble_chunk_numba(*call[:5], 10, 10, 1e-4)  # compile
    t_nb, results["numba"] = best_of(lambda: _kernels.ensemble_chunk_numba(*call), args.repeat)
    print(f"numba  {t_nb:8.3f} s   speedup x{t_np / t_nb:.1f}")

    a, b = results["numpy"], results["numba"]
    escaped_a = np.count_nonzero(a[0] == _kernels.ESCAPED)
    escaped_b = np.count_nonzero(b[0] == _kernels.ESCAPED)
    same = int(np.count_nonzero(a[1] == b[1]))
    print(f"escaped: numpy {escaped_a}, numba {escaped_b}; identical kick counts for {same}/{args.traj}")
    if same < args.traj:
        print("(chaotic orbits amplify last-bit differences between the backends)")


if __name__ == "__main__":
    main()
