"""Compare the numba and numpy statevector kernels.

    python3 benchmarks/bench_kernels.py [--qubits 4,8,12,16] [--repeat 50]

Both variants are imported directly from qweld.kernels, so QWELD_NUMBA does not
matter here.  Numba is warmed up once before timing (compile time excluded).
"""
import argparse
import time

import numpy as np

from qweld import kernels
from qweld._accel import HAVE_NUMBA
from qweld.simcore import ry_matrix


def best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench(n, repeat, rng):
    dim = 1 << n
    state = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    state /= np.linalg.norm(state)
    m = ry_matrix(0.3).astype(np.complex128)
    target, ctrl = n // 2, 1
    xs, zs = int(rng.integers(dim)), int(rng.integers(dim))
    rows = []
    cases = {
        "apply_1q": (kernels.apply_1q_numba, kernels.apply_1q_numpy, (state, m, target, ctrl)),
        "apply_pauli": (kernels.apply_pauli_numba, kernels.apply_pauli_numpy, (state, xs, zs, 1j)),
    }
    if n <= 8:
        mat = rng.normal(size=(dim, dim)) + 0j
        xm = rng.integers(dim, size=16).astype(np.int64)
        zm = rng.integers(dim, size=16).astype(np.int64)
        ph = np.ones(16, dtype=np.complex128)
        cases["pauli_coefficients"] = (
            kernels.pauli_coefficients_numba,
            kernels.pauli_coefficients_numpy,
            (mat, xm, zm, ph),
        )
    for name, (fast, ref, args) in cases.items():
        a, b = fast(*args), ref(*args)  # warm-up + agreement check
        if not np.allclose(a, b, atol=1e-12):
            raise AssertionError(f"{name}: numba and numpy disagree at n={n}")
        t_nb = best_of(lambda: fast(*args), repeat)
        t_np = best_of(lambda: ref(*args), repeat)
        rows.append((name, n, t_nb, t_np))
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--qubits", default="4,8,12,16")
    ap.add_argument("--repeat", type=int, default=50)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    if not HAVE_NUMBA:
        print("numba not installed; the numba column would just time the numpy fallback")
    rng = np.random.default_rng(args.seed)
    print(f"{'kernel':<20}{'qubits':>7}{'numba [us]':>13}{'numpy [us]':>13}{'speedup':>9}")
    for n in (int(q) for q in args.qubits.split(",")):
        for name, q, t_nb, t_np in bench(n, args.repeat, rng):
            print(f"{name:<20}{q:>7}{t_nb * 1e6:>13.1f}{t_np * 1e6:>13.1f}{t_np / t_nb:>9.2f}")


if __name__ == "__main__":
    main()
