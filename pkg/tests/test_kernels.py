import os
import subprocess
import sys

import numpy as np
from hypothesis import given, settings, strategies as st

from qweld import kernels
from qweld.simcore import ry_matrix


def rand_state(dim, rng):
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 8), st.integers(0, 2**32 - 1))
def test_apply_1q_backends_agree(n, seed):
    rng = np.random.default_rng(seed)
    dim = 1 << n
    state = rand_state(dim, rng)
    m = ry_matrix(rng.uniform(-6, 6)).astype(complex) * np.exp(1j * rng.uniform(0, 6))
    target = int(rng.integers(n))
    others = [q for q in range(n) if q != target]
    ctrl = 0
    for q in others:
        if rng.uniform() < 0.4:
            ctrl |= 1 << q
    a = kernels.apply_1q_numba(state, m, target, ctrl)
    b = kernels.apply_1q_numpy(state, m, target, ctrl)
    np.testing.assert_allclose(a, b, atol=1e-14)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 8), st.integers(0, 2**32 - 1))
def test_apply_pauli_backends_agree(n, seed):
    rng = np.random.default_rng(seed)
    dim = 1 << n
    state = rand_state(dim, rng)
    x, z = int(rng.integers(dim)), int(rng.integers(dim))
    phase = 1j ** int(rng.integers(4))
    np.testing.assert_allclose(
        kernels.apply_pauli_numba(state, x, z, phase),
        kernels.apply_pauli_numpy(state, x, z, phase),
        atol=1e-14,
    )


def test_pauli_coefficients_backends_agree():
    rng = np.random.default_rng(0)
    for n in (1, 2, 3, 4):
        dim = 1 << n
        M = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        xs = rng.integers(dim, size=10).astype(np.int64)
        zs = rng.integers(dim, size=10).astype(np.int64)
        ph = (1j ** rng.integers(4, size=10)).astype(np.complex128)
        np.testing.assert_allclose(
            kernels.pauli_coefficients_numba(M, xs, zs, ph),
            kernels.pauli_coefficients_numpy(M, xs, zs, ph),
            atol=1e-13,
        )


def test_kernels_do_not_mutate():
    rng = np.random.default_rng(1)
    s = rand_state(8, rng)
    keep = s.copy()
    for fn in (kernels.apply_1q_numba, kernels.apply_1q_numpy):
        fn(s, ry_matrix(0.4).astype(complex), 1, 0)
    for fn in (kernels.apply_pauli_numba, kernels.apply_pauli_numpy):
        fn(s, 3, 5, 1j)
    np.testing.assert_array_equal(s, keep)


def _backend_with(flag):
    env = dict(os.environ, QWELD_NUMBA=flag)
    out = subprocess.run(
        [sys.executable, "-c", "import qweld; print(qweld.BACKEND)"],
        env=env, capture_output=True, text=True, check=True,
    )
    return out.stdout.strip()


def test_env_flag_selects_backend():
    assert _backend_with("0") == "numpy"
    assert _backend_with("off") == "numpy"
    from qweld._accel import HAVE_NUMBA

    assert _backend_with("1") == ("numba" if HAVE_NUMBA else "numpy")


def test_numpy_backend_end_to_end():
    # a small simulation run entirely on the numpy path gives the numba answer
    code = (
        "import numpy as np; from qweld import simcore, vqls;"
        "rng=np.random.default_rng(3); s=vqls.random_spd_system(2, 4.0, rng);"
        "a=vqls.VqlsAnsatz(2,1,rng.uniform(0,6,5)); print(repr(vqls.cost(a,s,method='hadamard')))"
    )
    vals = []
    for flag in ("0", "1"):
        env = dict(os.environ, QWELD_NUMBA=flag)
        out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
        vals.append(float(out.stdout))
    assert abs(vals[0] - vals[1]) < 1e-12
