"""Hot statevector kernels.

Every kernel exists twice: a loop form compiled with numba and a vectorised
numpy form.  ``USE_NUMBA`` (see :mod:`qweld._accel`) picks which one the
public names point at; both stay importable so the benchmark and the tests
can compare them directly.

States are 1-D ``complex128`` arrays in little-endian order (qubit 0 is the
least significant bit of the basis index).  Kernels never mutate their input.
"""
from functools import lru_cache

import numpy as np

from ._accel import USE_NUMBA, njit


# --------------------------------------------------------------------------
# numba path
# --------------------------------------------------------------------------


@njit
def apply_1q_numba(state, m, target, ctrl_mask):
    out = state.copy()
    dim = state.shape[0]
    tbit = 1 << target
    m00 = m[0, 0]
    m01 = m[0, 1]
    m10 = m[1, 0]
    m11 = m[1, 1]
    for i in range(dim):
        if i & tbit:
            continue
        if (i & ctrl_mask) != ctrl_mask:
            continue
        j = i | tbit
        a = state[i]
        b = state[j]
        out[i] = m00 * a + m01 * b
        out[j] = m10 * a + m11 * b
    return out


@njit
def apply_pauli_numba(state, xmask, zmask, phase):
    dim = state.shape[0]
    out = np.empty_like(state)
    for i in range(dim):
        v = i & zmask
        parity = 0
        while v:
            parity ^= 1
            v &= v - 1
        amp = phase * state[i]
        if parity:
            amp = -amp
        out[i ^ xmask] = amp
    return out


@njit
def pauli_coefficients_numba(matrix, xmasks, zmasks, phases):
    dim = matrix.shape[0]
    nterms = xmasks.shape[0]
    out = np.empty(nterms, dtype=np.complex128)
    for t in range(nterms):
        x = xmasks[t]
        z = zmasks[t]
        acc = 0.0 + 0.0j
        for j in range(dim):
            v = j & z
            parity = 0
            while v:
                parity ^= 1
                v &= v - 1
            val = matrix[j, j ^ x]
            if parity:
                acc -= val
            else:
                acc += val
        out[t] = phases[t] * acc / dim
    return out


# --------------------------------------------------------------------------
# numpy path
# --------------------------------------------------------------------------


@lru_cache(maxsize=512)
def _pair_indices(dim, target, ctrl_mask):
    idx = np.arange(dim, dtype=np.int64)
    sel = ((idx >> target) & 1) == 0
    sel &= (idx & ctrl_mask) == ctrl_mask
    lo = idx[sel]
    return lo, lo | (1 << target)


@lru_cache(maxsize=64)
def _parity_table(dim):
    idx = np.arange(dim, dtype=np.int64)
    # popcount parity via byte-wise xor folding
    par = np.zeros(dim, dtype=np.int64)
    v = idx.copy()
    while np.any(v):
        par ^= v & 1
        v >>= 1
    return par


def apply_1q_numpy(state, m, target, ctrl_mask):
    lo, hi = _pair_indices(state.shape[0], int(target), int(ctrl_mask))
    out = state.copy()
    a = state[lo]
    b = state[hi]
    out[lo] = m[0, 0] * a + m[0, 1] * b
    out[hi] = m[1, 0] * a + m[1, 1] * b
    return out


def apply_pauli_numpy(state, xmask, zmask, phase):
    dim = state.shape[0]
    idx = np.arange(dim, dtype=np.int64)
    signs = 1 - 2 * _parity_table(dim)[idx & zmask]
    out = np.empty_like(state)
    out[idx ^ xmask] = phase * signs * state
    return out


def pauli_coefficients_numpy(matrix, xmasks, zmasks, phases):
    dim = matrix.shape[0]
    idx = np.arange(dim, dtype=np.int64)
    par = _parity_table(dim)
    out = np.empty(len(xmasks), dtype=np.complex128)
    for t, (x, z) in enumerate(zip(xmasks, zmasks)):
        signs = 1 - 2 * par[idx & z]
        out[t] = phases[t] * np.sum(signs * matrix[idx, idx ^ x]) / dim
    return out


if USE_NUMBA:
    apply_1q = apply_1q_numba
    apply_pauli = apply_pauli_numba
    pauli_coefficients = pauli_coefficients_numba
    BACKEND = "numba"
else:
    apply_1q = apply_1q_numpy
    apply_pauli = apply_pauli_numpy
    pauli_coefficients = pauli_coefficients_numpy
    BACKEND = "numpy"
