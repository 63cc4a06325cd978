"""Amplitude-encoded fidelity kernel ``K_ij = |<x_i|x_j>|^2``."""
from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from . import simcore
from .simcore import Circuit, CircuitOp, ShotConfig, Statevector, cx, ry

ZERO_NORM = 1e-12
UNIT_TOL = 1e-9


def normalize(x) -> np.ndarray:
    x = np.asarray(x, dtype=float).ravel()
    if not np.all(np.isfinite(x)):
        raise ValueError("feature vector has non-finite entries")
    norm = float(np.linalg.norm(x))
    if norm <= ZERO_NORM:
        raise ValueError(f"feature vector has near-zero norm {norm:.3e}; cannot normalise")
    return x / norm


def num_qubits_for(d: int) -> int:
    """Smallest register holding ``d`` amplitudes (at least one qubit)."""
    if d < 1:
        raise ValueError("dimension must be >= 1")
    return max(1, int(d - 1).bit_length())


def _padded(x) -> tuple:
    x = np.asarray(x, dtype=float).ravel()
    if abs(float(np.linalg.norm(x)) - 1.0) > UNIT_TOL:
        raise ValueError("amplitude encoding needs a unit-norm vector; call normalize() first")
    q = num_qubits_for(x.size)
    out = np.zeros(1 << q)
    out[: x.size] = x
    return q, out


def amplitude_encode(x) -> Statevector:
    """Unit vector of length ``d`` as the first ``d`` amplitudes of a zero-padded state."""
    q, amps = _padded(x)
    return Statevector(q, amps)


def _uniformly_controlled_ry(angles, controls, target) -> list:
    """RY(angles[p]) on ``target`` where ``p`` is the pattern of ``controls``
    (bit ``k`` of ``p`` is ``controls[k]``), built from RY and CX only."""
    if not controls:
        return [ry(target, float(angles[0]))]
    half = len(angles) // 2
    a0, a1 = np.asarray(angles[:half]), np.asarray(angles[half:])
    top = controls[-1]
    rest = controls[:-1]
    return (
        _uniformly_controlled_ry((a0 + a1) / 2, rest, target)
        + [cx(top, target)]
        + _uniformly_controlled_ry((a0 - a1) / 2, rest, target)
        + [cx(top, target)]
    )


def amplitude_encode_circuit(x) -> Circuit:
    """RY-tree state preparation: ``circuit |0...0> = amplitude_encode(x)``.

    Real amplitudes only.  The highest qubit is split first; the last level
    (qubit 0) uses signed ``atan2`` angles so negative entries come out right.
    """
    q, amps = _padded(x)
    ops: list[CircuitOp] = []
    for t in range(q - 1, -1, -1):
        block = 1 << (t + 1)
        groups = amps.reshape(-1, block)
        left, right = groups[:, : block // 2], groups[:, block // 2 :]
        if t == 0:
            angles = 2 * np.arctan2(right[:, 0], left[:, 0])
        else:
            angles = 2 * np.arctan2(np.linalg.norm(right, axis=1), np.linalg.norm(left, axis=1))
        controls = list(range(t + 1, q))
        ops.extend(_uniformly_controlled_ry(angles, controls, t))
    return Circuit(q, tuple(ops))


def _encoded(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError("expected a 2-D array of feature vectors")
    return np.stack([amplitude_encode(normalize(row)).amplitudes for row in X])


def cross_kernel(A, B) -> np.ndarray:
    """``|<a_i|b_j>|^2`` for rows of ``A`` against rows of ``B``."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.ndim != 2 or B.ndim != 2 or A.shape[1] != B.shape[1]:
        raise ValueError(f"dimension mismatch: {A.shape} vs {B.shape}")
    ea, eb = _encoded(A), _encoded(B)
    return np.abs(ea.conj() @ eb.T) ** 2


def kernel_matrix(X, shot_cfg: Optional[ShotConfig] = None) -> np.ndarray:
    """Symmetric kernel matrix over the rows of ``X``.

    Exact by default.  A sampled ``shot_cfg`` estimates each off-diagonal
    overlap ``<0|U_i^dag U_j|0>`` with a Hadamard test on the state-prep
    circuits and squares it; the diagonal stays exactly 1.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < 1:
        raise ValueError("need at least one feature vector")
    if shot_cfg is None or shot_cfg.exact:
        K = cross_kernel(X, X)
        K = 0.5 * (K + K.T)
        np.fill_diagonal(K, 1.0)
        return K

    rows = [normalize(r) for r in X]
    circuits = [amplitude_encode_circuit(r) for r in rows]
    n = len(rows)
    K = np.eye(n)
    for i in range(n):
        for j in range(i + 1, n):
            overlap = simcore.hadamard_test(
                None,
                circuits[j] + circuits[i].inverse(),
                "real",
                shot_cfg.derive(i, j),
            )
            K[i, j] = K[j, i] = overlap**2
    return K


def spectrum(M) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("matrix must be square")
    if np.max(np.abs(M - M.T)) > UNIT_TOL:
        raise ValueError("matrix is not symmetric")
    return np.linalg.eigvalsh(0.5 * (M + M.T))


def condition_number(M) -> float:
    """``lambda_max / lambda_min`` of a symmetric positive-definite matrix.

    Eigenvalues at or below ``UNIT_TOL`` count as zero: duplicated samples
    leave ``K`` singular up to rounding.
    """
    eig = spectrum(M)
    if eig[0] <= UNIT_TOL:
        raise ValueError(
            f"matrix is not positive definite (min eigenvalue {eig[0]:.3e}); increase lambda"
        )
    return float(eig[-1] / eig[0])


def regularised(K, lam: float) -> np.ndarray:
    K = np.asarray(K, dtype=float)
    return K + lam * np.eye(K.shape[0])


def kappa_table(K, lambdas: Sequence[float]) -> list:
    """``[(lambda, kappa, min_eig, max_eig), ...]`` for ``K + lambda I``."""
    out = []
    for lam in lambdas:
        eig = spectrum(regularised(K, lam))
        kappa = condition_number(regularised(K, lam))
        out.append((float(lam), kappa, float(eig[0]), float(eig[-1])))
    return out
