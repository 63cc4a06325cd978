"""Pauli-string decompositions of Hermitian matrices.

Strings are written left to right from qubit 0, so ``"XZ"`` is X on qubit 0
and Z on qubit 1 (the operator ``Z (x) X`` in the usual big-endian kron
ordering).
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import kernels
from .simcore import Circuit, Statevector, _trusted_state, pauli_op

LETTERS = "IXYZ"
HERMITIAN_TOL = 1e-9
DEFAULT_TOL = 1e-8

_SINGLE = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


@dataclass(frozen=True)
class PauliString:
    letters: str

    def __post_init__(self):
        letters = str(self.letters).upper()
        if not letters or any(ch not in LETTERS for ch in letters):
            raise ValueError(f"invalid Pauli string {self.letters!r}")
        object.__setattr__(self, "letters", letters)

    def __str__(self):
        return self.letters

    def __len__(self):
        return len(self.letters)

    @property
    def num_qubits(self) -> int:
        return len(self.letters)

    def masks(self) -> tuple:
        """``(xmask, zmask, phase)`` such that ``P|j> = phase (-1)^{|j & z|} |j ^ x>``."""
        x = z = ny = 0
        for q, ch in enumerate(self.letters):
            if ch in "XY":
                x |= 1 << q
            if ch in "YZ":
                z |= 1 << q
            if ch == "Y":
                ny += 1
        return x, z, 1j**ny

    def matrix(self) -> np.ndarray:
        out = np.ones((1, 1), dtype=complex)
        # qubit 0 is the least significant factor
        for ch in self.letters:
            out = np.kron(_SINGLE[ch], out)
        return out

    def circuit(self) -> Circuit:
        ops = tuple(pauli_op(ch, q) for q, ch in enumerate(self.letters) if ch != "I")
        return Circuit(self.num_qubits, ops)


@dataclass(frozen=True)
class PauliDecomposition:
    num_qubits: int
    terms: tuple  # of (coefficient, PauliString), lexicographic by string
    dropped_mass: float = 0.0

    def __post_init__(self):
        seen = set()
        terms = []
        for coeff, string in self.terms:
            if not isinstance(string, PauliString):
                string = PauliString(string)
            if string.num_qubits != self.num_qubits:
                raise ValueError(
                    f"string {string} has {string.num_qubits} qubits, expected {self.num_qubits}"
                )
            if string.letters in seen:
                raise ValueError(f"duplicate Pauli string {string}")
            seen.add(string.letters)
            terms.append((float(coeff), string))
        terms.sort(key=lambda t: t[1].letters)
        object.__setattr__(self, "terms", tuple(terms))

    def __len__(self):
        return len(self.terms)

    @property
    def coefficients(self) -> np.ndarray:
        return np.array([c for c, _ in self.terms])

    @property
    def strings(self) -> list:
        return [s for _, s in self.terms]

    def as_dict(self) -> dict:
        return {s.letters: c for c, s in self.terms}


def all_strings(num_qubits: int) -> list:
    return ["".join(p) for p in itertools.product(LETTERS, repeat=num_qubits)]


def _num_qubits_for(dim: int) -> int:
    if dim < 2 or dim & (dim - 1):
        raise ValueError(f"matrix dimension {dim} is not a power of two >= 2")
    return dim.bit_length() - 1


def decompose(matrix, tol: float = DEFAULT_TOL) -> PauliDecomposition:
    """Coefficients ``c_P = tr(P M) / 2^n``, keeping terms with ``|c_P| > tol``."""
    m = np.asarray(matrix, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"matrix must be square, got shape {m.shape}")
    n = _num_qubits_for(m.shape[0])
    if np.max(np.abs(m - m.conj().T)) > HERMITIAN_TOL:
        raise ValueError("matrix is not Hermitian")

    strings = [PauliString(s) for s in all_strings(n)]
    masks = [s.masks() for s in strings]
    xs = np.array([x for x, _, _ in masks], dtype=np.int64)
    zs = np.array([z for _, z, _ in masks], dtype=np.int64)
    phases = np.array([p for _, _, p in masks], dtype=np.complex128)
    raw = kernels.pauli_coefficients(np.ascontiguousarray(m), xs, zs, phases)

    imag = float(np.max(np.abs(raw.imag)))
    if imag > HERMITIAN_TOL:
        raise ValueError(f"imaginary Pauli coefficient residue {imag:.3e}; input not Hermitian")

    terms = []
    dropped = 0.0
    for coeff, string in zip(raw.real, strings):
        if abs(coeff) > tol:
            terms.append((float(coeff), string))
        else:
            dropped += float(abs(coeff))
    return PauliDecomposition(n, tuple(terms), dropped)


def reconstruct(d: PauliDecomposition) -> np.ndarray:
    dim = 1 << d.num_qubits
    out = np.zeros((dim, dim), dtype=complex)
    for coeff, string in d.terms:
        out += coeff * string.matrix()
    return out


def apply_pauli(state: Statevector, p) -> Statevector:
    if not isinstance(p, PauliString):
        p = PauliString(p)
    if p.num_qubits != state.num_qubits:
        raise ValueError(f"string {p} has {p.num_qubits} qubits, state has {state.num_qubits}")
    x, z, phase = p.masks()
    return _trusted_state(state.num_qubits, kernels.apply_pauli(state.amplitudes, x, z, phase))


def apply_decomposition(state: Statevector, d: PauliDecomposition) -> np.ndarray:
    """``sum_j c_j P_j |psi>`` as a raw (unnormalised) amplitude vector."""
    out = np.zeros(state.dim, dtype=complex)
    for coeff, string in d.terms:
        out += coeff * apply_pauli(state, string).amplitudes
    return out

