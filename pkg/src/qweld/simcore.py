"""Dense statevector simulator.

Qubit ``k`` is bit ``k`` of the basis index (little-endian).  States and
circuits are immutable; every operation returns a new value.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal, Optional, Sequence

import numpy as np

from . import kernels

NORM_TOL = 1e-9

GATE_KINDS = ("H", "RY", "RZ", "CRZ", "CX", "PAULI_X", "PAULI_Y", "PAULI_Z")
_PARAMETERISED = {"RY", "RZ", "CRZ"}
_NEEDS_CONTROL = {"CRZ", "CX"}
_SELF_INVERSE = {"H", "CX", "PAULI_X", "PAULI_Y", "PAULI_Z"}

_SQRT_HALF = 1.0 / np.sqrt(2.0)
_FIXED = {
    "H": np.array([[_SQRT_HALF, _SQRT_HALF], [_SQRT_HALF, -_SQRT_HALF]], dtype=complex),
    "CX": np.array([[0, 1], [1, 0]], dtype=complex),
    "PAULI_X": np.array([[0, 1], [1, 0]], dtype=complex),
    "PAULI_Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "PAULI_Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def ry_matrix(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def rz_matrix(theta: float) -> np.ndarray:
    return np.array([[np.exp(-0.5j * theta), 0], [0, np.exp(0.5j * theta)]], dtype=complex)


@dataclass(frozen=True)
class Statevector:
    num_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if self.num_qubits < 1:
            raise ValueError("num_qubits must be positive")
        amps = np.array(self.amplitudes, dtype=np.complex128).reshape(-1)
        if amps.shape[0] != 1 << self.num_qubits:
            raise ValueError(
                f"expected {1 << self.num_qubits} amplitudes for {self.num_qubits} qubits, "
                f"got {amps.shape[0]}"
            )
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state is not normalised (|psi|^2 = {norm!r})")
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def zero(cls, num_qubits: int) -> "Statevector":
        amps = np.zeros(1 << num_qubits, dtype=np.complex128)
        amps[0] = 1.0
        return cls(num_qubits, amps)

    @classmethod
    def basis(cls, num_qubits: int, index: int) -> "Statevector":
        amps = np.zeros(1 << num_qubits, dtype=np.complex128)
        amps[index] = 1.0
        return cls(num_qubits, amps)

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


def _trusted_state(num_qubits: int, amps: np.ndarray) -> Statevector:
    """Wrap amplitudes produced by unitary kernels without re-checking the norm."""
    sv = object.__new__(Statevector)
    amps.flags.writeable = False
    object.__setattr__(sv, "num_qubits", num_qubits)
    object.__setattr__(sv, "amplitudes", amps)
    return sv


@dataclass(frozen=True)
class CircuitOp:
    """One gate.

    ``controls`` holds every control qubit.  CRZ and CX need at least one;
    the other kinds become multi-controlled versions when controls are given,
    which is how the Hadamard test lifts a circuit onto its ancilla.
    """

    kind: str
    target: int
    controls: tuple = ()
    angle: Optional[float] = None

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        controls = tuple(int(c) for c in self.controls)
        object.__setattr__(self, "controls", controls)
        if self.kind in _PARAMETERISED:
            if self.angle is None:
                raise ValueError(f"{self.kind} requires an angle")
            object.__setattr__(self, "angle", float(self.angle))
        if self.kind in _NEEDS_CONTROL and not controls:
            raise ValueError(f"{self.kind} requires a control qubit")
        if self.target in controls:
            raise ValueError("control and target must differ")
        if len(set(controls)) != len(controls):
            raise ValueError("duplicate control qubits")

    @property
    def control(self) -> Optional[int]:
        return self.controls[0] if self.controls else None

    @property
    def qubits(self) -> tuple:
        return self.controls + (self.target,)

    def matrix(self) -> np.ndarray:
        """2x2 matrix acting on the target when all controls are set."""
        if self.kind == "RY":
            return ry_matrix(self.angle)
        if self.kind in ("RZ", "CRZ"):
            return rz_matrix(self.angle)
        return _FIXED[self.kind]

    def inverse(self) -> "CircuitOp":
        if self.kind in _SELF_INVERSE:
            return self
        return CircuitOp(self.kind, self.target, self.controls, -self.angle)

    def with_control(self, qubit: int) -> "CircuitOp":
        return CircuitOp(self.kind, self.target, self.controls + (qubit,), self.angle)


# short constructors
def h(q):
    return CircuitOp("H", q)


def ry(q, theta):
    return CircuitOp("RY", q, angle=theta)


def rz(q, theta):
    return CircuitOp("RZ", q, angle=theta)


def crz(control, target, theta):
    return CircuitOp("CRZ", target, (control,), theta)


def cx(control, target):
    return CircuitOp("CX", target, (control,))


def pauli_op(letter: str, q: int) -> CircuitOp:
    return CircuitOp("PAULI_" + letter, q)


@dataclass(frozen=True)
class Circuit:
    num_qubits: int
    ops: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if self.num_qubits < 1:
            raise ValueError("num_qubits must be positive")
        ops = tuple(self.ops)
        for op in ops:
            for q in op.qubits:
                if not 0 <= q < self.num_qubits:
                    raise ValueError(
                        f"qubit index {q} out of range for {self.num_qubits}-qubit circuit"
                    )
        object.__setattr__(self, "ops", ops)

    def __add__(self, other: "Circuit") -> "Circuit":
        if other.num_qubits != self.num_qubits:
            raise ValueError("cannot concatenate circuits of different width")
        return Circuit(self.num_qubits, self.ops + other.ops)

    def __len__(self):
        return len(self.ops)

    def inverse(self) -> "Circuit":
        return Circuit(self.num_qubits, tuple(op.inverse() for op in reversed(self.ops)))

    def widen(self, num_qubits: int) -> "Circuit":
        return Circuit(num_qubits, self.ops)

    def controlled_on(self, ancilla: int) -> "Circuit":
        """Control every op on ``ancilla`` (the circuit is widened to fit it)."""
        width = max(self.num_qubits, ancilla + 1)
        return Circuit(width, tuple(op.with_control(ancilla) for op in self.ops))


def apply_op(amps: np.ndarray, op: CircuitOp) -> np.ndarray:
    mask = 0
    for c in op.controls:
        mask |= 1 << c
    return kernels.apply_1q(amps, op.matrix(), op.target, mask)


def apply_circuit(state: Statevector, circuit: Circuit) -> Statevector:
    if circuit.num_qubits != state.num_qubits:
        raise ValueError(
            f"circuit acts on {circuit.num_qubits} qubits, state has {state.num_qubits}"
        )
    amps = state.amplitudes
    for op in circuit.ops:
        amps = apply_op(amps, op)
    if amps is state.amplitudes:
        return state
    return _trusted_state(state.num_qubits, amps)


def run(circuit: Circuit) -> Statevector:
    """``circuit`` applied to ``|0...0>``."""
    return apply_circuit(Statevector.zero(circuit.num_qubits), circuit)


def inner_product(a: Statevector, b: Statevector) -> complex:
    """``<a|b>``, conjugate-linear in ``a``."""
    if a.num_qubits != b.num_qubits:
        raise ValueError(f"dimension mismatch: {a.num_qubits} vs {b.num_qubits} qubits")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def expectation_z(state: Statevector, qubit: int) -> float:
    if not 0 <= qubit < state.num_qubits:
        raise ValueError(f"qubit {qubit} out of range for {state.num_qubits} qubits")
    probs = state.probabilities()
    bits = (np.arange(state.dim) >> qubit) & 1
    return float(np.sum(probs[bits == 0]) - np.sum(probs[bits == 1]))


@dataclass(frozen=True)
class ShotConfig:
    mode: Literal["exact", "sampled"] = "exact"
    shots: int = 10_000
    seed: int = 42

    def __post_init__(self):
        if self.mode not in ("exact", "sampled"):
            raise ValueError(f"unknown shot mode {self.mode!r}")
        if self.mode == "sampled" and self.shots < 1:
            raise ValueError("sampled mode needs shots >= 1")

    @property
    def exact(self) -> bool:
        return self.mode == "exact"

    def derive(self, *keys: int) -> "ShotConfig":
        """Child config with a seed derived deterministically from ``keys``."""
        seq = np.random.SeedSequence([self.seed & 0xFFFFFFFFFFFFFFFF, *keys])
        child = int(seq.generate_state(1, dtype=np.uint64)[0])
        return ShotConfig(self.mode, self.shots, child)


EXACT = ShotConfig()


def sample_counts(state: Statevector, cfg: ShotConfig) -> dict:
    """Histogram ``{basis index: count}`` of ``cfg.shots`` measurements."""
    if cfg.shots < 1:
        raise ValueError("shots must be >= 1")
    rng = np.random.default_rng(cfg.seed)
    probs = state.probabilities()
    probs = probs / probs.sum()
    counts = rng.multinomial(cfg.shots, probs)
    return {int(i): int(c) for i, c in enumerate(counts) if c}


def hadamard_circuit(
    prep: Optional[Circuit],
    unitary: Circuit,
    part: Literal["real", "imag"] = "real",
) -> Circuit:
    """Ancilla circuit whose ``2 P(ancilla=0) - 1`` is Re/Im ``<psi|U|psi>``.

    The ancilla is the highest qubit, one above the system register.
    """
    n = unitary.num_qubits
    if prep is not None and prep.num_qubits != n:
        raise ValueError("prep and unitary must act on the same register")
    anc = n
    ops = []
    if prep is not None:
        ops.extend(prep.ops)
    ops.append(h(anc))
    if part == "imag":
        # S^dagger up to a global phase
        ops.append(rz(anc, -np.pi / 2))
    elif part != "real":
        raise ValueError(f"part must be 'real' or 'imag', got {part!r}")
    ops.extend(unitary.controlled_on(anc).ops)
    ops.append(h(anc))
    return Circuit(n + 1, tuple(ops))


def hadamard_test(
    prep: Optional[Circuit],
    controlled_unitary: Circuit,
    part: Literal["real", "imag"] = "real",
    cfg: ShotConfig = EXACT,
) -> float:
    """Estimate Re or Im of ``<psi|U|psi>`` with ``|psi> = prep|0>``.

    ``controlled_unitary`` is the bare unitary; each of its ops is controlled
    on an internal ancilla.
    """
    circ = hadamard_circuit(prep, controlled_unitary, part)
    final = run(circ)
    anc = controlled_unitary.num_qubits
    if cfg.exact:
        p0 = float(np.sum(final.probabilities()[: 1 << anc]))
    else:
        counts = sample_counts(final, cfg)
        zeros = sum(c for idx, c in counts.items() if not (idx >> anc) & 1)
        p0 = zeros / cfg.shots
    return 2.0 * p0 - 1.0


def random_circuit(
    num_qubits: int, depth: int, rng: np.random.Generator, kinds: Sequence[str] = GATE_KINDS
) -> Circuit:
    """Random circuit over ``kinds``; two-qubit kinds are skipped on one qubit."""
    kinds = [k for k in kinds if num_qubits > 1 or k not in _NEEDS_CONTROL]
    ops = []
    for _ in range(depth):
        kind = kinds[rng.integers(len(kinds))]
        target = int(rng.integers(num_qubits))
        controls: tuple = ()
        if kind in _NEEDS_CONTROL:
            control = int(rng.integers(num_qubits - 1))
            controls = (control if control < target else control + 1,)
        angle = float(rng.uniform(-2 * np.pi, 2 * np.pi)) if kind in _PARAMETERISED else None
        ops.append(CircuitOp(kind, target, controls, angle))
    return Circuit(num_qubits, tuple(ops))


def random_state(num_qubits: int, rng: np.random.Generator) -> Statevector:
    amps = rng.normal(size=1 << num_qubits) + 1j * rng.normal(size=1 << num_qubits)
    return Statevector(num_qubits, amps / np.linalg.norm(amps))


def circuit_unitary(circuit: Circuit) -> np.ndarray:
    """Dense unitary, column ``j`` being the image of basis state ``j``."""
    dim = 1 << circuit.num_qubits
    cols = []
    for j in range(dim):
        cols.append(apply_circuit(Statevector.basis(circuit.num_qubits, j), circuit).amplitudes)
    return np.stack(cols, axis=1)

