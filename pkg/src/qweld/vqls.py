"""Variational quantum linear solver for ``M |alpha> = |b>``.

The cost is the normalised global overlap

    C(theta) = 1 - |<b|M|alpha>|^2 / <alpha|M^2|alpha>

with ``M = sum_j c_j P_j`` expanded in Pauli strings.  Every term of both
sums is the expectation of a Pauli product (denominator) or an overlap of
``|b>`` with a Pauli-transformed ansatz state (numerator), which is what the
Hadamard tests estimate.  Exact mode evaluates those expectations on the
simulated statevector directly; sampled mode runs the ancilla circuits.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal, Optional

import numpy as np

from . import pauli, simcore
from .optim import DfoConfig, minimize_dfo
from .pauli import PauliDecomposition
from .qkernel import amplitude_encode_circuit, num_qubits_for
from .simcore import EXACT, Circuit, ShotConfig, Statevector, crz, ry

DENOM_FLOOR = 1e-12


@dataclass(frozen=True)
class LinearSystem:
    m: np.ndarray
    b: np.ndarray
    lam: float
    decomposition: PauliDecomposition
    size: int  # rows before padding

    @property
    def num_qubits(self) -> int:
        return self.decomposition.num_qubits

    def dense_solution(self) -> np.ndarray:
        """Normalised classical solution of ``m x = b``."""
        x = np.linalg.solve(self.m, self.b)
        return x / np.linalg.norm(x)

    def condition_number(self) -> float:
        eig = np.linalg.eigvalsh(self.m)
        return float(eig[-1] / eig[0])

    @property
    def b_circuit(self) -> Circuit:
        return amplitude_encode_circuit(self.b)


def build_system(
    K,
    y,
    lam: float = 0.1,
    num_qubits: Optional[int] = None,
    tol: float = pauli.DEFAULT_TOL,
) -> LinearSystem:
    """Pad ``K + lam I`` and the normalised labels to a ``2^q`` register.

    Padded rows get ``1 + lam`` on the diagonal and zero right-hand side, so
    the padded coordinates of the solution are exactly zero.
    """
    K = np.asarray(K, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    n = K.shape[0]
    if K.ndim != 2 or K.shape[1] != n:
        raise ValueError(f"kernel must be square, got {K.shape}")
    if y.shape[0] != n:
        raise ValueError(f"{y.shape[0]} labels for a {n}x{n} kernel")
    if lam < 0:
        raise ValueError("lambda must be non-negative")
    q = num_qubits_for(n) if num_qubits is None else int(num_qubits)
    dim = 1 << q
    if n > dim:
        raise ValueError(f"{n} samples do not fit in {q} qubits")
    m = (1.0 + lam) * np.eye(dim)
    m[:n, :n] = K + lam * np.eye(n)
    b = np.zeros(dim)
    b[:n] = y
    norm = np.linalg.norm(b)
    if norm == 0:
        raise ValueError("right-hand side is zero")
    b = b / norm
    return LinearSystem(m, b, float(lam), pauli.decompose(m, tol), n)


def system_from_matrix(m, b, tol: float = pauli.DEFAULT_TOL) -> LinearSystem:
    """Wrap an already padded Hermitian ``m`` and right-hand side ``b``."""
    m = np.asarray(m, dtype=float)
    b = np.asarray(b, dtype=float).ravel()
    b = b / np.linalg.norm(b)
    return LinearSystem(m, b, 0.0, pauli.decompose(m, tol), m.shape[0])


# --------------------------------------------------------------------------
# ansatz


def param_count(num_qubits: int, layers: int = 1) -> int:
    return layers * (2 * num_qubits - 1) + num_qubits


@dataclass(frozen=True)
class VqlsAnsatz:
    num_qubits: int
    layers: int
    params: np.ndarray

    def __post_init__(self):
        params = np.asarray(self.params, dtype=float).ravel()
        expected = param_count(self.num_qubits, self.layers)
        if params.size != expected:
            raise ValueError(
                f"{self.num_qubits}-qubit ansatz with {self.layers} layer(s) takes "
                f"{expected} parameters, got {params.size}"
            )
        object.__setattr__(self, "params", params)

    def circuit(self) -> Circuit:
        q = self.num_qubits
        p = iter(self.params)
        ops = []
        for _ in range(self.layers):
            ops.extend(ry(i, next(p)) for i in range(q))
            ops.extend(crz(i, i + 1, next(p)) for i in range(q - 1))
        ops.extend(ry(i, next(p)) for i in range(q))
        return Circuit(q, tuple(ops))


def ansatz_state(a: VqlsAnsatz) -> Statevector:
    return simcore.run(a.circuit())


# --------------------------------------------------------------------------
# cost


def _cost_exact(state: Statevector, sys: LinearSystem) -> tuple:
    coeffs = sys.decomposition.coefficients
    phi = np.stack([pauli.apply_pauli(state, s).amplitudes for s in sys.decomposition.strings])
    gram = (phi.conj() @ phi.T).real  # <psi|A_m A_n|psi>, real part
    denom = float(coeffs @ gram @ coeffs)
    overlaps = phi @ sys.b  # <b|A_n|psi>, b is real
    numer = float(abs(coeffs @ overlaps) ** 2)
    return numer, denom


def _cost_hadamard(a: VqlsAnsatz, sys: LinearSystem, cfg: ShotConfig) -> tuple:
    coeffs = sys.decomposition.coefficients
    strings = [s.circuit() for s in sys.decomposition.strings]
    v = a.circuit()
    u_dag = sys.b_circuit.inverse()
    T = len(strings)

    # A_m^2 = I, and Re<A_m A_n> is symmetric in (m, n)
    denom = float(np.sum(coeffs**2))
    for i in range(T):
        for j in range(i + 1, T):
            val = simcore.hadamard_test(v, strings[j] + strings[i], "real", cfg.derive(0, i, j))
            denom += 2.0 * coeffs[i] * coeffs[j] * val

    total = 0.0 + 0.0j
    for j in range(T):
        circ = v + strings[j] + u_dag
        re = simcore.hadamard_test(None, circ, "real", cfg.derive(1, j, 0))
        im = simcore.hadamard_test(None, circ, "imag", cfg.derive(1, j, 1))
        total += coeffs[j] * complex(re, im)
    return float(abs(total) ** 2), denom


def cost(
    a: VqlsAnsatz,
    sys: LinearSystem,
    cfg: ShotConfig = EXACT,
    method: Literal["auto", "statevector", "hadamard"] = "auto",
) -> float:
    """Global VQLS cost of the ansatz.

    ``method="auto"`` uses statevector expectations in exact mode and
    Hadamard-test circuits in sampled mode; ``"hadamard"`` forces the
    circuits (exact probabilities in exact mode).
    """
    if a.num_qubits != sys.num_qubits:
        raise ValueError(f"ansatz has {a.num_qubits} qubits, system {sys.num_qubits}")
    if method == "auto":
        method = "statevector" if cfg.exact else "hadamard"
    if method == "statevector":
        numer, denom = _cost_exact(ansatz_state(a), sys)
    elif method == "hadamard":
        numer, denom = _cost_hadamard(a, sys, cfg)
    else:
        raise ValueError(f"unknown cost method {method!r}")
    if denom < DENOM_FLOOR:
        raise ValueError(
            f"<alpha|M^2|alpha> = {denom:.3e}; ansatz state is annihilated by the system matrix"
        )
    return float(1.0 - numer / denom)


# --------------------------------------------------------------------------
# solve


@dataclass
class VqlsResult:
    params_opt: np.ndarray
    cost_trace: list
    solution_amplitudes: np.ndarray
    iterations: int
    converged: bool
    final_cost: float
    imag_residue: float = 0.0
    size: int = 0
    extra: dict = field(default_factory=dict)

    @property
    def solution(self) -> np.ndarray:
        """Solution amplitudes with padded coordinates dropped."""
        return self.solution_amplitudes[: self.size]


def real_amplitudes(state: Statevector) -> tuple:
    """Strip the global phase (largest amplitude made real positive).

    Returns ``(unit real vector, discarded imaginary norm)``.
    """
    amps = state.amplitudes
    k = int(np.argmax(np.abs(amps)))
    rotated = amps * np.exp(-1j * np.angle(amps[k]))
    real = rotated.real
    residue = float(np.linalg.norm(rotated.imag))
    return real / np.linalg.norm(real), residue


def fidelity(amplitudes, target) -> float:
    a = np.asarray(amplitudes)
    t = np.asarray(target)
    return float(abs(np.vdot(t / np.linalg.norm(t), a / np.linalg.norm(a))) ** 2)


def initial_params(num_qubits: int, layers: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.uniform(0.0, 2 * np.pi, size=param_count(num_qubits, layers))


def solve(
    sys: LinearSystem,
    cfg: DfoConfig = DfoConfig(),
    shot_cfg: ShotConfig = EXACT,
    seed: Optional[int] = None,
    layers: int = 1,
) -> VqlsResult:
    """Minimise the VQLS cost until ``cost <= epsilon`` or ``max_iters`` evaluations.

    Sampled runs draw every evaluation from ``shot_cfg`` with a seed derived
    from the evaluation index, so whole trajectories replay exactly.
    """
    seed = cfg.seed if seed is None else seed
    q = sys.num_qubits
    x0 = initial_params(q, layers, seed)
    counter = [0]

    def objective(params):
        k = counter[0]
        counter[0] += 1
        eval_cfg = shot_cfg if shot_cfg.exact else shot_cfg.derive(k)
        return cost(VqlsAnsatz(q, layers, params), sys, eval_cfg)

    x_best, trace = minimize_dfo(objective, x0, cfg)
    final = min(trace) if trace else float("nan")
    state = ansatz_state(VqlsAnsatz(q, layers, x_best))
    amps, residue = real_amplitudes(state)
    extra = {}
    if not shot_cfg.exact:
        extra["exact_final_cost"] = cost(VqlsAnsatz(q, layers, x_best), sys)
    return VqlsResult(
        params_opt=x_best,
        cost_trace=list(trace),
        solution_amplitudes=amps,
        iterations=len(trace),
        converged=bool(trace) and final <= cfg.epsilon,
        final_cost=final,
        imag_residue=residue,
        size=sys.size,
        extra=extra,
    )


def random_spd_system(
    num_qubits: int, kappa: float, rng: np.random.Generator, tol: float = pauli.DEFAULT_TOL
) -> LinearSystem:
    """Random real SPD system with condition number exactly ``kappa`` and a
    random unit right-hand side."""
    dim = 1 << num_qubits
    q, _ = np.linalg.qr(rng.normal(size=(dim, dim)))
    eig = np.ones(dim)
    if dim > 1:
        eig = np.concatenate([[1.0], rng.uniform(1.0, kappa, size=dim - 2), [kappa]])
    m = (q * eig) @ q.T
    m = 0.5 * (m + m.T)
    b = rng.normal(size=dim)
    return system_from_matrix(m, b, tol)
