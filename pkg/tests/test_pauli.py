import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qweld import pauli
from qweld.pauli import PauliDecomposition, PauliString, decompose, reconstruct
from qweld.simcore import Statevector, random_state


def random_hermitian(dim, rng, real=False):
    A = rng.normal(size=(dim, dim))
    if not real:
        A = A + 1j * rng.normal(size=(dim, dim))
    return 0.5 * (A + A.conj().T)


def test_decompose_examples():
    assert decompose(np.eye(2)).as_dict() == {"I": pytest.approx(1.0)}
    assert decompose(np.diag([1.0, -1.0])).as_dict() == {"Z": pytest.approx(1.0)}
    d = decompose(np.array([[2.0, 1.0], [1.0, 2.0]])).as_dict()
    assert d == {"I": pytest.approx(2.0), "X": pytest.approx(1.0)}


def test_string_order_is_qubit0_first():
    # Z on qubit 0 only: diag over index bit 0 -> (1, -1, 1, -1)
    d = decompose(np.diag([1.0, -1.0, 1.0, -1.0]))
    assert d.as_dict() == {"ZI": pytest.approx(1.0)}
    np.testing.assert_allclose(PauliString("ZI").matrix(), np.diag([1, -1, 1, -1]))


def test_reconstruct_examples():
    one = PauliDecomposition(1, ((1.0, PauliString("I")),))
    np.testing.assert_allclose(reconstruct(one), np.eye(2))
    half = PauliDecomposition(1, ((0.5, PauliString("X")), (0.5, PauliString("I"))))
    np.testing.assert_allclose(reconstruct(half), [[0.5, 0.5], [0.5, 0.5]])


def test_terms_sorted_and_unique():
    d = PauliDecomposition(1, ((1.0, PauliString("Z")), (2.0, PauliString("I"))))
    assert [str(s) for s in d.strings] == ["I", "Z"]
    with pytest.raises(ValueError):
        PauliDecomposition(1, ((1.0, PauliString("Z")), (2.0, PauliString("Z"))))
    with pytest.raises(ValueError):
        PauliDecomposition(2, ((1.0, PauliString("Z")),))


@pytest.mark.parametrize(
    "m",
    [
        np.ones((2, 3)),
        np.eye(3),
        np.array([[0.0, 1.0], [0.0, 0.0]]),
    ],
)
def test_decompose_errors(m):
    with pytest.raises(ValueError):
        decompose(m)


@settings(max_examples=100, deadline=None)
@given(st.sampled_from([1, 2, 3]), st.integers(0, 2**32 - 1))
def test_round_trip(n, seed):
    rng = np.random.default_rng(seed)
    M = random_hermitian(1 << n, rng)
    d = decompose(M, tol=0.0)
    assert np.max(np.abs(reconstruct(d) - M)) < 1e-10
    assert len(d) <= 4**n
    assert all(isinstance(c, float) for c in d.coefficients.tolist())


def test_truncation_bound_and_dropped_mass():
    rng = np.random.default_rng(4)
    M = random_hermitian(8, rng, real=True)
    tol = 0.05
    d = decompose(M, tol)
    full = decompose(M, 0.0)
    dropped = [c for c, s in zip(full.coefficients, full.strings) if abs(c) <= tol]
    assert len(d) == len(full) - len(dropped)
    assert d.dropped_mass == pytest.approx(float(np.sum(np.abs(dropped))))
    bound = tol * len(dropped) + 1e-10
    assert np.max(np.abs(reconstruct(d) - M)) <= bound


def test_identity_one_term():
    for n in (1, 2, 3):
        assert len(decompose(np.eye(1 << n))) == 1


def test_coefficient_oracle():
    # independent trace formula
    rng = np.random.default_rng(9)
    M = random_hermitian(4, rng)
    d = decompose(M, 0.0).as_dict()
    for s in map(PauliString, pauli.all_strings(2)):
        c = np.trace(s.matrix() @ M).real / 4
        assert d.get(str(s), 0.0) == pytest.approx(c, abs=1e-12)


def test_apply_pauli_examples():
    zero = Statevector.zero(1)
    np.testing.assert_allclose(pauli.apply_pauli(zero, "Z").amplitudes, [1, 0])
    np.testing.assert_allclose(pauli.apply_pauli(zero, "X").amplitudes, [0, 1])
    with pytest.raises(ValueError):
        pauli.apply_pauli(zero, "XZ")


def test_apply_pauli_all_two_qubit_strings():
    rng = np.random.default_rng(2)
    psi = random_state(2, rng)
    for letters in itertools.product("IXYZ", repeat=2):
        s = PauliString("".join(letters))
        got = pauli.apply_pauli(psi, s).amplitudes
        np.testing.assert_allclose(got, s.matrix() @ psi.amplitudes, atol=1e-12)
        twice = pauli.apply_pauli(pauli.apply_pauli(psi, s), s).amplitudes
        np.testing.assert_allclose(twice, psi.amplitudes, atol=1e-12)


def test_pauli_circuit_matches_matrix():
    from qweld.simcore import circuit_unitary

    for s in ("XYZ", "YYI", "IZX"):
        p = PauliString(s)
        # circuit form equals the matrix up to the Y-gate global phase convention
        U = circuit_unitary(p.circuit())
        M = p.matrix()
        k = np.unravel_index(np.argmax(np.abs(M)), M.shape)
        phase = U[k] / M[k]
        np.testing.assert_allclose(U, phase * M, atol=1e-12)
        assert abs(abs(phase) - 1) < 1e-12


def test_apply_decomposition():
    rng = np.random.default_rng(8)
    M = random_hermitian(8, rng)
    psi = random_state(3, rng)
    out = pauli.apply_decomposition(psi, decompose(M, 0.0))
    np.testing.assert_allclose(out, M @ psi.amplitudes, atol=1e-12)
