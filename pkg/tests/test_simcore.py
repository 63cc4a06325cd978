import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qweld import simcore
from qweld.simcore import (
    Circuit,
    CircuitOp,
    ShotConfig,
    Statevector,
    apply_circuit,
    circuit_unitary,
    cx,
    crz,
    expectation_z,
    h,
    hadamard_test,
    inner_product,
    pauli_op,
    random_circuit,
    random_state,
    run,
    ry,
    rz,
)

S2 = 1 / np.sqrt(2)


def amps(circ, n=None):
    return run(circ).amplitudes


# --- oracles -----------------------------------------------------------------


def test_h_on_zero():
    np.testing.assert_allclose(amps(Circuit(1, (h(0),))), [S2, S2], atol=1e-15)


def test_ry_pi_flips():
    np.testing.assert_allclose(amps(Circuit(1, (ry(0, np.pi),))), [0, 1], atol=1e-15)


def test_cx_truth_table():
    # |10> in qubit order (q0=1, q1=0) is basis index 1; CX(0->1) sends it to index 3
    st0 = Statevector.basis(2, 1)
    out = apply_circuit(st0, Circuit(2, (cx(0, 1),)))
    np.testing.assert_allclose(out.amplitudes, [0, 0, 0, 1])
    # control clear -> untouched
    out = apply_circuit(Statevector.basis(2, 2), Circuit(2, (cx(0, 1),)))
    np.testing.assert_allclose(out.amplitudes, [0, 0, 1, 0])


def test_little_endian():
    # X on qubit 1 of 3 qubits -> basis index 2
    out = run(Circuit(3, (pauli_op("X", 1),)))
    assert np.argmax(np.abs(out.amplitudes)) == 2


def test_gate_matrices():
    t = 0.37
    c, s = np.cos(t / 2), np.sin(t / 2)
    np.testing.assert_allclose(simcore.ry_matrix(t), [[c, -s], [s, c]])
    np.testing.assert_allclose(simcore.rz_matrix(t), np.diag([np.exp(-0.5j * t), np.exp(0.5j * t)]))
    # CRZ as a dense 4x4 (control 0, target 1)
    U = circuit_unitary(Circuit(2, (crz(0, 1, t),)))
    expect = np.diag([1, np.exp(-0.5j * t), 1, np.exp(0.5j * t)])
    np.testing.assert_allclose(U, expect, atol=1e-15)


def test_inner_product_examples():
    rng = np.random.default_rng(1)
    psi = random_state(3, rng)
    assert abs(inner_product(psi, psi) - 1) < 1e-12
    assert inner_product(Statevector.basis(1, 0), Statevector.basis(1, 1)) == 0
    b = Statevector(1, [S2, S2])
    assert abs(inner_product(Statevector.basis(1, 0), b) - S2) < 1e-15
    # conjugate-linear in the first argument
    a = Statevector(1, [1j, 0])
    assert abs(inner_product(a, Statevector.basis(1, 0)) - (-1j)) < 1e-15


def test_inner_product_mismatch():
    with pytest.raises(ValueError):
        inner_product(Statevector.zero(1), Statevector.zero(2))


def test_expectation_z_examples():
    assert expectation_z(Statevector.basis(1, 0), 0) == pytest.approx(1.0)
    assert expectation_z(Statevector.basis(1, 1), 0) == pytest.approx(-1.0)
    assert expectation_z(run(Circuit(1, (h(0),))), 0) == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(ValueError):
        expectation_z(Statevector.zero(2), 2)


# --- validation ----------------------------------------------------------------


def test_statevector_validation():
    with pytest.raises(ValueError):
        Statevector(2, [1, 0, 0])
    with pytest.raises(ValueError):
        Statevector(1, [1, 1])
    sv = Statevector.zero(2)
    with pytest.raises(ValueError):
        sv.amplitudes[0] = 0


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(kind="RY", target=0),  # missing angle
        dict(kind="CX", target=0),  # missing control
        dict(kind="CRZ", target=0, controls=(0,), angle=1.0),  # control == target
        dict(kind="SWAP", target=0),
    ],
)
def test_op_validation(kwargs):
    with pytest.raises(ValueError):
        CircuitOp(**kwargs)


def test_circuit_index_range():
    with pytest.raises(ValueError):
        Circuit(2, (h(2),))
    with pytest.raises(ValueError):
        apply_circuit(Statevector.zero(3), Circuit(2, (h(0),)))


# --- invariants ------------------------------------------------------------------


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 6), st.integers(0, 20), st.integers(0, 2**32 - 1))
def test_norm_and_inverse(n, depth, seed):
    rng = np.random.default_rng(seed)
    circ = random_circuit(n, depth, rng)
    psi = random_state(n, rng)
    out = apply_circuit(psi, circ)
    assert abs(np.linalg.norm(out.amplitudes) - 1) < 1e-9
    back = apply_circuit(out, circ.inverse())
    assert np.max(np.abs(back.amplitudes - psi.amplitudes)) < 1e-9


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 4), st.integers(0, 12), st.integers(0, 2**32 - 1))
def test_hadamard_matches_overlap(n, depth, seed):
    rng = np.random.default_rng(seed)
    prep = random_circuit(n, depth, rng)
    U = random_circuit(n, depth, rng)
    psi = run(prep)
    direct = inner_product(psi, apply_circuit(psi, U))
    assert abs(hadamard_test(prep, U, "real") - direct.real) < 1e-12
    assert abs(hadamard_test(prep, U, "imag") - direct.imag) < 1e-12


def test_hadamard_examples():
    assert hadamard_test(None, Circuit(1, ())) == pytest.approx(1.0)
    z = Circuit(1, (pauli_op("Z", 0),))
    assert hadamard_test(Circuit(1, (h(0),)), z) == pytest.approx(0.0, abs=1e-15)
    # Im <0|RZ(t)|0> = -sin(t/2)
    t = 0.8
    val = hadamard_test(None, Circuit(1, (rz(0, t),)), "imag")
    assert val == pytest.approx(-np.sin(t / 2), abs=1e-12)


def test_hadamard_random_pauli_3q():
    from qweld.pauli import PauliString

    rng = np.random.default_rng(3)
    prep = random_circuit(3, 15, rng)
    psi = run(prep)
    for s in ("XYZ", "ZZI", "YIX"):
        p = PauliString(s)
        direct = psi.amplitudes.conj() @ p.matrix() @ psi.amplitudes
        assert abs(hadamard_test(prep, p.circuit(), "real") - direct.real) < 1e-12


def test_controlled_circuit_unitary():
    rng = np.random.default_rng(5)
    circ = random_circuit(2, 8, rng)
    U = circuit_unitary(circ)
    cu = circuit_unitary(circ.controlled_on(2))
    expect = np.block([[np.eye(4), np.zeros((4, 4))], [np.zeros((4, 4)), U]])
    np.testing.assert_allclose(cu, expect, atol=1e-12)


# --- sampling --------------------------------------------------------------------


def test_sample_counts_examples():
    cfg = ShotConfig("sampled", 100, 1)
    assert simcore.sample_counts(Statevector.zero(1), cfg) == {0: 100}
    plus = run(Circuit(1, (h(0),)))
    big = ShotConfig("sampled", 10_000, 7)
    counts = simcore.sample_counts(plus, big)
    assert sum(counts.values()) == 10_000
    assert abs(counts[0] - 5000) <= 200
    assert counts == simcore.sample_counts(plus, big)


def test_sampled_mode_needs_shots():
    with pytest.raises(ValueError):
        ShotConfig("sampled", 0)
    with pytest.raises(ValueError):
        ShotConfig("noisy")


def test_sampled_hadamard_close():
    rng = np.random.default_rng(11)
    prep = random_circuit(3, 10, rng)
    U = random_circuit(3, 10, rng)
    exact = hadamard_test(prep, U)
    est = hadamard_test(prep, U, "real", ShotConfig("sampled", 10_000, 3))
    assert abs(est - exact) < 0.03
    # estimates are on the 2/shots grid
    assert abs(round((est + 1) / 2 * 10_000) - (est + 1) / 2 * 10_000) < 1e-6


def test_derive_is_deterministic_and_distinct():
    cfg = ShotConfig("sampled", 10, 5)
    assert cfg.derive(1, 2) == cfg.derive(1, 2)
    assert cfg.derive(1, 2).seed != cfg.derive(2, 1).seed
