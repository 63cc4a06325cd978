import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qweld import simcore, vqls
from qweld.optim import DfoConfig
from qweld.simcore import ShotConfig, Statevector
from qweld.vqls import VqlsAnsatz, build_system, system_from_matrix

S2 = 1 / np.sqrt(2)


def dense_cost(state, m, b):
    mv = m @ state
    return 1.0 - abs(np.vdot(b, mv)) ** 2 / np.real(np.vdot(mv, mv))


def test_build_system_examples():
    s = build_system(np.eye(2), [1, -1], lam=0.0)
    np.testing.assert_allclose(s.m, np.eye(2))
    np.testing.assert_allclose(s.b, [S2, -S2])
    s = build_system(np.eye(2), [1, 1], lam=1.0)
    np.testing.assert_allclose(s.m, 2 * np.eye(2))
    np.testing.assert_allclose(s.b, [S2, S2])


def test_build_system_padding():
    rng = np.random.default_rng(0)
    A = rng.uniform(size=(3, 3))
    K = 0.5 * (A + A.T) + 3 * np.eye(3)
    y = np.array([1.0, -1.0, 1.0])
    s = build_system(K, y, lam=0.3)
    assert s.m.shape == (4, 4) and s.num_qubits == 2 and s.size == 3
    assert s.m[3, 3] == pytest.approx(1.3) and s.b[3] == 0
    assert np.all(s.m[3, :3] == 0)
    # the padded coordinate of the dense solution is zero
    x = np.linalg.solve(s.m, s.b)
    assert x[3] == 0
    np.testing.assert_allclose(x[:3], np.linalg.solve(K + 0.3 * np.eye(3), y / np.sqrt(3)))
    np.testing.assert_allclose(vqls.pauli.reconstruct(s.decomposition).real, s.m, atol=1e-7)


def test_build_system_errors():
    with pytest.raises(ValueError):
        build_system(np.eye(3), [1, -1, 1], num_qubits=1)
    with pytest.raises(ValueError):
        build_system(np.eye(2), [1, -1], lam=-0.1)
    with pytest.raises(ValueError):
        build_system(np.eye(2), [1, -1, 1])


def test_param_count_and_validation():
    assert vqls.param_count(3, 1) == 8
    assert vqls.param_count(3, 3) == 3 * 5 + 3
    with pytest.raises(ValueError):
        VqlsAnsatz(3, 1, np.zeros(7))


def test_ansatz_examples():
    st0 = vqls.ansatz_state(VqlsAnsatz(3, 2, np.zeros(vqls.param_count(3, 2))))
    np.testing.assert_allclose(st0.amplitudes, np.eye(8)[0])
    one = vqls.ansatz_state(VqlsAnsatz(1, 1, [np.pi / 2, 0.0]))
    np.testing.assert_allclose(one.amplitudes, [np.cos(np.pi / 4), np.sin(np.pi / 4)], atol=1e-15)
    p = np.random.default_rng(1).uniform(0, 2 * np.pi, vqls.param_count(2, 1))
    a, b = vqls.ansatz_state(VqlsAnsatz(2, 1, p)), vqls.ansatz_state(VqlsAnsatz(2, 1, p))
    assert abs(np.linalg.norm(a.amplitudes) - 1) < 1e-12
    np.testing.assert_array_equal(a.amplitudes, b.amplitudes)


def test_ansatz_layout():
    ops = VqlsAnsatz(3, 1, np.arange(8.0)).circuit().ops
    assert [op.kind for op in ops] == ["RY"] * 3 + ["CRZ"] * 2 + ["RY"] * 3
    assert [(op.control, op.target) for op in ops[3:5]] == [(0, 1), (1, 2)]


def test_cost_extremes():
    zero = VqlsAnsatz(2, 1, np.zeros(5))
    assert vqls.cost(zero, system_from_matrix(np.eye(4), [1, 0, 0, 0])) == pytest.approx(0, abs=1e-14)
    assert vqls.cost(zero, system_from_matrix(np.eye(4), [0, 1, 0, 0])) == pytest.approx(1, abs=1e-14)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 3), st.integers(1, 2), st.integers(0, 2**32 - 1))
def test_cost_matches_dense_oracle(q, layers, seed):
    rng = np.random.default_rng(seed)
    sys_ = vqls.random_spd_system(q, 5.0, rng, tol=0.0)
    a = VqlsAnsatz(q, layers, rng.uniform(0, 2 * np.pi, vqls.param_count(q, layers)))
    expect = dense_cost(vqls.ansatz_state(a).amplitudes, sys_.m, sys_.b)
    assert vqls.cost(a, sys_, method="statevector") == pytest.approx(expect, abs=1e-10)
    assert vqls.cost(a, sys_, method="hadamard") == pytest.approx(expect, abs=1e-10)


def test_cost_global_phase_invariant():
    rng = np.random.default_rng(5)
    sys_ = vqls.random_spd_system(2, 4.0, rng, tol=0.0)
    psi = simcore.random_state(2, rng)
    rotated = Statevector(2, psi.amplitudes * np.exp(0.7j))
    n1, d1 = vqls._cost_exact(psi, sys_)
    n2, d2 = vqls._cost_exact(rotated, sys_)
    assert n1 / d1 == pytest.approx(n2 / d2, abs=1e-14)


def test_cost_degenerate_denominator():
    m = np.diag([1.0, 0.0])
    s = vqls.LinearSystem(m, np.array([1.0, 0.0]), 0.0, vqls.pauli.decompose(m), 2)
    with pytest.raises(ValueError, match="annihilated"):
        vqls.cost(VqlsAnsatz(1, 1, [np.pi, 0.0]), s)


def test_cost_zero_iff_solution():
    m = np.diag([1.0, 2.0])
    s = system_from_matrix(m, [S2, S2])
    x = s.dense_solution()
    theta = 2 * np.arctan2(x[1], x[0])
    assert vqls.cost(VqlsAnsatz(1, 1, [theta, 0.0]), s) == pytest.approx(0, abs=1e-12)
    assert vqls.cost(VqlsAnsatz(1, 1, [theta + 0.3, 0.0]), s) > 1e-3


def test_sampled_cost_reproducible_and_close():
    rng = np.random.default_rng(6)
    s = vqls.random_spd_system(2, 3.0, rng)
    a = VqlsAnsatz(2, 1, rng.uniform(0, 2 * np.pi, 5))
    cfg = ShotConfig("sampled", 20_000, 3)
    c1, c2 = vqls.cost(a, s, cfg), vqls.cost(a, s, cfg)
    assert c1 == c2
    assert abs(c1 - vqls.cost(a, s)) < 0.1


def test_solve_identity():
    s = system_from_matrix(np.eye(2), [1.0, 0.0])
    res = vqls.solve(s, DfoConfig(), seed=3)
    assert res.converged and res.final_cost <= 0.01
    assert vqls.fidelity(res.solution_amplitudes, s.b) >= 0.99
    assert abs(np.linalg.norm(res.solution_amplitudes) - 1) < 1e-9


def test_solve_diagonal():
    s = system_from_matrix(np.diag([1.0, 2.0]), [S2, S2])
    res = vqls.solve(s, DfoConfig(), seed=1)
    target = np.array([1.0, 0.5]) / np.linalg.norm([1.0, 0.5])
    assert res.converged
    assert vqls.fidelity(res.solution_amplitudes, target) >= 0.99


def test_solve_zero_budget():
    s = system_from_matrix(np.eye(2), [1.0, 0.0])
    res = vqls.solve(s, DfoConfig(max_iters=0), seed=4)
    assert not res.converged and res.cost_trace == [] and res.iterations == 0
    np.testing.assert_array_equal(res.params_opt, vqls.initial_params(1, 1, 4))


def test_solve_result_invariants():
    rng = np.random.default_rng(2)
    s = vqls.random_spd_system(2, 5.0, rng)
    res = vqls.solve(s, DfoConfig(max_iters=60), seed=9)
    assert res.iterations == len(res.cost_trace) <= 60
    assert res.converged == (res.final_cost <= 0.01)
    assert res.final_cost == min(res.cost_trace)
    final = vqls.cost(VqlsAnsatz(2, 1, res.params_opt), s)
    assert final == pytest.approx(res.final_cost, abs=1e-12)
    again = vqls.solve(s, DfoConfig(max_iters=60), seed=9)
    assert again.cost_trace == res.cost_trace


def test_random_spd_condition():
    rng = np.random.default_rng(7)
    for kappa in (2.0, 10.0, 50.0):
        s = vqls.random_spd_system(3, kappa, rng)
        assert s.condition_number() == pytest.approx(kappa, rel=1e-8)


def test_real_amplitudes_strip_phase():
    v = np.array([0.6, -0.8]) * np.exp(1.1j)
    amps, residue = vqls.real_amplitudes(Statevector(1, v))
    np.testing.assert_allclose(amps, [-0.6, 0.8], atol=1e-12)  # largest made positive
    assert residue < 1e-12
