import numpy as np
import pytest
import scipy.linalg
import scipy.stats
from hypothesis import given, settings
from hypothesis import strategies as st

from nisqcrypt import _kernels_py, kernels
from nisqcrypt.circuits import CNOT, H, X
from nisqcrypt.statevec import (
    DENSITY_MAX_QUBITS,
    DensityOperator,
    GateOp,
    SimulationError,
    StateVector,
    apply_gate,
    apply_gates,
    fidelity,
    haar_state,
    inner_product,
    measure_all,
    outcome_probability,
    overlap,
    partial_trace,
    probabilities,
    reduced_density_of_pure,
    tensor,
)

from conftest import dense_op, within_sigma


def random_unitary(dim, seed):
    return scipy.stats.unitary_group.rvs(dim, random_state=seed)



def test_hadamard_on_zero():
    out = apply_gate(StateVector.zero(1), GateOp("H", (0,), H))
    np.testing.assert_allclose(out.amps, [2 ** -0.5, 2 ** -0.5], atol=1e-12)


def test_identity_gate_leaves_state(rng):
    psi = haar_state(3, rng)
    out = apply_gate(psi, GateOp("I", (1,), np.eye(2)))
    np.testing.assert_allclose(out.amps, psi.amps, atol=1e-12)


def test_cnot_basis_action():
    # |10> means qubit 1 set; control on qubit 1, target qubit 0
    start = StateVector.basis(2, 0b10)
    out = apply_gate(start, GateOp("CNOT", (1, 0), CNOT))
    assert abs(out.amps[0b11]) == pytest.approx(1.0)


def test_qubit_zero_is_lowest_bit():
    out = apply_gate(StateVector.zero(3), GateOp("X", (0,), X))
    assert abs(out.amps[1]) == pytest.approx(1.0)


def test_inner_products():
    zero, one = StateVector.basis(1, 0), StateVector.basis(1, 1)
    plus = apply_gate(zero, GateOp("H", (0,), H))
    assert inner_product(plus, plus) == pytest.approx(1.0)
    assert inner_product(zero, one) == 0
    assert overlap(zero, plus) == pytest.approx(0.5)


def test_fidelity_examples():
    z = StateVector.basis(1, 0).to_density()
    o = StateVector.basis(1, 1).to_density()
    assert fidelity(z, z) == pytest.approx(1.0)
    assert fidelity(z, o) == pytest.approx(0.0, abs=1e-12)
    assert fidelity(z, DensityOperator.maximally_mixed(1)) == pytest.approx(0.5)


def test_fidelity_matches_scipy_formula(rng):
    def rand_rho(n):
        g = rng.standard_normal((1 << n, 1 << n)) + 1j * rng.standard_normal((1 << n, 1 << n))
        m = g @ g.conj().T
        return m / np.trace(m)
    a, b = rand_rho(2), rand_rho(2)
    s = scipy.linalg.sqrtm(a)
    want = np.real(np.trace(scipy.linalg.sqrtm(s @ b @ s))) ** 2
    assert fidelity(DensityOperator(2, a), DensityOperator(2, b)) == pytest.approx(want, abs=1e-8)


@given(st.integers(1, 4), st.integers(0, 10 ** 6), st.integers(0, 10 ** 6))
@settings(max_examples=30, deadline=None)
def test_pure_fidelity_is_overlap(n, s1, s2):
    a = haar_state(n, np.random.default_rng(s1))
    b = haar_state(n, np.random.default_rng(s2))
    assert fidelity(a.to_density(), b.to_density()) == pytest.approx(overlap(a, b), abs=1e-9)


@given(st.integers(2, 6), st.data())
@settings(max_examples=40, deadline=None)
def test_gate_matches_dense_oracle(n, data):
    k = data.draw(st.sampled_from([1, 2]))
    targets = tuple(data.draw(st.permutations(range(n)))[:k])
    seed = data.draw(st.integers(0, 10 ** 6))
    u = random_unitary(1 << k, seed)
    psi = haar_state(n, np.random.default_rng(seed))
    out = apply_gate(psi, GateOp("U", targets, u))
    np.testing.assert_allclose(out.amps, dense_op(u, targets, n) @ psi.amps, atol=1e-10)


@given(st.integers(2, 7), st.integers(0, 10 ** 6), st.integers(1, 12))
@settings(max_examples=30, deadline=None)
def test_norm_preserved_and_inverse_restores(n, seed, count):
    rng = np.random.default_rng(seed)
    psi = haar_state(n, rng)
    gates = []
    for _ in range(count):
        k = int(rng.integers(1, 3))
        targets = tuple(int(t) for t in rng.permutation(n)[:k])
        gates.append(GateOp("U", targets, random_unitary(1 << k, int(rng.integers(10 ** 6)))))
    out = apply_gates(psi, gates)
    assert abs(out.norm() - 1) < 1e-10
    back = apply_gates(out, [g.inverse() for g in reversed(gates)])
    np.testing.assert_allclose(back.amps, psi.amps, atol=1e-10)


def test_partial_trace_examples(rng):
    a, b = haar_state(1, rng), haar_state(2, rng)
    prod = tensor(a, b)  # a on qubit 0, b on qubits 1-2
    kept = partial_trace(prod.to_density(), [1, 2])
    np.testing.assert_allclose(kept.mat, b.to_density().mat, atol=1e-12)
    bell = StateVector(2, np.array([1, 0, 0, 1]) / np.sqrt(2))
    np.testing.assert_allclose(partial_trace(bell.to_density(), [0]).mat, np.eye(2) / 2, atol=1e-12)
    rho = haar_state(3, rng).to_density()
    np.testing.assert_allclose(partial_trace(rho, [0, 1, 2]).mat, rho.mat, atol=1e-12)


@given(st.integers(2, 5), st.integers(0, 10 ** 6), st.data())
@settings(max_examples=30, deadline=None)
def test_partial_trace_matches_einsum_oracle(n, seed, data):
    psi = haar_state(n, np.random.default_rng(seed))
    keep = sorted(data.draw(st.sets(st.integers(0, n - 1), min_size=1, max_size=n)))
    # axis j of the reshaped tensor is qubit n-1-j
    t = psi.amps.reshape((2,) * n)
    kept_axes = [n - 1 - q for q in reversed(keep)]
    drop = [ax for ax in range(n) if ax not in kept_axes]
    m = np.transpose(t, kept_axes + drop).reshape(1 << len(keep), -1)
    want = m @ m.conj().T
    got = partial_trace(psi.to_density(), keep).mat
    np.testing.assert_allclose(got, want, atol=1e-12)
    np.testing.assert_allclose(reduced_density_of_pure(psi.amps, n, keep), want, atol=1e-12)


def test_measure_examples(rng):
    assert all(measure_all(StateVector.zero(3), rng) == 0 for _ in range(100))
    plus = apply_gate(StateVector.zero(1), GateOp("H", (0,), H))
    shots = 10 ** 4
    ones = sum(measure_all(plus, rng) for _ in range(shots))
    assert within_sigma(ones, shots, 0.5, z=3)


def test_sampling_matches_probabilities(rng):
    psi = haar_state(3, rng)
    p = probabilities(psi)
    shots = 10 ** 5
    counts = np.bincount([measure_all(psi, rng) for _ in range(shots)], minlength=8)
    for x in range(8):
        assert within_sigma(int(counts[x]), shots, float(p[x]))
    assert outcome_probability(psi, 0) == pytest.approx(abs(inner_product(StateVector.zero(3), psi)) ** 2)


def test_invariant_violations_raise():
    with pytest.raises(SimulationError):
        StateVector(2, np.array([1, 1, 0, 0]))
    with pytest.raises(SimulationError):
        StateVector(2, np.array([1, 0, 0]))
    with pytest.raises(SimulationError):
        GateOp("bad", (0, 0), np.eye(4))
    with pytest.raises(SimulationError):
        GateOp("bad", (0,), np.array([[1, 1], [0, 1]]))
    with pytest.raises(SimulationError):
        DensityOperator(DENSITY_MAX_QUBITS + 1, np.eye(2))
    with pytest.raises(SimulationError):
        DensityOperator(1, np.array([[0.5, 0.1], [0.0, 0.5]]))


@pytest.mark.skipif(kernels.BACKEND != "compiled", reason="compiled extension not built")
@given(st.integers(2, 8), st.integers(0, 10 ** 6))
@settings(max_examples=25, deadline=None)
def test_compiled_kernels_match_fallback(n, seed):
    from nisqcrypt import _kernels
    rng = np.random.default_rng(seed)
    psi = haar_state(n, rng).copy_amps()
    u2 = random_unitary(4, seed)
    u1 = random_unitary(2, seed + 1)
    t0, t1 = (int(x) for x in rng.permutation(n)[:2])
    a, b = psi.copy(), psi.copy()
    _kernels.apply_2q(a, u2, t0, t1)
    _kernels_py.apply_2q(b, u2, t0, t1)
    np.testing.assert_allclose(a, b, atol=1e-12)
    _kernels.apply_1q(a, u1, t1)
    _kernels_py.apply_1q(b, u1, t1)
    np.testing.assert_allclose(a, b, atol=1e-12)
    assert _kernels.zero_probability(a) == pytest.approx(_kernels_py.zero_probability(b))
