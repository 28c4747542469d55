import numpy as np
import pytest
import scipy.stats

from nisqcrypt.circuits import (
    PAULIS,
    EnsembleParams,
    enumerate_ensemble,
    explicit_catalog,
    prepare_batch,
    register_catalog,
)
from nisqcrypt.commitments import (
    CommitmentState,
    _cheating_score_with_b_access,
    binding_game,
    closed_form_rho_b,
    commit,
    correctness_overlap,
    discard_last_block_adversary,
    hiding_fidelity,
    identity_adversary,
    reveal_verify,
)
from nisqcrypt.statevec import SimulationError, StateVector, inner_product, matrix_fidelity

register_catalog(explicit_catalog("test-identity", [np.eye(4)]))
# X-layer bricks: the four states |00>,|01>,|10>,|11> are pairwise orthogonal
register_catalog(explicit_catalog("test-xbasis", [np.kron(PAULIS[a], PAULIS[b]) for a in (0, 1) for b in (0, 1)]))


def ens(cid, n=2, d=1):
    return enumerate_ensemble(EnsembleParams(n, d, cid))


def test_commit_norm_and_layout():
    e = ens("enum16")
    for b in (0, 1):
        s = commit(b, 2, 1, e)
        assert s.joint.norm() == pytest.approx(1.0)
    s0, s1 = commit(0, 2, 1, e).matrix(), commit(1, 2, 1, e).matrix()
    vecs = prepare_batch(e) / np.sqrt(len(e))
    for i in range(len(e)):
        # rows of the reshaped branch index the highest (last) block
        a, b = s0[i].reshape(4, 4), s1[i].reshape(4, 4)
        np.testing.assert_allclose(a[0], vecs[i], atol=1e-12)
        np.testing.assert_allclose(a[1:], 0, atol=1e-12)
        np.testing.assert_allclose(b, np.outer(vecs[i] * np.sqrt(len(e)), vecs[i]), atol=1e-12)


def test_single_member_is_product_state():
    e = ens("enum16")[:1]
    s = commit(1, 2, 1, e)
    assert s.b_qubits == 0
    m = s.matrix().reshape(4, 4)
    assert np.linalg.matrix_rank(m, tol=1e-10) == 1


def test_correctness_bound_on_pauli_closed():
    e = ens("enum16")
    ov = correctness_overlap(2, 1, e)
    assert ov <= 0.25 + 1e-9
    direct = abs(inner_product(commit(0, 2, 1, e).joint, commit(1, 2, 1, e).joint)) ** 2
    assert ov == pytest.approx(direct, abs=1e-10)


def test_identity_ensemble_overlap_one():
    assert correctness_overlap(2, 1, ens("test-identity")) == pytest.approx(1.0)


@pytest.mark.parametrize("cid,k", [("enum16", 1), ("enum16", 2), ("enum4", 1), ("enum4", 3)])
def test_closed_form_matches_partial_trace(cid, k):
    e = ens(cid)
    for b in (0, 1):
        pt = commit(b, 2, k, e).reduced_b().mat
        np.testing.assert_allclose(pt, closed_form_rho_b(b, k, e), atol=1e-9)
    assert hiding_fidelity(2, k, e) == pytest.approx(hiding_fidelity(2, k, e, "partial-trace"), abs=1e-9)


def test_hiding_examples():
    assert hiding_fidelity(2, 1, ens("test-xbasis")) == pytest.approx(1.0)
    r = closed_form_rho_b(1, 2, ens("enum16"))
    assert matrix_fidelity(r, r) == pytest.approx(1.0)


def test_hiding_nondecreasing_in_k():
    e = ens("enum4")
    vals = [hiding_fidelity(2, k, e) for k in (1, 2, 4, 8)]
    assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))


def test_reveal():
    e = ens("enum16")
    s0, s1 = commit(0, 2, 1, e), commit(1, 2, 1, e)
    ov = correctness_overlap(2, 1, e)
    assert reveal_verify(s0, 0) == pytest.approx(1.0, abs=1e-12)
    assert reveal_verify(s1, 1) == pytest.approx(1.0, abs=1e-12)
    assert reveal_verify(s0, 1) == pytest.approx(ov, abs=1e-10)
    assert reveal_verify(s1, 0) == pytest.approx(ov, abs=1e-10)


def test_reveal_after_tampering(rng):
    e = ens("enum16")
    s = commit(0, 2, 1, e)
    u = scipy.stats.unitary_group.rvs(16, random_state=3)
    rows = s.matrix() @ u.T
    bad = CommitmentState(0, 1, 2, s.ensemble, StateVector(s.joint.n, rows.reshape(-1)))
    assert reveal_verify(bad, 0) < 1 - 1e-6


def test_binding_game():
    e = ens("enum16")
    ov = correctness_overlap(2, 1, e)
    assert binding_game(identity_adversary, 2, 1, e) == pytest.approx(ov, abs=1e-10)
    assert binding_game(np.eye(16), 2, 1, e) == pytest.approx(ov, abs=1e-10)
    score = binding_game(discard_last_block_adversary(2, 1), 2, 1, e)
    assert 0 <= score <= 1
    # moving the last block out leaves |C>|0> per branch; score = || mean_C |C> ||^2
    assert score == pytest.approx(np.linalg.norm(prepare_batch(e).mean(axis=0)) ** 2, abs=1e-10)
    assert _cheating_score_with_b_access(2, 1, e) == pytest.approx(1.0)


def test_budget_enforced():
    e = enumerate_ensemble(EnsembleParams(3, 3, "enum4"))
    with pytest.raises(SimulationError):
        commit(0, 3, 7, e)
