import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nisqcrypt.circuits import SINGLE_QUBIT_CLIFFORDS, phase_key
from nisqcrypt.clifford import (
    Clifford,
    CliffordTables,
    all_cliffords,
    is_symplectic,
    num_cliffords,
    num_symplectic,
    pauli_matrix,
    sample_clifford,
    symplectic_from_index,
)

from conftest import within_sigma


def test_group_orders():
    assert num_symplectic(1) == 6 and num_cliffords(1) == 24
    assert num_symplectic(2) == 720 and num_cliffords(2) == 11520


@pytest.mark.parametrize("n", [1, 2])
def test_index_is_bijective(n):
    mats = {symplectic_from_index(i, n).tobytes() for i in range(num_symplectic(n))}
    assert len(mats) == num_symplectic(n)


def test_enumeration_matches_single_qubit_group():
    ours = {phase_key(c.unitary()) for c in all_cliffords(1)}
    ref = {phase_key(m) for m in SINGLE_QUBIT_CLIFFORDS}
    assert ours == ref and len(ours) == 24


def test_sampling_uniform_on_24():
    # (tableau, frame) pairs index the group; the enumeration test pins them to the 24 unitaries
    rng = np.random.default_rng(0)
    index = {(c.sym.tobytes(), c.frame): i for i, c in enumerate(all_cliffords(1))}
    draws = 10 ** 5
    counts = np.zeros(24, dtype=int)
    for _ in range(draws):
        c = sample_clifford(1, rng)
        counts[index[(c.sym.tobytes(), c.frame)]] += 1
    assert all(within_sigma(int(c), draws, 1 / 24) for c in counts)


def test_sampling_deterministic():
    a = sample_clifford(3, np.random.default_rng(4))
    b = sample_clifford(3, np.random.default_rng(4))
    assert np.array_equal(a.sym, b.sym) and a.frame == b.frame


@given(st.integers(1, 4), st.integers(0, 10 ** 6))
@settings(max_examples=40, deadline=None)
def test_paulis_map_to_paulis(n, seed):
    c = sample_clifford(n, np.random.default_rng(seed))
    assert is_symplectic(c.sym)
    u = c.unitary()
    np.testing.assert_allclose(u @ u.conj().T, np.eye(1 << n), atol=1e-10)
    dim = 1 << n
    for j in range(2 * n):
        v = np.zeros(2 * n, dtype=np.uint8)
        v[j] = 1
        img = u @ pauli_matrix(v) @ u.conj().T
        # the image must equal +-P(row j of the tableau)
        want = pauli_matrix(c.sym[j])
        ratio = np.trace(want.conj().T @ img) / dim
        assert abs(abs(ratio) - 1) < 1e-9
        np.testing.assert_allclose(img, ratio * want, atol=1e-9)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_tables_match_direct_unitary_up_to_pauli(n):
    rng = np.random.default_rng(n)
    tab = CliffordTables(n)
    dim = 1 << n
    paulis = [pauli_matrix(np.array([(f >> b) & 1 for b in range(2 * n)], dtype=np.uint8))
              for f in range(4 ** n)]
    for digits in tab.sample_digits(20, rng):
        got = tab.unitary(digits)
        direct = Clifford(n, symplectic_from_index(tab.digits_to_index(digits), n), 0).unitary()
        m = got @ direct.conj().T
        ok = False
        for p in paulis:
            r = np.trace(p.conj().T @ m) / dim
            if abs(abs(r) - 1) < 1e-9:
                ok = np.allclose(m, r * p, atol=1e-9)
                break
        assert ok


def test_invalid_inputs():
    with pytest.raises(ValueError):
        Clifford(1, np.zeros((2, 2), dtype=np.uint8), 0)
    with pytest.raises(ValueError):
        CliffordTables(4)
    with pytest.raises(ValueError):
        sample_clifford(0)
