import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nisqcrypt.circuits import (
    CZ,
    PAULIS,
    SINGLE_QUBIT_CLIFFORDS,
    CircuitDescription,
    CircuitFormatError,
    EnsembleParams,
    apply_circuit,
    brick_layout,
    default_depth,
    deserialize,
    enumerate_ensemble,
    explicit_catalog,
    get_catalog,
    header_size,
    iter_layers,
    phase_key,
    prepare_batch,
    prepare_state,
    register_catalog,
    sample_circuit,
    serialize,
    to_text,
)
from nisqcrypt.statevec import StateVector, haar_state

from conftest import dense_circuit, within_sigma

register_catalog(explicit_catalog("test-identity", [np.eye(4)]))


def test_default_depth():
    assert default_depth(2) == 1
    assert default_depth(3) == 3
    assert default_depth(16) == 16
    assert default_depth(20) == 19


def test_layout_counts():
    sizes = CircuitDescription(EnsembleParams(4, 3, "enum4"), (0,) * 5).layer_sizes()
    assert sizes == [2, 1, 2]
    for n in range(2, 12):
        for layer, count in enumerate(CircuitDescription(
                EnsembleParams(n, 4, "enum4"), (0,) * len(brick_layout(n, 4))).layer_sizes()):
            assert count == (n // 2 if layer % 2 == 0 else (n - 1) // 2)


def test_catalog_shapes():
    crypto = get_catalog("crypto")
    assert crypto.size == 48 ** 4
    np.testing.assert_allclose(crypto.matrix(0), CZ, atol=1e-12)
    assert get_catalog("enum16").size == 16 and get_catalog("enum4").size == 4
    assert len(SINGLE_QUBIT_CLIFFORDS) == 24


@pytest.mark.parametrize("cid", ["enum4", "enum16"])
def test_catalog_entries_unitary(cid):
    for _, m in get_catalog(cid).entries():
        np.testing.assert_allclose(m @ m.conj().T, np.eye(4), atol=1e-10)


def test_crypto_entries_unitary(rng):
    cat = get_catalog("crypto")
    for i in rng.integers(0, cat.size, size=200):
        m = cat.matrix(int(i))
        np.testing.assert_allclose(m @ m.conj().T, np.eye(4), atol=1e-10)


def test_enum16_is_pauli_closed():
    cat = get_catalog("enum16")
    keys = {phase_key(m) for _, m in cat.entries()}
    for p in PAULIS:
        for q in PAULIS:
            for _, m in cat.entries():
                assert phase_key(np.kron(p, q) @ m) in keys


def test_crypto_local_set_is_pauli_closed():
    # closure of the 48 local gates under Paulis makes every (P x P').brick another brick
    t = np.diag([1, np.exp(1j * np.pi / 4)])
    local = list(SINGLE_QUBIT_CLIFFORDS) + [c @ t for c in SINGLE_QUBIT_CLIFFORDS]
    keys = {phase_key(m) for m in local}
    assert len(keys) == 48
    for p in PAULIS:
        for m in local:
            assert phase_key(p @ m) in keys


@pytest.mark.parametrize("cid", ["enum16"])
def test_pauli_closed_ensemble_is_one_design(cid):
    ens = enumerate_ensemble(EnsembleParams(2, 1, cid))
    vecs = prepare_batch(ens)
    avg = np.einsum("ci,cj->ij", vecs, vecs.conj()) / len(ens)
    np.testing.assert_allclose(avg, np.eye(4) / 4, atol=1e-9)


def test_sampling_deterministic_and_uniform():
    p = EnsembleParams(5, 3, "enum4")
    assert sample_circuit(p, np.random.default_rng(7)) == sample_circuit(p, np.random.default_rng(7))
    rng = np.random.default_rng(1)
    draws = 10 ** 5
    p2 = EnsembleParams(2, 1, "enum4")
    counts = np.bincount([sample_circuit(p2, rng).bricks[0] for _ in range(draws)], minlength=4)
    assert all(within_sigma(int(c), draws, 0.25) for c in counts)


def test_enumeration(rng):
    p = EnsembleParams(2, 1, "enum4")
    assert len(enumerate_ensemble(p)) == 4
    p3 = EnsembleParams(3, 3, "enum4")
    ens = enumerate_ensemble(p3)
    assert len(ens) == 4 ** p3.num_bricks == p3.ensemble_size == 64
    members = set(ens)
    for _ in range(50):
        assert sample_circuit(p3, rng) in members
    with pytest.raises(ValueError):
        enumerate_ensemble(EnsembleParams(4, 4, "crypto"))


@given(st.integers(2, 6), st.integers(1, 5), st.sampled_from(["crypto", "enum4", "enum16"]), st.integers(0, 10 ** 6))
@settings(max_examples=40, deadline=None)
def test_prepare_matches_dense_oracle(n, d, cid, seed):
    c = sample_circuit(EnsembleParams(n, d, cid), np.random.default_rng(seed))
    want = dense_circuit(c)[:, 0]
    np.testing.assert_allclose(prepare_state(c).amps, want, atol=1e-10)


@given(st.integers(2, 7), st.integers(0, 10 ** 6))
@settings(max_examples=30, deadline=None)
def test_inverse_roundtrip(n, seed):
    rng = np.random.default_rng(seed)
    c = sample_circuit(EnsembleParams.default(n), rng)
    psi = haar_state(n, rng)
    back = apply_circuit(c, apply_circuit(c, psi), inverse=True)
    np.testing.assert_allclose(back.amps, psi.amps, atol=1e-9)
    zero = apply_circuit(c, prepare_state(c), inverse=True)
    assert abs(zero.amps[0]) ** 2 == pytest.approx(1.0, abs=1e-9)
    # the inverse of the inverse acts like C
    twice = apply_circuit(c, apply_circuit(c, apply_circuit(c, psi), inverse=True))
    np.testing.assert_allclose(twice.amps, apply_circuit(c, psi).amps, atol=1e-9)


def test_identity_circuit():
    c = CircuitDescription(EnsembleParams(3, 2, "test-identity"), (0,) * 2)
    np.testing.assert_allclose(prepare_state(c).amps, StateVector.zero(3).amps)


def test_prepare_batch_matches(rng):
    cs = [sample_circuit(EnsembleParams(4, 4, "crypto"), rng) for _ in range(6)]
    batch = prepare_batch(cs)
    for c, v in zip(cs, batch):
        np.testing.assert_allclose(v, prepare_state(c).amps, atol=1e-12)


def test_serialize_roundtrip_many(rng):
    for _ in range(1000):
        n = int(rng.integers(2, 9))
        p = EnsembleParams(n, int(rng.integers(1, 6)), str(rng.choice(["crypto", "enum4", "enum16"])))
        c = sample_circuit(p, rng)
        blob = serialize(c)
        assert deserialize(blob) == c
        assert len(blob) == header_size(p.catalog) + math.ceil(p.key_bits / 8)


def test_key_bits_formula():
    p = EnsembleParams(20, 19, "crypto")
    assert p.key_bits == p.num_bricks * 23  # 48^4 < 2^23


def test_corrupted_blobs_rejected(rng):
    c = sample_circuit(EnsembleParams(4, 4, "enum16"), rng)
    blob = serialize(c)
    with pytest.raises(CircuitFormatError):
        deserialize(b"XXXX" + blob[4:])
    with pytest.raises(CircuitFormatError):
        deserialize(blob[:3])
    with pytest.raises(CircuitFormatError):
        deserialize(blob[:-1])
    bad = bytearray(blob)
    bad[4] = 99  # version
    with pytest.raises(CircuitFormatError):
        deserialize(bytes(bad))


def test_text_and_layers(rng):
    c = sample_circuit(EnsembleParams(5, 3, "enum4"), rng)
    text = to_text(c)
    assert text.startswith("# n=5 d=3 catalog=enum4")
    assert len(text.strip().splitlines()) == 1 + len(c.bricks)
    assert [len(layer) for layer in iter_layers(c)] == c.layer_sizes()


def test_bad_params():
    with pytest.raises(ValueError):
        EnsembleParams(1, 1)
    with pytest.raises(ValueError):
        EnsembleParams(4, 0)
    with pytest.raises(ValueError):
        EnsembleParams(4, 1, "nope")
