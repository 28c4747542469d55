import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nisqcrypt.circuits import PAULIS, CircuitDescription, EnsembleParams, brick_layout, prepare_state, sample_circuit
from nisqcrypt.noise import (
    NoiseModel,
    WhiteNoisyState,
    analytic_fidelity,
    apply_noisy_circuit,
    eta,
    ideal_fidelity,
    noisy_block,
    white_noise_state,
)
from nisqcrypt.owsg import accept_probability
from nisqcrypt.statevec import DensityOperator, SimulationError, haar_state

from conftest import dense_circuit, dense_op


def test_analytic_fidelity():
    assert analytic_fidelity(50, 0.0) == 1.0
    assert analytic_fidelity(0, 0.3) == 1.0
    s, eps = 320, 1e-5
    assert analytic_fidelity(s, eps) == pytest.approx(math.exp(-2 * s * eps), rel=0.01)


def test_eta_values():
    assert eta(67, 32, 3.22e-3) == pytest.approx(1e-3, rel=0.1)
    assert abs(eta(20, 20, 3.22e-3) - 0.28) <= 0.01
    assert eta(20, 0, 3.22e-3) == 1.0


def test_white_noise_endpoints(rng):
    rho = haar_state(3, rng).to_density()
    np.testing.assert_allclose(white_noise_state(rho, 1.0).mat, rho.mat)
    np.testing.assert_allclose(white_noise_state(rho, 0.0).mat, np.eye(8) / 8)


@given(st.integers(2, 6), st.floats(0, 1), st.integers(0, 10 ** 6))
@settings(max_examples=30, deadline=None)
def test_white_noise_acceptance_identity(n, F, seed):
    c = sample_circuit(EnsembleParams.default(n), np.random.default_rng(seed))
    rho = white_noise_state(prepare_state(c).to_density(), F)
    want = F + (1 - F) / 2 ** n
    assert accept_probability(c, rho) == pytest.approx(want, abs=1e-10)
    assert accept_probability(c, WhiteNoisyState.of_circuit(c, F)) == pytest.approx(want, abs=1e-12)
    assert accept_probability(c, WhiteNoisyState.of_state(prepare_state(c), F)) == pytest.approx(want, abs=1e-12)


def _kraus_oracle(c, eps):
    # independent path: dense brick unitaries and the Pauli-twirl form of the channel
    n = c.n
    cat = c.params.gate_catalog
    rho = np.zeros((1 << n, 1 << n), dtype=complex)
    rho[0, 0] = 1
    for (_, q0, q1), b in zip(c.params.layout, c.bricks):
        u = dense_op(cat.matrix(b), (q0, q1), n)
        rho = u @ rho @ u.conj().T
        for q in (q0, q1):
            acc = (1 - eps) * rho
            for p in PAULIS:
                pq = dense_op(p, (q,), n)
                acc = acc + eps / 4 * pq @ rho @ pq.conj().T
            rho = acc
    return rho


@pytest.mark.parametrize("n,d,eps", [(2, 1, 0.1), (3, 3, 0.05), (4, 4, 0.02)])
def test_exact_density_matches_kraus_oracle(rng, n, d, eps):
    c = sample_circuit(EnsembleParams(n, d), rng)
    out = apply_noisy_circuit(c, NoiseModel("depolarizing", eps))
    np.testing.assert_allclose(out.mat, _kraus_oracle(c, eps), atol=1e-10)
    assert abs(np.trace(out.mat).real - 1) < 1e-10
    assert out.min_eigenvalue() > -1e-9


def test_eps_zero_paths_equal_ideal(rng):
    c = sample_circuit(EnsembleParams(4, 4), rng)
    model = NoiseModel("depolarizing", 0.0)
    np.testing.assert_allclose(apply_noisy_circuit(c, model, "trajectory", rng).amps, prepare_state(c).amps)
    np.testing.assert_allclose(apply_noisy_circuit(c, model).mat, prepare_state(c).to_density().mat, atol=1e-12)


def test_trajectory_average_matches_exact():
    rng = np.random.default_rng(5)
    c = sample_circuit(EnsembleParams(4, 4), rng)
    model = NoiseModel("depolarizing", 0.02)
    exact = ideal_fidelity(c, apply_noisy_circuit(c, model))
    runs = 10 ** 4
    fids = np.array([ideal_fidelity(c, apply_noisy_circuit(c, model, "trajectory", rng)) for _ in range(runs)])
    sem = fids.std(ddof=1) / math.sqrt(runs)
    assert abs(fids.mean() - exact) <= 3 * sem


def test_fidelity_decays_with_depth():
    model = NoiseModel("depolarizing", 0.03)
    for seed in range(5):
        rng = np.random.default_rng(seed)
        n = 4
        bricks = sample_circuit(EnsembleParams(n, 8), rng).bricks
        prev = 1.0
        for d in range(1, 9):
            # prefixes of one deep circuit, so depth is the only thing that changes
            c = CircuitDescription(EnsembleParams(n, d), bricks[: len(brick_layout(n, d))])
            f = ideal_fidelity(c, apply_noisy_circuit(c, model))
            assert f <= prev + 1e-12
            prev = f


def test_model_validation():
    with pytest.raises(ValueError):
        NoiseModel("pink")
    with pytest.raises(ValueError):
        NoiseModel("depolarizing", eps=1.5)
    with pytest.raises(ValueError):
        NoiseModel("white")
    with pytest.raises(ValueError):
        NoiseModel("white", F=-0.1)
    m = NoiseModel.from_config({"noise.kind": "white", "noise.c": "3.22e-3"})
    assert m.white_fidelity(20, 20) == pytest.approx(eta(20, 20, 3.22e-3))
    assert NoiseModel.from_config({"kind": "white", "F": 0.5}).F == 0.5


def test_density_cap_and_trajectory_scale(rng):
    c = sample_circuit(EnsembleParams(13, 2), rng)
    with pytest.raises(SimulationError):
        apply_noisy_circuit(c, NoiseModel("depolarizing", 0.01))
    out = apply_noisy_circuit(c, NoiseModel("depolarizing", 0.01), "trajectory", rng)
    assert abs(out.norm() - 1) < 1e-10


def test_noisy_block_forms(rng):
    c = sample_circuit(EnsembleParams(3, 3), rng)
    assert isinstance(noisy_block(c, NoiseModel("white", F=0.4)), WhiteNoisyState)
    assert isinstance(noisy_block(c, NoiseModel("depolarizing", 0.1)), DensityOperator)
    w = noisy_block(c, NoiseModel("white", F=0.4))
    np.testing.assert_allclose(w.to_density().mat, white_noise_state(prepare_state(c).to_density(), 0.4).mat)
    np.testing.assert_allclose(dense_circuit(c)[:, 0], w.ideal.amps, atol=1e-10)
