"""Random-circuit bit commitment on an enumerated ensemble.

The joint state puts register A (k+1 blocks of n qubits, block 0 lowest) below
register B (ceil(log2 M) qubits holding the ensemble index). Internally a
joint state is handled as an (2^|B|, 2^|A|) matrix whose row c is the A-part
of the branch with description c.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .circuits import CircuitDescription, apply_circuit, make_rng, prepare_batch
from .statevec import (
    DensityOperator,
    SimulationError,
    StateVector,
    matrix_fidelity,
    reduced_density_of_pure,
)

AMPLITUDE_BUDGET = 1 << 24
HIDING_MAX_ENSEMBLE = 256


def b_qubits(m: int) -> int:
    return max(0, math.ceil(math.log2(m))) if m > 1 else 0


def _check_budget(n: int, k: int, m: int) -> None:
    if k < 0:
        raise ValueError("k must be >= 0")
    total = 2 ** (n * (k + 1) + b_qubits(m))
    if total > AMPLITUDE_BUDGET:
        raise SimulationError(f"commitment state needs {total} amplitudes, above the budget of {AMPLITUDE_BUDGET}")


def _kron_power(v: np.ndarray, k: int) -> np.ndarray:
    out = np.ones(1, dtype=np.complex128)
    for _ in range(k):
        out = np.kron(v, out)
    return out


def _branch(b: int, k: int, c: np.ndarray) -> np.ndarray:
    """A-register vector of one branch: k copies of |C> then |0^n> (b=0) or |C> (b=1)."""
    last = c if b else np.eye(len(c), dtype=np.complex128)[0]
    return np.kron(last, _kron_power(c, k))


@dataclass(frozen=True, eq=False)
class CommitmentState:
    b: int
    k: int
    n: int
    ensemble: tuple
    joint: StateVector = field(repr=False)

    @property
    def m(self) -> int:
        return len(self.ensemble)

    @property
    def a_qubits(self) -> int:
        return self.n * (self.k + 1)

    @property
    def b_qubits(self) -> int:
        return b_qubits(self.m)

    def matrix(self) -> np.ndarray:
        return self.joint.amps.reshape(1 << self.b_qubits, 1 << self.a_qubits)

    def reduced_b(self) -> DensityOperator:
        """Register-B operator by partial trace of the joint state."""
        if self.b_qubits == 0:
            return DensityOperator(0, np.ones((1, 1)))
        keep = range(self.a_qubits, self.a_qubits + self.b_qubits)
        return DensityOperator(self.b_qubits, reduced_density_of_pure(self.joint.amps, self.joint.n, keep))


def commit(b: int, n: int, k: int, ensemble: Sequence[CircuitDescription], rng=None) -> CommitmentState:
    """(1/sqrt M) sum_C |branch_b(C)>_A |C-hat>_B.

    ``rng`` is accepted for interface symmetry; the state is deterministic.
    """
    if b not in (0, 1):
        raise ValueError("b must be 0 or 1")
    m = len(ensemble)
    if m == 0:
        raise ValueError("empty ensemble")
    if any(c.n != n for c in ensemble):
        raise ValueError("ensemble circuits must act on n qubits")
    _check_budget(n, k, m)
    vecs = prepare_batch(list(ensemble))
    rows = np.zeros((1 << b_qubits(m), 2 ** (n * (k + 1))), dtype=np.complex128)
    for i in range(m):
        rows[i] = _branch(b, k, vecs[i])
    rows /= math.sqrt(m)
    joint = StateVector._adopt(n * (k + 1) + b_qubits(m), rows.reshape(-1))
    return CommitmentState(b, k, n, tuple(ensemble), joint)


def correctness_overlap(n: int, k: int, ensemble: Sequence[CircuitDescription]) -> float:
    """|<psi_0|psi_1>|^2 = |M^-1 sum_C <0^n|C>|^2."""
    _check_budget(n, k, len(ensemble))
    vecs = prepare_batch(list(ensemble))
    return float(abs(vecs[:, 0].mean()) ** 2)


def closed_form_rho_b(b: int, k: int, ensemble: Sequence[CircuitDescription]) -> np.ndarray:
    """rho_b[c, c'] = M^-1 <C'|C>^(k+b), padded to the full B register."""
    m = len(ensemble)
    vecs = prepare_batch(list(ensemble))
    gram = vecs.conj() @ vecs.T  # gram[c', c] = <C'|C>
    dim = 1 << b_qubits(m)
    out = np.zeros((dim, dim), dtype=np.complex128)
    out[:m, :m] = (gram.T ** (k + b)) / m
    return out


def hiding_fidelity(n: int, k: int, ensemble: Sequence[CircuitDescription], method: str = "closed") -> float:
    """F(rho_0, rho_1) for the two register-B states."""
    m = len(ensemble)
    if m > HIDING_MAX_ENSEMBLE:
        raise SimulationError(f"hiding fidelity is limited to ensembles of {HIDING_MAX_ENSEMBLE}")
    if method == "closed":
        r0, r1 = closed_form_rho_b(0, k, ensemble), closed_form_rho_b(1, k, ensemble)
    elif method == "partial-trace":
        r0 = commit(0, n, k, ensemble).reduced_b().mat
        r1 = commit(1, n, k, ensemble).reduced_b().mat
    else:
        raise ValueError(f"unknown method {method!r}")
    return matrix_fidelity(r0, r1)


def _circuit_unitary(c: CircuitDescription, inverse: bool = False) -> np.ndarray:
    dim = 1 << c.n
    return np.stack([apply_circuit(c, StateVector.basis(c.n, x), inverse).amps for x in range(dim)], axis=1)


def reveal_verify(state: CommitmentState, claimed_b: int) -> float:
    """Undo the constructor for ``claimed_b`` and return Pr[all zeros]."""
    if claimed_b not in (0, 1):
        raise ValueError("claimed bit must be 0 or 1")
    n, k, m = state.n, state.k, state.m
    dim = 1 << n
    rows = state.matrix()
    shape = (dim,) * (k + 1)
    acc = 0.0 + 0.0j
    for i, c in enumerate(state.ensemble):
        inv = _circuit_unitary(c, inverse=True)
        t = rows[i].reshape(shape)
        # axis 0 is the highest block (block k)
        for axis in range(k + 1):
            block = k - axis
            if block == k and claimed_b == 0:
                continue
            t = np.moveaxis(np.tensordot(inv, t, axes=([1], [axis])), 0, axis)
        acc += t.reshape(-1)[0]
    # the inverse B preparation maps the uniform superposition over M indices to |0>
    return float(abs(acc / math.sqrt(m)) ** 2)


# ---------------------------------------------------------------------------
# binding game


Adversary = Callable[[np.ndarray, np.random.Generator], np.ndarray]


def _apply_adversary(adversary, vec: np.ndarray, rng) -> np.ndarray:
    if isinstance(adversary, np.ndarray):
        return (adversary @ vec).reshape(len(vec), -1)
    out = np.asarray(adversary(vec, rng))
    return out.reshape(len(vec), -1)


def binding_game(adversary, n: int, k: int, ensemble: Sequence[CircuitDescription], trials: int = 1,
                 rng=None) -> float:
    """Fidelity of (V (x) I_B)|psi_1> with |psi_0>, averaged over trials.

    ``adversary`` sees one A-register vector at a time (never the B index):
    either a matrix of shape (2^|A| * d_E, 2^|A|) or a callable returning an
    array of shape (2^|A|, d_E) whose columns are the ancilla branches.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = make_rng(rng)
    s0 = commit(0, n, k, ensemble).matrix()
    s1 = commit(1, n, k, ensemble).matrix()
    m = len(ensemble)
    scores = []
    for _ in range(trials):
        acc = None
        for i in range(m):
            out = _apply_adversary(adversary, s1[i], rng)
            contrib = s0[i].conj() @ out
            acc = contrib if acc is None else acc + contrib
        scores.append(float(np.sum(np.abs(acc) ** 2)))
    return float(np.mean(scores))


def identity_adversary(vec, rng=None):
    return vec.reshape(-1, 1)


def discard_last_block_adversary(n: int, k: int) -> Adversary:
    """Move A's last block into the ancilla and leave |0^n> in its place."""
    dim = 1 << n
    rest = dim ** k

    def adv(vec, rng=None):
        t = vec.reshape(dim, rest)
        out = np.zeros((dim, rest, dim), dtype=np.complex128)
        out[0] = t.T
        return out.reshape(dim * rest, dim)
    return adv


def _cheating_score_with_b_access(n: int, k: int, ensemble: Sequence[CircuitDescription]) -> float:
    # test-only: a map controlled on B that applies C^dag to the last block
    s0 = commit(0, n, k, ensemble).matrix()
    s1 = commit(1, n, k, ensemble).matrix()
    dim = 1 << n
    acc = 0.0 + 0.0j
    for i, c in enumerate(ensemble):
        inv = _circuit_unitary(c, inverse=True)
        t = s1[i].reshape(dim, -1)
        acc += s0[i].conj() @ (inv @ t).reshape(-1)
    return float(abs(acc) ** 2)
