"""Exact pure-state and density-operator simulation.

Qubit ``q`` is bit ``q`` (least significant first) of the amplitude index.
Returned states are immutable; the in-place kernels only ever touch buffers
that were freshly copied for the operation.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import kernels

NORM_TOL = 1e-10
UNITARY_TOL = 1e-10
EIG_CUTOFF = 1e-13
PSD_TOL = 1e-9
DENSITY_MAX_QUBITS = 12


class SimulationError(ValueError):
    pass


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def is_unitary(m: np.ndarray, tol: float = UNITARY_TOL) -> bool:
    m = np.asarray(m)
    return m.ndim == 2 and m.shape[0] == m.shape[1] and np.allclose(
        m.conj().T @ m, np.eye(m.shape[0]), atol=tol, rtol=0
    )


@dataclass(frozen=True, eq=False)
class StateVector:
    n: int
    amps: np.ndarray

    def __post_init__(self):
        amps = np.ascontiguousarray(self.amps, dtype=np.complex128)
        if amps.shape != (1 << self.n,):
            raise SimulationError(f"expected {1 << self.n} amplitudes, got {amps.shape}")
        if abs(np.linalg.norm(amps) - 1.0) > NORM_TOL:
            raise SimulationError("state is not normalized")
        if amps.flags.writeable:
            amps = _frozen(amps.copy())
        object.__setattr__(self, "amps", amps)

    @classmethod
    def zero(cls, n: int) -> "StateVector":
        a = np.zeros(1 << n, dtype=np.complex128)
        a[0] = 1.0
        return cls(n, _frozen(a))

    @classmethod
    def basis(cls, n: int, index: int) -> "StateVector":
        a = np.zeros(1 << n, dtype=np.complex128)
        a[index] = 1.0
        return cls(n, _frozen(a))

    @classmethod
    def _adopt(cls, n: int, buf: np.ndarray) -> "StateVector":
        # takes ownership of buf; skips the normalization check
        obj = object.__new__(cls)
        object.__setattr__(obj, "n", n)
        object.__setattr__(obj, "amps", _frozen(buf))
        return obj

    def copy_amps(self) -> np.ndarray:
        return self.amps.copy()

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def to_density(self) -> "DensityOperator":
        return DensityOperator(self.n, np.outer(self.amps, self.amps.conj()))


@dataclass(frozen=True, eq=False)
class DensityOperator:
    n: int
    mat: np.ndarray

    def __post_init__(self):
        if self.n > DENSITY_MAX_QUBITS:
            raise SimulationError(
                f"density operators are limited to {DENSITY_MAX_QUBITS} qubits (got {self.n})"
            )
        m = np.ascontiguousarray(self.mat, dtype=np.complex128)
        dim = 1 << self.n
        if m.shape != (dim, dim):
            raise SimulationError(f"expected a {dim}x{dim} matrix, got {m.shape}")
        if not np.allclose(m, m.conj().T, atol=NORM_TOL, rtol=0):
            raise SimulationError("density operator is not Hermitian")
        if abs(np.trace(m).real - 1.0) > NORM_TOL:
            raise SimulationError("density operator does not have unit trace")
        if m.flags.writeable:
            m = _frozen(m.copy())
        object.__setattr__(self, "mat", m)

    @classmethod
    def maximally_mixed(cls, n: int) -> "DensityOperator":
        dim = 1 << n
        return cls(n, np.eye(dim, dtype=np.complex128) / dim)

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.mat).min())


@dataclass(frozen=True, eq=False)
class GateOp:
    kind: str
    targets: tuple
    matrix: np.ndarray

    def __post_init__(self):
        targets = tuple(int(t) for t in self.targets)
        m = np.ascontiguousarray(self.matrix, dtype=np.complex128)
        if len(targets) not in (1, 2):
            raise SimulationError("gates act on one or two qubits")
        if len(set(targets)) != len(targets):
            raise SimulationError("gate targets must be distinct")
        if m.shape != (1 << len(targets),) * 2:
            raise SimulationError(f"matrix shape {m.shape} does not match {len(targets)} targets")
        if not is_unitary(m):
            raise SimulationError(f"gate {self.kind!r} is not unitary")
        object.__setattr__(self, "targets", targets)
        object.__setattr__(self, "matrix", _frozen(m.copy()) if m.flags.writeable else m)

    def inverse(self) -> "GateOp":
        return GateOp(self.kind + "^dg", self.targets, self.matrix.conj().T)


def apply_matrix_inplace(buf: np.ndarray, matrix: np.ndarray, targets: Sequence[int]) -> None:
    """Kernel dispatch on a raw, exclusively owned amplitude buffer."""
    if len(targets) == 1:
        kernels.apply_1q(buf, matrix, targets[0])
    else:
        kernels.apply_2q(buf, matrix, targets[0], targets[1])


def apply_gate(state: StateVector, gate: GateOp) -> StateVector:
    if any(t < 0 or t >= state.n for t in gate.targets):
        raise SimulationError(f"gate targets {gate.targets} out of range for {state.n} qubits")
    buf = state.copy_amps()
    apply_matrix_inplace(buf, gate.matrix, gate.targets)
    return StateVector._adopt(state.n, buf)


def apply_gates(state: StateVector, gates: Iterable[GateOp]) -> StateVector:
    buf = state.copy_amps()
    for g in gates:
        if any(t >= state.n for t in g.targets):
            raise SimulationError(f"gate targets {g.targets} out of range for {state.n} qubits")
        apply_matrix_inplace(buf, g.matrix, g.targets)
    return StateVector._adopt(state.n, buf)


def inner_product(a: StateVector, b: StateVector) -> complex:
    """Return <a|b>."""
    if a.n != b.n:
        raise SimulationError(f"dimension mismatch: {a.n} vs {b.n} qubits")
    return complex(np.vdot(a.amps, b.amps))


def overlap(a: StateVector, b: StateVector) -> float:
    """Squared overlap |<a|b>|^2."""
    return abs(inner_product(a, b)) ** 2


def _psd_sqrt(m: np.ndarray, what: str) -> np.ndarray:
    w, v = np.linalg.eigh(m)
    if w.min() < -PSD_TOL:
        raise SimulationError(f"{what} is not positive semidefinite (min eigenvalue {w.min():.3g})")
    # round-off eigenvalues would contribute sqrt(1e-17) ~ 3e-9 each
    w = np.where(w > EIG_CUTOFF * max(1.0, float(w.max())), w, 0.0)
    return (v * np.sqrt(w)) @ v.conj().T


def fidelity(rho: DensityOperator, sigma: DensityOperator) -> float:
    """Squared-trace fidelity ``Tr(sqrt(sqrt(rho) sigma sqrt(rho)))**2``."""
    if rho.n != sigma.n:
        raise SimulationError(f"dimension mismatch: {rho.n} vs {sigma.n} qubits")
    return matrix_fidelity(rho.mat, sigma.mat)


def matrix_fidelity(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Fidelity between raw PSD matrices (no trace or size restriction)."""
    s = _psd_sqrt(rho, "rho")
    _psd_sqrt(sigma, "sigma")
    inner = s @ sigma @ s
    inner = (inner + inner.conj().T) / 2
    w = np.linalg.eigvalsh(inner)
    w = np.where(w > EIG_CUTOFF * max(1.0, float(w.max())), w, 0.0)
    return float(min(1.0, max(0.0, np.sum(np.sqrt(w)) ** 2)))


def reduce_matrix(mat: np.ndarray, n: int, keep: Sequence[int]) -> np.ndarray:
    """Partial trace of a raw 2^n x 2^n matrix onto the qubits in ``keep``.

    The kept qubits retain their relative order (lowest index stays least
    significant).
    """
    keep = sorted(set(int(q) for q in keep))
    if not keep:
        raise SimulationError("keep set must be non-empty")
    if keep[0] < 0 or keep[-1] >= n:
        raise SimulationError(f"keep set {keep} out of range for {n} qubits")
    drop = [q for q in range(n) if q not in keep]
    t = mat.reshape((2,) * (2 * n))
    # row axis of qubit q is n-1-q, column axis is 2n-1-q
    letters = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
    rows = [letters[i] for i in range(n)]
    cols = [letters[n + i] for i in range(n)]
    for q in drop:
        cols[n - 1 - q] = rows[n - 1 - q]
    out_rows = [rows[n - 1 - q] for q in reversed(keep)]
    out_cols = [cols[n - 1 - q] for q in reversed(keep)]
    spec = "".join(rows) + "".join(cols) + "->" + "".join(out_rows) + "".join(out_cols)
    dk = 1 << len(keep)
    return np.einsum(spec, t).reshape(dk, dk)


def partial_trace(rho: DensityOperator, keep: Sequence[int]) -> DensityOperator:
    keep = sorted(set(keep))
    if len(keep) == rho.n:
        return rho
    return DensityOperator(len(keep), reduce_matrix(rho.mat, rho.n, keep))


def reduced_density_of_pure(amps: np.ndarray, n: int, keep: Sequence[int]) -> np.ndarray:
    """Reduced matrix of a pure state on ``keep`` without forming the full 4^n operator."""
    keep = sorted(set(int(q) for q in keep))
    if not keep:
        raise SimulationError("keep set must be non-empty")
    drop = [q for q in range(n) if q not in keep]
    t = amps.reshape((2,) * n)
    axes = [n - 1 - q for q in reversed(keep)] + [n - 1 - q for q in reversed(drop)]
    m = np.transpose(t, axes).reshape(1 << len(keep), -1)
    return m @ m.conj().T


def probabilities(state: StateVector) -> np.ndarray:
    p = np.abs(state.amps) ** 2
    return p / p.sum()


def outcome_probability(state: StateVector, outcome: int) -> float:
    return float(abs(state.amps[outcome]) ** 2)


def measure_all(state: StateVector, rng: np.random.Generator) -> int:
    """Sample a computational-basis outcome; bit q of the result is qubit q."""
    return int(rng.choice(1 << state.n, p=probabilities(state)))


def format_outcome(x: int, n: int) -> str:
    """Bitstring with qubit n-1 first, as conventionally written |q_{n-1}...q_0>."""
    return format(x, f"0{n}b")


def tensor(*states: StateVector) -> StateVector:
    """Product state; the first argument occupies the lowest-index qubits."""
    amps = np.ones(1, dtype=np.complex128)
    n = 0
    for s in states:
        amps = np.kron(s.amps, amps)
        n += s.n
    return StateVector._adopt(n, amps)


def haar_state(n: int, rng: np.random.Generator) -> StateVector:
    """Haar-random pure state from a normalized complex Gaussian vector."""
    v = rng.standard_normal(1 << n) + 1j * rng.standard_normal(1 << n)
    return StateVector._adopt(n, v / np.linalg.norm(v))


def density_apply_matrix(mat: np.ndarray, n: int, u: np.ndarray, targets: Sequence[int]) -> np.ndarray:
    """Return U rho U^dag for a raw density matrix (copy)."""
    buf = np.ascontiguousarray(mat, dtype=np.complex128).reshape(-1).copy()
    shifted = [t + n for t in targets]
    apply_matrix_inplace(buf, np.ascontiguousarray(u), shifted)
    apply_matrix_inplace(buf, np.ascontiguousarray(u.conj()), list(targets))
    return buf.reshape(1 << n, 1 << n)
