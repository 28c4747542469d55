"""Gate-level depolarizing noise, global white noise, and the closed-form fidelity models."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from . import kernels
from .circuits import PAULIS, CircuitDescription, make_rng, prepare_state
from .statevec import (
    DENSITY_MAX_QUBITS,
    DensityOperator,
    SimulationError,
    StateVector,
    density_apply_matrix,
)

KINDS = ("none", "depolarizing", "white")


@dataclass(frozen=True)
class NoiseModel:
    kind: str = "none"
    eps: float = 0.0
    F: float | None = None
    c: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown noise kind {self.kind!r}; expected one of {KINDS}")
        if not 0.0 <= self.eps <= 1.0:
            raise ValueError(f"eps must lie in [0, 1] (got {self.eps})")
        if self.F is not None and not 0.0 <= self.F <= 1.0:
            raise ValueError(f"F must lie in [0, 1] (got {self.F})")
        if self.c is not None and self.c < 0:
            raise ValueError(f"c must be non-negative (got {self.c})")
        if self.kind == "white" and self.F is None and self.c is None:
            raise ValueError("white noise needs either F or c")

    @classmethod
    def from_config(cls, cfg: Mapping[str, object]) -> "NoiseModel":
        """Build from ``noise.kind`` / ``noise.eps`` / ``noise.F`` / ``noise.c`` keys."""
        def get(key):
            return cfg.get(f"noise.{key}", cfg.get(key))
        kind = get("kind") or "none"
        eps = get("eps")
        F = get("F")
        c = get("c")
        return cls(
            str(kind),
            float(eps) if eps is not None else 0.0,
            float(F) if F is not None else None,
            float(c) if c is not None else None,
        )

    def white_fidelity(self, n: int, d: int) -> float:
        """Global fidelity F used by the white-noise model for an (n, d) circuit."""
        if self.kind == "none":
            return 1.0
        if self.kind == "white":
            return self.F if self.F is not None else eta(n, d, self.c)
        raise ValueError("white_fidelity is only defined for white or noiseless models")

    def as_dict(self) -> dict:
        return {"kind": self.kind, "eps": self.eps, "F": self.F, "c": self.c}


def analytic_fidelity(s: int, eps: float) -> float:
    """(1 - eps)^(2 s) for s two-qubit gates with per-qubit error rate eps."""
    if s < 0:
        raise ValueError("gate count must be non-negative")
    return (1.0 - eps) ** (2 * s)


def eta(n: float, d: float, c: float) -> float:
    """exp(-c n d)."""
    if n < 0 or d < 0 or c < 0:
        raise ValueError("n, d and c must be non-negative")
    return math.exp(-c * n * d)


def white_noise_state(ideal: DensityOperator, F: float) -> DensityOperator:
    if not 0.0 <= F <= 1.0:
        raise ValueError(f"F must lie in [0, 1] (got {F})")
    dim = 1 << ideal.n
    return DensityOperator(ideal.n, F * ideal.mat + (1.0 - F) * np.eye(dim) / dim)


@dataclass(frozen=True, eq=False)
class WhiteNoisyState:
    """F |psi><psi| + (1 - F) I / 2^n, stored without the 4^n matrix.

    When built from a circuit the ideal state is only simulated on first use.
    """

    F: float
    circuit: CircuitDescription | None = None
    _ideal: StateVector | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.circuit is None and self._ideal is None:
            raise ValueError("need a circuit or an ideal state")
        if not 0.0 <= self.F <= 1.0:
            raise ValueError(f"F must lie in [0, 1] (got {self.F})")

    @classmethod
    def of_state(cls, ideal: StateVector, F: float) -> "WhiteNoisyState":
        return cls(F, None, ideal)

    @classmethod
    def of_circuit(cls, c: CircuitDescription, F: float) -> "WhiteNoisyState":
        return cls(F, c)

    @property
    def n(self) -> int:
        return self.circuit.n if self.circuit is not None else self._ideal.n

    @property
    def ideal(self) -> StateVector:
        if self._ideal is None:
            object.__setattr__(self, "_ideal", prepare_state(self.circuit))
        return self._ideal

    def to_density(self) -> DensityOperator:
        return white_noise_state(self.ideal.to_density(), self.F)

    def sample_pure(self, rng: np.random.Generator) -> StateVector:
        """One pure-state draw whose average is this mixed state."""
        if rng.random() < self.F:
            return self.ideal
        return StateVector.basis(self.n, int(rng.integers(0, 1 << self.n)))


def _depolarize(mat: np.ndarray, n: int, q: int, eps: float) -> np.ndarray:
    """(1 - eps) rho + eps Tr_q(rho) (x) I/2 on qubit q of a raw matrix."""
    if eps == 0.0:
        return mat
    dim = 1 << n
    hi = dim >> (q + 1)
    lo = 1 << q
    t = mat.reshape(hi, 2, lo, hi, 2, lo)
    traced = t[:, 0, :, :, 0, :] + t[:, 1, :, :, 1, :]
    out = (1.0 - eps) * t
    out[:, 0, :, :, 0, :] += 0.5 * eps * traced
    out[:, 1, :, :, 1, :] += 0.5 * eps * traced
    return out.reshape(dim, dim)


def _noisy_density(c: CircuitDescription, eps: float) -> np.ndarray:
    dim = 1 << c.n
    mat = np.zeros((dim, dim), dtype=np.complex128)
    mat[0, 0] = 1.0
    cat = c.params.gate_catalog
    for (_, q0, q1), b in zip(c.params.layout, c.bricks):
        mat = density_apply_matrix(mat, c.n, cat.matrix(b), (q0, q1))
        mat = _depolarize(mat, c.n, q0, eps)
        mat = _depolarize(mat, c.n, q1, eps)
    return mat


def _trajectory(c: CircuitDescription, eps: float, rng: np.random.Generator) -> StateVector:
    buf = np.zeros(1 << c.n, dtype=np.complex128)
    buf[0] = 1.0
    cat = c.params.gate_catalog
    layout = c.params.layout
    hits = rng.random((len(layout), 2)) < eps
    picks = rng.integers(0, 4, size=(len(layout), 2))
    for pos, ((_, q0, q1), b) in enumerate(zip(layout, c.bricks)):
        kernels.apply_2q(buf, cat.matrix(b), q0, q1)
        for slot, q in enumerate((q0, q1)):
            if hits[pos, slot] and picks[pos, slot]:
                kernels.apply_1q(buf, PAULIS[picks[pos, slot]], q)
    return StateVector._adopt(c.n, buf)


def apply_noisy_circuit(c: CircuitDescription, model: NoiseModel, mode: str = "exact-density",
                        rng=None):
    """Run C on |0^n> under ``model``.

    ``exact-density`` returns a :class:`DensityOperator` (n <= 12).
    ``trajectory`` returns one sampled :class:`StateVector` whose ensemble
    average is the exact noisy state.
    """
    if mode not in ("exact-density", "trajectory"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "exact-density" and c.n > DENSITY_MAX_QUBITS:
        raise SimulationError(
            f"exact-density mode is limited to {DENSITY_MAX_QUBITS} qubits; use trajectory mode"
        )
    rng = make_rng(rng)
    if model.kind == "none" or (model.kind == "depolarizing" and model.eps == 0.0):
        ideal = prepare_state(c)
        return ideal.to_density() if mode == "exact-density" else ideal
    if model.kind == "white":
        noisy = WhiteNoisyState.of_circuit(c, model.white_fidelity(c.n, c.d))
        return noisy.to_density() if mode == "exact-density" else noisy.sample_pure(rng)
    if mode == "exact-density":
        return DensityOperator(c.n, _noisy_density(c, model.eps))
    return _trajectory(c, model.eps, rng)


def noisy_block(c: CircuitDescription, model: NoiseModel, mode: str = "exact", rng=None):
    """State handed to a verifier for one protocol block.

    ``exact`` keeps white noise in compact form (any n) and uses density
    operators for depolarizing noise; ``trajectory`` always returns a pure
    sample.
    """
    if model.kind == "none":
        return prepare_state(c)
    if model.kind == "white" and mode == "exact":
        return WhiteNoisyState.of_circuit(c, model.white_fidelity(c.n, c.d))
    return apply_noisy_circuit(c, model, "exact-density" if mode == "exact" else "trajectory", rng)


def ideal_fidelity(c: CircuitDescription, noisy) -> float:
    """<C| noisy |C> for a density operator, compact white state or pure sample."""
    ideal = prepare_state(c)
    if isinstance(noisy, StateVector):
        return abs(np.vdot(ideal.amps, noisy.amps)) ** 2
    if isinstance(noisy, WhiteNoisyState):
        return noisy.F * abs(np.vdot(ideal.amps, noisy.ideal.amps)) ** 2 + (1 - noisy.F) / (1 << c.n)
    return float(np.real(ideal.amps.conj() @ noisy.mat @ ideal.amps))
