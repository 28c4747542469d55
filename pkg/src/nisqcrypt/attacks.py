"""Learning and cloning baselines.

Classical shadows with a median-of-means estimator, a shadow-based circuit
learner and its brute-force oracle, the symmetric-subspace (Werner) cloner,
and a harness around a black-box state-preparation oracle.
"""
from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .circuits import CircuitDescription, make_rng, prepare_batch
from .clifford import Clifford, CliffordTables, sample_clifford
from .statevec import (
    DensityOperator,
    SimulationError,
    StateVector,
    haar_state,
    measure_all,
)

SHADOW_CONSTANT = 204
CLONE_MAX_QUBITS = 12


# ---------------------------------------------------------------------------
# classical shadows


@dataclass(frozen=True, eq=False)
class Shadow:
    clifford: Clifford
    outcome: int

    def row(self) -> np.ndarray:
        """<x| S as a vector."""
        return self.clifford.unitary()[self.outcome]


@dataclass(frozen=True, eq=False)
class ShadowBatch:
    """Many shadows kept only as their rows <x_j| S_j (all the estimator needs)."""

    n: int
    rows: np.ndarray

    def __len__(self) -> int:
        return len(self.rows)


def collect_shadows(state: StateVector, count: int, rng=None) -> list[Shadow]:
    """One shadow per copy: random Clifford, then a computational-basis measurement."""
    rng = make_rng(rng)
    out = []
    for _ in range(count):
        c = sample_clifford(state.n, rng)
        rotated = StateVector._adopt(state.n, c.unitary() @ state.amps)
        out.append(Shadow(c, measure_all(rotated, rng)))
    return out


_TABLES: dict[int, CliffordTables] = {}


def _tables(n: int) -> CliffordTables:
    if n not in _TABLES:
        _TABLES[n] = CliffordTables(n)
    return _TABLES[n]


def collect_shadow_batch(state: StateVector, count: int, rng=None, chunk: int = 1 << 15) -> ShadowBatch:
    """Same distribution as :func:`collect_shadows`, vectorized for small n."""
    rng = make_rng(rng)
    n = state.n
    if n > CliffordTables.MAX_QUBITS:
        shadows = collect_shadows(state, count, rng)
        return ShadowBatch(n, np.array([s.row() for s in shadows]))
    tb = _tables(n)
    dim = 1 << n
    rows = np.empty((count, dim), dtype=np.complex128)
    for start in range(0, count, chunk):
        size = min(chunk, count - start)
        digits = tb.sample_digits(size, rng)
        rotated = tb.apply(digits, np.broadcast_to(state.amps, (size, dim)))
        cum = np.cumsum(np.abs(rotated) ** 2, axis=1)
        u = rng.random(size) * cum[:, -1]
        x = np.minimum((cum < u[:, None]).sum(axis=1), dim - 1)
        rows[start:start + size] = tb.rows(digits, x)
    return ShadowBatch(n, rows)


def _as_rows(shadows) -> tuple[int, np.ndarray]:
    if isinstance(shadows, ShadowBatch):
        return shadows.n, shadows.rows
    shadows = list(shadows)
    if not shadows:
        raise ValueError("no shadows")
    return shadows[0].clifford.n, np.array([s.row() for s in shadows])


def _as_vectors(observables) -> np.ndarray:
    if isinstance(observables, np.ndarray):
        return np.atleast_2d(observables)
    obs = list(observables)
    if obs and isinstance(obs[0], CircuitDescription):
        return prepare_batch(obs)
    return np.array([o.amps if isinstance(o, StateVector) else np.asarray(o) for o in obs])


def single_shadow_values(shadows, observables) -> np.ndarray:
    """Tr(A_i rho_j) for every shadow j and rank-1 projector A_i = |c_i><c_i|."""
    n, rows = _as_rows(shadows)
    vecs = _as_vectors(observables)
    amp = rows @ vecs.T
    return (2 ** n + 1) * np.abs(amp) ** 2 - np.sum(np.abs(vecs) ** 2, axis=1)


def group_count(num_observables: int, delta: float) -> int:
    """ceil(2 ln(2M / delta))."""
    return math.ceil(2 * math.log(2 * num_observables / delta))


def shadow_estimate(shadows, observables, t: int) -> np.ndarray:
    """Median over t groups of the group means.

    When t does not divide the number of shadows the trailing remainder
    (fewer than t shadows) is discarded.
    """
    n, rows = _as_rows(shadows)
    k = len(rows)
    if k == 0:
        raise ValueError("no shadows")
    if not 1 <= t <= k:
        raise ValueError(f"group count {t} must lie in [1, {k}]")
    per = k // t
    vals = single_shadow_values(ShadowBatch(n, rows[: per * t]), observables)
    means = vals.reshape(t, per, -1).mean(axis=1)
    return np.median(means, axis=0)


def observable_spread(observables) -> float:
    """max_i Tr((A_i - Tr(A_i) I / 2^n)^2) for rank-1 projectors."""
    vecs = _as_vectors(observables)
    dim = vecs.shape[1]
    w = np.sum(np.abs(vecs) ** 2, axis=1)
    return float(np.max(w ** 2 - w ** 2 / dim))


def required_shadow_count(num_observables: int, eps: float, delta: float, spread: float = 1.0) -> int:
    """ceil(204 / eps^2 * ln(2M / delta) * B)."""
    if not (0 < eps and 0 < delta < 1):
        raise ValueError("need eps > 0 and 0 < delta < 1")
    return math.ceil(SHADOW_CONSTANT / eps ** 2 * math.log(2 * num_observables / delta) * spread)


def shadow_expectation_exact(state: StateVector, observable: StateVector, cliffords: Sequence[Clifford]) -> float:
    """E[Tr(A rho_hat)] over a uniform Clifford list with exact outcome probabilities."""
    total = 0.0
    dim = 1 << state.n
    a = observable.amps
    for c in cliffords:
        u = c.unitary()
        probs = np.abs(u @ state.amps) ** 2
        vals = (dim + 1) * np.abs(u @ a) ** 2 - 1.0
        total += float(probs @ vals)
    return total / len(cliffords)


@dataclass(frozen=True)
class LearnerResult:
    circuit: CircuitDescription | None
    index: int | None
    shadows: int
    groups: int
    estimates: np.ndarray = field(repr=False)

    @property
    def failed(self) -> bool:
        return self.circuit is None


def shadow_learner(state: StateVector, ensemble: Sequence[CircuitDescription], eps: float, delta: float,
                   rng=None, copies: int | None = None, ensemble_states: np.ndarray | None = None) -> LearnerResult:
    """Estimate |<C_i|psi>|^2 for every ensemble member from shadows of ``copies`` copies,
    then return a uniformly random member whose estimate is at least 1 - eps."""
    rng = make_rng(rng)
    vecs = prepare_batch(ensemble) if ensemble_states is None else ensemble_states
    m = len(ensemble)
    if copies is None:
        copies = required_shadow_count(m, eps, delta, observable_spread(vecs))
    t = group_count(m, delta)
    batch = collect_shadow_batch(state, copies, rng)
    est = shadow_estimate(batch, vecs, min(t, copies))
    good = np.flatnonzero(est >= 1 - eps)
    if len(good) == 0:
        return LearnerResult(None, None, copies, t, est)
    pick = int(rng.choice(good))
    return LearnerResult(ensemble[pick], pick, copies, t, est)


def brute_force_learner(state: StateVector, ensemble: Sequence[CircuitDescription],
                        ensemble_states: np.ndarray | None = None) -> CircuitDescription:
    """argmax_D |<D|psi>|^2 over the ensemble, lowest index on ties."""
    vecs = prepare_batch(ensemble) if ensemble_states is None else ensemble_states
    fid = np.abs(vecs.conj() @ state.amps) ** 2
    return ensemble[int(np.flatnonzero(fid >= fid.max() - 1e-12)[0])]


# ---------------------------------------------------------------------------
# symmetric-subspace cloning


def werner_fidelity(n: int, k: int) -> float:
    """(k + 1) / (2^n + k): optimal k -> k+1 clone fidelity."""
    return (k + 1) / (2 ** n + k)


def _symmetrize(tensor: np.ndarray, registers: int) -> np.ndarray:
    """Average of all register permutations of a (D,)*registers tensor."""
    perms = list(itertools.permutations(range(registers)))
    out = np.zeros_like(tensor)
    for p in perms:
        out += np.transpose(tensor, p)
    return out / len(perms)


def symmetric_projector(n: int, registers: int) -> np.ndarray:
    dim = 1 << n
    total = dim ** registers
    if n * registers > CLONE_MAX_QUBITS:
        raise SimulationError(f"symmetric projector on {n * registers} qubits exceeds the cap")
    eye = np.eye(total).reshape((total,) + (dim,) * registers)
    cols = np.stack([_symmetrize(eye[i], registers).reshape(-1) for i in range(total)], axis=1)
    return cols


@dataclass(frozen=True, eq=False)
class CloneReport:
    output: DensityOperator
    fidelity: float


def werner_clone(psi: StateVector, k: int) -> CloneReport:
    """Project psi^{(x)k} (x) I/2^n onto the (k+1)-fold symmetric subspace and renormalize.

    Registers are tensor factors, with register 0 on the lowest qubits and
    the fresh (maximally mixed) register last.
    """
    n = psi.n
    if n * (k + 1) > CLONE_MAX_QUBITS:
        raise SimulationError(f"clone output on {n * (k + 1)} qubits exceeds the cap of {CLONE_MAX_QUBITS}")
    dim = 1 << n
    regs = k + 1
    # axis order: highest register first, matching the amplitude index layout
    base = np.ones((1,), dtype=np.complex128)
    for _ in range(k):
        base = np.kron(psi.amps, base)
    target = np.kron(psi.amps, base)
    total = dim ** regs
    rho = np.zeros((total, total), dtype=np.complex128)
    fid = 0.0
    norm = 0.0
    for x in range(dim):
        e = np.zeros(dim, dtype=np.complex128)
        e[x] = 1.0
        v = _symmetrize(np.kron(e, base).reshape((dim,) * regs), regs).reshape(-1)
        rho += np.outer(v, v.conj())
        norm += float(np.vdot(v, v).real)
        fid += abs(np.vdot(target, v)) ** 2
    rho /= norm
    return CloneReport(DensityOperator(n * regs, rho), fid / norm)


# ---------------------------------------------------------------------------
# black-box oracle world


class OracleBudgetError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class OracleWorld:
    """N Haar states behind a preparation oracle, with a hidden index J.

    Each |psi_i> is the first column of a fixed unitary U_i, which defines the
    oracle on non-zero target registers; strategies under test only query
    with the target register in |0^n>.
    """

    n: int
    N: int
    states: np.ndarray = field(repr=False)
    bases: np.ndarray = field(repr=False)
    J: int = field(repr=False)

    @classmethod
    def create(cls, n: int, N: int, rng=None) -> "OracleWorld":
        if N > 2 ** n:
            raise ValueError("need N <= 2^n")
        rng = make_rng(rng)
        dim = 1 << n
        states = np.array([haar_state(n, rng).amps for _ in range(N)])
        bases = np.empty((N, dim, dim), dtype=np.complex128)
        for i in range(N):
            m = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
            m[:, 0] = states[i]
            q, r = np.linalg.qr(m)
            # QR fixes the first column only up to phase; undo it
            q[:, 0] *= r[0, 0] / abs(r[0, 0])
            bases[i] = q
        return cls(n, N, states, bases, int(rng.integers(N)))

    def target(self) -> StateVector:
        return StateVector._adopt(self.n, self.states[self.J].copy())


class Oracle:
    """Query access to O|i>|y> = |i> U_i |y> with a hard budget."""

    def __init__(self, world: OracleWorld, budget: int):
        self._world = world
        self.budget = budget
        self.used = 0

    @property
    def N(self) -> int:
        return self._world.N

    @property
    def n(self) -> int:
        return self._world.n

    def _spend(self):
        if self.used >= self.budget:
            raise OracleBudgetError(f"query budget of {self.budget} exhausted")
        self.used += 1

    def query(self, i: int) -> StateVector:
        """Basis query |i>|0^n>; returns the prepared target register."""
        self._spend()
        return StateVector._adopt(self.n, self._world.bases[i][:, 0].copy())

    def apply(self, joint: np.ndarray) -> np.ndarray:
        """Coherent query on an (N, 2^n) index-by-target amplitude array."""
        self._spend()
        return np.einsum("iab,ib->ia", self._world.bases, joint)


@dataclass(frozen=True)
class CloneOutput:
    """Mixture describing a (k+1)-register output.

    ``products``: (probability, phi) branches that output phi^{(x)k+1}.
    ``werner``: (probability, overlap) branches that Werner-clone a k-register
    state whose fidelity with the ideal input is ``overlap``.
    """

    k: int
    products: tuple = ()
    werner: tuple = ()

    def fidelity(self, psi: StateVector) -> float:
        dim = 1 << psi.n
        total = 0.0
        for p, phi in self.products:
            total += p * abs(np.vdot(psi.amps, phi.amps)) ** (2 * (self.k + 1))
        for p, ov in self.werner:
            total += p * ov * (self.k + 1) / (dim + self.k)
        return float(total)


Strategy = Callable[[list, Oracle, np.random.Generator], CloneOutput]


def werner_strategy(copies, oracle, rng) -> CloneOutput:
    """No queries: symmetric-subspace cloning of the k input copies."""
    return CloneOutput(len(copies), (), ((1.0, 1.0),))


def _pgm_output(copies, candidates: list[StateVector]) -> CloneOutput:
    # square-root measurement on {phi_i^{(x)k}}; the none outcome falls back to Werner
    k = len(copies)
    if not candidates:
        return CloneOutput(k, (), ((1.0, 1.0),))
    vecs = np.array([c.amps for c in candidates])
    gram = (vecs.conj() @ vecs.T) ** k
    w, v = np.linalg.eigh(gram)
    keep = w > 1e-12
    inv_sqrt = (v[:, keep] / np.sqrt(w[keep])) @ v[:, keep].conj().T
    g = (vecs.conj() @ copies[0].amps) ** k
    probs = np.abs(inv_sqrt @ g) ** 2
    s = float(min(1.0, probs.sum()))
    products = tuple((float(p), c) for p, c in zip(probs, candidates))
    rest = 1.0 - s
    werner = ((rest, rest),) if rest > 0 else ()
    return CloneOutput(k, products, werner)


def make_pgm_strategy(T: int) -> Strategy:
    """Query T distinct random indices, then discriminate among them.

    The strategy treats each queried state as fully known, which only helps it.
    """
    def strategy(copies, oracle, rng):
        picks = rng.choice(oracle.N, size=min(T, oracle.N), replace=False)
        return _pgm_output(copies, [oracle.query(int(i)) for i in picks])
    return strategy


def exhaustive_strategy(copies, oracle, rng) -> CloneOutput:
    """Query every index and discriminate among all N candidates."""
    return _pgm_output(copies, [oracle.query(i) for i in range(oracle.N)])


def blackbox_bound(n: int, T: int, k: int) -> float:
    """2^{-n/4} (2T + k + 1)."""
    return 2.0 ** (-n / 4) * (2 * T + k + 1)


@dataclass(frozen=True)
class OracleRunReport:
    fidelity: float
    queries: int
    budget: int
    bound: float
    runtime: float

    def as_dict(self) -> dict:
        return {"fidelity": self.fidelity, "queries": self.queries, "budget": self.budget,
                "bound": self.bound, "runtime": self.runtime}


def oracle_world_run(world: OracleWorld, strategy: Strategy, T: int, k: int, rng=None) -> OracleRunReport:
    if world.n > 6:
        raise SimulationError("oracle worlds are limited to n <= 6")
    rng = make_rng(rng)
    start = time.perf_counter()
    oracle = Oracle(world, T)
    psi = world.target()
    out = strategy([psi] * k, oracle, rng)
    if out.k != k:
        raise ValueError(f"strategy produced a {out.k + 1}-register output, expected {k + 1}")
    return OracleRunReport(out.fidelity(psi), oracle.used, T, blackbox_bound(world.n, T, k),
                           time.perf_counter() - start)


@dataclass(frozen=True)
class AttackReport:
    name: str
    samples: int
    runtime: float
    fidelity: float
    target: float

    def as_dict(self) -> dict:
        return {"name": self.name, "samples": self.samples, "runtime": self.runtime,
                "fidelity": self.fidelity, "target": self.target}
