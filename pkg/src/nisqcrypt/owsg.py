"""Random-circuit one-way state generator, threshold repetition, game harnesses and
the two-stage reduction combinators (zero-error algorithm A' and single-instance B).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Protocol, Sequence

import numpy as np
from scipy import stats

from .circuits import (
    CircuitDescription,
    EnsembleParams,
    apply_inverse_inplace,
    make_rng,
    prepare_state,
    sample_circuit,
)
from .noise import WhiteNoisyState
from .statevec import DensityOperator, SimulationError, StateVector


@dataclass(frozen=True)
class OwsgKey:
    circuit: CircuitDescription

    @property
    def n(self) -> int:
        return self.circuit.n

    @classmethod
    def random(cls, params: EnsembleParams, rng=None) -> "OwsgKey":
        return cls(sample_circuit(params, make_rng(rng)))


def _as_circuit(key) -> CircuitDescription:
    if isinstance(key, OwsgKey):
        return key.circuit
    if isinstance(key, CircuitDescription):
        return key
    raise TypeError(f"expected an OwsgKey or CircuitDescription, got {type(key).__name__}")


def gen(key) -> StateVector:
    """|C> = C|0^n>."""
    return prepare_state(_as_circuit(key))


def accept_probability(key, state) -> float:
    """<0^n| C^dag rho C |0^n> for pure, compact white-noise or density inputs."""
    c = _as_circuit(key)
    if state.n != c.n:
        raise SimulationError(f"key is for {c.n} qubits, state has {state.n}")
    if isinstance(state, StateVector):
        buf = state.copy_amps()
        apply_inverse_inplace(c, buf)
        return float(abs(buf[0]) ** 2)
    if isinstance(state, WhiteNoisyState):
        # identical descriptions prepare identical states, so the overlap is exactly 1
        hit = 1.0 if state.circuit == c else accept_probability(c, state.ideal)
        return state.F * hit + (1.0 - state.F) / (1 << c.n)
    if isinstance(state, DensityOperator):
        ideal = prepare_state(c).amps
        return float(np.real(ideal.conj() @ state.mat @ ideal))
    raise TypeError(f"unsupported state type {type(state).__name__}")


def ver(key, state, mode: str = "exact", rng=None):
    """Exact mode: acceptance probability. Sampled mode: one measured accept bit."""
    if mode == "exact":
        return accept_probability(key, state)
    if mode != "sampled":
        raise ValueError(f"unknown mode {mode!r}")
    rng = make_rng(rng)
    if isinstance(state, WhiteNoisyState):
        # same draw as sample_pure, skipping the simulation when it cannot matter
        if rng.random() < state.F:
            if state.circuit == _as_circuit(key):
                return True
            state = state.ideal
        else:
            state = StateVector.basis(state.n, int(rng.integers(0, 1 << state.n)))
    # outcome 0^n occurs with exactly this probability
    return bool(rng.random() < accept_probability(key, state))


# ---------------------------------------------------------------------------
# threshold repetition


@dataclass(frozen=True)
class ThresholdParams:
    t: int
    k: int
    n: int = 0

    def __post_init__(self):
        if not 1 <= self.k <= self.t:
            raise ValueError(f"need 1 <= k <= t (got k={self.k}, t={self.t})")


def poisson_binomial_pmf(probs: Sequence[float]) -> np.ndarray:
    """Distribution of the number of successes among independent Bernoulli trials."""
    pmf = np.zeros(len(probs) + 1)
    pmf[0] = 1.0
    for j, p in enumerate(probs):
        nxt = pmf[: j + 2] * (1.0 - p)
        nxt[1:] += pmf[: j + 1] * p
        pmf[: j + 2] = nxt
    return pmf


def poisson_binomial_tail(probs: Sequence[float], k: int) -> float:
    """Pr[at least k successes]."""
    if k <= 0:
        return 1.0
    if k > len(probs):
        return 0.0
    pmf = poisson_binomial_pmf(probs)
    return float(min(1.0, max(0.0, math.fsum(pmf[k:]))))


@dataclass(frozen=True)
class ThresholdResult:
    per_block: tuple
    threshold: int
    count: int | None
    accept_probability: float | None
    accepted: bool

    def as_dict(self) -> dict:
        return {
            "per_block": list(self.per_block),
            "threshold": self.threshold,
            "count": self.count,
            "accept_probability": self.accept_probability,
            "accepted": self.accepted,
        }


def ver_threshold(keys: Sequence, blocks: Sequence, params: ThresholdParams, mode: str = "exact",
                  rng=None) -> ThresholdResult:
    """Accept iff at least k of the t block verifications accept.

    In exact mode ``accepted`` reports whether the acceptance probability is
    at least 1/2.
    """
    if len(keys) != params.t or len(blocks) != params.t:
        raise ValueError(f"expected {params.t} keys and blocks, got {len(keys)} and {len(blocks)}")
    if mode == "exact":
        probs = tuple(accept_probability(k, b) for k, b in zip(keys, blocks))
        p = poisson_binomial_tail(probs, params.k)
        return ThresholdResult(probs, params.k, None, p, p >= 0.5)
    rng = make_rng(rng)
    bits = tuple(ver(k, b, "sampled", rng) for k, b in zip(keys, blocks))
    count = sum(bits)
    return ThresholdResult(bits, params.k, count, None, count >= params.k)


def threshold_k(eta: float, t: int, n: float) -> int:
    """floor((eta - sqrt(n / 2t)) t), clamped to [1, t]."""
    if t < 1:
        raise ValueError("t must be positive")
    if not 0.0 < eta <= 1.0:
        raise ValueError(f"eta must lie in (0, 1] (got {eta})")
    val = (eta - math.sqrt(n / (2.0 * t))) * t
    if val <= 0:
        raise ValueError(f"threshold formula is non-positive ({val:.3g}); t={t} is too small for eta={eta}, n={n}")
    # tolerate float dust so exact products such as 0.4 * 800 stay integral
    k = math.floor(val + 1e-9)
    return min(t, max(1, k))


# ---------------------------------------------------------------------------
# game statistics


@dataclass(frozen=True)
class GameStats:
    trials: int
    successes: float
    estimate: float
    ci95: tuple

    @classmethod
    def from_scores(cls, scores: Sequence[float]) -> "GameStats":
        scores = np.asarray(scores, dtype=float)
        m = len(scores)
        if m == 0:
            raise ValueError("no trials")
        total = float(scores.sum())
        est = total / m
        if np.all((scores == 0) | (scores == 1)):
            ci = stats.binomtest(int(total), m).proportion_ci(0.95, method="wilson")
            lo, hi = float(ci.low), float(ci.high)
        else:
            half = 1.96 * float(scores.std(ddof=1)) / math.sqrt(m) if m > 1 else 0.0
            lo, hi = max(0.0, est - half), min(1.0, est + half)
        return cls(m, total, est, (lo, hi))

    def as_dict(self) -> dict:
        return {"trials": self.trials, "successes": self.successes,
                "estimate": self.estimate, "ci95": list(self.ci95)}


Adversary = Callable[[list, np.random.Generator], object]


def security_game(adversary: Adversary, params: EnsembleParams, q: int, trials: int, rng=None,
                  ensemble: Sequence[CircuitDescription] | None = None) -> GameStats:
    """Inversion game scored in exact mode.

    Each trial draws a key (uniformly from ``ensemble`` when given), hands the
    adversary q copies of |C> and scores |<C'|C>|^2 for its answer C'.
    """
    if q < 1 or trials < 1:
        raise ValueError("q and trials must be >= 1")
    rng = make_rng(rng)
    scores = []
    for _ in range(trials):
        if ensemble is not None:
            key = ensemble[int(rng.integers(len(ensemble)))]
        else:
            key = sample_circuit(params, rng)
        state = gen(key)
        guess = adversary([state] * q, rng)
        try:
            guess = _as_circuit(guess)
        except TypeError as exc:
            raise ValueError(f"adversary returned a malformed key: {exc}") from None
        if guess.n != key.n:
            raise ValueError(f"adversary returned a {guess.n}-qubit key for a {key.n}-qubit state")
        scores.append(accept_probability(guess, state))
    return GameStats.from_scores(scores)


def random_guess_adversary(ensemble: Sequence[CircuitDescription]) -> Adversary:
    def adv(copies, rng):
        return ensemble[int(rng.integers(len(ensemble)))]
    return adv


# ---------------------------------------------------------------------------
# generic OWSG interface and the reductions


class OWSG(Protocol):
    def sample_key(self, rng: np.random.Generator): ...
    def gen(self, key): ...
    def ver(self, key, state, rng: np.random.Generator) -> bool: ...


@dataclass(frozen=True)
class RandomCircuitOWSG:
    """The circuit generator behind the generic interface (sampled verification)."""

    params: EnsembleParams

    def sample_key(self, rng):
        return sample_circuit(self.params, rng)

    def gen(self, key):
        return gen(key)

    def ver(self, key, state, rng) -> bool:
        return ver(key, state, "sampled", rng)


@dataclass(frozen=True, eq=False)
class ToyState:
    """Opaque handle around a planted key; only the toy adversary peeks inside."""

    _key: int = field(repr=False)


@dataclass(frozen=True)
class ToyOWSG:
    key_bits: int = 32

    def sample_key(self, rng) -> int:
        return int(rng.integers(0, 1 << self.key_bits))

    def gen(self, key) -> ToyState:
        return ToyState(key)

    def ver(self, key, state: ToyState, rng=None) -> bool:
        return key == state._key


def dial_adversary(toy: ToyOWSG, p: float, on_prob: float = 1.0):
    """Threshold-game adversary with success rates set by construction.

    With probability ``on_prob`` it is "on" and then recovers each coordinate
    independently with probability p; otherwise every coordinate is a random
    guess.
    """
    def adv(blocks, rng):
        on = rng.random() < on_prob
        out = []
        for copies in blocks:
            if on and rng.random() < p:
                out.append(copies[0]._key)
            else:
                out.append(toy.sample_key(rng))
        return out
    return adv


def zero_error_attempts(q: int) -> int:
    return math.ceil(4 * q * math.log(8 * q))


def single_instance_repeats(q: int, xi: float) -> int:
    return math.ceil(128 * q * math.log(120 / xi))


@dataclass(frozen=True)
class ReductionOutcome:
    keys: tuple | None
    attempts: int
    copies_used: int

    @property
    def bottom(self) -> bool:
        return self.keys is None


def reduction_zero_error(owsg, adv, t: int, q: int, gamma: float, front_states: Sequence,
                         rng=None, max_attempts: int | None = None) -> ReductionOutcome:
    """The zero-error algorithm A'.

    ``front_states`` are the t/2 challenge states (state values can be copied
    freely in simulation; ``copies_used`` tallies what a physical run would
    consume). Each attempt samples the back-half keys, hides the challenge
    among them with a random permutation, runs ``adv`` and checks the back
    half with threshold ceil(gamma t/2).
    """
    if t % 2:
        raise ValueError("t must be even")
    half = t // 2
    if len(front_states) != half:
        raise ValueError(f"expected {half} front states, got {len(front_states)}")
    rng = make_rng(rng)
    limit = zero_error_attempts(q) if max_attempts is None else max_attempts
    need = math.ceil(gamma * half - 1e-12)
    used = 0
    for attempt in range(1, limit + 1):
        back_keys = [owsg.sample_key(rng) for _ in range(half)]
        back_states = [owsg.gen(k) for k in back_keys]
        states = list(front_states) + back_states
        perm = rng.permutation(t)
        blocks = [[states[perm[i]]] * q for i in range(t)]
        used += q
        guess = adv(blocks, rng)
        if len(guess) != t:
            raise ValueError(f"adversary returned {len(guess)} keys, expected {t}")
        unperm = [None] * t
        for i in range(t):
            unperm[perm[i]] = guess[i]
        used += 1
        hits = sum(owsg.ver(unperm[half + j], back_states[j], rng) for j in range(half))
        if hits >= need:
            return ReductionOutcome(tuple(unperm[:half]), attempt, used)
    return ReductionOutcome(None, limit, used)


@dataclass(frozen=True)
class SingleOutcome:
    key: object
    repeats: int
    slot: int | None

    @property
    def bottom(self) -> bool:
        return self.slot is None


def reduction_single(owsg, adv, t: int, q: int, gamma: float, xi: float, state, rng=None,
                     max_repeats: int | None = None) -> SingleOutcome:
    """Algorithm B: embed one challenge at a random slot and run A'."""
    if t % 2:
        raise ValueError("t must be even")
    half = t // 2
    rng = make_rng(rng)
    limit = single_instance_repeats(q, xi) if max_repeats is None else max_repeats
    for rep in range(1, limit + 1):
        slot = int(rng.integers(half))
        front = [state if j == slot else owsg.gen(owsg.sample_key(rng)) for j in range(half)]
        out = reduction_zero_error(owsg, adv, t, q, gamma, front, rng)
        if not out.bottom:
            return SingleOutcome(out.keys[slot], rep, slot)
    return SingleOutcome(None, limit, None)
