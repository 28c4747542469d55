"""Closed-form calculators for the concrete parameter estimates, plus CSV/JSON emitters.

Large magnitudes are carried as base-10 logarithms. Every ``log`` in the
sample-complexity formulas is the natural logarithm.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass
from typing import Iterable, Sequence

from scipy import stats

from .circuits import EnsembleParams
from .noise import eta as eta_fn
from .owsg import threshold_k

LN10 = math.log(10)


@dataclass(frozen=True)
class Magnitude:
    """A positive number stored as its base-10 logarithm."""

    log10: float

    @property
    def value(self) -> float:
        return 10.0 ** self.log10 if self.log10 < 308 else math.inf

    def __float__(self) -> float:
        return self.value

    def __str__(self) -> str:
        exp = math.floor(self.log10)
        return f"{10 ** (self.log10 - exp):.3f}e{exp:+d}"


def _log10_sum(a: float, b: float) -> float:
    hi, lo = max(a, b), min(a, b)
    return hi + math.log10(1.0 + 10.0 ** (lo - hi))


def _check_positive(**kw):
    for name, v in kw.items():
        if not v > 0:
            raise ValueError(f"{name} must be positive (got {v})")


def landau_liu_samples(n: float, d: float, k_dim: float, eps: float, delta: float) -> Magnitude:
    """n^4 2^(d^k_dim) / eps^4 * ln(n / delta)."""
    _check_positive(n=n, d=d, k_dim=k_dim, eps=eps, delta=delta)
    log_term = math.log(n / delta)
    if log_term <= 0:
        raise ValueError("need n > delta for a positive log factor")
    lg = 4 * math.log10(n) + d ** k_dim * math.log10(2) - 4 * math.log10(eps) + math.log10(log_term)
    return Magnitude(lg)


def landau_liu_time(n: float, d: float, k_dim: float, eps: float, delta: float) -> Magnitude:
    """Sample term plus (n k_dim d^3 / eps)^(d^3)."""
    samples = landau_liu_samples(n, d, k_dim, eps, delta)
    extra = d ** 3 * math.log10(n * k_dim * d ** 3 / eps)
    return Magnitude(_log10_sum(samples.log10, extra))


def calibrate_c(n: float, d: float, observed_F: float) -> float:
    """c = -ln(F) / (n d)."""
    _check_positive(n=n, d=d)
    if not 0.0 < observed_F <= 1.0:
        raise ValueError(f"observed fidelity must lie in (0, 1] (got {observed_F})")
    return -math.log(observed_F) / (n * d)


def pubkey_qubits(n: int, t: int) -> int:
    return n * t


def min_repetitions(eta: float, n: float, k: int, t_max: int = 10 ** 9) -> int | None:
    """Smallest t with threshold_k(eta, t, n) >= k, or None above t_max."""
    if not 0.0 < eta <= 1.0:
        return None
    # eta s^2 - sqrt(n/2) s - k >= 0 with s = sqrt(t)
    a = math.sqrt(n / 2.0)
    s = (a + math.sqrt(a * a + 4 * eta * k)) / (2 * eta)
    t = max(k, math.ceil(s * s))

    def ok(tt):
        try:
            return threshold_k(eta, tt, n) >= k
        except ValueError:
            return False

    while t > max(1, k) and ok(t - 1):
        t -= 1
    while not ok(t):
        t += 1
        if t > t_max:
            return None
    return t if t <= t_max else None


@dataclass(frozen=True)
class PubkeyRow:
    d: int
    eta: float
    t_required: int | None
    pubkey_qubits: int | None
    feasible: bool


def pubkey_vs_depth(n: int, k_fixed: int, c: float, d_range: Iterable[int], t_max: int = 10 ** 9) -> list[PubkeyRow]:
    rows = []
    for d in d_range:
        e = eta_fn(n, d, c)
        t = min_repetitions(e, n, k_fixed, t_max)
        rows.append(PubkeyRow(d, e, t, None if t is None else pubkey_qubits(n, t), t is not None))
    return rows


@dataclass(frozen=True)
class TailReport:
    bound: float
    exact: float | None


def hoeffding_tail(eta: float, t: int, k: int) -> TailReport:
    """Pr[Bin(t, eta) < k] <= 2 exp(-2 (eta t - k)^2 / t), with the exact tail for t <= 10^4."""
    if t < 1:
        raise ValueError("t must be positive")
    if k > eta * t:
        raise ValueError(f"bound needs k <= eta t (k={k}, eta t={eta * t:.4g})")
    bound = 2.0 * math.exp(-2.0 * (eta * t - k) ** 2 / t)
    exact = None
    if t <= 10 ** 4:
        exact = 0.0 if k <= 0 else float(stats.binom.cdf(k - 1, t, eta))
    return TailReport(bound, exact)


@dataclass(frozen=True)
class CommitmentSchedule:
    p: float
    n: int
    eps: float
    hiding_error: float
    shadow_k: int
    stage1_repetitions: int
    stage1_hiding_error: float
    stage1_binding_bound: float
    stage2_repetitions: int
    stage2_binding_error: float


def commitment_schedule(p: float, n: int, log2_ensemble: float | None = None) -> CommitmentSchedule:
    """eps = (2 n p)^-2, the copy count k for that eps, and both repetition stages.

    ``log2_ensemble`` defaults to r(n) of the default crypto ensemble.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    if n < 2:
        raise ValueError("n must be >= 2")
    if log2_ensemble is None:
        log2_ensemble = EnsembleParams.default(n).key_bits
    eps = (2 * n * p) ** -2
    # 204/eps^2 * ln(2|C|/eps), evaluated with |C| = 2^log2_ensemble
    shadow_k = math.ceil(204 / eps ** 2 * (math.log(2 / eps) + log2_ensemble * math.log(2)))
    reps1 = math.ceil(n * p * p)
    return CommitmentSchedule(
        p=p,
        n=n,
        eps=eps,
        hiding_error=4 * eps,
        shadow_k=shadow_k,
        stage1_repetitions=reps1,
        stage1_hiding_error=reps1 * 4 * eps,
        stage1_binding_bound=(1 - 1 / p ** 2) ** reps1,
        stage2_repetitions=n,
        stage2_binding_error=float(n) ** (-n),
    )


@dataclass(frozen=True)
class ProposalParams:
    n: int = 20
    d: int = 20
    t: int = 200
    c: float = calibrate_c(67, 32, 1e-3)
    eps_learn: float = 0.99
    delta: float = 0.01

    @property
    def eta(self) -> float:
        return eta_fn(self.n, self.d, self.c)

    @property
    def k(self) -> int:
        return threshold_k(self.eta, self.t, self.n)

    @property
    def pubkey_qubits(self) -> int:
        return pubkey_qubits(self.n, self.t)

    def as_dict(self) -> dict:
        out = asdict(self)
        out.update(eta=self.eta, k=self.k, pubkey_qubits=self.pubkey_qubits)
        return out


# ---------------------------------------------------------------------------
# emitters


def rows_to_dicts(rows: Sequence) -> list[dict]:
    return [asdict(r) if hasattr(r, "__dataclass_fields__") else dict(r) for r in rows]


def to_csv(rows: Sequence, fieldnames: Sequence[str] | None = None) -> str:
    """CSV text with a header row and RFC-4180 quoting and line endings."""
    dicts = rows_to_dicts(rows)
    if fieldnames is None:
        fieldnames = list(dicts[0]) if dicts else []
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(fieldnames), lineterminator="\r\n", quoting=csv.QUOTE_MINIMAL)
    w.writeheader()
    for d in dicts:
        w.writerow({k: "" if d.get(k) is None else d.get(k) for k in fieldnames})
    return buf.getvalue()


def to_json(obj) -> str:
    if isinstance(obj, (list, tuple)):
        obj = rows_to_dicts(obj)
    elif hasattr(obj, "__dataclass_fields__"):
        obj = asdict(obj)
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"
