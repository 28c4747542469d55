"""One-time signatures with quantum public keys built from random circuits.

A key slice holds t pairs (C_i^(0), C_i^(1)). Signing bit b reveals the t
circuits on side b; verification inverts each revealed circuit on the
matching public-key block and accepts when at least k blocks return to 0^n.
Messages of several bits use one independent slice per bit.
"""
from __future__ import annotations

import base64
import json
import os
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .circuits import (
    CircuitDescription,
    CircuitFormatError,
    EnsembleParams,
    default_depth,
    deserialize,
    make_rng,
    sample_circuit,
    serialize,
)
from .noise import NoiseModel, noisy_block
from .owsg import GameStats, accept_probability, poisson_binomial_tail, ver
from .statevec import DENSITY_MAX_QUBITS, SimulationError

CONTAINER_VERSION = 1


class KeyReuseError(RuntimeError):
    pass


class PublicKeyConsumedError(RuntimeError):
    pass


class KeyFileError(ValueError):
    pass


@dataclass
class SigSecretKey:
    params: EnsembleParams
    t: int
    slices: tuple  # slices[s][i] = (C_i^(0), C_i^(1))
    used: list = field(default_factory=list)

    def __post_init__(self):
        if self.t < 1:
            raise ValueError("t must be >= 1")
        for sl in self.slices:
            if len(sl) != self.t or any(len(pair) != 2 for pair in sl):
                raise ValueError("every key slice needs t circuit pairs")
        if not self.used:
            self.used = [False] * len(self.slices)

    @property
    def n(self) -> int:
        return self.params.n

    def circuits(self, s: int, b: int) -> tuple:
        return tuple(pair[b] for pair in self.slices[s])


def sk_gen(n: int, t: int, catalog: str = "crypto", rng=None, d: int | None = None,
           message_bits: int = 1) -> SigSecretKey:
    """2t i.i.d. uniform circuits per message bit."""
    if t < 1 or message_bits < 1:
        raise ValueError("t and message_bits must be >= 1")
    rng = make_rng(rng)
    params = EnsembleParams(n, default_depth(n) if d is None else d, catalog)
    slices = tuple(
        tuple((sample_circuit(params, rng), sample_circuit(params, rng)) for _ in range(t))
        for _ in range(message_bits)
    )
    return SigSecretKey(params, t, slices)


class QuantumPublicKey:
    """One physical copy of |pk>, prepared lazily from the key manifest.

    Each block can be handed out once; measurement in verification destroys
    it, so a second request raises. The manifest stands in for the quantum
    channel between key generator and verifier and is not part of the
    adversary's legitimate view.
    """

    def __init__(self, manifest: tuple, t: int, noise: NoiseModel, mode: str = "exact", rng=None):
        self._manifest = manifest
        self.t = t
        self.noise = noise
        self.mode = mode
        self._rng = make_rng(rng)
        self._consumed: set = set()

    @property
    def n(self) -> int:
        return self._manifest[0][0][0].n

    @property
    def slices(self) -> int:
        return len(self._manifest)

    def qubits_per_bit_value(self) -> int:
        """n * t: the size of the public key for one value of one message bit."""
        return self.n * self.t

    def total_qubits(self) -> int:
        return 2 * self.n * self.t * self.slices

    def block(self, s: int, b: int, i: int):
        key = (s, b, i)
        if key in self._consumed:
            raise PublicKeyConsumedError(f"public-key block {key} was already consumed")
        self._consumed.add(key)
        return noisy_block(self._manifest[s][i][b], self.noise, self.mode, self._rng)

    def blocks(self, s: int, b: int) -> list:
        return [self.block(s, b, i) for i in range(self.t)]


def pk_gen(sk: SigSecretKey, noise: NoiseModel | None = None, mode: str = "exact", rng=None) -> QuantumPublicKey:
    noise = noise or NoiseModel()
    if mode not in ("exact", "trajectory"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "exact" and noise.kind == "depolarizing" and sk.n > DENSITY_MAX_QUBITS:
        raise SimulationError(
            f"exact depolarizing blocks need density operators, limited to {DENSITY_MAX_QUBITS} qubits"
        )
    return QuantumPublicKey(sk.slices, sk.t, noise, mode, rng)


@dataclass(frozen=True)
class Signature:
    bit: int
    slice: int
    circuits: tuple

    def __post_init__(self):
        if self.bit not in (0, 1):
            raise ValueError("signature bit must be 0 or 1")


def _message_bits(message) -> list[int]:
    if isinstance(message, str):
        if not message or set(message) - {"0", "1"}:
            raise ValueError(f"message must be a non-empty bitstring (got {message!r})")
        return [int(ch) for ch in message]
    bits = [int(b) for b in message]
    if not bits or any(b not in (0, 1) for b in bits):
        raise ValueError("message must be a non-empty sequence of bits")
    return bits


def sign(sk: SigSecretKey, message) -> list[Signature]:
    """Reveal side m_j of slice j for each message bit; each slice signs once."""
    bits = _message_bits(message)
    if len(bits) > len(sk.slices):
        raise ValueError(f"key has {len(sk.slices)} slices, message has {len(bits)} bits")
    for j in range(len(bits)):
        if sk.used[j]:
            raise KeyReuseError(f"key slice {j} has already signed a message")
    sigs = []
    for j, b in enumerate(bits):
        sk.used[j] = True
        sigs.append(Signature(b, j, sk.circuits(j, b)))
    return sigs


@dataclass(frozen=True)
class Verdict:
    bit: int
    per_block: tuple
    count: int | None
    threshold: int
    accept_probability: float | None
    accepted: bool

    def as_dict(self) -> dict:
        return {
            "bit": self.bit,
            "per_block": list(self.per_block),
            "count": self.count,
            "threshold": self.threshold,
            "accept_probability": self.accept_probability,
            "verdict": "accept" if self.accepted else "reject",
        }


def verify(pk: QuantumPublicKey, bit: int, sig: Signature, k: int, mode: str = "exact", rng=None) -> Verdict:
    """Check sig against the side-``bit`` blocks of its slice.

    Exact mode reports the acceptance probability (a Poisson-binomial tail)
    and accepts when it is at least 1/2; sampled mode measures every block.
    """
    if len(sig.circuits) != pk.t:
        raise ValueError(f"signature has {len(sig.circuits)} circuits, expected {pk.t}")
    if not 1 <= k <= pk.t:
        raise ValueError(f"threshold k={k} outside [1, {pk.t}]")
    blocks = pk.blocks(sig.slice, bit)
    if any(c.n != pk.n for c in sig.circuits):
        raise ValueError("signature circuits do not match the key size")
    if mode == "exact":
        probs = tuple(accept_probability(c, blk) for c, blk in zip(sig.circuits, blocks))
        p = poisson_binomial_tail(probs, k)
        return Verdict(bit, probs, None, k, p, p >= 0.5)
    if mode != "sampled":
        raise ValueError(f"unknown mode {mode!r}")
    rng = make_rng(rng)
    hits = tuple(int(ver(c, blk, "sampled", rng)) for c, blk in zip(sig.circuits, blocks))
    return Verdict(bit, hits, sum(hits), k, None, sum(hits) >= k)


def verify_message(pk: QuantumPublicKey, message, sigs: Sequence[Signature], k: int, mode: str = "exact",
                   rng=None) -> list[Verdict]:
    bits = _message_bits(message)
    if len(sigs) != len(bits):
        raise ValueError("need one signature per message bit")
    out = []
    for j, (b, sig) in enumerate(zip(bits, sigs)):
        if sig.slice != j or sig.bit != b:
            raise ValueError(f"signature {j} does not cover bit {j} = {b}")
        out.append(verify(pk, b, sig, k, mode, rng))
    return out


# ---------------------------------------------------------------------------
# one-time security game


def one_time_security_game(adv1: Callable, adv2: Callable, p: int, n: int, t: int, k: int, trials: int,
                           rng=None, catalog: str = "crypto", d: int | None = None,
                           message_bits: int = 1, noise: NoiseModel | None = None) -> GameStats:
    """Forgery experiment scored by exact acceptance probability.

    ``adv1(pk_copies, rng) -> (message, memo)`` sees p public-key copies and
    picks a message; the honest signer signs it; ``adv2(memo, message, sigs,
    rng) -> (message', sigs')`` outputs a forgery. A forgery on the same
    message scores 0; otherwise the score is the probability that a fresh
    verifier copy accepts every bit.
    """
    if trials < 1 or p < 0:
        raise ValueError("trials must be >= 1 and p >= 0")
    rng = make_rng(rng)
    noise = noise or NoiseModel()
    scores = []
    for _ in range(trials):
        sk = sk_gen(n, t, catalog, rng, d, message_bits)
        copies = [pk_gen(sk, noise, rng=rng) for _ in range(p)]
        m, memo = adv1(copies, rng)
        m_bits = _message_bits(m)
        sigs = sign(sk, m_bits)
        out = adv2(memo, m_bits, sigs, rng)
        try:
            m2, forged = out
            m2_bits = _message_bits(m2)
        except (TypeError, ValueError) as exc:
            raise ValueError(f"malformed adversary output: {exc}") from None
        if m2_bits == m_bits:
            scores.append(0.0)
            continue
        if len(forged) != len(m2_bits) or any(not isinstance(s, Signature) for s in forged):
            raise ValueError("malformed adversary output: need one Signature per message bit")
        verifier = pk_gen(sk, noise, rng=rng)
        try:
            verdicts = verify_message(verifier, m2_bits, forged, k)
        except ValueError:
            scores.append(0.0)
            continue
        scores.append(float(np.prod([v.accept_probability for v in verdicts])))
    return GameStats.from_scores(scores)


# ---------------------------------------------------------------------------
# file containers


def _b64(c: CircuitDescription) -> str:
    return base64.b64encode(serialize(c)).decode("ascii")


def _unb64(s: str) -> CircuitDescription:
    try:
        return deserialize(base64.b64decode(s.encode("ascii"), validate=True))
    except (ValueError, CircuitFormatError) as exc:
        raise KeyFileError(f"bad circuit blob: {exc}") from None


def _params_dict(params: EnsembleParams, t: int) -> dict:
    return {"n": params.n, "d": params.d, "catalog": params.catalog, "t": t}


def secret_key_to_json(sk: SigSecretKey, meta: dict | None = None) -> dict:
    return {
        "format": "nisqcrypt-secret-key",
        "version": CONTAINER_VERSION,
        "params": _params_dict(sk.params, sk.t),
        "meta": meta or {},
        "used": list(sk.used),
        "slices": [[[_b64(c0), _b64(c1)] for c0, c1 in sl] for sl in sk.slices],
    }


def manifest_to_json(sk: SigSecretKey, meta: dict | None = None) -> dict:
    doc = secret_key_to_json(sk, meta)
    doc["format"] = "nisqcrypt-public-key-manifest"
    del doc["used"]
    return doc


def _check_container(doc, fmt: str) -> None:
    if not isinstance(doc, dict) or doc.get("format") != fmt:
        raise KeyFileError(f"not a {fmt} file")
    if doc.get("version") != CONTAINER_VERSION:
        raise KeyFileError(f"unsupported {fmt} version {doc.get('version')!r}")


def _slices_from_json(doc) -> tuple:
    try:
        return tuple(tuple((_unb64(a), _unb64(b)) for a, b in sl) for sl in doc["slices"])
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, KeyFileError):
            raise
        raise KeyFileError(f"malformed key slices: {exc}") from None


def secret_key_from_json(doc) -> SigSecretKey:
    _check_container(doc, "nisqcrypt-secret-key")
    slices = _slices_from_json(doc)
    p = doc.get("params", {})
    try:
        params = EnsembleParams(int(p["n"]), int(p["d"]), str(p["catalog"]))
        sk = SigSecretKey(params, int(p["t"]), slices, [bool(u) for u in doc.get("used", [])])
    except (KeyError, TypeError, ValueError) as exc:
        raise KeyFileError(f"malformed key parameters: {exc}") from None
    if len(sk.used) != len(sk.slices):
        raise KeyFileError("used-flag list does not match the number of slices")
    return sk


def manifest_from_json(doc, noise: NoiseModel | None = None, mode: str = "exact", rng=None) -> QuantumPublicKey:
    """Prepare one public-key copy from a manifest."""
    _check_container(doc, "nisqcrypt-public-key-manifest")
    slices = _slices_from_json(doc)
    try:
        t = int(doc["params"]["t"])
    except (KeyError, TypeError, ValueError) as exc:
        raise KeyFileError(f"malformed manifest parameters: {exc}") from None
    if not slices or any(len(sl) != t for sl in slices):
        raise KeyFileError("manifest slices do not match t")
    return QuantumPublicKey(slices, t, noise or NoiseModel(), mode, rng)


def signatures_to_json(sigs: Sequence[Signature], meta: dict | None = None) -> dict:
    return {
        "format": "nisqcrypt-signature",
        "version": CONTAINER_VERSION,
        "meta": meta or {},
        "message": "".join(str(s.bit) for s in sigs),
        "signatures": [
            {"bit": s.bit, "slice": s.slice, "circuits": [_b64(c) for c in s.circuits]} for s in sigs
        ],
    }


def signatures_from_json(doc) -> list[Signature]:
    _check_container(doc, "nisqcrypt-signature")
    try:
        return [
            Signature(int(s["bit"]), int(s["slice"]), tuple(_unb64(c) for c in s["circuits"]))
            for s in doc["signatures"]
        ]
    except KeyFileError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise KeyFileError(f"malformed signature file: {exc}") from None


def read_json(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise KeyFileError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise KeyFileError(f"{path} is not valid JSON: {exc}") from None


def write_json(path, doc: dict) -> None:
    """Write atomically so an interrupted run never leaves half a key file."""
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, path)
