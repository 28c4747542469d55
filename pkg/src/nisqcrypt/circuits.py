"""Brickwork circuit ensembles, their bit-exact description format, and state preparation.

A circuit of the ensemble on ``n`` qubits with depth ``d`` is a layer-major
list of brick indices into a :class:`GateCatalog`. Layer ``l`` places bricks on
pairs ``(0,1),(2,3),...`` when ``l`` is even and ``(1,2),(3,4),...`` when odd.
A brick on pair ``(q, q+1)`` uses ``q`` as its first (more significant) local
qubit.
"""
from __future__ import annotations

import itertools
import math
import struct
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterator, Sequence

import numpy as np

from . import kernels
from .statevec import GateOp, StateVector, is_unitary

# ---------------------------------------------------------------------------
# gate library

I2 = np.eye(2, dtype=np.complex128)
X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
H = np.array([[1, 1], [1, -1]], dtype=np.complex128) / math.sqrt(2)
S = np.array([[1, 0], [0, 1j]], dtype=np.complex128)
T = np.array([[1, 0], [0, np.exp(1j * math.pi / 4)]], dtype=np.complex128)
CZ = np.diag([1, 1, 1, -1]).astype(np.complex128)
CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=np.complex128)
PAULIS = (I2, X, Y, Z)
PAULI_LABELS = ("I", "X", "Y", "Z")


def phase_key(m: np.ndarray, decimals: int = 8) -> bytes:
    """Hashable key identifying a matrix up to global phase."""
    flat = m.reshape(-1)
    pivot = flat[np.argmax(np.abs(flat) > 1e-9)]
    canon = flat * (abs(pivot) / pivot)
    parts = np.stack([canon.real, canon.imag])
    return (np.round(parts, decimals) + 0.0).tobytes()  # + 0.0 folds -0.0


def _generate_group(generators: Sequence[np.ndarray]) -> list[np.ndarray]:
    dim = generators[0].shape[0]
    seen = {phase_key(np.eye(dim)): np.eye(dim, dtype=np.complex128)}
    order = [np.eye(dim, dtype=np.complex128)]
    frontier = list(order)
    while frontier:
        nxt = []
        for g in frontier:
            for h in generators:
                m = h @ g
                key = phase_key(m)
                if key not in seen:
                    seen[key] = m
                    order.append(m)
                    nxt.append(m)
        frontier = nxt
    return order


SINGLE_QUBIT_CLIFFORDS: tuple[np.ndarray, ...] = tuple(_generate_group([H, S]))
assert len(SINGLE_QUBIT_CLIFFORDS) == 24

# ---------------------------------------------------------------------------
# catalogs


class CatalogError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class GateCatalog:
    """A finite set of two-qubit bricks, addressed by integer index.

    Small catalogs hold their matrices explicitly; large ones build a matrix on
    demand from its index through ``builder``.
    """

    id: str
    size: int
    builder: Callable[[int], np.ndarray] = field(repr=False)
    labeler: Callable[[int], str] = field(repr=False)
    pauli_closed: bool = False

    def __post_init__(self):
        if self.size < 1:
            raise CatalogError(f"catalog {self.id!r} is empty")
        cached = lru_cache(maxsize=1 << 16)(self._build_checked)
        object.__setattr__(self, "_matrix", cached)

    def _build_checked(self, index: int) -> np.ndarray:
        m = np.ascontiguousarray(self.builder(index), dtype=np.complex128)
        m.setflags(write=False)
        return m

    @property
    def bits(self) -> int:
        """Bits needed to encode one brick index."""
        return max(1, math.ceil(math.log2(self.size))) if self.size > 1 else 0

    def matrix(self, index: int) -> np.ndarray:
        if not 0 <= index < self.size:
            raise CatalogError(f"brick index {index} outside catalog {self.id!r} of size {self.size}")
        return self._matrix(int(index))

    def label(self, index: int) -> str:
        return self.labeler(int(index))

    def entries(self) -> list[tuple[str, np.ndarray]]:
        if self.size > 4096:
            raise CatalogError(f"catalog {self.id!r} has {self.size} entries; refusing to list them")
        return [(self.label(i), self.matrix(i)) for i in range(self.size)]


def explicit_catalog(id: str, matrices: Sequence[np.ndarray], labels: Sequence[str] | None = None,
                     pauli_closed: bool = False) -> GateCatalog:
    mats = [np.asarray(m, dtype=np.complex128) for m in matrices]
    if not mats:
        raise CatalogError(f"catalog {id!r} is empty")
    for i, m in enumerate(mats):
        if m.shape != (4, 4) or not is_unitary(m):
            raise CatalogError(f"entry {i} of catalog {id!r} is not a 4x4 unitary")
    labels = list(labels) if labels is not None else [f"{id}[{i}]" for i in range(len(mats))]
    return GateCatalog(id, len(mats), mats.__getitem__, labels.__getitem__, pauli_closed)


_CRYPTO_1Q = SINGLE_QUBIT_CLIFFORDS + tuple(c @ T for c in SINGLE_QUBIT_CLIFFORDS)
# non-Clifford entanglers keep enumerated states from collapsing onto an orthonormal set
_ENUM16_CORE = CZ @ np.kron(T @ H, T @ H)
_ENUM4_LOCAL = (I2, H @ T)
_ENUM4_CORE = CZ @ np.kron(H, H)


def _crypto_digits(index: int) -> tuple[int, int, int, int]:
    a, rest = divmod(index, 48 ** 3)
    b, rest = divmod(rest, 48 ** 2)
    c, d = divmod(rest, 48)
    return a, b, c, d


_CRYPTO_STACK = np.array(_CRYPTO_1Q)
_CZ_DIAG = np.diag(CZ).copy()


def _kron2(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # np.kron is general-purpose and dominates brick construction otherwise
    return (a[:, None, :, None] * b[None, :, None, :]).reshape(4, 4)


def _crypto_matrix(index: int) -> np.ndarray:
    a, b, c, d = _crypto_digits(index)
    g = _CRYPTO_STACK
    return (_kron2(g[a], g[b]) * _CZ_DIAG) @ _kron2(g[c], g[d])


def _crypto_label(index: int) -> str:
    def name(j):
        return f"C{j}" if j < 24 else f"C{j - 24}T"
    a, b, c, d = _crypto_digits(index)
    return f"({name(a)}x{name(b)}).CZ.({name(c)}x{name(d)})"


def _enum16_matrix(index: int) -> np.ndarray:
    p, q = divmod(index, 4)
    return np.kron(PAULIS[p], PAULIS[q]) @ _ENUM16_CORE


def _enum4_matrix(index: int) -> np.ndarray:
    a, b = divmod(index, 2)
    return np.kron(_ENUM4_LOCAL[a], _ENUM4_LOCAL[b]) @ _ENUM4_CORE


CATALOGS: dict[str, GateCatalog] = {}


def register_catalog(catalog: GateCatalog) -> GateCatalog:
    if len(catalog.id.encode()) > 255:
        raise CatalogError("catalog id too long")
    CATALOGS[catalog.id] = catalog
    return catalog


def get_catalog(catalog_id: str | GateCatalog) -> GateCatalog:
    if isinstance(catalog_id, GateCatalog):
        return catalog_id
    try:
        return CATALOGS[catalog_id]
    except KeyError:
        raise CatalogError(f"unknown catalog {catalog_id!r}") from None


register_catalog(GateCatalog(
    "crypto", 48 ** 4, _crypto_matrix, _crypto_label, pauli_closed=True))
register_catalog(GateCatalog(
    "enum16", 16, _enum16_matrix,
    lambda i: f"({PAULI_LABELS[i // 4]}x{PAULI_LABELS[i % 4]}).CZ.(THxTH)", pauli_closed=True))
register_catalog(GateCatalog(
    "enum4", 4, _enum4_matrix,
    lambda i: f"({'I' if i < 2 else 'HT'}x{'I' if i % 2 == 0 else 'HT'}).CZ.(HxH)", pauli_closed=False))

# ---------------------------------------------------------------------------
# ensemble and descriptions


def default_depth(n: int) -> int:
    return max(1, math.ceil(math.log2(n) ** 2))


@dataclass(frozen=True)
class EnsembleParams:
    n: int
    d: int
    catalog: str = "crypto"
    seed: int | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"brickwork circuits need n >= 2 (got {self.n})")
        if self.d < 1:
            raise ValueError(f"depth must be >= 1 (got {self.d})")
        get_catalog(self.catalog)

    @classmethod
    def default(cls, n: int, catalog: str = "crypto", seed: int | None = None) -> "EnsembleParams":
        return cls(n, default_depth(n), catalog, seed)

    @property
    def gate_catalog(self) -> GateCatalog:
        return get_catalog(self.catalog)

    @property
    def layout(self) -> tuple[tuple[int, int, int], ...]:
        return brick_layout(self.n, self.d)

    @property
    def num_bricks(self) -> int:
        return len(self.layout)

    @property
    def key_bits(self) -> int:
        """r(n): total bits of the circuit description."""
        return self.num_bricks * self.gate_catalog.bits

    @property
    def ensemble_size(self) -> int:
        return self.gate_catalog.size ** self.num_bricks


@lru_cache(maxsize=None)
def brick_layout(n: int, d: int) -> tuple[tuple[int, int, int], ...]:
    """(layer, first qubit, second qubit) for every brick, layer-major."""
    out = []
    for layer in range(d):
        for q in range(layer % 2, n - 1, 2):
            out.append((layer, q, q + 1))
    return tuple(out)


@dataclass(frozen=True)
class CircuitDescription:
    params: EnsembleParams
    bricks: tuple[int, ...]

    def __post_init__(self):
        bricks = tuple(int(b) for b in self.bricks)
        if len(bricks) != self.params.num_bricks:
            raise ValueError(
                f"expected {self.params.num_bricks} bricks for n={self.params.n}, d={self.params.d}; got {len(bricks)}"
            )
        size = self.params.gate_catalog.size
        for b in bricks:
            if not 0 <= b < size:
                raise CatalogError(f"brick index {b} outside catalog {self.params.catalog!r}")
        object.__setattr__(self, "bricks", bricks)

    @property
    def n(self) -> int:
        return self.params.n

    @property
    def d(self) -> int:
        return self.params.d

    def layer_sizes(self) -> list[int]:
        sizes = [0] * self.d
        for layer, _, _ in self.params.layout:
            sizes[layer] += 1
        return sizes

    def gates(self) -> list[GateOp]:
        cat = self.params.gate_catalog
        return [
            GateOp(cat.label(b), (q0, q1), cat.matrix(b))
            for (_, q0, q1), b in zip(self.params.layout, self.bricks)
        ]

    @property
    def gate_count(self) -> int:
        return len(self.bricks)


def make_rng(seed_or_rng=None) -> np.random.Generator:
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return np.random.default_rng(seed_or_rng)


def sample_circuit(params: EnsembleParams, rng=None) -> CircuitDescription:
    rng = make_rng(params.seed if rng is None else rng)
    bricks = rng.integers(0, params.gate_catalog.size, size=params.num_bricks)
    return CircuitDescription(params, tuple(bricks.tolist()))


def enumerate_ensemble(params: EnsembleParams, cap: int = 1 << 16) -> list[CircuitDescription]:
    total = params.ensemble_size
    if total > cap:
        raise ValueError(f"ensemble has {total} members, above the cap of {cap}")
    size = params.gate_catalog.size
    return [
        CircuitDescription(params, combo)
        for combo in itertools.product(range(size), repeat=params.num_bricks)
    ]

# ---------------------------------------------------------------------------
# simulation


def _run_bricks(buf: np.ndarray, c: CircuitDescription, inverse: bool = False) -> None:
    cat = c.params.gate_catalog
    steps = list(zip(c.params.layout, c.bricks))
    if inverse:
        for (_, q0, q1), b in reversed(steps):
            kernels.apply_2q(buf, _dagger(cat, b), q0, q1)
    else:
        for (_, q0, q1), b in steps:
            kernels.apply_2q(buf, cat.matrix(b), q0, q1)


_DAGGERS: dict[tuple[str, int], np.ndarray] = {}


def _dagger(cat: GateCatalog, index: int) -> np.ndarray:
    key = (cat.id, index)
    m = _DAGGERS.get(key)
    if m is None:
        m = np.ascontiguousarray(cat.matrix(index).conj().T)
        if len(_DAGGERS) > 1 << 16:
            _DAGGERS.clear()
        _DAGGERS[key] = m
    return m


def prepare_state(c: CircuitDescription) -> StateVector:
    """|C> = C|0^n>."""
    buf = np.zeros(1 << c.n, dtype=np.complex128)
    buf[0] = 1.0
    _run_bricks(buf, c)
    return StateVector._adopt(c.n, buf)


def inverse_circuit(c: CircuitDescription) -> list[GateOp]:
    """Gate sequence of C^dag: reversed order, each brick conjugate-transposed."""
    return [g.inverse() for g in reversed(c.gates())]


def apply_circuit(c: CircuitDescription, state: StateVector, inverse: bool = False) -> StateVector:
    if state.n != c.n:
        raise ValueError(f"circuit on {c.n} qubits applied to a {state.n}-qubit state")
    buf = state.copy_amps()
    _run_bricks(buf, c, inverse)
    return StateVector._adopt(c.n, buf)


def apply_inverse_inplace(c: CircuitDescription, buf: np.ndarray) -> None:
    _run_bricks(buf, c, inverse=True)


def _batch_apply(buf: np.ndarray, circuits: Sequence[CircuitDescription], inverse: bool) -> None:
    params = circuits[0].params
    if any((c.n, c.d) != (params.n, params.d) for c in circuits):
        raise ValueError("batched circuits must share n and d")
    layout = params.layout
    order = range(len(layout) - 1, -1, -1) if inverse else range(len(layout))
    us = np.empty((len(circuits), 4, 4), dtype=np.complex128)
    for pos in order:
        _, q0, q1 = layout[pos]
        for row, c in enumerate(circuits):
            cat = c.params.gate_catalog
            b = c.bricks[pos]
            us[row] = _dagger(cat, b) if inverse else cat.matrix(b)
        kernels.apply_2q_batch(buf, us, q0, q1)


def prepare_batch(circuits: Sequence[CircuitDescription]) -> np.ndarray:
    """Rows are |C_j> for each circuit; all circuits must share n and d."""
    n = circuits[0].n
    buf = np.zeros((len(circuits), 1 << n), dtype=np.complex128)
    buf[:, 0] = 1.0
    _batch_apply(buf, circuits, inverse=False)
    return buf


def apply_inverse_batch(circuits: Sequence[CircuitDescription], buf: np.ndarray) -> None:
    """In place: row j <- C_j^dag row j."""
    _batch_apply(buf, circuits, inverse=True)

# ---------------------------------------------------------------------------
# .qcirc format

MAGIC = b"QCIR"
FORMAT_VERSION = 1
_HEADER = struct.Struct(">4sBHHB")


class CircuitFormatError(ValueError):
    pass


def header_size(catalog_id: str) -> int:
    return _HEADER.size + len(catalog_id.encode("ascii"))


def serialize(c: CircuitDescription) -> bytes:
    cat = c.params.gate_catalog
    cid = cat.id.encode("ascii")
    head = _HEADER.pack(MAGIC, FORMAT_VERSION, c.n, c.d, len(cid)) + cid
    bits = cat.bits
    acc = 0
    for b in c.bricks:
        acc = (acc << bits) | b
    total = bits * len(c.bricks)
    nbytes = (total + 7) // 8
    acc <<= nbytes * 8 - total
    return head + acc.to_bytes(nbytes, "big")


def deserialize(data: bytes) -> CircuitDescription:
    if len(data) < _HEADER.size:
        raise CircuitFormatError("truncated header")
    magic, version, n, d, idlen = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise CircuitFormatError(f"bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise CircuitFormatError(f"unsupported format version {version}")
    end = _HEADER.size + idlen
    if len(data) < end:
        raise CircuitFormatError("truncated catalog id")
    try:
        catalog = get_catalog(data[_HEADER.size:end].decode("ascii"))
        params = EnsembleParams(n, d, catalog.id)
    except (CatalogError, ValueError, UnicodeDecodeError) as exc:
        raise CircuitFormatError(str(exc)) from None
    bits = catalog.bits
    count = params.num_bricks
    total = bits * count
    nbytes = (total + 7) // 8
    payload = data[end:]
    if len(payload) != nbytes:
        raise CircuitFormatError(f"payload is {len(payload)} bytes, expected {nbytes}")
    acc = int.from_bytes(payload, "big") >> (nbytes * 8 - total)
    mask = (1 << bits) - 1
    bricks = [(acc >> (bits * (count - 1 - i))) & mask for i in range(count)]
    for b in bricks:
        if b >= catalog.size:
            raise CircuitFormatError(f"invalid brick index {b} for catalog {catalog.id!r}")
    return CircuitDescription(params, tuple(bricks))


def to_text(c: CircuitDescription) -> str:
    """Human-readable dump: one brick per line (layer, pair, label)."""
    cat = c.params.gate_catalog
    lines = [f"# n={c.n} d={c.d} catalog={cat.id} bricks={len(c.bricks)}"]
    for (layer, q0, q1), b in zip(c.params.layout, c.bricks):
        lines.append(f"{layer}\t{q0},{q1}\t{b}\t{cat.label(b)}")
    return "\n".join(lines) + "\n"


def iter_layers(c: CircuitDescription) -> Iterator[list[tuple[int, int, int]]]:
    """Yield each layer (possibly empty) as a list of (first qubit, second qubit, brick index)."""
    layers: list[list[tuple[int, int, int]]] = [[] for _ in range(c.d)]
    for (layer, q0, q1), b in zip(c.params.layout, c.bricks):
        layers[layer].append((q0, q1, b))
    yield from layers
