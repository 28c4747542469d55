"""Uniform Clifford sampling through the canonical index of the symplectic group.

Symplectic vectors use interleaved order: bit 2j is the X part and bit 2j+1
the Z part of qubit j. A symplectic matrix ``g`` stores the image of X_j in
row 2j and the image of Z_j in row 2j+1, so a Pauli with bit vector v maps
to the Pauli with bit vector ``v @ g`` (mod 2). Composition therefore reads
left to right: U(g1 @ g2) = U(g2) U(g1) up to a Pauli and a phase.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache, reduce

import numpy as np

from .circuits import PAULIS, make_rng


def num_cosets(n: int) -> int:
    return (4 ** n - 1) * 2 ** (2 * n - 1)


def num_symplectic(n: int) -> int:
    return math.prod(num_cosets(j) for j in range(1, n + 1))


def num_cliffords(n: int) -> int:
    """Size of the n-qubit Clifford group modulo global phase."""
    return 4 ** n * num_symplectic(n)


def _bits(i: int, width: int) -> np.ndarray:
    return np.array([(i >> j) & 1 for j in range(width)], dtype=np.uint8)


def sym_inner(v: np.ndarray, w: np.ndarray) -> int:
    return int(np.sum(v[0::2] & w[1::2]) + np.sum(v[1::2] & w[0::2])) & 1


def transvect(h: np.ndarray, v: np.ndarray) -> np.ndarray:
    return v ^ (h * sym_inner(h, v)).astype(np.uint8)


def _find_transvection(x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """h1, h2 with y = Z_h1 Z_h2 x (either may be zero)."""
    zero = np.zeros_like(x)
    if np.array_equal(x, y):
        return zero, zero.copy()
    if sym_inner(x, y):
        return x ^ y, zero
    z = np.zeros_like(x)
    pairs = range(len(x) // 2)
    for j in pairs:
        a, b = 2 * j, 2 * j + 1
        if (x[a] | x[b]) and (y[a] | y[b]):
            z[a], z[b] = x[a] ^ y[a], x[b] ^ y[b]
            if not (z[a] | z[b]):
                z[b] = 1
                if x[a] != x[b]:
                    z[a] = 1
            return x ^ z, y ^ z
    for j in pairs:
        a, b = 2 * j, 2 * j + 1
        if (x[a] | x[b]) and not (y[a] | y[b]):
            if x[a] == x[b]:
                z[b] = 1
            else:
                z[a], z[b] = x[b], x[a]
            break
    for j in pairs:
        a, b = 2 * j, 2 * j + 1
        if not (x[a] | x[b]) and (y[a] | y[b]):
            if y[a] == y[b]:
                z[b] = 1
            else:
                z[a], z[b] = y[b], y[a]
            break
    return x ^ z, y ^ z


def symplectic_from_index(i: int, n: int) -> np.ndarray:
    """Canonical bijection from [0, |Sp(2n)|) to 2n x 2n symplectic matrices."""
    nn = 2 * n
    s = (1 << nn) - 1
    f1 = _bits(i % s + 1, nn)
    i //= s
    e1 = np.zeros(nn, dtype=np.uint8)
    e1[0] = 1
    t0, t1 = _find_transvection(e1, f1)
    b = _bits(i % (1 << (nn - 1)), nn - 1)
    ep = e1.copy()
    ep[2:] = b[1:]
    h0 = transvect(t1, transvect(t0, ep))
    if b[0]:
        f1 = np.zeros_like(f1)
    g = np.eye(nn, dtype=np.uint8)
    if n > 1:
        g[2:, 2:] = symplectic_from_index(i >> (nn - 1), n - 1)
    for j in range(nn):
        row = g[j]
        for h in (t0, t1, h0, f1):
            row = transvect(h, row)
        g[j] = row
    return g


def is_symplectic(g: np.ndarray) -> bool:
    nn = g.shape[0]
    omega = np.zeros((nn, nn), dtype=np.int64)
    for j in range(nn // 2):
        omega[2 * j, 2 * j + 1] = omega[2 * j + 1, 2 * j] = 1
    gi = g.astype(np.int64)
    return bool(np.array_equal((gi @ omega @ gi.T) % 2, omega))


def pauli_matrix(v: np.ndarray) -> np.ndarray:
    """Hermitian Pauli i^{x.z} X^x Z^z for interleaved bits v (qubit 0 least significant)."""
    n = len(v) // 2
    factors = []
    for j in range(n):
        x, z = int(v[2 * j]), int(v[2 * j + 1])
        factors.append(PAULIS[{(0, 0): 0, (1, 0): 1, (1, 1): 2, (0, 1): 3}[(x, z)]])
    # kron puts its last factor on the lowest qubit
    return reduce(np.kron, reversed(factors), np.ones((1, 1), dtype=np.complex128))


def unitary_from_symplectic(g: np.ndarray) -> np.ndarray:
    """A unitary U with U X_j U^dag = P(g[2j]) and U Z_j U^dag = P(g[2j+1]), up to phase."""
    nn = g.shape[0]
    n = nn // 2
    dim = 1 << n
    proj = np.eye(dim, dtype=np.complex128)
    for j in range(n):
        proj = proj @ (np.eye(dim) + pauli_matrix(g[2 * j + 1])) / 2
    col = np.argmax(np.linalg.norm(proj, axis=0))
    v0 = proj[:, col] / np.linalg.norm(proj[:, col])
    xs = [pauli_matrix(g[2 * j]) for j in range(n)]
    u = np.empty((dim, dim), dtype=np.complex128)
    for x in range(dim):
        v = v0
        for j in range(n):
            if (x >> j) & 1:
                v = xs[j] @ v
        u[:, x] = v
    return u


@dataclass(frozen=True, eq=False)
class Clifford:
    """Symplectic part plus a Pauli frame: U = P(frame) U(sym)."""

    n: int
    sym: np.ndarray
    frame: int

    def __post_init__(self):
        if self.sym.shape != (2 * self.n, 2 * self.n) or not is_symplectic(self.sym):
            raise ValueError("tableau is not a valid symplectic matrix")
        if not 0 <= self.frame < 4 ** self.n:
            raise ValueError("Pauli frame out of range")

    def unitary(self) -> np.ndarray:
        return _cached_unitary(self.n, self.sym.tobytes(), self.frame)


@lru_cache(maxsize=4096)
def _cached_unitary(n: int, sym_bytes: bytes, frame: int) -> np.ndarray:
    g = np.frombuffer(sym_bytes, dtype=np.uint8).reshape(2 * n, 2 * n)
    u = pauli_matrix(_bits(frame, 2 * n)) @ unitary_from_symplectic(g)
    u.setflags(write=False)
    return u


def _random_index(bound: int, rng: np.random.Generator) -> int:
    if bound <= 1 << 62:
        return int(rng.integers(bound))
    # rejection over concatenated 62-bit draws for very large groups
    words = -(-bound.bit_length() // 62)
    while True:
        x = 0
        for _ in range(words):
            x = (x << 62) | int(rng.integers(1 << 62))
        x >>= words * 62 - bound.bit_length()
        if x < bound:
            return x


def sample_clifford(n: int, rng=None) -> Clifford:
    """Uniformly random n-qubit Clifford (modulo global phase)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = make_rng(rng)
    i = _random_index(num_symplectic(n), rng)
    return Clifford(n, symplectic_from_index(i, n), int(rng.integers(4 ** n)))


def all_cliffords(n: int) -> list[Clifford]:
    """Every Clifford modulo phase (small n only)."""
    total = num_cliffords(n)
    if total > 1 << 20:
        raise ValueError(f"{total} Cliffords is too many to enumerate")
    syms = [symplectic_from_index(i, n) for i in range(num_symplectic(n))]
    return [Clifford(n, g, f) for g in syms for f in range(4 ** n)]


class CliffordTables:
    """Batched uniform sampling of Clifford unitaries modulo the Pauli frame.

    The symplectic index splits into one coset digit per level; level m acts
    on qubits n-m..n-1. Coset representatives are tabulated once as full-size
    matrices, so a sample is a product of n table entries. The product agrees
    with the canonical-index unitary up to a Pauli frame, and the frame is
    left out: in a basis measurement it only relabels outcomes.
    """

    MAX_QUBITS = 3

    def __init__(self, n: int):
        if not 1 <= n <= self.MAX_QUBITS:
            raise ValueError(f"tables are only built for 1 <= n <= {self.MAX_QUBITS}")
        self.n = n
        self.levels = []
        for m in range(n, 0, -1):
            low = n - m
            mats = np.empty((num_cosets(m), 1 << n, 1 << n), dtype=np.complex128)
            for c in range(num_cosets(m)):
                u = unitary_from_symplectic(symplectic_from_index(c, m))
                mats[c] = np.kron(u, np.eye(1 << low))
            self.levels.append(mats)

    def sample_digits(self, size: int, rng: np.random.Generator) -> np.ndarray:
        return np.stack([rng.integers(0, len(t), size=size) for t in self.levels], axis=1)

    def apply(self, digits: np.ndarray, vecs: np.ndarray) -> np.ndarray:
        """Rows of ``vecs`` mapped through the sampled unitaries."""
        out = vecs
        for lvl in range(len(self.levels) - 1, -1, -1):
            out = np.einsum("bij,bj->bi", self.levels[lvl][digits[:, lvl]], out)
        return out

    def rows(self, digits: np.ndarray, outcomes: np.ndarray) -> np.ndarray:
        """Row ``outcomes[b]`` of each sampled unitary, i.e. <x_b| S_b."""
        out = self.levels[0][digits[:, 0], outcomes, :]
        for lvl in range(1, len(self.levels)):
            out = np.einsum("bi,bij->bj", out, self.levels[lvl][digits[:, lvl]])
        return out

    def unitary(self, digits) -> np.ndarray:
        return reduce(np.matmul, [self.levels[lvl][d] for lvl, d in enumerate(digits)])

    def digits_to_index(self, digits) -> int:
        """Canonical symplectic index of a digit tuple."""
        idx = 0
        for lvl in range(len(self.levels) - 1, -1, -1):
            idx = idx * len(self.levels[lvl]) + int(digits[lvl])
        return idx
