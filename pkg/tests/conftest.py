import math

import numpy as np
import pytest

from nisqcrypt.circuits import CircuitDescription


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def dense_op(u: np.ndarray, targets, n: int) -> np.ndarray:
    """Full 2^n x 2^n matrix of a gate, built column by column from bit arithmetic.

    Independent of the kernels: first target is the more significant local bit.
    """
    dim = 1 << n
    k = len(targets)
    out = np.zeros((dim, dim), dtype=complex)
    for col in range(dim):
        local = 0
        for t in targets:
            local = (local << 1) | ((col >> t) & 1)
        for row_local in range(1 << k):
            row = col
            for j, t in enumerate(targets):
                bit = (row_local >> (k - 1 - j)) & 1
                row = (row & ~(1 << t)) | (bit << t)
            out[row, col] += u[row_local, local]
    return out


def dense_circuit(c: CircuitDescription) -> np.ndarray:
    cat = c.params.gate_catalog
    u = np.eye(1 << c.n, dtype=complex)
    for (_, q0, q1), b in zip(c.params.layout, c.bricks):
        u = dense_op(cat.matrix(b), (q0, q1), c.n) @ u
    return u


def within_sigma(count: int, trials: int, p: float, z: float = 4.0) -> bool:
    """|count/trials - p| within z binomial standard errors (with a floor for p near 0 or 1)."""
    sd = math.sqrt(max(p * (1 - p), 1.0 / trials) / trials)
    return abs(count / trials - p) <= z * sd


# filled by test_acceptance.py, echoed at the end of the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
