"""Pure numpy implementations of the statevector kernels.

Same contract as the compiled ``_kernels`` module: arrays are updated in
place, qubit ``q`` is bit ``q`` of the amplitude index, and the first target
of a two-qubit matrix is the more significant local bit.
"""
import numpy as np


def _as_tensor(psi, lead=()):
    n = (psi.shape[-1]).bit_length() - 1
    return psi.reshape(tuple(lead) + (2,) * n), n


def apply_1q(psi, u, q):
    t, n = _as_tensor(psi)
    ax = n - 1 - q
    out = np.tensordot(u, t, axes=([1], [ax]))
    psi[:] = np.moveaxis(out, 0, ax).reshape(-1)


def apply_2q(psi, u, t0, t1):
    t, n = _as_tensor(psi)
    a0, a1 = n - 1 - t0, n - 1 - t1
    out = np.tensordot(u.reshape(2, 2, 2, 2), t, axes=([2, 3], [a0, a1]))
    psi[:] = np.moveaxis(out, [0, 1], [a0, a1]).reshape(-1)


def apply_2q_batch(psis, us, t0, t1):
    batch = psis.shape[0]
    t, n = _as_tensor(psis, (batch,))
    a0, a1 = n - t0, n - t1
    u4 = us.reshape(batch, 2, 2, 2, 2)
    moved = np.moveaxis(t, [a0, a1], [1, 2])
    out = np.einsum("bijkl,bkl...->bij...", u4, moved)
    psis[:] = np.moveaxis(out, [1, 2], [a0, a1]).reshape(batch, -1)


def zero_probability(psi):
    return float(abs(psi[0]) ** 2)
