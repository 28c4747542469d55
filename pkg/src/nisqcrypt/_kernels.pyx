# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled statevector kernels.

All routines update ``psi`` in place. Qubit ``q`` is bit ``q`` of the
amplitude index. For a two-qubit matrix the first target is the more
significant bit of the 4x4 local index.
"""

ctypedef double complex cplx


cdef inline Py_ssize_t _insert_zero(Py_ssize_t x, int bit) nogil:
    cdef Py_ssize_t low = x & ((<Py_ssize_t>1 << bit) - 1)
    return ((x >> bit) << (bit + 1)) | low


def apply_1q(cplx[::1] psi, const cplx[:, ::1] u, int q):
    cdef Py_ssize_t half = psi.shape[0] >> 1
    cdef Py_ssize_t mask = <Py_ssize_t>1 << q
    cdef Py_ssize_t i, i0, i1
    cdef cplx a0, a1
    cdef cplx u00 = u[0, 0], u01 = u[0, 1], u10 = u[1, 0], u11 = u[1, 1]
    with nogil:
        for i in range(half):
            i0 = _insert_zero(i, q)
            i1 = i0 | mask
            a0 = psi[i0]
            a1 = psi[i1]
            psi[i0] = u00 * a0 + u01 * a1
            psi[i1] = u10 * a0 + u11 * a1


cdef inline void _apply_2q_row(cplx* psi, const cplx* m, int lo, int hi,
                               Py_ssize_t mhi_local, Py_ssize_t mlo_local,
                               Py_ssize_t quarter) nogil:
    # mhi_local / mlo_local: index masks of the first / second target
    cdef Py_ssize_t i, base, i00, i01, i10, i11
    cdef cplx a0, a1, a2, a3
    for i in range(quarter):
        base = _insert_zero(_insert_zero(i, lo), hi)
        i00 = base
        i01 = base | mlo_local
        i10 = base | mhi_local
        i11 = base | mhi_local | mlo_local
        a0 = psi[i00]
        a1 = psi[i01]
        a2 = psi[i10]
        a3 = psi[i11]
        psi[i00] = m[0] * a0 + m[1] * a1 + m[2] * a2 + m[3] * a3
        psi[i01] = m[4] * a0 + m[5] * a1 + m[6] * a2 + m[7] * a3
        psi[i10] = m[8] * a0 + m[9] * a1 + m[10] * a2 + m[11] * a3
        psi[i11] = m[12] * a0 + m[13] * a1 + m[14] * a2 + m[15] * a3


def apply_2q(cplx[::1] psi, const cplx[:, ::1] u, int t0, int t1):
    cdef int lo = t0 if t0 < t1 else t1
    cdef int hi = t1 if t0 < t1 else t0
    cdef Py_ssize_t quarter = psi.shape[0] >> 2
    cdef Py_ssize_t m0 = <Py_ssize_t>1 << t0
    cdef Py_ssize_t m1 = <Py_ssize_t>1 << t1
    with nogil:
        _apply_2q_row(&psi[0], &u[0, 0], lo, hi, m0, m1, quarter)


def apply_2q_batch(cplx[:, ::1] psis, const cplx[:, :, ::1] us, int t0, int t1):
    """Apply ``us[b]`` to row ``b`` of ``psis`` for every batch row."""
    cdef int lo = t0 if t0 < t1 else t1
    cdef int hi = t1 if t0 < t1 else t0
    cdef Py_ssize_t quarter = psis.shape[1] >> 2
    cdef Py_ssize_t m0 = <Py_ssize_t>1 << t0
    cdef Py_ssize_t m1 = <Py_ssize_t>1 << t1
    cdef Py_ssize_t b
    with nogil:
        for b in range(psis.shape[0]):
            _apply_2q_row(&psis[b, 0], &us[b, 0, 0], lo, hi, m0, m1, quarter)


def zero_probability(const cplx[::1] psi):
    return psi[0].real * psi[0].real + psi[0].imag * psi[0].imag
