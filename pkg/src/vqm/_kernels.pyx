# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops for small dense qubit registers.

Qubit ``q`` (0-based) is bit ``n - 1 - q`` of a basis index, i.e. qubit 0 is
the most significant factor of the Kronecker product.
"""
import numpy as np
cimport numpy as cnp

cnp.import_array()


cdef inline double complex _conj(double complex z) nogil:
    return z.real - 1j * z.imag


def apply_1q(double complex[:, ::1] states, double complex[:, ::1] u, int qubit, int n):
    """In place ``states <- (u on qubit) @ states`` for a (2**n, k) column block."""
    cdef Py_ssize_t dim = states.shape[0]
    cdef Py_ssize_t k = states.shape[1]
    cdef Py_ssize_t stride = 1 << (n - 1 - qubit)
    cdef Py_ssize_t i0, i1, c
    cdef double complex a, b
    cdef double complex u00 = u[0, 0], u01 = u[0, 1], u10 = u[1, 0], u11 = u[1, 1]
    with nogil:
        for i0 in range(dim):
            if i0 & stride:
                continue
            i1 = i0 | stride
            for c in range(k):
                a = states[i0, c]
                b = states[i1, c]
                states[i0, c] = u00 * a + u01 * b
                states[i1, c] = u10 * a + u11 * b


def apply_1q_dm(double complex[:, ::1] rho, double complex[:, ::1] u, int qubit, int n):
    """In place ``rho <- U rho U^dagger`` with ``u`` acting on one qubit."""
    cdef Py_ssize_t dim = rho.shape[0]
    cdef Py_ssize_t stride = 1 << (n - 1 - qubit)
    cdef Py_ssize_t i0, i1, r
    cdef double complex a, b
    cdef double complex u00 = u[0, 0], u01 = u[0, 1], u10 = u[1, 0], u11 = u[1, 1]
    cdef double complex c00 = _conj(u00), c01 = _conj(u01)
    cdef double complex c10 = _conj(u10), c11 = _conj(u11)
    with nogil:
        for i0 in range(dim):
            if i0 & stride:
                continue
            i1 = i0 | stride
            for r in range(dim):
                a = rho[i0, r]
                b = rho[i1, r]
                rho[i0, r] = u00 * a + u01 * b
                rho[i1, r] = u10 * a + u11 * b
        for i0 in range(dim):
            if i0 & stride:
                continue
            i1 = i0 | stride
            for r in range(dim):
                a = rho[r, i0]
                b = rho[r, i1]
                rho[r, i0] = a * c00 + b * c01
                rho[r, i1] = a * c10 + b * c11


def apply_kraus_1q(double complex[:, ::1] rho, double complex[:, :, ::1] kraus, int qubit, int n):
    """Return ``sum_i K_i rho K_i^dagger`` with every ``K_i`` on one qubit."""
    cdef Py_ssize_t dim = rho.shape[0]
    cdef Py_ssize_t nk = kraus.shape[0]
    cdef Py_ssize_t stride = 1 << (n - 1 - qubit)
    if nk > 4:
        raise ValueError("at most 4 single-qubit Kraus operators")
    out_arr = np.empty((dim, dim), dtype=np.complex128)
    cdef double complex[:, ::1] out = out_arr
    cdef double complex k[4][2][2]
    cdef double complex kc[4][2][2]
    cdef Py_ssize_t r0, r1, c0, c1, m, x, y
    cdef double complex b00, b01, b10, b11, t0, t1, o00, o01, o10, o11
    for m in range(nk):
        for x in range(2):
            for y in range(2):
                k[m][x][y] = kraus[m, x, y]
                kc[m][x][y] = _conj(kraus[m, x, y])
    with nogil:
        for r0 in range(dim):
            if r0 & stride:
                continue
            r1 = r0 | stride
            for c0 in range(dim):
                if c0 & stride:
                    continue
                c1 = c0 | stride
                b00 = rho[r0, c0]
                b01 = rho[r0, c1]
                b10 = rho[r1, c0]
                b11 = rho[r1, c1]
                o00 = o01 = o10 = o11 = 0
                for m in range(nk):
                    # row x of K @ B, then times K^dagger
                    t0 = k[m][0][0] * b00 + k[m][0][1] * b10
                    t1 = k[m][0][0] * b01 + k[m][0][1] * b11
                    o00 = o00 + t0 * kc[m][0][0] + t1 * kc[m][0][1]
                    o01 = o01 + t0 * kc[m][1][0] + t1 * kc[m][1][1]
                    t0 = k[m][1][0] * b00 + k[m][1][1] * b10
                    t1 = k[m][1][0] * b01 + k[m][1][1] * b11
                    o10 = o10 + t0 * kc[m][0][0] + t1 * kc[m][0][1]
                    o11 = o11 + t0 * kc[m][1][0] + t1 * kc[m][1][1]
                out[r0, c0] = o00
                out[r0, c1] = o01
                out[r1, c0] = o10
                out[r1, c1] = o11
    return out_arr


def cfim(double[::1] p, double[:, ::1] dp, double floor):
    """Classical Fisher information from probabilities ``p`` and derivatives ``dp`` (d, M)."""
    cdef Py_ssize_t d = dp.shape[0]
    cdef Py_ssize_t m_out = dp.shape[1]
    out_arr = np.zeros((d, d), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j, m
    cdef double w
    with nogil:
        for m in range(m_out):
            if p[m] < floor:
                continue
            w = 1.0 / p[m]
            for i in range(d):
                for j in range(i, d):
                    out[i, j] += w * dp[i, m] * dp[j, m]
        for i in range(d):
            for j in range(i):
                out[i, j] = out[j, i]
    return out_arr
