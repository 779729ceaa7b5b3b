# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the kernels in ``_pykernels``."""
import numpy as np

from libc.math cimport cos, sin


cdef inline Py_ssize_t _bit(int num_qubits, int q) nogil:
    return (<Py_ssize_t>1) << (num_qubits - 1 - q)


def apply_gate_2q(const double complex[::1] psi, int num_qubits, int i, int j,
                  const double complex[:, ::1] gate):
    cdef Py_ssize_t n = (<Py_ssize_t>1) << num_qubits
    cdef Py_ssize_t bi = _bit(num_qubits, i), bj = _bit(num_qubits, j)
    out = np.empty(n, dtype=np.complex128)
    cdef double complex[::1] o = out
    cdef Py_ssize_t base, r
    cdef Py_ssize_t idx[4]
    cdef double complex a[4]
    with nogil:
        for base in range(n):
            if base & bi or base & bj:
                continue
            idx[0] = base
            idx[1] = base | bj
            idx[2] = base | bi
            idx[3] = base | bi | bj
            for r in range(4):
                a[r] = psi[idx[r]]
            for r in range(4):
                o[idx[r]] = (gate[r, 0] * a[0] + gate[r, 1] * a[1]
                             + gate[r, 2] * a[2] + gate[r, 3] * a[3])
    return out


def pair_rdms(const double complex[::1] psi, int num_qubits):
    cdef Py_ssize_t n = (<Py_ssize_t>1) << num_qubits
    cdef int npairs = num_qubits * (num_qubits - 1) // 2
    out = np.zeros((npairs, 4, 4), dtype=np.complex128)
    cdef double complex[:, :, ::1] o = out
    cdef Py_ssize_t base, r, c, bi, bj
    cdef Py_ssize_t idx[4]
    cdef double complex a[4]
    cdef int i, j, k = 0
    with nogil:
        for i in range(num_qubits):
            for j in range(i + 1, num_qubits):
                bi = _bit(num_qubits, i)
                bj = _bit(num_qubits, j)
                for base in range(n):
                    if base & bi or base & bj:
                        continue
                    idx[0] = base
                    idx[1] = base | bj
                    idx[2] = base | bi
                    idx[3] = base | bi | bj
                    for r in range(4):
                        a[r] = psi[idx[r]]
                    for r in range(4):
                        for c in range(4):
                            o[k, r, c] = o[k, r, c] + a[r] * a[c].conjugate()
                k += 1
    return out


def single_rdms(const double complex[::1] psi, int num_qubits):
    cdef Py_ssize_t n = (<Py_ssize_t>1) << num_qubits
    out = np.zeros((num_qubits, 2, 2), dtype=np.complex128)
    cdef double complex[:, :, ::1] o = out
    cdef Py_ssize_t base, b
    cdef double complex a0, a1
    cdef int q
    with nogil:
        for q in range(num_qubits):
            b = _bit(num_qubits, q)
            for base in range(n):
                if base & b:
                    continue
                a0 = psi[base]
                a1 = psi[base | b]
                o[q, 0, 0] = o[q, 0, 0] + a0 * a0.conjugate()
                o[q, 0, 1] = o[q, 0, 1] + a0 * a1.conjugate()
                o[q, 1, 0] = o[q, 1, 0] + a1 * a0.conjugate()
                o[q, 1, 1] = o[q, 1, 1] + a1 * a1.conjugate()
    return out


cdef inline void _apply_1q(double complex* s, Py_ssize_t n, Py_ssize_t b,
                           double complex g00, double complex g01,
                           double complex g10, double complex g11) noexcept nogil:
    cdef Py_ssize_t base
    cdef double complex a0, a1
    for base in range(n):
        if base & b:
            continue
        a0 = s[base]
        a1 = s[base | b]
        s[base] = g00 * a0 + g01 * a1
        s[base | b] = g10 * a0 + g11 * a1


def pqc_expectations(enc, weights, bint ring=False):
    cdef const double[:, ::1] e = np.ascontiguousarray(enc, dtype=np.float64)
    cdef const double[:, :, :, ::1] w = np.ascontiguousarray(weights, dtype=np.float64)
    cdef Py_ssize_t rows = e.shape[0]
    cdef int nq = e.shape[1]
    cdef int layers = w.shape[1]
    cdef Py_ssize_t n = (<Py_ssize_t>1) << nq
    out = np.zeros((rows, nq), dtype=np.float64)
    cdef double[:, ::1] o = out
    buf = np.zeros(n, dtype=np.complex128)
    cdef double complex[::1] s = buf
    cdef Py_ssize_t r, base, b, b2
    cdef int q, layer, bits
    cdef double c, sn, cz, sz, p
    cdef double complex em, ep
    with nogil:
        for r in range(rows):
            for base in range(n):
                s[base] = 0.0
            s[0] = 1.0
            for q in range(nq):
                c = cos(0.5 * e[r, q])
                sn = sin(0.5 * e[r, q])
                _apply_1q(&s[0], n, _bit(nq, q), c, -sn, sn, c)
            for layer in range(layers):
                for q in range(nq):
                    c = cos(0.5 * w[r, layer, q, 0])
                    sn = sin(0.5 * w[r, layer, q, 0])
                    cz = cos(0.5 * w[r, layer, q, 1])
                    sz = sin(0.5 * w[r, layer, q, 1])
                    em = cz - 1j * sz
                    ep = cz + 1j * sz
                    _apply_1q(&s[0], n, _bit(nq, q), c * em, -sn * ep, sn * em, c * ep)
                for q in range(nq - 1):
                    b = _bit(nq, q)
                    b2 = _bit(nq, q + 1)
                    for base in range(n):
                        if (base & b) and (base & b2):
                            s[base] = -s[base]
                if ring and nq > 2:
                    b = _bit(nq, nq - 1)
                    b2 = _bit(nq, 0)
                    for base in range(n):
                        if (base & b) and (base & b2):
                            s[base] = -s[base]
            for base in range(n):
                p = s[base].real * s[base].real + s[base].imag * s[base].imag
                for q in range(nq):
                    if base & _bit(nq, q):
                        o[r, q] -= p
                    else:
                        o[r, q] += p
    return out
