# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels; same contracts as decoq._kernels_py."""

import numpy as np
cimport numpy as cnp
from libc.math cimport cos, sin
from scipy.linalg.cython_blas cimport zgemm

cnp.import_array()


def ptrace_bipartite(const double complex[:, ::1] rho, int da, int db, bint keep_first):
    cdef Py_ssize_t i, j, k
    cdef double complex acc
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] out
    if keep_first:
        out = np.empty((da, da), dtype=np.complex128)
        for i in range(da):
            for j in range(da):
                acc = 0
                for k in range(db):
                    acc = acc + rho[i * db + k, j * db + k]
                out[i, j] = acc
    else:
        out = np.empty((db, db), dtype=np.complex128)
        for i in range(db):
            for j in range(db):
                acc = 0
                for k in range(da):
                    acc = acc + rho[k * db + i, k * db + j]
                out[i, j] = acc
    return out


def trace_product(const double complex[:, ::1] a, const double complex[:, ::1] b):
    cdef Py_ssize_t i, j, n = a.shape[0]
    cdef double complex acc = 0
    for i in range(n):
        for j in range(n):
            acc = acc + a[i, j] * b[j, i]
    return complex(acc)


cdef double _frob2(double complex[:, ::1] m) nogil:
    cdef Py_ssize_t i, j
    cdef double acc = 0.0
    for i in range(m.shape[0]):
        for j in range(m.shape[1]):
            acc += m[i, j].real * m[i, j].real + m[i, j].imag * m[i, j].imag
    return acc


def series_observables(basis, energies, coeffs, times, int da, int db):
    cdef double complex[:, ::1] q = np.ascontiguousarray(basis, dtype=np.complex128)
    cdef double complex[:, ::1] c = np.ascontiguousarray(coeffs, dtype=np.complex128)
    cdef double[::1] w = np.ascontiguousarray(energies, dtype=np.float64)
    cdef double[::1] ts = np.ascontiguousarray(times, dtype=np.float64)
    cdef int dim = q.shape[0]
    cdef int r = c.shape[1]
    cdef int nt = ts.shape[0]
    cdef int kk = db * r
    cdef Py_ssize_t n, i, b, k
    cdef double t, ph, acc
    cdef double complex z
    cdef double complex one = 1.0, zero = 0.0
    cdef char nn = b'N', cc = b'C'

    cdef double complex[:, ::1] m = np.empty((dim, r), dtype=np.complex128)
    cdef double complex[:, ::1] psi = np.empty((dim, r), dtype=np.complex128)
    cdef double complex[:, ::1] rho_a = np.empty((da, da), dtype=np.complex128)
    cdef double complex[:, ::1] gram = np.empty((r, r), dtype=np.complex128)
    cdef double[::1] pa = np.empty(nt)
    cdef double[::1] pt = np.empty(nt)
    cdef double[:, ::1] popa = np.zeros((nt, da))
    cdef double[:, ::1] pop = np.zeros((nt, db))

    with nogil:
        for n in range(nt):
            t = ts[n]
            for i in range(dim):
                ph = -w[i] * t
                z = cos(ph) + 1j * sin(ph)
                for k in range(r):
                    m[i, k] = z * c[i, k]
            # psi = q @ m  (row-major via column-major transpose trick)
            zgemm(&nn, &nn, &r, &dim, &dim, &one, &m[0, 0], &r, &q[0, 0], &dim,
                  &zero, &psi[0, 0], &r)
            # rho_a^T = X^H X with X the (kk x da) column-major view of psi
            zgemm(&cc, &nn, &da, &da, &kk, &one, &psi[0, 0], &kk, &psi[0, 0], &kk,
                  &zero, &rho_a[0, 0], &da)
            pa[n] = _frob2(rho_a)
            # gram^T = Y Y^H with Y the (r x dim) column-major view of psi
            zgemm(&nn, &cc, &r, &r, &dim, &one, &psi[0, 0], &r, &psi[0, 0], &r,
                  &zero, &gram[0, 0], &r)
            pt[n] = _frob2(gram)
            for i in range(da):
                for b in range(db):
                    acc = 0.0
                    for k in range(r):
                        z = psi[i * db + b, k]
                        acc += z.real * z.real + z.imag * z.imag
                    pop[n, b] += acc
                    popa[n, i] += acc
    return np.asarray(pa), np.asarray(pt), np.asarray(popa), np.asarray(pop)
