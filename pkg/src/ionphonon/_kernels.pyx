# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops for the Krylov propagator.

Mirrors :mod:`ionphonon._fallback` function-for-function; the selector in
:mod:`ionphonon.kernels` decides which one is used.  Complex vectors are
handled as interleaved (re, im) doubles so the inner loops stay free of
C99 complex-multiply library calls.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs
from scipy.linalg.cython_blas cimport zgemv

cnp.import_array()

ctypedef double complex cplx


cdef inline void _matvec(const double* data, const int* indices, const int* indptr,
                         Py_ssize_t n, const double* x, double* y) noexcept nogil:
    cdef Py_ssize_t i, p, col
    cdef double re, im, dr, di
    for i in range(n):
        re = 0.0
        im = 0.0
        for p in range(indptr[i], indptr[i + 1]):
            col = indices[p]
            dr = data[2 * p]
            di = data[2 * p + 1]
            re = re + dr * x[2 * col] - di * x[2 * col + 1]
            im = im + dr * x[2 * col + 1] + di * x[2 * col]
        y[2 * i] = re
        y[2 * i + 1] = im


cdef inline void _vdot(const double* u, const double* w, Py_ssize_t n,
                       double* re_out, double* im_out) noexcept nogil:
    # conj(u) . w
    cdef Py_ssize_t i
    cdef double re = 0.0, im = 0.0
    for i in range(n):
        re = re + u[2 * i] * w[2 * i] + u[2 * i + 1] * w[2 * i + 1]
        im = im + u[2 * i] * w[2 * i + 1] - u[2 * i + 1] * w[2 * i]
    re_out[0] = re
    im_out[0] = im


cdef inline void _axpy(double cr, double ci, const double* x, double* y, Py_ssize_t n) noexcept nogil:
    # y -= (cr + i ci) * x
    cdef Py_ssize_t i
    for i in range(n):
        y[2 * i] = y[2 * i] - (cr * x[2 * i] - ci * x[2 * i + 1])
        y[2 * i + 1] = y[2 * i + 1] - (cr * x[2 * i + 1] + ci * x[2 * i])


def csr_matvec(const cplx[::1] data, const int[::1] indices,
               const int[::1] indptr, const cplx[::1] x):
    """Return ``A @ x`` for a CSR matrix given by its three arrays."""
    cdef Py_ssize_t n = indptr.shape[0] - 1
    out = np.empty(n, dtype=np.complex128)
    cdef cplx[::1] y = out
    if n == 0:
        return out
    with nogil:
        _matvec(<const double*>&data[0] if data.shape[0] else NULL, &indices[0] if indices.shape[0] else NULL,
                &indptr[0], n, <const double*>&x[0], <double*>&y[0])
    return out


cdef inline void _matvec_shift(const double* data, const int* indices, const int* indptr,
                               Py_ssize_t n, const double* x, double b,
                               const double* prev, double* y) noexcept nogil:
    # y = A x - b * prev (prev ignored when b == 0)
    cdef Py_ssize_t i, p, col
    cdef double re, im, dr, di
    for i in range(n):
        re = 0.0
        im = 0.0
        for p in range(indptr[i], indptr[i + 1]):
            col = indices[p]
            dr = data[2 * p]
            di = data[2 * p + 1]
            re = re + dr * x[2 * col] - di * x[2 * col + 1]
            im = im + dr * x[2 * col + 1] + di * x[2 * col]
        if b != 0.0:
            re = re - b * prev[2 * i]
            im = im - b * prev[2 * i + 1]
        y[2 * i] = re
        y[2 * i + 1] = im


def lanczos(const cplx[::1] data, const int[::1] indices,
            const int[::1] indptr, const cplx[::1] v0, int m,
            bint full_reorth=False, double breakdown=1e-13, workspace=None):
    """Hermitian Lanczos recursion started from the unit vector ``v0``.

    Returns ``(V, alpha, beta, k)``: rows ``V[:k]`` span the Krylov space,
    ``alpha``/``beta[:k-1]`` are the tridiagonal entries and ``beta[k-1]`` is
    the residual norm used by the error estimate (0 on happy breakdown).
    ``workspace`` is an optional C-contiguous complex ``(m, n)`` array reused
    for the basis; the returned ``V`` is then a view into it.
    """
    cdef Py_ssize_t n = v0.shape[0]
    cdef Py_ssize_t i, j, q
    cdef int k = m
    cdef double nrm, scale, cr, ci, a, c1r, c1i, c2r, c2i, wr, wi, inv
    cdef const double* vj
    cdef const double* vp

    if workspace is None:
        V_arr = np.empty((m, n), dtype=np.complex128)
    else:
        V_arr = workspace
        if V_arr.shape[0] < m or V_arr.shape[1] != n:
            raise ValueError("workspace has the wrong shape")
    alpha_arr = np.zeros(m, dtype=np.float64)
    beta_arr = np.zeros(m, dtype=np.float64)
    w_arr = np.zeros(n, dtype=np.complex128)
    cdef cplx[:, ::1] Vv = V_arr
    cdef double[::1] alpha = alpha_arr
    cdef double[::1] beta = beta_arr
    cdef cplx[::1] wv = w_arr

    cdef double* V = <double*>&Vv[0, 0]
    cdef double* w = <double*>&wv[0]
    cdef const double* dp = <const double*>&data[0] if data.shape[0] else NULL
    cdef const int* ip = &indices[0] if indices.shape[0] else NULL
    cdef const int* pp = &indptr[0]
    cdef Py_ssize_t stride = 2 * n

    with nogil:
        for i in range(n):
            V[2 * i] = v0[i].real
            V[2 * i + 1] = v0[i].imag
        for j in range(m):
            vj = V + j * stride
            vp = V + (j - 1) * stride if j > 0 else vj
            _matvec_shift(dp, ip, pp, n, vj, beta[j - 1] if j > 0 else 0.0, vp, w)
            _vdot(vj, w, n, &cr, &ci)
            a = cr
            if full_reorth:
                _axpy(a, 0.0, vj, w, n)
                for q in range(j + 1):
                    _vdot(V + q * stride, w, n, &cr, &ci)
                    _axpy(cr, ci, V + q * stride, w, n)
                    if q == j:
                        a += cr
                nrm = 0.0
                for i in range(stride):
                    nrm = nrm + w[i] * w[i]
            else:
                # w -= a v_j while accumulating the overlaps needed for a
                # second Gram-Schmidt pass against v_j and v_{j-1}
                c1r = 0.0
                c1i = 0.0
                c2r = 0.0
                c2i = 0.0
                for i in range(n):
                    wr = w[2 * i] - a * vj[2 * i]
                    wi = w[2 * i + 1] - a * vj[2 * i + 1]
                    w[2 * i] = wr
                    w[2 * i + 1] = wi
                    c1r = c1r + vj[2 * i] * wr + vj[2 * i + 1] * wi
                    c1i = c1i + vj[2 * i] * wi - vj[2 * i + 1] * wr
                    c2r = c2r + vp[2 * i] * wr + vp[2 * i + 1] * wi
                    c2i = c2i + vp[2 * i] * wi - vp[2 * i + 1] * wr
                if j == 0:
                    c2r = 0.0
                    c2i = 0.0
                a += c1r
                nrm = 0.0
                for i in range(n):
                    wr = w[2 * i] - (c1r * vj[2 * i] - c1i * vj[2 * i + 1]) - (c2r * vp[2 * i] - c2i * vp[2 * i + 1])
                    wi = w[2 * i + 1] - (c1r * vj[2 * i + 1] + c1i * vj[2 * i]) - (c2r * vp[2 * i + 1] + c2i * vp[2 * i])
                    w[2 * i] = wr
                    w[2 * i + 1] = wi
                    nrm = nrm + wr * wr + wi * wi
            alpha[j] = a
            nrm = sqrt(nrm)
            beta[j] = nrm
            scale = fabs(alpha[j]) + 1.0
            if j > 0 and beta[j - 1] > scale:
                scale = beta[j - 1]
            if nrm <= breakdown * scale:
                beta[j] = 0.0
                k = j + 1
                break
            if j + 1 < m:
                inv = 1.0 / nrm
                for i in range(stride):
                    V[(j + 1) * stride + i] = w[i] * inv

    return V_arr[:k], alpha_arr[:k], beta_arr[:k], k


def krylov_combine(const cplx[:, ::1] V, const cplx[::1] coef):
    """Return ``coef @ V`` (sum of Krylov rows weighted by ``coef``)."""
    cdef int k = <int>V.shape[0], n = <int>V.shape[1], inc = 1
    cdef cplx one = 1.0, zero = 0.0
    cdef char trans = b'N'
    out = np.zeros(n, dtype=np.complex128)
    cdef cplx[::1] yv = out
    if k == 0 or n == 0:
        return out
    # row-major (k, n) is column-major (n, k): y = V^T coef
    with nogil:
        zgemv(&trans, &n, &k, &one, <cplx*>&V[0, 0], &n, <cplx*>&coef[0], &inc, &zero, &yv[0], &inc)
    return out
