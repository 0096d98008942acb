"""Pure numpy/scipy versions of the kernels in ``_kernels.pyx``.

Same signatures and return conventions; used when the extension is not
built or when ``IONPHONON_PURE_PYTHON`` is set.
"""
import numpy as np
import scipy.sparse as sp


def _as_csr(data, indices, indptr):
    n = len(indptr) - 1
    return sp.csr_matrix((data, indices, indptr), shape=(n, n))


def csr_matvec(data, indices, indptr, x):
    return _as_csr(data, indices, indptr) @ np.asarray(x)


def lanczos(data, indices, indptr, v0, m, full_reorth=False, breakdown=1e-13, workspace=None):
    A = _as_csr(data, indices, indptr)
    n = len(v0)
    if workspace is None:
        V = np.empty((m, n), dtype=np.complex128)
    else:
        if workspace.shape[0] < m or workspace.shape[1] != n:
            raise ValueError("workspace has the wrong shape")
        V = workspace
    alpha = np.zeros(m)
    beta = np.zeros(m)
    V[0] = v0
    k = m
    for j in range(m):
        w = A @ V[j]
        if j > 0:
            w -= beta[j - 1] * V[j - 1]
        alpha[j] = np.vdot(V[j], w).real
        w -= alpha[j] * V[j]
        if full_reorth:
            c = V[: j + 1].conj() @ w
            w -= c @ V[: j + 1]
            alpha[j] += c[j].real
        else:
            c = np.vdot(V[j], w)
            w -= c * V[j]
            alpha[j] += c.real
            if j > 0:
                w -= np.vdot(V[j - 1], w) * V[j - 1]
        nrm = np.linalg.norm(w)
        beta[j] = nrm
        scale = max(abs(alpha[j]) + 1.0, beta[j - 1] if j > 0 else 0.0)
        if nrm <= breakdown * scale:
            beta[j] = 0.0
            k = j + 1
            break
        if j + 1 < m:
            V[j + 1] = w / nrm
    return V[:k], alpha[:k], beta[:k], k


def krylov_combine(V, coef):
    return np.asarray(coef) @ np.asarray(V)
