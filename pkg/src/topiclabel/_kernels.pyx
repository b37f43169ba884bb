# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: pairwise cosine graph and personalized PageRank sweeps."""
import numpy as np

from libc.math cimport sqrt, fabs


def cosine_graph(const double[:, ::1] X):
    """Symmetric cosine matrix clamped to [0, 1] with a zero diagonal.

    Zero-norm rows get similarity 0 to everything.
    """
    cdef Py_ssize_t n = X.shape[0], d = X.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double dot, s
    out_arr = np.zeros((n, n), dtype=np.float64)
    norms_arr = np.empty(n, dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef double[::1] norms = norms_arr
    with nogil:
        for i in range(n):
            s = 0.0
            for k in range(d):
                s = s + X[i, k] * X[i, k]
            norms[i] = sqrt(s)
        for i in range(n):
            if norms[i] == 0.0:
                continue
            for j in range(i + 1, n):
                if norms[j] == 0.0:
                    continue
                dot = 0.0
                for k in range(d):
                    dot = dot + X[i, k] * X[j, k]
                s = dot / (norms[i] * norms[j])
                if s < 0.0:
                    s = 0.0
                elif s > 1.0:
                    s = 1.0
                out[i, j] = s
                out[j, i] = s
    return out_arr


def ppr_iterate(const double[:, ::1] T, const unsigned char[::1] dangling,
                const double[::1] p, double damping, double tol, int max_iters):
    """Power iteration for r = d*(T^T r + dangling mass * p) + (1-d)*p.

    ``T`` is row-stochastic except for dangling rows. Returns
    ``(scores, iterations, converged)``.
    """
    cdef Py_ssize_t n = T.shape[0], i, j
    cdef int it = 0
    cdef double mass, change, ri
    cdef bint converged = False
    r_arr = np.array(p, dtype=np.float64)
    nxt_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] r = r_arr
    cdef double[::1] nxt = nxt_arr
    with nogil:
        while it < max_iters:
            it += 1
            mass = 0.0
            for j in range(n):
                nxt[j] = 0.0
            for i in range(n):
                ri = r[i]
                if dangling[i]:
                    mass = mass + ri
                    continue
                if ri == 0.0:
                    continue
                for j in range(n):
                    nxt[j] = nxt[j] + ri * T[i, j]
            change = 0.0
            for j in range(n):
                nxt[j] = damping * (nxt[j] + mass * p[j]) + (1.0 - damping) * p[j]
                change = change + fabs(nxt[j] - r[j])
                r[j] = nxt[j]
            if change < tol:
                converged = True
                break
    return r_arr, it, bool(converged)


def rmsprop_update(double[::1] param, const double[::1] grad, double[::1] square_avg,
                   double learning_rate, double decay, double epsilon):
    """Fused in-place RMSProp update over flat contiguous arrays."""
    cdef Py_ssize_t i, n = param.shape[0]
    cdef double g, s
    if grad.shape[0] != n or square_avg.shape[0] != n:
        raise ValueError("param, grad and square_avg must have the same size")
    with nogil:
        for i in range(n):
            g = grad[i]
            s = decay * square_avg[i] + (1.0 - decay) * g * g
            square_avg[i] = s
            param[i] = param[i] - (learning_rate * g) / sqrt(s + epsilon)
