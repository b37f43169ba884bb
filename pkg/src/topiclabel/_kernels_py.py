"""Numpy implementations of the compiled kernels, used when the extension is absent."""
import numpy as np


def cosine_graph(X):
    X = np.ascontiguousarray(X, dtype=np.float64)
    norms = np.sqrt(np.einsum("ij,ij->i", X, X))
    safe = np.where(norms > 0, norms, 1.0)
    U = X / safe[:, None]
    S = U @ U.T
    np.clip(S, 0.0, 1.0, out=S)
    zero = norms == 0
    S[zero, :] = 0.0
    S[:, zero] = 0.0
    np.fill_diagonal(S, 0.0)
    return S


def ppr_iterate(T, dangling, p, damping, tol, max_iters):
    T = np.asarray(T, dtype=np.float64)
    p = np.asarray(p, dtype=np.float64)
    dangling = np.asarray(dangling, dtype=bool)
    live = np.where(dangling, 0.0, 1.0)
    r = p.copy()
    for it in range(1, max_iters + 1):
        mass = r[dangling].sum()
        nxt = damping * ((r * live) @ T + mass * p) + (1.0 - damping) * p
        change = np.abs(nxt - r).sum()
        r = nxt
        if change < tol:
            return r, it, True
    return r, max_iters, False


def rmsprop_update(param, grad, square_avg, learning_rate, decay, epsilon):
    if not (param.shape == grad.shape == square_avg.shape):
        raise ValueError("param, grad and square_avg must have the same size")
    # same operation order as the compiled kernel, so results are bit-identical
    buf = np.multiply(grad, 1.0 - decay)
    buf *= grad
    square_avg *= decay
    square_avg += buf
    np.add(square_avg, epsilon, out=buf)
    np.sqrt(buf, out=buf)
    step = np.multiply(grad, learning_rate)
    step /= buf
    param -= step
