"""Kernel dispatch between the compiled extension and the numpy fallback.

Each kernel defaults to the implementation that benchmarks faster when the
extension is importable: the fused RMSProp update and the PageRank sweep run
compiled, while the cosine graph stays on numpy because a BLAS matrix product
beats the compiled pair loop. Set ``TOPICLABEL_PURE_PYTHON=1`` to force the
numpy fallback everywhere.
"""
import os

import numpy as np

from . import _kernels_py

_compiled = None
if os.environ.get("TOPICLABEL_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:
        _compiled = None

BACKENDS = {"python": _kernels_py}
if _compiled is not None:
    BACKENDS["compiled"] = _compiled

BACKEND = "compiled" if _compiled is not None else "python"

_PREFERRED = {"rmsprop_update": "compiled", "ppr_iterate": "compiled", "cosine_graph": "python"}


def default_backend(kernel):
    """Backend name used for ``kernel`` when none is requested."""
    preferred = _PREFERRED[kernel]
    return preferred if preferred in BACKENDS else "python"


def get_backend(name):
    """Kernel module by name ("compiled" or "python")."""
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"kernel backend {name!r} unavailable; have {sorted(BACKENDS)}") from None


def cosine_graph(X, backend=None):
    impl = get_backend(backend or default_backend("cosine_graph"))
    return impl.cosine_graph(np.ascontiguousarray(X, dtype=np.float64))


def ppr_iterate(T, dangling, p, damping, tol, max_iters, backend=None):
    return get_backend(backend or default_backend("ppr_iterate")).ppr_iterate(
        np.ascontiguousarray(T, dtype=np.float64),
        np.ascontiguousarray(dangling, dtype=np.uint8),
        np.ascontiguousarray(p, dtype=np.float64),
        float(damping), float(tol), int(max_iters))


def rmsprop_update(param, grad, square_avg, learning_rate, decay, epsilon, backend=None):
    """In-place RMSProp update of one contiguous parameter array and its state."""
    if not (param.flags.c_contiguous and square_avg.flags.c_contiguous):
        raise ValueError("param and square_avg must be C-contiguous")
    get_backend(backend or default_backend("rmsprop_update")).rmsprop_update(
        param.reshape(-1), np.ascontiguousarray(grad, dtype=np.float64).reshape(-1),
        square_avg.reshape(-1), float(learning_rate), float(decay), float(epsilon))
