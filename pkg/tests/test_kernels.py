import numpy as np
import pytest

from topiclabel import _kernels_py, kernels

compiled_only = pytest.mark.skipif("compiled" not in kernels.BACKENDS,
                                   reason="compiled extension not built")


def _graph_inputs(rng, n):
    w = rng.uniform(size=(n, n)) * (rng.uniform(size=(n, n)) < 0.6)
    w = np.triu(w, 1)
    w = w + w.T
    out = w.sum(axis=1)
    dangling = out == 0
    T = w / np.where(dangling, 1.0, out)[:, None]
    p = rng.dirichlet(np.ones(n))
    return T, dangling, p


def test_default_dispatch_names_available_backends():
    for k in ("rmsprop_update", "ppr_iterate", "cosine_graph"):
        assert kernels.default_backend(k) in kernels.BACKENDS
    with pytest.raises(ValueError, match="unavailable"):
        kernels.get_backend("fortran")


def test_cosine_graph_python_properties():
    X = np.array([[1.0, 0.0], [1.0, 1.0], [-1.0, 0.0], [0.0, 0.0]])
    S = _kernels_py.cosine_graph(X)
    assert S[0, 1] == pytest.approx(1 / np.sqrt(2))
    assert S[0, 2] == 0.0  # negative cosine clamped
    assert np.all(S[3] == 0) and np.all(S[:, 3] == 0)
    assert np.all(np.diag(S) == 0)
    np.testing.assert_array_equal(S, S.T)


@compiled_only
def test_cosine_graph_backends_agree():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(40, 17))
    X[5] = 0.0
    a = kernels.cosine_graph(X, backend="compiled")
    b = kernels.cosine_graph(X, backend="python")
    np.testing.assert_allclose(a, b, rtol=0, atol=1e-12)


@compiled_only
@pytest.mark.parametrize("n", [1, 2, 7, 30])
def test_ppr_iterate_backends_agree(n):
    rng = np.random.default_rng(n)
    T, dangling, p = _graph_inputs(rng, n)
    ra, ia, ca = kernels.ppr_iterate(T, dangling, p, 0.85, 1e-12, 500, backend="compiled")
    rb, ib, cb = kernels.ppr_iterate(T, dangling, p, 0.85, 1e-12, 500, backend="python")
    np.testing.assert_allclose(ra, rb, rtol=0, atol=1e-13)
    assert (ia, ca) == (ib, cb)


@pytest.mark.parametrize("backend", sorted(kernels.BACKENDS))
def test_ppr_iterate_reports_non_convergence(backend):
    rng = np.random.default_rng(3)
    T, dangling, p = _graph_inputs(rng, 10)
    r, iters, converged = kernels.ppr_iterate(T, dangling, p, 0.85, 1e-300, 3, backend=backend)
    assert iters == 3 and not converged
    assert r.sum() == pytest.approx(1.0)


@compiled_only
def test_rmsprop_backends_bit_identical():
    rng = np.random.default_rng(0)
    shape = (33, 7)
    p0, s0 = rng.normal(size=shape), rng.uniform(size=shape)
    pa, sa, pb, sb = p0.copy(), s0.copy(), p0.copy(), s0.copy()
    for _ in range(5):
        g = rng.normal(size=shape)
        kernels.rmsprop_update(pa, g, sa, 1e-3, 0.9, 1e-8, backend="compiled")
        kernels.rmsprop_update(pb, g, sb, 1e-3, 0.9, 1e-8, backend="python")
    np.testing.assert_array_equal(pa, pb)
    np.testing.assert_array_equal(sa, sb)


@pytest.mark.parametrize("backend", sorted(kernels.BACKENDS))
def test_rmsprop_update_in_place_matches_formula(backend):
    p, s, g = np.array([1.0, -2.0]), np.array([0.5, 0.0]), np.array([0.3, -1.0])
    want_s = 0.9 * s + 0.1 * g * g
    want_p = p - 1e-2 * g / np.sqrt(want_s + 1e-8)
    kernels.rmsprop_update(p, g, s, 1e-2, 0.9, 1e-8, backend=backend)
    np.testing.assert_allclose(s, want_s, rtol=1e-15)
    np.testing.assert_allclose(p, want_p, rtol=1e-15)


def test_rmsprop_rejects_non_contiguous():
    p = np.zeros((4, 4))[:, ::2]
    with pytest.raises(ValueError, match="contiguous"):
        kernels.rmsprop_update(p, np.zeros((4, 2)), np.zeros((4, 2)), 1e-3, 0.9, 1e-8)
