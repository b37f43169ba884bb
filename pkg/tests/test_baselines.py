import numpy as np
import pytest

from topiclabel import kernels
from topiclabel.baselines import (
    GlobalPprRanker, SimilarityGraph, image_similarity, local_ppr_rank, personalization_vector,
    personalized_pagerank, predict_linear, sparsify_top_m, train_linear,
)
from topiclabel.dataset import ImageCandidate, Topic
from topiclabel.embeddings import EmbeddingTable


def power_iteration_oracle(w, p, damping=0.85, iters=5000):
    """Plain-loop PageRank: row-normalise, dangling mass to p, teleport to p."""
    n = len(p)
    out = [sum(w[i]) for i in range(n)]
    r = list(p)
    for _ in range(iters):
        dangling = sum(r[i] for i in range(n) if out[i] == 0)
        nxt = []
        for j in range(n):
            flow = sum(r[i] * w[i][j] / out[i] for i in range(n) if out[i] > 0)
            nxt.append(damping * (flow + dangling * p[j]) + (1 - damping) * p[j])
        r = nxt
    return np.array(r)


def linear_solve_oracle(w, p, damping=0.85):
    """Stationary vector from (I - d M) r = (1 - d) p with dangling columns sent to p."""
    w = np.asarray(w, dtype=float)
    n = len(p)
    out = w.sum(axis=1)
    M = np.zeros((n, n))
    for i in range(n):
        M[:, i] = w[i] / out[i] if out[i] > 0 else p
    return np.linalg.solve(np.eye(n) - damping * M, (1 - damping) * np.asarray(p))


def random_graph(rng, n):
    w = rng.uniform(size=(n, n)) * (rng.uniform(size=(n, n)) < 0.5)
    w = np.triu(w, 1)
    w = w + w.T
    p = rng.dirichlet(np.ones(n)) if rng.uniform() < 0.7 else np.full(n, 1.0 / n)
    return w, p


@pytest.mark.parametrize("backend", sorted(kernels.BACKENDS))
def test_ppr_matches_oracles(backend):
    rng = np.random.default_rng(0)
    for _ in range(25):
        n = int(rng.integers(1, 9))
        w, p = random_graph(rng, n)
        res = personalized_pagerank(SimilarityGraph(list(range(n)), w, p), backend=backend)
        assert res.converged
        np.testing.assert_allclose(res.scores, linear_solve_oracle(w, p), rtol=0, atol=1e-8)
        np.testing.assert_allclose(res.scores, power_iteration_oracle(w.tolist(), p.tolist(), iters=400),
                                   rtol=0, atol=1e-8)
        assert res.scores.sum() == pytest.approx(1.0, abs=1e-9)


def test_two_node_graph_is_uniform():
    res = personalized_pagerank(SimilarityGraph(["a", "b"], [[0, 1], [1, 0]], [0.5, 0.5]))
    np.testing.assert_allclose(res.scores, [0.5, 0.5], atol=1e-12)


def test_ordering_invariant_to_weight_scale():
    rng = np.random.default_rng(4)
    w, p = random_graph(rng, 8)
    a = personalized_pagerank(SimilarityGraph(list(range(8)), w, p)).scores
    b = personalized_pagerank(SimilarityGraph(list(range(8)), 7.5 * w, p)).scores
    np.testing.assert_allclose(a, b, atol=1e-12)


def test_graph_validation():
    with pytest.raises(ValueError, match="symmetric"):
        SimilarityGraph([0, 1], [[0, 1], [0.5, 0]], [0.5, 0.5])
    with pytest.raises(ValueError, match="self-loops"):
        SimilarityGraph([0, 1], [[1, 1], [1, 0]], [0.5, 0.5])
    with pytest.raises(ValueError, match="personalization"):
        SimilarityGraph([0, 1], [[0, 1], [1, 0]], [0.5, 0.6])
    g = SimilarityGraph([0, 1], [[0, 1], [1, 0]], [0.5, 0.5])
    with pytest.raises(ValueError):
        personalized_pagerank(g, damping=1.0)


def test_sparsify_keeps_strongest_symmetric():
    w = np.array([[0, 3, 1, 2], [3, 0, 1, 1], [1, 1, 0, 5], [2, 1, 5, 0]], dtype=float)
    s = sparsify_top_m(w, 1)
    np.testing.assert_array_equal(s, s.T)
    assert s[0, 1] == 3 and s[2, 3] == 5 and s[0, 2] == 0


def _image(iid, caption, visual):
    return ImageCandidate(iid, tuple(caption.split()), np.asarray(visual, dtype=float), 1.0, caption)


def test_image_similarity(toy_table):
    a = _image("a", "cat", [1, 0])
    b = _image("b", "cat", [1, 0])
    c = _image("c", "dog", [0, 1])
    assert image_similarity(a, b, toy_table) == pytest.approx(1.0)
    assert image_similarity(a, c, toy_table) == 0.0
    d = _image("d", "fish", [1, 0])
    # [1,0,1,0] vs [1,1,1,0]
    assert image_similarity(a, d, toy_table) == pytest.approx(2 / np.sqrt(6))


def test_personalization_vector(toy_table):
    imgs = [_image("a", "cat", [1, 0]), _image("b", "dog", [1, 0])]
    p = personalization_vector(Topic("t", ("cat",)), imgs, toy_table)
    np.testing.assert_allclose(p, [1.0, 0.0])
    p = personalization_vector(Topic("t", ("unknown",)), imgs, toy_table)
    np.testing.assert_allclose(p, [0.5, 0.5])


def test_global_equals_local_for_single_topic(toy_corpus):
    ds, table = toy_corpus
    topic = ds.topics[0]
    cands = ds.candidates[topic.id]
    local = local_ppr_rank(topic, cands, table)
    glob = GlobalPprRanker(cands, table).rank(topic, cands)
    assert local.image_ids == glob.image_ids


def test_global_ranker_rejects_unknown_candidates(toy_corpus):
    ds, table = toy_corpus
    ranker = GlobalPprRanker(ds.candidates["t0"], table)
    with pytest.raises(ValueError, match="global pool"):
        ranker.rank(ds.topics[1], ds.candidates["t1"])


def test_ridge_matches_normal_equations():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(50, 6))
    y = rng.normal(size=50)
    lam = 0.7
    m = train_linear(X, y, l2=lam)
    # augmented system with an unpenalised bias column
    A = np.hstack([X, np.ones((50, 1))])
    P = lam * np.eye(7)
    P[6, 6] = 0.0
    sol = np.linalg.solve(A.T @ A + P, A.T @ y)
    np.testing.assert_allclose(m.weights, sol[:6], atol=1e-8)
    assert m.bias == pytest.approx(sol[6], abs=1e-8)


@pytest.mark.parametrize("seed", range(5))
def test_ridge_small_random_systems(seed):
    rng = np.random.default_rng(seed)
    X, y = rng.normal(size=(10, 5)), rng.normal(size=10)
    m = train_linear(X, y, l2=0.1)
    A = np.hstack([X, np.ones((10, 1))])
    P = np.diag([0.1] * 5 + [0.0])
    sol = np.linalg.solve(A.T @ A + P, A.T @ y)
    np.testing.assert_allclose(np.append(m.weights, m.bias), sol, rtol=0, atol=1e-8)


def test_ridge_recovers_exact_line():
    x = np.arange(10.0)[:, None]
    m = train_linear(x, 2 * x[:, 0], l2=0.0)
    assert m.weights[0] == pytest.approx(2.0)
    assert m.bias == pytest.approx(0.0, abs=1e-12)
    assert predict_linear(m, [3.0]) == pytest.approx(6.0)
    np.testing.assert_allclose(predict_linear(m, x), 2 * x[:, 0], atol=1e-6)


def test_ridge_optimality_with_duplicate_rows():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(20, 4))
    X = np.vstack([X, X[:3]])
    y = rng.normal(size=23)
    m = train_linear(X, y, l2=0.3)
    resid = X @ m.weights + m.bias - y
    np.testing.assert_allclose(X.T @ resid + 0.3 * m.weights, 0, atol=1e-8)
    assert resid.sum() == pytest.approx(0.0, abs=1e-8)


def test_ridge_underdetermined_needs_penalty():
    with pytest.raises(ValueError, match="l2"):
        train_linear(np.ones((3, 5)), np.ones(3), l2=0.0)
