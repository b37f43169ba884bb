"""Graph re-ranking with personalized PageRank, and a ridge-regression scorer."""
from dataclasses import dataclass

import numpy as np

from . import kernels
from .metrics import rank_by_scores

DAMPING = 0.85
TOLERANCE = 1e-10
MAX_ITERS = 200


@dataclass
class SimilarityGraph:
    node_ids: list
    weights: np.ndarray
    personalization: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        n = len(self.node_ids)
        if w.shape != (n, n):
            raise ValueError(f"weights shape {w.shape} does not match {n} nodes")
        if np.any(w < 0) or not np.allclose(w, w.T, rtol=0, atol=1e-12):
            raise ValueError("edge weights must be symmetric and nonnegative")
        if np.any(np.diag(w) != 0):
            raise ValueError("self-loops are not allowed")
        p = np.asarray(self.personalization, dtype=np.float64)
        if p.shape != (n,) or np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
            raise ValueError("personalization must be a nonnegative vector summing to 1")
        self.weights, self.personalization = w, p


@dataclass
class PprResult:
    scores: np.ndarray
    converged: bool
    iterations: int


def _cosine(a, b):
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        return 0.0
    return float(np.dot(a, b) / (na * nb))


def _caption_vec(image, table):
    if not image.caption_tokens:
        return np.zeros(table.dimension)
    return table.mean_pool(image.caption_tokens)[0]


def image_features(image, table):
    return np.concatenate([_caption_vec(image, table), image.visual])


def image_similarity(a, b, table):
    """Cosine of [caption mean || visual] vectors, clamped to [0, 1]."""
    return min(1.0, max(0.0, _cosine(image_features(a, table), image_features(b, table))))


def transition_matrix(weights):
    """Row-normalize edge weights; rows with no outgoing weight are dangling."""
    w = np.asarray(weights, dtype=np.float64)
    out = w.sum(axis=1)
    dangling = out == 0
    T = w / np.where(dangling, 1.0, out)[:, None]
    return T, dangling


def personalized_pagerank(graph, damping=DAMPING, tolerance=TOLERANCE, max_iters=MAX_ITERS,
                          backend=None):
    """Power iteration with teleport to ``graph.personalization``.

    Dangling nodes send their mass to the personalization vector. Iteration
    stops when the L1 change drops below ``tolerance``.
    """
    if not 0 < damping < 1:
        raise ValueError(f"damping must be in (0, 1), got {damping}")
    if tolerance <= 0:
        raise ValueError(f"tolerance must be positive, got {tolerance}")
    T, dangling = transition_matrix(graph.weights)
    return _iterate(T, dangling, graph.personalization, damping, tolerance, max_iters, backend)


def _iterate(T, dangling, p, damping, tolerance, max_iters, backend=None):
    scores, iters, converged = kernels.ppr_iterate(T, dangling, p, damping, tolerance,
                                                   max_iters, backend=backend)
    return PprResult(scores, converged, iters)


def sparsify_top_m(weights, m):
    """Keep each node's ``m`` strongest edges (symmetrized by union)."""
    w = np.asarray(weights, dtype=np.float64)
    n = w.shape[0]
    if m >= n - 1:
        return w.copy()
    keep = np.zeros_like(w, dtype=bool)
    idx = np.argpartition(-w, m - 1, axis=1)[:, :m]
    keep[np.repeat(np.arange(n), m), idx.ravel()] = True
    keep |= keep.T
    return np.where(keep, w, 0.0)


def build_graph_weights(images, table, top_m=None, backend=None):
    X = np.array([image_features(img, table) for img in images]).reshape(len(images), -1)
    w = kernels.cosine_graph(X, backend=backend)
    if top_m is not None:
        w = sparsify_top_m(w, top_m)
    return w


def personalization_vector(topic, images, table):
    """Cosine(topic mean, caption mean) floored at 0 and normalized; uniform if all zero."""
    topic_vec = table.mean_pool(topic.terms)[0]
    p = np.array([max(0.0, _cosine(topic_vec, _caption_vec(img, table))) for img in images])
    total = p.sum()
    if total <= 0:
        return np.full(len(images), 1.0 / len(images))
    return p / total


def _gold(candidates):
    return {c.image_id: c.rating for c in candidates}


def local_ppr_rank(topic, candidates, table, damping=DAMPING, tolerance=TOLERANCE,
                   max_iters=MAX_ITERS, top_m=None):
    """Rank a topic's candidates by PageRank over a graph of those candidates only."""
    candidates = list(candidates)
    if not candidates:
        raise ValueError(f"topic {topic.id}: no candidates")
    graph = SimilarityGraph([c.image_id for c in candidates],
                            build_graph_weights(candidates, table, top_m),
                            personalization_vector(topic, candidates, table))
    result = personalized_pagerank(graph, damping, tolerance, max_iters)
    return rank_by_scores(topic.id, graph.node_ids, result.scores, _gold(candidates))


class GlobalPprRanker:
    """One similarity graph over a pool of images, reused across topics.

    Images are de-duplicated by id; each topic supplies its own
    personalization and gets its candidates ranked by their global scores.
    """

    def __init__(self, images, table, damping=DAMPING, tolerance=TOLERANCE,
                 max_iters=MAX_ITERS, top_m=None):
        unique = {}
        for img in images:
            unique.setdefault(img.image_id, img)
        self.images = list(unique.values())
        self.index = {img.image_id: i for i, img in enumerate(self.images)}
        self.table = table
        self.damping, self.tolerance, self.max_iters = damping, tolerance, max_iters
        weights = build_graph_weights(self.images, table, top_m)
        self.T, self.dangling = transition_matrix(weights)

    def scores(self, topic):
        p = personalization_vector(topic, self.images, self.table)
        return _iterate(self.T, self.dangling, p, self.damping, self.tolerance, self.max_iters)

    def rank(self, topic, candidates):
        candidates = list(candidates)
        missing = [c.image_id for c in candidates if c.image_id not in self.index]
        if missing:
            raise ValueError(f"topic {topic.id}: candidates {missing[:3]} not in the global pool")
        scores = self.scores(topic).scores
        ids = [c.image_id for c in candidates]
        return rank_by_scores(topic.id, ids, [scores[self.index[i]] for i in ids],
                              _gold(candidates))


def global_ppr_rank(topic, candidates, all_test_candidates, table, **kwargs):
    return GlobalPprRanker(all_test_candidates, table, **kwargs).rank(topic, candidates)


@dataclass
class LinearModel:
    weights: np.ndarray
    bias: float


def train_linear(inputs, targets, l2=1.0):
    """Ridge regression with an unpenalized bias.

    Minimizes ``||X w + b - y||^2 + l2 ||w||^2``.
    """
    X = np.asarray(inputs, dtype=np.float64)
    y = np.asarray(targets, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0 or y.shape != (X.shape[0],):
        raise ValueError("train_linear needs a nonempty (n, d) matrix and n targets")
    if l2 < 0:
        raise ValueError(f"l2 must be nonnegative, got {l2}")
    n, d = X.shape
    if l2 == 0 and d >= n:
        raise ValueError(f"l2 > 0 is required when features ({d}) >= samples ({n})")
    x_mean, y_mean = X.mean(axis=0), y.mean()
    Xc = X - x_mean
    A = Xc.T @ Xc + l2 * np.eye(d)
    w = np.linalg.solve(A, Xc.T @ (y - y_mean))
    return LinearModel(w, float(y_mean - x_mean @ w))


def predict_linear(model, x):
    x = np.asarray(getattr(x, "values", x), dtype=np.float64)
    out = x @ model.weights + model.bias
    return float(out) if np.ndim(out) == 0 else out
