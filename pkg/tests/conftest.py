import numpy as np
import pytest

from topiclabel.dataset import Dataset, ImageCandidate, Topic
from topiclabel.embeddings import EmbeddingTable

ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[ACCEPTANCE] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    rows = config.stash.get(ACCEPTANCE, [])
    if not rows:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in rows:
        terminalreporter.write_line(f"{_status(ok)}  {name}: {detail}")


def _status(ok):
    return "SKIP" if ok is None else ("PASS" if ok else "FAIL")


@pytest.fixture
def record(request):
    """Append one acceptance line (name, passed, detail) to the session summary.

    ``ok=None`` records a skipped criterion.
    """
    rows = request.config.stash[ACCEPTANCE]

    def _record(name, ok, detail):
        ok = None if ok is None else bool(ok)
        rows.append((name, ok, detail))
        print(f"{_status(ok)}  {name}: {detail}")

    return _record


@pytest.fixture
def toy_table():
    return EmbeddingTable(2, {"cat": [1.0, 0.0], "dog": [0.0, 1.0], "fish": [1.0, 1.0]})


def make_toy_dataset(n_topics=10, n_candidates=20, dim=4, visual_dim=6, seed=0, strict=False):
    """Small random corpus; returns (dataset, table)."""
    rng = np.random.default_rng(seed)
    words = [f"w{i}" for i in range(30)]
    table = EmbeddingTable(dim, {w: rng.normal(size=dim) for w in words})
    topics, cands = [], {}
    img = 0
    for t in range(n_topics):
        tid = f"t{t}"
        topics.append(Topic(tid, tuple(rng.choice(words, size=10, replace=False))))
        rows = []
        for _ in range(n_candidates):
            toks = tuple(rng.choice(words, size=4))
            rows.append(ImageCandidate(f"i{img:04d}", toks, rng.dirichlet(np.ones(visual_dim)),
                                       round(float(rng.uniform(0, 3)), 1), " ".join(toks)))
            img += 1
        cands[tid] = rows
    return Dataset(topics, cands, strict=strict), table


@pytest.fixture
def toy_corpus():
    return make_toy_dataset()
