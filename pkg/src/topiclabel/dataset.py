"""Topic/candidate corpus loading, negative sampling and topic-level folds."""
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .embeddings import tokenize
from .errors import LeakageError, LinkError, ParseError, PoolExhaustedError, ValidationError
from .features import VISUAL_DIM

log = logging.getLogger(__name__)

TERMS_PER_TOPIC = 10
CANDIDATES_PER_TOPIC = 20
MAX_RATING = 3.0


@dataclass(frozen=True)
class Topic:
    id: str
    terms: tuple


@dataclass(frozen=True, eq=False)
class ImageCandidate:
    image_id: str
    caption_tokens: tuple
    visual: np.ndarray
    rating: float = None
    caption: str = ""
    # topic this row was drawn from when it is a sampled negative
    source_topic: str = None


@dataclass(frozen=True)
class FoldSplit:
    fold_index: int
    train_topics: tuple
    test_topics: tuple


@dataclass
class Dataset:
    topics: list
    candidates: dict
    strict: bool = True
    _by_id: dict = field(default=None, repr=False)

    def __post_init__(self):
        self._by_id = {t.id: t for t in self.topics}

    def topic(self, topic_id):
        return self._by_id[topic_id]

    @property
    def topic_ids(self):
        return [t.id for t in self.topics]

    def counts(self):
        rows = sum(len(c) for c in self.candidates.values())
        images = {c.image_id for cs in self.candidates.values() for c in cs}
        return {"topics": len(self.topics), "candidates": rows, "images": len(images)}

    def validate(self):
        """Return a list of invariant violations (empty when valid)."""
        problems = []
        if len(self._by_id) != len(self.topics):
            problems.append("duplicate topic ids")
        for topic in self.topics:
            if self.strict and len(topic.terms) != TERMS_PER_TOPIC:
                problems.append(f"topic {topic.id}: {len(topic.terms)} terms, "
                                f"expected {TERMS_PER_TOPIC}")
            if not topic.terms:
                problems.append(f"topic {topic.id}: no terms")
            cands = self.candidates.get(topic.id, [])
            if self.strict and len(cands) != CANDIDATES_PER_TOPIC:
                problems.append(f"topic {topic.id}: {len(cands)} candidates, "
                                f"expected {CANDIDATES_PER_TOPIC}")
            seen = set()
            for c in cands:
                if c.image_id in seen:
                    problems.append(f"topic {topic.id}: image {c.image_id} listed twice")
                seen.add(c.image_id)
                if c.rating is not None and not 0 <= c.rating <= MAX_RATING:
                    problems.append(f"topic {topic.id}: image {c.image_id} rating {c.rating} "
                                    f"outside [0, {MAX_RATING:g}]")
                if c.visual is None:
                    problems.append(f"image {c.image_id}: no visual vector")
        for tid in self.candidates:
            if tid not in self._by_id:
                problems.append(f"candidates reference unknown topic {tid}")
        return problems


def _lines(path):
    with Path(path).open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n").rstrip("\r")
            if line.strip():
                yield lineno, line


def load_topics(path):
    topics = []
    for lineno, line in _lines(path):
        fields = line.split("\t")
        terms = tuple(t.strip().lower() for t in fields[1:] if t.strip())
        if not fields[0].strip():
            raise ParseError(path, lineno, "missing topic id")
        topics.append(Topic(fields[0].strip(), terms))
    return topics


def load_visuals(path, dimension=VISUAL_DIM):
    visuals = {}
    for lineno, line in _lines(path):
        fields = line.split()
        try:
            vec = np.array([float(v) for v in fields[1:]])
        except ValueError as exc:
            raise ParseError(path, lineno, f"non-numeric component ({exc})") from None
        if vec.shape[0] != dimension:
            raise ParseError(path, lineno, f"image {fields[0]} has {vec.shape[0]} components, "
                                           f"expected {dimension}")
        visuals[fields[0]] = vec
    return visuals


def _parse_rating(path, lineno, text):
    if text.strip().upper() == "NA":
        return None
    try:
        rating = float(text)
    except ValueError:
        raise ParseError(path, lineno, f"bad rating {text!r}") from None
    if not 0 <= rating <= MAX_RATING:
        raise ValidationError(f"{path}:{lineno}: rating {rating} outside [0, {MAX_RATING:g}]")
    return rating


def load_dataset(topics_path, candidates_path, visual_path, strict=True,
                 visual_dim=VISUAL_DIM):
    """Load and cross-link topics, rated candidates and visual vectors."""
    topics = load_topics(topics_path)
    visuals = load_visuals(visual_path, visual_dim)
    known = {t.id for t in topics}
    candidates = {t.id: [] for t in topics}
    for lineno, line in _lines(candidates_path):
        fields = line.split("\t", 3)
        if len(fields) < 3:
            raise ParseError(candidates_path, lineno,
                             "expected topic_id, image_id, rating, caption")
        topic_id, image_id = fields[0].strip(), fields[1].strip()
        if topic_id not in known:
            raise LinkError(f"{candidates_path}:{lineno}: unknown topic id {topic_id}")
        if image_id not in visuals:
            raise LinkError(f"{candidates_path}:{lineno}: no visual vector for image {image_id}")
        caption = fields[3] if len(fields) > 3 else ""
        candidates[topic_id].append(ImageCandidate(
            image_id, tuple(tokenize(caption)), visuals[image_id],
            _parse_rating(candidates_path, lineno, fields[2]), caption))
    dataset = Dataset(topics, candidates, strict=strict)
    problems = dataset.validate()
    if problems:
        raise ValidationError("; ".join(problems[:10])
                              + (f" (+{len(problems) - 10} more)" if len(problems) > 10 else ""))
    log.info("loaded %(topics)d topics, %(candidates)d candidates, %(images)d images",
             dataset.counts())
    return dataset


def write_dataset(dataset, topics_path, candidates_path, visual_path):
    """Write a dataset back out in the TSV/text formats read by load_dataset."""
    with Path(topics_path).open("w", encoding="utf-8") as fh:
        for t in dataset.topics:
            fh.write("\t".join((t.id, *t.terms)) + "\n")
    written = set()
    with Path(candidates_path).open("w", encoding="utf-8") as cf, \
            Path(visual_path).open("w", encoding="utf-8") as vf:
        for t in dataset.topics:
            for c in dataset.candidates[t.id]:
                rating = "NA" if c.rating is None else repr(float(c.rating))
                caption = c.caption or " ".join(c.caption_tokens)
                cf.write(f"{t.id}\t{c.image_id}\t{rating}\t{caption}\n")
                if c.image_id not in written:
                    written.add(c.image_id)
                    vf.write(c.image_id + " " + " ".join(repr(float(v)) for v in c.visual) + "\n")


def generate_negatives(dataset, topic_id, pool_topics, k, rng):
    """Draw ``k`` rating-0 candidates for ``topic_id`` from other topics.

    Sampling is without replacement over the pooled candidates of
    ``pool_topics``, skipping repeated image ids and any image already among
    the target topic's own candidates.
    """
    if k == 0:
        return []
    if topic_id in pool_topics:
        raise ValueError(f"pool must not contain the target topic {topic_id}")
    own = {c.image_id for c in dataset.candidates[topic_id]}
    pool = [(tid, c) for tid in sorted(pool_topics) for c in dataset.candidates[tid]
            if c.image_id not in own]
    chosen, seen = [], set()
    for i in rng.permutation(len(pool)):
        tid, c = pool[i]
        if c.image_id in seen:
            continue
        seen.add(c.image_id)
        chosen.append(replace(c, rating=0.0, source_topic=tid))
        if len(chosen) == k:
            return chosen
    raise PoolExhaustedError(f"topic {topic_id}: only {len(chosen)} eligible negatives, "
                             f"{k} requested")


def kfold_split(topic_ids, k=5, seed=0):
    """Seeded shuffle, then contiguous test blocks; remainder goes to leading folds."""
    topic_ids = list(topic_ids)
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    if k > len(topic_ids):
        raise ValueError(f"k={k} exceeds the number of topics ({len(topic_ids)})")
    order = [topic_ids[i] for i in np.random.default_rng(seed).permutation(len(topic_ids))]
    base, extra = divmod(len(order), k)
    folds, start = [], 0
    for i in range(k):
        stop = start + base + (1 if i < extra else 0)
        test = tuple(order[start:stop])
        train = tuple(order[:start] + order[stop:])
        folds.append(FoldSplit(i, train, test))
        start = stop
    return folds


def training_pairs(dataset, split, negatives_per_topic=CANDIDATES_PER_TOPIC, seed=0):
    """(topic, candidate) pairs for a fold's training topics plus sampled negatives.

    Negatives are drawn once per fold. Unrated candidates are skipped.
    """
    rng = np.random.default_rng(seed)
    train = set(split.train_topics)
    pairs = []
    for tid in split.train_topics:
        topic = dataset.topic(tid)
        pairs.extend((topic, c) for c in dataset.candidates[tid] if c.rating is not None)
        pool = train - {tid}
        pairs.extend((topic, c) for c in generate_negatives(dataset, tid, pool,
                                                            negatives_per_topic, rng))
    return pairs


def evaluation_pairs(dataset, split):
    """Rated (topic, candidate) pairs of a fold's test topics; no negatives."""
    return [(dataset.topic(tid), c) for tid in split.test_topics
            for c in dataset.candidates[tid] if c.rating is not None]


def check_no_leakage(train_pairs, split):
    """Raise LeakageError if any training example involves a test topic."""
    test = set(split.test_topics)
    for topic, cand in train_pairs:
        if topic.id in test:
            raise LeakageError(f"fold {split.fold_index}: test topic {topic.id} in training data")
        if cand.source_topic is not None and cand.source_topic in test:
            raise LeakageError(f"fold {split.fold_index}: negative image {cand.image_id} "
                               f"drawn from test topic {cand.source_topic}")
