"""Seeded synthetic corpora with a known topic/image relevance structure.

Words, topics and images are organised around latent themes. Each topic
belongs to one theme. Each candidate image mixes its topic's theme (weight
``a``) with a different theme (weight ``1 - a``); its caption words and its
visual class distribution are drawn from that mixture. The gold rating is
``3 * cos(topic latent, image latent)`` plus Gaussian noise, clipped to
[0, 3] and rounded to one decimal.
"""
from dataclasses import dataclass

import numpy as np

from .dataset import Dataset, ImageCandidate, Topic
from .embeddings import EmbeddingTable
from .features import TEXT_DIM, VISUAL_DIM


@dataclass(frozen=True)
class SyntheticSpec:
    n_topics: int = 300
    n_candidates: int = 20
    n_terms: int = 10
    n_themes: int = 12
    words_per_theme: int = 40
    background_words: int = 400
    text_dim: int = TEXT_DIM
    visual_dim: int = VISUAL_DIM
    caption_length: tuple = (6, 14)
    rating_noise: float = 0.25
    word_noise: float = 1.0


def _unit(v):
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def make_corpus(spec=SyntheticSpec(), seed=0):
    """Return ``(dataset, table)`` for a synthetic corpus."""
    rng = np.random.default_rng(seed)
    d = spec.text_dim
    centers = _unit(rng.normal(size=(spec.n_themes, d)))
    vocab, vectors, theme_words = [], [], []
    for k in range(spec.n_themes):
        words = [f"w{k:02d}x{j:03d}" for j in range(spec.words_per_theme)]
        noise = rng.normal(size=(len(words), d)) * spec.word_noise / np.sqrt(d)
        vocab += words
        vectors.append(_unit(centers[k] + noise))
        theme_words.append(words)
    background = [f"bg{j:04d}" for j in range(spec.background_words)]
    vocab += background
    vectors.append(_unit(rng.normal(size=(len(background), d))))
    table = EmbeddingTable(d, dict(zip(vocab, np.vstack(vectors))))

    block = spec.visual_dim // spec.n_themes
    if block < 1:
        raise ValueError(f"visual_dim {spec.visual_dim} is smaller than n_themes {spec.n_themes}")
    n_cls = min(3, block)
    topics, candidates = [], {}
    image_no = 0
    for t in range(spec.n_topics):
        theme = int(rng.integers(spec.n_themes))
        tid = f"t{t:04d}"
        terms = tuple(rng.choice(theme_words[theme], size=spec.n_terms, replace=False))
        topics.append(Topic(tid, terms))
        rows = []
        for _ in range(spec.n_candidates):
            a = float(rng.uniform())
            other = int(rng.integers(spec.n_themes - 1))
            other += other >= theme
            cos = a / np.hypot(a, 1.0 - a)
            rating = float(np.clip(3.0 * cos + rng.normal(0.0, spec.rating_noise), 0.0, 3.0))
            rating = round(rating, 1)

            n_tok = int(rng.integers(spec.caption_length[0], spec.caption_length[1] + 1))
            tokens = []
            for _ in range(n_tok):
                u = rng.uniform()
                if u < 0.8 * a:
                    tokens.append(rng.choice(theme_words[theme]))
                elif u < 0.8:
                    tokens.append(rng.choice(theme_words[other]))
                else:
                    tokens.append(rng.choice(background))

            logits = rng.normal(0.0, 1.0, size=spec.visual_dim)
            for th, weight in ((theme, a), (other, 1.0 - a)):
                cls = block * th + rng.choice(block, size=n_cls, replace=False)
                logits[cls] += 8.0 * weight
            visual = np.exp(logits - logits.max())
            visual /= visual.sum()

            caption = " ".join(str(tok) for tok in tokens)
            rows.append(ImageCandidate(f"img{image_no:06d}", tuple(caption.split()),
                                       visual, rating, caption))
            image_no += 1
        candidates[tid] = rows
    strict = spec.n_terms == 10 and spec.n_candidates == 20
    return Dataset(topics, candidates, strict=strict), table


def random_ranking_expectation(dataset, topic_ids=None):
    """Expected Top-1 rating and nDCG@1 of a uniformly random ranking."""
    top1, ndcg1 = [], []
    for tid in topic_ids or dataset.topic_ids:
        ratings = np.array([c.rating for c in dataset.candidates[tid]])
        top1.append(ratings.mean())
        ndcg1.append(ratings.mean() / ratings.max() if ratings.max() > 0 else 1.0)
    return float(np.mean(top1)), float(np.mean(ndcg1))
