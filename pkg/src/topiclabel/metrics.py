"""Top-1 average rating and nDCG@k against gold ratings."""
import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

GAINS = ("linear", "exponential")


@dataclass(frozen=True)
class RankedList:
    topic_id: str
    image_ids: tuple  # best first
    gold: dict  # image id -> rating

    def ratings(self):
        return [self.gold[i] for i in self.image_ids]


def rank_by_scores(topic_id, image_ids, scores, gold):
    """Sort by descending score; ties go to the smaller image id."""
    order = sorted(zip(image_ids, scores), key=lambda p: (-p[1], p[0]))
    return RankedList(topic_id, tuple(i for i, _ in order), dict(gold))


def ideal_order(gold):
    return tuple(sorted(gold, key=lambda i: (-gold[i], i)))


def top1_average_rating(ranked_lists):
    ratings = []
    for rl in ranked_lists:
        if not rl.image_ids:
            raise ValueError(f"topic {rl.topic_id}: empty ranking")
        top = rl.image_ids[0]
        if rl.gold.get(top) is None:
            raise ValueError(f"topic {rl.topic_id}: no gold rating for image {top}")
        ratings.append(rl.gold[top])
    if not ratings:
        raise ValueError("no ranked lists")
    return float(np.mean(ratings))


def _gain(rating, gain):
    if gain == "linear":
        return rating
    if gain == "exponential":
        return 2.0 ** rating - 1.0
    raise ValueError(f"unknown gain {gain!r}; expected one of {GAINS}")


def dcg_at_k(ratings, k, gain="linear"):
    """sum_{i=1..min(k,n)} gain(rating_i) / log2(i + 1)."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    return float(sum(_gain(r, gain) / math.log2(i + 2) for i, r in enumerate(list(ratings)[:k])))


def ndcg_at_k(ranked, k, gain="linear"):
    """DCG of the predicted order over DCG of the gold order; 1.0 when nothing is relevant."""
    if not ranked.image_ids:
        raise ValueError(f"topic {ranked.topic_id}: empty ranking")
    ideal = dcg_at_k([ranked.gold[i] for i in ideal_order(ranked.gold)], k, gain)
    if ideal == 0:
        return 1.0
    return dcg_at_k(ranked.ratings(), k, gain) / ideal


def paired_t_test(a, b):
    """Two-sided paired t-test p-value.

    Constant differences have zero variance: the p-value is 1.0 when they are
    all zero and 0.0 otherwise.
    """
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    if a.shape != b.shape or a.size < 2:
        raise ValueError("paired samples must have equal length >= 2")
    diff = a - b
    if np.all(diff == diff[0]):
        return 0.0 if diff[0] != 0 else 1.0
    return float(stats.ttest_rel(a, b).pvalue)
