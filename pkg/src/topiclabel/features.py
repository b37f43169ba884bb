"""Network input assembly: [topic || caption || visual] with ablation configs."""
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError

TEXT_DIM = 300
VISUAL_DIM = 1000

FEATURE_NAMES = ("topic+caption+vgg", "topic+caption", "topic+vgg")


@dataclass(frozen=True)
class FeatureConfig:
    use_caption: bool = True
    use_visual: bool = True
    text_dim: int = TEXT_DIM
    visual_dim: int = VISUAL_DIM

    @property
    def input_dim(self):
        return (self.text_dim
                + (self.text_dim if self.use_caption else 0)
                + (self.visual_dim if self.use_visual else 0))

    @property
    def name(self):
        parts = ["topic"]
        if self.use_caption:
            parts.append("caption")
        if self.use_visual:
            parts.append("vgg")
        return "+".join(parts)

    @classmethod
    def from_name(cls, name, text_dim=TEXT_DIM, visual_dim=VISUAL_DIM):
        parts = name.lower().replace(" ", "").split("+")
        if not parts or parts[0] != "topic" or len(set(parts)) != len(parts) \
                or not set(parts[1:]) <= {"caption", "vgg"}:
            raise ValueError(f"unknown feature configuration {name!r}; "
                             f"expected one of {', '.join(FEATURE_NAMES)}")
        return cls("caption" in parts, "vgg" in parts, text_dim, visual_dim)


@dataclass
class InputVector:
    values: np.ndarray
    layout: dict = field(default_factory=dict)

    def __len__(self):
        return self.values.shape[0]

    def segment(self, name):
        start, stop = self.layout[name]
        return self.values[start:stop]


def _check(name, vec, dim):
    vec = np.asarray(vec, dtype=np.float64)
    if vec.ndim != 1 or vec.shape[0] != dim:
        raise DimensionError(f"{name} segment has shape {vec.shape}, expected ({dim},)")
    return vec


def build_input(topic_vec, caption_vec, visual_vec, config):
    if (caption_vec is not None) != config.use_caption:
        raise ValueError(f"caption segment presence does not match config {config.name}")
    if (visual_vec is not None) != config.use_visual:
        raise ValueError(f"visual segment presence does not match config {config.name}")
    segments = [("topic", _check("topic", topic_vec, config.text_dim))]
    if config.use_caption:
        segments.append(("caption", _check("caption", caption_vec, config.text_dim)))
    if config.use_visual:
        segments.append(("visual", _check("visual", visual_vec, config.visual_dim)))
    layout, offset = {}, 0
    for name, vec in segments:
        layout[name] = (offset, offset + vec.shape[0])
        offset += vec.shape[0]
    return InputVector(np.concatenate([v for _, v in segments]), layout)


def _pool_or_zero(table, tokens):
    if not tokens:
        return np.zeros(table.dimension)
    return table.mean_pool(tokens)[0]


def featurize_pair(topic, image, table, config):
    """Input vector for one (topic, image) pair.

    Topic and caption segments are mean-pooled embeddings; an empty caption
    gives a zero caption segment.
    """
    if not topic.terms:
        raise ValueError(f"topic {topic.id} has no terms")
    topic_vec = table.mean_pool(topic.terms)[0]
    caption_vec = _pool_or_zero(table, image.caption_tokens) if config.use_caption else None
    visual_vec = None
    if config.use_visual:
        if image.visual is None:
            raise ValueError(f"image {image.image_id} has no visual vector")
        visual_vec = image.visual
    return build_input(topic_vec, caption_vec, visual_vec, config)


def featurize_pairs(pairs, table, config):
    """Stack featurized (topic, image) pairs into an ``(n, input_dim)`` matrix.

    Topic vectors are pooled once per topic.
    """
    pairs = list(pairs)
    out = np.empty((len(pairs), config.input_dim))
    topic_cache = {}
    t = config.text_dim
    for i, (topic, image) in enumerate(pairs):
        tv = topic_cache.get(topic.id)
        if tv is None:
            tv = topic_cache[topic.id] = featurize_pair(
                topic, image, table, FeatureConfig(False, False, t, config.visual_dim)).values
        out[i, :t] = tv
        col = t
        if config.use_caption:
            out[i, col:col + t] = _pool_or_zero(table, image.caption_tokens)
            col += t
        if config.use_visual:
            if image.visual is None:
                raise ValueError(f"image {image.image_id} has no visual vector")
            out[i, col:] = _check("visual", image.visual, config.visual_dim)
    return out
