"""Precomputed word vectors and mean pooling over token sequences."""
import logging
import re
from pathlib import Path

import numpy as np

from .errors import DimensionError, ParseError

log = logging.getLogger(__name__)

_PUNCT = re.compile(r"[^\w\s]+", re.UNICODE)


def tokenize(text):
    """Lowercase, strip punctuation and split on whitespace."""
    return _PUNCT.sub(" ", text.lower()).split()


class EmbeddingTable:
    """Immutable token -> vector map. Tokens are lowercased on insert and lookup."""

    def __init__(self, dimension, entries=None):
        if dimension <= 0:
            raise ValueError(f"dimension must be positive, got {dimension}")
        self.dimension = int(dimension)
        self.duplicates = 0
        self._index = {}
        rows = []
        for token, vec in (entries or {}).items():
            vec = np.asarray(vec, dtype=np.float64)
            if vec.shape != (self.dimension,):
                raise DimensionError(
                    f"vector for {token!r} has length {vec.size}, expected {self.dimension}")
            key = token.lower()
            if key in self._index:
                self.duplicates += 1
                rows[self._index[key]] = vec
            else:
                self._index[key] = len(rows)
                rows.append(vec)
        self._vectors = np.array(rows, dtype=np.float64).reshape(len(rows), self.dimension)
        self._vectors.flags.writeable = False

    def __len__(self):
        return len(self._index)

    def __contains__(self, token):
        return token.lower() in self._index

    def tokens(self):
        return list(self._index)

    def lookup(self, token):
        """Return a copy of the stored vector, or None for out-of-vocabulary tokens."""
        row = self._index.get(token.lower())
        if row is None:
            return None
        return self._vectors[row].copy()

    def mean_pool(self, tokens):
        """Mean of the in-vocabulary token vectors and how many tokens were found.

        Out-of-vocabulary tokens are skipped. If none are found the zero vector
        is returned with a count of 0.
        """
        tokens = list(tokens)
        if not tokens:
            raise ValueError("mean_pool needs at least one token")
        rows = [self._index[t] for t in (tok.lower() for tok in tokens) if t in self._index]
        if not rows:
            return np.zeros(self.dimension), 0
        return self._vectors[rows].mean(axis=0), len(rows)


def lookup(table, token):
    return table.lookup(token)


def mean_pool(table, tokens):
    return table.mean_pool(tokens)


def _is_header(fields, expected_dimension):
    if len(fields) != 2 or expected_dimension == 1:
        return False
    return all(f.isdigit() for f in fields)


def load_embeddings(path, expected_dimension):
    """Load a textual word-vector file (``token v1 ... vd`` per line).

    An optional ``vocab_size dimension`` header line is detected and checked.
    When a token occurs more than once the last occurrence wins.
    """
    path = Path(path)
    entries = {}
    duplicates = 0
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            fields = line.split()
            if not fields:
                continue
            if lineno == 1 and _is_header(fields, expected_dimension):
                if int(fields[1]) != expected_dimension:
                    raise DimensionError(
                        f"{path}: header declares dimension {fields[1]}, "
                        f"expected {expected_dimension}")
                continue
            token = fields[0].lower()
            try:
                values = [float(v) for v in fields[1:]]
            except ValueError as exc:
                raise ParseError(path, lineno, f"non-numeric component ({exc})") from None
            if len(values) != expected_dimension:
                raise DimensionError(
                    f"{path}:{lineno}: token {token!r} has {len(values)} components, "
                    f"expected {expected_dimension}")
            if token in entries:
                duplicates += 1
            entries[token] = values
    if duplicates:
        log.warning("%s: %d duplicate tokens, last occurrence kept", path, duplicates)
    table = EmbeddingTable(expected_dimension, entries)
    table.duplicates = duplicates
    return table


def save_embeddings(table, path):
    with Path(path).open("w", encoding="utf-8") as fh:
        for token in table.tokens():
            vec = table.lookup(token)
            fh.write(token + " " + " ".join(repr(float(v)) for v in vec) + "\n")
