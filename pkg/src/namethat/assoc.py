"""Attention-style associative memory over embedding vectors.

The store keeps an append-only list of (key, value) pairs where keys are
n-dimensional embeddings and values are 2-d label codes. A query is answered
by softmax-weighting the stored values according to query/key similarity:
the output is a convex combination of the stored values, so it always lies
in their convex hull.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError


def as_vector(x, *, dim: int | None = None, name: str = "vector") -> np.ndarray:
    """Validate and convert array-like input to a finite 1-d float64 array."""
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {v.shape}")
    if v.size == 0:
        raise ValueError(f"{name} is empty")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} contains non-finite entries")
    if dim is not None and v.shape[0] != dim:
        raise DimensionMismatchError(
            f"{name} has dimension {v.shape[0]}, expected {dim}"
        )
    return v


def softmax(x) -> np.ndarray:
    """Softmax of a sequence of finite reals.

    Computed with max-subtraction, which is exact with respect to the naive
    formula whenever the shifted additions are exact (softmax is shift
    invariant), and never overflows for large inputs. Entries with a huge
    deficit to the maximum may underflow to exactly 0.0 in float64.
    """
    v = as_vector(x, name="softmax input")
    z = np.exp(v - v.max())
    return z / z.sum()


@dataclass(frozen=True)
class AttentionConfig:
    """How similarities are scaled and measured inside the mixture.

    ``temperature`` divides the similarities before the softmax: small values
    push the coefficients toward one-hot selection of the best key, large
    values blend more from the rest. ``normalize_similarities`` switches the
    mixture from raw dot products to cosines; raw is the default because it
    preserves the exact projection property (queries with components
    orthogonal to every key get the same answer as their projection onto the
    key span).
    """

    temperature: float
    normalize_similarities: bool = False

    def __post_init__(self) -> None:
        if not (self.temperature > 0 and math.isfinite(self.temperature)):
            raise ValueError(f"temperature must be positive, got {self.temperature}")


class AssociationStore:
    """Append-only store of (key, value) pairs.

    Keys have a fixed dimension, values are always 2-d codes. Pairs are never
    reordered or removed, so an index into the store stays valid for the whole
    session. Reads are safe while another thread appends: a pair becomes
    visible atomically, never half-written.
    """

    def __init__(self, dim: int) -> None:
        if dim <= 0:
            raise ValueError(f"dimension must be positive, got {dim}")
        self._dim = int(dim)
        self._pairs: list[tuple[np.ndarray, np.ndarray]] = []
        self._cache_lock = threading.Lock()
        self._cache: tuple[int, np.ndarray, np.ndarray] | None = None

    @property
    def dim(self) -> int:
        return self._dim

    def __len__(self) -> int:
        return len(self._pairs)

    def add_pair(self, key, value) -> None:
        """Append one association pair. Existing pairs are untouched."""
        k = as_vector(key, dim=self._dim, name="key").copy()
        v = as_vector(value, dim=2, name="value").copy()
        k.setflags(write=False)
        v.setflags(write=False)
        self._pairs.append((k, v))

    def pairs(self) -> list[tuple[np.ndarray, np.ndarray]]:
        """Snapshot of the current pairs, in insertion order."""
        return self._pairs[: len(self._pairs)]

    def matrices(self) -> tuple[np.ndarray, np.ndarray]:
        """Stacked (keys, values) matrices for the pairs currently visible.

        The two matrices always come from the same snapshot. Rebuilt lazily
        and cached per store length, so repeated queries between appends are
        cheap.
        """
        n = len(self._pairs)
        if n == 0:
            raise ValueError("association store is empty")
        with self._cache_lock:
            if self._cache is not None and self._cache[0] == n:
                return self._cache[1], self._cache[2]
            pairs = self._pairs[:n]
            keys = np.stack([p[0] for p in pairs])
            values = np.stack([p[1] for p in pairs])
            keys.setflags(write=False)
            values.setflags(write=False)
            self._cache = (n, keys, values)
            return keys, values


def _similarity_vector(
    q: np.ndarray, keys: np.ndarray, config: AttentionConfig
) -> np.ndarray:
    sims = keys @ q
    if config.normalize_similarities:
        qn = float(np.linalg.norm(q))
        if qn == 0.0:
            raise ValueError("query has zero norm; cosine similarity is undefined")
        key_norms = np.linalg.norm(keys, axis=1)
        zero = np.flatnonzero(key_norms == 0.0)
        if zero.size:
            raise ValueError(
                f"key {zero[0]} has zero norm; cosine similarity is undefined"
            )
        sims = sims / (key_norms * qn)
    return sims


def similarities(query, store: AssociationStore, config: AttentionConfig) -> np.ndarray:
    """Per-key similarity of the query: raw dot products, or cosines when
    the config asks for normalization."""
    q = as_vector(query, dim=store.dim, name="query")
    keys, _ = store.matrices()
    return _similarity_vector(q, keys, config)


def attend(
    query, store: AssociationStore, config: AttentionConfig
) -> tuple[np.ndarray, np.ndarray]:
    """Mix the stored values according to query/key similarity.

    Returns ``(output, coefficients)`` where ``coefficients`` is the softmax
    of the similarities divided by the temperature, and ``output`` is the
    coefficient-weighted sum of the stored 2-d values.
    """
    q = as_vector(query, dim=store.dim, name="query")
    keys, values = store.matrices()
    sims = _similarity_vector(q, keys, config)
    coeffs = softmax(sims / config.temperature)
    output = coeffs @ values
    return output, coeffs


def relevance(query, store: AssociationStore) -> float:
    """Maximum cosine similarity of the query to any stored key.

    Always uses cosines regardless of how the mixture is configured; this is
    the quantity compared against a rejection threshold to decide whether the
    query is close to anything the store has seen.
    """
    q = as_vector(query, dim=store.dim, name="query")
    keys, _ = store.matrices()
    qn = float(np.linalg.norm(q))
    if qn == 0.0:
        raise ValueError("query has zero norm; cosine similarity is undefined")
    key_norms = np.linalg.norm(keys, axis=1)
    zero = np.flatnonzero(key_norms == 0.0)
    if zero.size:
        raise ValueError(f"key {zero[0]} has zero norm; cosine similarity is undefined")
    best = float(np.max((keys @ q) / (key_norms * qn)))
    # Rounding can push a cosine an ulp past 1; keep the documented range.
    return min(1.0, max(-1.0, best))
