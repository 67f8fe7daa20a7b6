"""Incremental vocabulary and unit-circle codes for word indices.

Word index ``i`` is represented by the point ``(cos(i*step), sin(i*step))``
on the unit circle. Mixtures of codes land inside the unit disk and are
decoded back to an index from their angle alone, so a code scaled toward the
origin still decodes to the same word.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CapacityError

TWO_PI = 2.0 * math.pi

# Codes closer to the origin than this have an ill-conditioned angle and are
# treated as undecodable.
ORIGIN_EPSILON = 1e-6


@dataclass(frozen=True)
class EncodingConfig:
    """Angle step between consecutive word codes, in radians."""

    angle_step: float = 0.2

    def __post_init__(self) -> None:
        if not (self.angle_step > 0 and math.isfinite(self.angle_step)):
            raise ValueError(f"angle step must be positive, got {self.angle_step}")
        if self.capacity < 1:
            raise ValueError(
                f"angle step {self.angle_step} leaves no decodable index"
            )

    @property
    def capacity(self) -> int:
        """Number of distinct decodable indices: floor(2*pi / angle_step)."""
        return int(TWO_PI / self.angle_step)


def normalize_name(name: str) -> str:
    """Canonical form of a spoken name: lowercased, whitespace collapsed."""
    return " ".join(name.split()).lower()


class Vocabulary:
    """Ordered set of unique names with stable indices.

    Once a name is assigned an index, the index never changes; new names are
    appended. An optional capacity caps growth so indices never alias on the
    circle.
    """

    def __init__(self, capacity: int | None = None) -> None:
        if capacity is not None and capacity < 1:
            raise ValueError(f"capacity must be positive, got {capacity}")
        self._capacity = capacity
        self._words: list[str] = []
        self._index: dict[str, int] = {}

    @property
    def capacity(self) -> int | None:
        return self._capacity

    @property
    def words(self) -> tuple[str, ...]:
        return tuple(self._words)

    def __len__(self) -> int:
        return len(self._words)

    def __contains__(self, name: str) -> bool:
        return normalize_name(name) in self._index

    def get_or_add(self, name: str) -> tuple[int, bool]:
        """Return ``(index, is_new)`` for a name, adding it if unseen.

        Raises :class:`CapacityError` instead of silently reusing an index
        when the vocabulary is full.
        """
        word = normalize_name(name)
        if not word:
            raise ValueError("name is empty after normalization")
        existing = self._index.get(word)
        if existing is not None:
            return existing, False
        if self._capacity is not None and len(self._words) >= self._capacity:
            raise CapacityError(
                f"vocabulary is full: {self._capacity} names is the most the "
                f"encoding can represent without aliasing"
            )
        index = len(self._words)
        self._words.append(word)
        self._index[word] = index
        return index, True

    def index_of(self, name: str) -> int | None:
        return self._index.get(normalize_name(name))

    def name_of(self, index: int) -> str:
        if not 0 <= index < len(self._words):
            raise IndexError(
                f"index {index} out of range for vocabulary of {len(self._words)}"
            )
        return self._words[index]


def encode_index(index: int, config: EncodingConfig) -> np.ndarray:
    """Unit-circle code of a word index: ``(cos(i*step), sin(i*step))``."""
    if not 0 <= index < config.capacity:
        raise ValueError(
            f"index {index} out of range for capacity {config.capacity}"
        )
    angle = index * config.angle_step
    return np.array([math.cos(angle), math.sin(angle)])


def round_half_away_from_zero(x: float) -> int:
    """Round to the nearest integer; exact halves move away from zero."""
    if x >= 0:
        return int(math.floor(x + 0.5))
    return int(math.ceil(x - 0.5))


def decode_code(code, config: EncodingConfig, vocab_len: int) -> int | None:
    """Recover a word index from a (possibly mixed) 2-d code.

    The code's angle is measured with the two-argument arctangent and taken
    in [0, 2*pi), so indices beyond the half turn decode correctly, then
    divided by the angle step and rounded (halves away from zero). Index 0
    sits on the wrap seam, so its rounding window extends symmetrically
    across it: an angle within half a step below the full turn still decodes
    to 0. Returns ``None`` when the code sits too close to the origin for its
    angle to mean anything, when the angle falls in the unassigned arc
    between the last slot's window and index 0's, or when the rounded index
    is not a valid vocabulary index.
    """
    x = float(code[0])
    y = float(code[1])
    if not (math.isfinite(x) and math.isfinite(y)):
        raise ValueError("code has non-finite coordinates")
    if math.hypot(x, y) < ORIGIN_EPSILON:
        return None
    angle = math.atan2(y, x)
    if angle < 0.0:
        angle += TWO_PI
    index = round_half_away_from_zero(angle / config.angle_step)
    if index >= config.capacity:
        if TWO_PI - angle <= config.angle_step / 2.0:
            index = 0
        else:
            return None
    if not 0 <= index < vocab_len:
        return None
    return index
