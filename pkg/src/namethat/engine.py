"""Teach/ask/correct session engine.

Associates embedding vectors with vocabulary names through the attention
store: teaching appends a (features, word-code) pair, asking mixes the stored
codes for the query and decodes the result back to a word. Corrections are
new pairs, never edits, so a session only ever grows.
"""

from __future__ import annotations

import base64
import enum
import json
import math
import threading
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .assoc import AssociationStore, AttentionConfig, as_vector, attend, relevance
from .errors import SnapshotError
from .vocab import EncodingConfig, Vocabulary, decode_code, encode_index, normalize_name

SNAPSHOT_FORMAT = "naming-session"
SNAPSHOT_VERSION = 1


class NoIdeaReason(enum.Enum):
    EMPTY_STORE = "empty_store"
    INVALID_INDEX = "invalid_index"
    BELOW_THRESHOLD = "below_threshold"


@dataclass(frozen=True)
class Named:
    """A confident answer: the decoded word, its index, and the relevance."""

    name: str
    index: int
    relevance: float


@dataclass(frozen=True)
class NoIdea:
    """No answer, with the reason and (when computable) the relevance."""

    reason: NoIdeaReason
    relevance: float | None = None


QueryOutcome = Named | NoIdea


@dataclass(frozen=True)
class TeachResult:
    index: int
    is_new_word: bool
    pair_count: int


@dataclass(frozen=True)
class NamingConfig:
    """Session parameters.

    ``temperature`` defaults to sqrt(dim), the usual scaled-dot-product
    choice. Note that for unit-normalized embeddings this mixes heavily
    across stored pairs; pass something much smaller (for example ``1/dim``)
    to get near-nearest-key behaviour on normalized data, whose dot products
    never leave [-1, 1].

    ``relevance_threshold`` of ``None`` disables rejection: every query with
    a valid decoded index gets an answer, however far it sits from the keys.
    """

    dim: int = 384
    angle_step: float = 0.2
    temperature: float | None = None
    relevance_threshold: float | None = None
    normalize_similarities: bool = False

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise ValueError(f"dim must be positive, got {self.dim}")
        if not (self.angle_step > 0 and math.isfinite(self.angle_step)):
            raise ValueError(f"angle step must be positive, got {self.angle_step}")
        if self.temperature is not None and not self.temperature > 0:
            raise ValueError(f"temperature must be positive, got {self.temperature}")
        if self.relevance_threshold is not None and not (
            -1.0 <= self.relevance_threshold <= 1.0
        ):
            raise ValueError(
                f"relevance threshold must lie in [-1, 1], got "
                f"{self.relevance_threshold}"
            )

    @property
    def resolved_temperature(self) -> float:
        return self.temperature if self.temperature is not None else math.sqrt(self.dim)


@dataclass
class _Pair:
    """Bookkeeping alongside each stored pair: which word it taught."""

    name: str
    index: int


class NamingEngine:
    """One naming session: a vocabulary plus the association store.

    teach/correct mutate the session and are serialized internally; ask is a
    pure function of the current state and may run concurrently with other
    asks. A correction is just another teach: the offending pair stays, the
    new one wins the similarity contest for queries near its key (the taught
    key reaches cosine 1 with itself, the maximum possible). How decisively
    the mixture then snaps to that pair depends on the temperature: the
    smaller it is, the closer the mixture is to picking the single best key.
    One inherent limit: teaching the bit-identical vector twice under
    different names ties their similarities exactly, so queries at that
    vector mix both codes evenly and can decode to whatever lies between.
    """

    def __init__(self, config: NamingConfig | None = None) -> None:
        self.config = config if config is not None else NamingConfig()
        self._encoding = EncodingConfig(angle_step=self.config.angle_step)
        self._attention = AttentionConfig(
            temperature=self.config.resolved_temperature,
            normalize_similarities=self.config.normalize_similarities,
        )
        self._vocab = Vocabulary(capacity=self._encoding.capacity)
        self._store = AssociationStore(self.config.dim)
        self._pair_meta: list[_Pair] = []
        self._teach_count = 0
        self._write_lock = threading.Lock()

    @property
    def vocabulary(self) -> Vocabulary:
        return self._vocab

    @property
    def store(self) -> AssociationStore:
        return self._store

    @property
    def pair_count(self) -> int:
        return len(self._store)

    @property
    def encoding(self) -> EncodingConfig:
        return self._encoding

    def teach(self, name: str, features) -> TeachResult:
        """Associate the features with a name, extending the vocabulary if new."""
        vec = as_vector(features, dim=self.config.dim, name="features")
        with self._write_lock:
            index, is_new = self._vocab.get_or_add(name)
            code = encode_index(index, self._encoding)
            self._store.add_pair(vec, code)
            self._pair_meta.append(_Pair(self._vocab.name_of(index), index))
            self._teach_count += 1
            return TeachResult(index, is_new, len(self._store))

    def correct(self, name: str, features) -> TeachResult:
        """Supply the right name for features that were answered wrongly.

        Identical to :meth:`teach`; the separate entry point keeps call sites
        honest about intent.
        """
        return self.teach(name, features)

    def ask(self, features) -> QueryOutcome:
        vec = as_vector(features, dim=self.config.dim, name="features")
        if len(self._store) == 0:
            return NoIdea(NoIdeaReason.EMPTY_STORE)
        rel = relevance(vec, self._store)
        threshold = self.config.relevance_threshold
        if threshold is not None and rel < threshold:
            # Rejection wins even when the mixture would decode to a valid
            # index: a far-away query gets "no idea", not a guess.
            return NoIdea(NoIdeaReason.BELOW_THRESHOLD, rel)
        output, _ = attend(vec, self._store, self._attention)
        index = decode_code(output, self._encoding, len(self._vocab))
        if index is None:
            return NoIdea(NoIdeaReason.INVALID_INDEX, rel)
        return Named(self._vocab.name_of(index), index, rel)

    # -- persistence ---------------------------------------------------------

    def snapshot(self) -> dict:
        """Self-describing dict capturing config, vocabulary, and all pairs."""
        with self._write_lock:
            pairs = []
            for (key, code), meta in zip(self._store.pairs(), self._pair_meta):
                pairs.append(
                    {
                        "name": meta.name,
                        "index": meta.index,
                        "code": [float(code[0]), float(code[1])],
                        "key_b64": base64.b64encode(
                            key.astype("<f8").tobytes()
                        ).decode("ascii"),
                    }
                )
            return {
                "format": SNAPSHOT_FORMAT,
                "version": SNAPSHOT_VERSION,
                "config": {
                    "dim": self.config.dim,
                    "angle_step": self.config.angle_step,
                    "temperature": self.config.temperature,
                    "relevance_threshold": self.config.relevance_threshold,
                    "normalize_similarities": self.config.normalize_similarities,
                },
                "words": list(self._vocab.words),
                "pairs": pairs,
                "teach_count": self._teach_count,
            }

    @classmethod
    def from_snapshot(cls, snapshot: dict) -> "NamingEngine":
        """Rebuild an engine from :meth:`snapshot` output.

        Every session invariant is re-checked; a snapshot that violates one
        is rejected with a :class:`SnapshotError` naming the violation.
        """
        if not isinstance(snapshot, dict):
            raise SnapshotError("snapshot is not a mapping")
        if snapshot.get("format") != SNAPSHOT_FORMAT:
            raise SnapshotError(
                f"unrecognized snapshot format {snapshot.get('format')!r}"
            )
        if snapshot.get("version") != SNAPSHOT_VERSION:
            raise SnapshotError(
                f"unsupported snapshot version {snapshot.get('version')!r}"
            )
        try:
            raw_config = dict(snapshot["config"])
            words = list(snapshot["words"])
            raw_pairs = list(snapshot["pairs"])
            teach_count = snapshot["teach_count"]
        except (KeyError, TypeError) as exc:
            raise SnapshotError(f"snapshot missing required field: {exc}") from exc
        try:
            config = NamingConfig(**raw_config)
        except (TypeError, ValueError) as exc:
            raise SnapshotError(f"snapshot config is invalid: {exc}") from exc

        engine = cls(config)
        for word in words:
            if not isinstance(word, str) or normalize_name(word) != word or not word:
                raise SnapshotError(f"vocabulary word {word!r} is not normalized")
            _, is_new = engine._vocab.get_or_add(word)
            if not is_new:
                raise SnapshotError(f"vocabulary word {word!r} is duplicated")

        if teach_count != len(raw_pairs):
            raise SnapshotError(
                f"teach count {teach_count} does not equal pair count {len(raw_pairs)}"
            )
        for position, pair in enumerate(raw_pairs):
            try:
                name = pair["name"]
                index = pair["index"]
                code = np.asarray(pair["code"], dtype=np.float64)
                key_bytes = base64.b64decode(pair["key_b64"], validate=True)
            except (KeyError, TypeError, ValueError) as exc:
                raise SnapshotError(f"pair {position} is malformed: {exc}") from exc
            if not (isinstance(index, int) and 0 <= index < len(words)):
                raise SnapshotError(
                    f"pair {position} has index {index!r}, not a valid "
                    f"vocabulary index"
                )
            if normalize_name(str(name)) != words[index]:
                raise SnapshotError(
                    f"pair {position} names {name!r} but index {index} is "
                    f"{words[index]!r}"
                )
            if code.shape != (2,):
                raise SnapshotError(f"pair {position} code is not 2-dimensional")
            if abs(float(code @ code) - 1.0) > 1e-12:
                raise SnapshotError(
                    f"pair {position} value code is not on the unit circle"
                )
            expected = encode_index(index, engine._encoding)
            if not np.allclose(code, expected, rtol=0.0, atol=1e-12):
                raise SnapshotError(
                    f"pair {position} value code does not encode index {index}"
                )
            key = np.frombuffer(key_bytes, dtype="<f8")
            if key.shape != (config.dim,):
                raise SnapshotError(
                    f"pair {position} key has dimension {key.shape[0]}, "
                    f"expected {config.dim}"
                )
            if not np.all(np.isfinite(key)):
                raise SnapshotError(f"pair {position} key has non-finite entries")
            engine._store.add_pair(key.astype(np.float64), code)
            engine._pair_meta.append(_Pair(words[index], index))
        engine._teach_count = teach_count
        return engine


def save_session(engine: NamingEngine, path) -> None:
    Path(path).write_text(json.dumps(engine.snapshot(), indent=2), encoding="utf-8")


def load_session(path) -> NamingEngine:
    try:
        snapshot = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SnapshotError(f"snapshot file is not valid JSON: {exc}") from exc
    return NamingEngine.from_snapshot(snapshot)
