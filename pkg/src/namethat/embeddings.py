"""Embedding-set files and synthetic sets with controlled geometry.

File format (``EMBSET v1``): a single header line

    EMBSET v1 dim=<n> count=<k> precision=f32

followed by one record per line, tab-separated:

    <id> <TAB> <label-or-minus> <TAB> <base64 of little-endian 32-bit floats>

Vectors are stored as 32-bit floats on disk and widened to 64-bit in memory.
A label of ``-`` means the record is unlabeled.
"""

from __future__ import annotations

import base64
import math
import re
from dataclasses import dataclass, field

import numpy as np

from .errors import EmbeddingFormatError, GenerationError

_HEADER_RE = re.compile(r"^EMBSET v1 dim=(\d+) count=(\d+) precision=f32$")


@dataclass(frozen=True)
class EmbeddingRecord:
    id: str
    label: str | None
    vector: np.ndarray


class EmbeddingSet:
    """Immutable collection of embedding records with a uniform dimension."""

    def __init__(self, dim: int, records, provenance: str | None = None) -> None:
        if dim < 1:
            raise ValueError(f"dimension must be positive, got {dim}")
        self.dim = int(dim)
        self.provenance = provenance
        clean: list[EmbeddingRecord] = []
        seen: set[str] = set()
        for record in records:
            if not record.id:
                raise ValueError("record id is empty")
            if record.id in seen:
                raise ValueError(f"duplicate record id {record.id!r}")
            seen.add(record.id)
            vector = np.asarray(record.vector, dtype=np.float64)
            if vector.shape != (self.dim,):
                raise ValueError(
                    f"record {record.id!r} has dimension {vector.shape}, "
                    f"expected ({self.dim},)"
                )
            if not np.all(np.isfinite(vector)):
                raise ValueError(f"record {record.id!r} has non-finite entries")
            vector = vector.copy()
            vector.setflags(write=False)
            clean.append(EmbeddingRecord(record.id, record.label, vector))
        self.records: tuple[EmbeddingRecord, ...] = tuple(clean)
        self._by_id = {record.id: record for record in self.records}

    def __len__(self) -> int:
        return len(self.records)

    def __contains__(self, record_id: str) -> bool:
        return record_id in self._by_id

    def get(self, record_id: str) -> EmbeddingRecord:
        try:
            return self._by_id[record_id]
        except KeyError:
            raise KeyError(f"no record with id {record_id!r}") from None

    def ids(self) -> list[str]:
        return [record.id for record in self.records]

    def labels(self) -> list[str]:
        """Distinct labels in first-appearance order (unlabeled records skipped)."""
        seen: list[str] = []
        for record in self.records:
            if record.label is not None and record.label not in seen:
                seen.append(record.label)
        return seen

    def require_labels(self) -> None:
        for record in self.records:
            if record.label is None:
                raise ValueError(f"record {record.id!r} has no label")


def save(embedding_set: EmbeddingSet, path) -> None:
    lines = [
        f"EMBSET v1 dim={embedding_set.dim} count={len(embedding_set)} precision=f32"
    ]
    for record in embedding_set.records:
        for piece, what in ((record.id, "id"), (record.label or "", "label")):
            if "\t" in piece or "\n" in piece:
                raise ValueError(
                    f"record {record.id!r}: {what} may not contain tabs or newlines"
                )
        if record.label == "-":
            raise ValueError(
                f"record {record.id!r}: label '-' is reserved for 'no label'"
            )
        packed = record.vector.astype("<f4").tobytes()
        lines.append(
            "\t".join(
                (
                    record.id,
                    record.label if record.label is not None else "-",
                    base64.b64encode(packed).decode("ascii"),
                )
            )
        )
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def load(path) -> EmbeddingSet:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    lines = text.splitlines()
    if not lines:
        raise EmbeddingFormatError(f"{path}: file is empty")
    header = _HEADER_RE.match(lines[0])
    if header is None:
        raise EmbeddingFormatError(f"{path}: malformed header {lines[0]!r}")
    dim = int(header.group(1))
    count = int(header.group(2))
    body = [line for line in lines[1:] if line]
    if len(body) != count:
        raise EmbeddingFormatError(
            f"{path}: header promises {count} records, found {len(body)}"
        )
    records: list[EmbeddingRecord] = []
    seen: set[str] = set()
    for lineno, line in enumerate(body, start=2):
        parts = line.split("\t")
        if len(parts) != 3:
            raise EmbeddingFormatError(
                f"{path}:{lineno}: expected 3 tab-separated fields, got {len(parts)}"
            )
        record_id, label, payload = parts
        if not record_id:
            raise EmbeddingFormatError(f"{path}:{lineno}: empty record id")
        if record_id in seen:
            raise EmbeddingFormatError(
                f"{path}:{lineno}: duplicate record id {record_id!r}"
            )
        seen.add(record_id)
        try:
            raw = base64.b64decode(payload, validate=True)
        except Exception as exc:
            raise EmbeddingFormatError(
                f"{path}:{lineno}: record {record_id!r} has undecodable vector data"
            ) from exc
        vector = np.frombuffer(raw, dtype="<f4")
        if vector.shape != (dim,):
            raise EmbeddingFormatError(
                f"{path}:{lineno}: record {record_id!r} has {vector.shape[0]} "
                f"components, expected {dim}"
            )
        if not np.all(np.isfinite(vector)):
            raise EmbeddingFormatError(
                f"{path}:{lineno}: record {record_id!r} has non-finite entries"
            )
        records.append(
            EmbeddingRecord(
                record_id, None if label == "-" else label, vector.astype(np.float64)
            )
        )
    return EmbeddingSet(dim, records, provenance=f"loaded from {path}")


# -- synthetic generation ---------------------------------------------------------


@dataclass(frozen=True)
class SyntheticSpec:
    """Geometry of a generated set.

    Class centers are unit vectors whose pairwise cosines stay within
    ``[center_min_cos, center_max_cos]``; each sample is a unit vector whose
    cosine to its own center is at least ``intra_min_cos``. A fixed
    ``nuisance_dim``-dimensional subspace, orthogonal to every center, is
    blended into each sample with a random magnitude — the stand-in for
    varying backgrounds.

    ``intra_min_cos = 1.0`` means zero noise: every sample equals its center.
    """

    classes: int
    samples_per_class: int
    dim: int = 384
    center_max_cos: float = 0.5
    center_min_cos: float = -1.0
    intra_min_cos: float = 0.9
    nuisance_dim: int = 0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.classes < 1:
            raise ValueError("need at least one class")
        if self.samples_per_class < 1:
            raise ValueError("need at least one sample per class")
        if self.dim < 2:
            raise ValueError("dimension must be at least 2")
        if not -1.0 < self.center_max_cos < 1.0:
            raise ValueError("center_max_cos must lie in (-1, 1)")
        if not -1.0 <= self.center_min_cos <= self.center_max_cos:
            raise ValueError("center_min_cos must lie in [-1, center_max_cos]")
        if not -1.0 < self.intra_min_cos <= 1.0:
            raise ValueError("intra_min_cos must lie in (-1, 1]")
        if self.nuisance_dim < 0:
            raise ValueError("nuisance_dim must be non-negative")
        if self.dim < self.classes + self.nuisance_dim + 1 and self.classes > 1:
            raise ValueError(
                "dimension too small for the requested classes plus nuisance subspace"
            )

    def label_of(self, class_index: int) -> str:
        return f"class{class_index:02d}"


@dataclass
class GeometryInfo:
    """The generator's internal geometry, exposed so checks can be re-run
    independently of the generator."""

    centers: np.ndarray  # (classes, dim)
    nuisance_basis: np.ndarray  # (nuisance_dim, dim)
    center_cosines: list[float] = field(default_factory=list)
    sample_center_cos: dict[str, float] = field(default_factory=dict)
    sample_nuisance_mag: dict[str, float] = field(default_factory=dict)


_CENTER_ATTEMPTS_PER_CLASS = 400


def _unit(v: np.ndarray) -> np.ndarray:
    n = np.linalg.norm(v)
    if n == 0:
        raise GenerationError("degenerate zero vector while sampling")
    return v / n


def _orthogonal_unit(rng, dim: int, against: np.ndarray) -> np.ndarray:
    """Random unit vector orthogonal to the rows of ``against``.

    The rows must be orthonormal; projection removal is then exact.
    """
    for _ in range(100):
        g = rng.standard_normal(dim)
        g -= against.T @ (against @ g)
        n = np.linalg.norm(g)
        if n > 1e-8:
            return g / n
    raise GenerationError("could not sample an orthogonal direction")


def _sample_centers(rng, spec: SyntheticSpec) -> np.ndarray:
    centers: list[np.ndarray] = []
    budget = _CENTER_ATTEMPTS_PER_CLASS * spec.classes
    use_floor = spec.center_min_cos > -1.0 and spec.classes > 1
    shared = None
    shared_weight = 0.0
    if use_floor:
        # Give every center a common component so pairwise cosines sit near
        # the middle of the requested band instead of near zero.
        shared = _unit(rng.standard_normal(spec.dim))
        shared_weight = math.sqrt(
            max(0.0, (spec.center_min_cos + spec.center_max_cos) / 2.0)
        )
    while len(centers) < spec.classes:
        if budget <= 0:
            raise GenerationError(
                f"could not place {spec.classes} centers with pairwise cosine in "
                f"[{spec.center_min_cos}, {spec.center_max_cos}] after the retry "
                f"budget; the spec looks unsatisfiable"
            )
        budget -= 1
        if shared is not None:
            g = rng.standard_normal(spec.dim)
            residual = _unit(g - shared * float(shared @ g))
            candidate = shared_weight * shared + math.sqrt(
                1.0 - shared_weight**2
            ) * residual
        else:
            candidate = _unit(rng.standard_normal(spec.dim))
        ok = True
        for center in centers:
            cos = float(center @ candidate)
            if cos > spec.center_max_cos or (use_floor and cos < spec.center_min_cos):
                ok = False
                break
        if ok:
            centers.append(candidate)
    return np.stack(centers)


def generate_with_geometry(spec: SyntheticSpec) -> tuple[EmbeddingSet, GeometryInfo]:
    """Generate a set and return the geometry used to build it.

    Deterministic for a fixed spec (the seed drives everything). The emitted
    geometry is certified before returning: sample-to-center cosines, center
    separations, unit norms, and the nuisance decomposition are all
    re-checked, and a failure raises :class:`GenerationError`.
    """
    rng = np.random.default_rng(spec.seed)
    centers = _sample_centers(rng, spec)

    if spec.nuisance_dim > 0:
        # Orthonormal basis of a subspace orthogonal to every center, so a
        # sample's nuisance component never moves it toward another class.
        center_basis, _ = np.linalg.qr(centers.T, mode="reduced")
        candidates = rng.standard_normal((spec.dim, spec.nuisance_dim))
        candidates -= center_basis @ (center_basis.T @ candidates)
        nuisance_basis, diag = np.linalg.qr(candidates, mode="reduced")
        if np.min(np.abs(np.diag(diag))) < 1e-8:
            raise GenerationError("nuisance subspace sampling degenerated")
        nuisance = nuisance_basis.T
    else:
        nuisance = np.zeros((0, spec.dim))

    geometry = GeometryInfo(centers=centers, nuisance_basis=nuisance)
    for i in range(spec.classes):
        for j in range(i + 1, spec.classes):
            geometry.center_cosines.append(float(centers[i] @ centers[j]))

    records: list[EmbeddingRecord] = []
    for class_index in range(spec.classes):
        center = centers[class_index]
        label = spec.label_of(class_index)
        for sample_index in range(spec.samples_per_class):
            record_id = f"{label}-{sample_index:03d}"
            if spec.intra_min_cos >= 1.0:
                vector = center.copy()
                t = 1.0
                gamma = 0.0
            else:
                # Sample slightly inside the bound so float rounding cannot
                # push the certified cosine below it.
                t = rng.uniform(min(spec.intra_min_cos + 1e-6, 1.0), 1.0)
                remaining = max(0.0, 1.0 - t * t)
                if spec.nuisance_dim > 0:
                    share = rng.uniform(0.0, 1.0)
                    gamma = math.sqrt(remaining * share)
                    z = _unit(nuisance.T @ rng.standard_normal(spec.nuisance_dim))
                else:
                    gamma = 0.0
                    z = np.zeros(spec.dim)
                beta = math.sqrt(max(0.0, remaining - gamma * gamma))
                against = np.vstack([center[None, :], nuisance]) if spec.nuisance_dim else center[None, :]
                w = _orthogonal_unit(rng, spec.dim, against)
                vector = t * center + beta * w + gamma * z
                vector = _unit(vector)
            geometry.sample_center_cos[record_id] = float(vector @ center)
            geometry.sample_nuisance_mag[record_id] = gamma
            records.append(EmbeddingRecord(record_id, label, vector))

    provenance = (
        f"synthetic classes={spec.classes} samples={spec.samples_per_class} "
        f"dim={spec.dim} center_cos=[{spec.center_min_cos},{spec.center_max_cos}] "
        f"intra_min_cos={spec.intra_min_cos} nuisance_dim={spec.nuisance_dim} "
        f"seed={spec.seed}"
    )
    embedding_set = EmbeddingSet(spec.dim, records, provenance=provenance)
    certify(embedding_set, spec, geometry)
    return embedding_set, geometry


def generate(spec: SyntheticSpec) -> EmbeddingSet:
    """Generate a certified synthetic set (see :func:`generate_with_geometry`)."""
    embedding_set, _ = generate_with_geometry(spec)
    return embedding_set


def certify(embedding_set: EmbeddingSet, spec: SyntheticSpec,
            geometry: GeometryInfo) -> None:
    """Re-check the promised geometry of an emitted set; raise on violation."""
    for i, cos in enumerate(geometry.center_cosines):
        if cos > spec.center_max_cos + 1e-9:
            raise GenerationError(
                f"center pair cosine {cos:.6f} exceeds bound {spec.center_max_cos}"
            )
        if spec.center_min_cos > -1.0 and spec.classes > 1 and cos < spec.center_min_cos - 1e-9:
            raise GenerationError(
                f"center pair cosine {cos:.6f} below floor {spec.center_min_cos}"
            )
    by_label: dict[str, int] = {
        spec.label_of(i): i for i in range(spec.classes)
    }
    for record in embedding_set.records:
        norm = float(np.linalg.norm(record.vector))
        if abs(norm - 1.0) > 1e-9:
            raise GenerationError(f"record {record.id!r} is not unit-normalized")
        center = geometry.centers[by_label[record.label]]
        cos = float(record.vector @ center)
        if cos < spec.intra_min_cos - 1e-9:
            raise GenerationError(
                f"record {record.id!r} cosine to its center is {cos:.6f}, below "
                f"bound {spec.intra_min_cos}"
            )
        if geometry.nuisance_basis.shape[0]:
            component = geometry.nuisance_basis @ record.vector
            magnitude = float(np.linalg.norm(component))
            expected = geometry.sample_nuisance_mag[record.id]
            if abs(magnitude - expected) > 1e-9:
                raise GenerationError(
                    f"record {record.id!r} nuisance magnitude {magnitude:.9f} "
                    f"does not match the recorded {expected:.9f}"
                )
