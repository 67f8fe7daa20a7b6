"""Walk an image folder, embed every decodable image, write an EMBSET file."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .backbone import (
    DEFAULT_MODEL,
    FEATURE_DIM,
    embed_batch,
    load_backbone,
    preprocess,
    preprocess_description,
)
from .embset import write_embset

IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg", ".bmp", ".webp", ".gif", ".tif",
                  ".tiff"}


@dataclass(frozen=True)
class ExportJob:
    input_dir: str
    output_path: str
    labels_from_dirs: bool = False
    model_id: str = DEFAULT_MODEL
    weights: str | None = None
    seed: int = 0
    batch_size: int = 8


@dataclass
class ExportSummary:
    count: int
    dim: int
    model: str
    failures: list[str] = field(default_factory=list)
    preprocess: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(
            {
                "count": self.count,
                "dim": self.dim,
                "model": self.model,
                "failures": self.failures,
                "preprocess": self.preprocess,
            },
            indent=2,
        )


def find_images(root: Path) -> list[Path]:
    return sorted(
        p for p in root.rglob("*")
        if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES
    )


def export(job: ExportJob) -> ExportSummary:
    root = Path(job.input_dir)
    if not root.is_dir():
        raise NotADirectoryError(f"input folder not found: {job.input_dir}")
    model = load_backbone(job.model_id, weights=job.weights, seed=job.seed)

    paths = find_images(root)
    prepared: list[tuple[str, str | None, np.ndarray]] = []
    failures: list[str] = []
    for path in paths:
        rel = path.relative_to(root).as_posix()
        try:
            with Image.open(path) as image:
                pixels = preprocess(image)
        except (UnidentifiedImageError, OSError) as exc:
            failures.append(f"{rel}: {exc}")
            continue
        label = path.parent.name if (
            job.labels_from_dirs and path.parent != root
        ) else None
        prepared.append((rel, label, pixels))

    records: list[tuple[str, str | None, np.ndarray]] = []
    for start in range(0, len(prepared), job.batch_size):
        chunk = prepared[start:start + job.batch_size]
        batch = np.stack([pixels for _, _, pixels in chunk])
        vectors = embed_batch(model, batch)
        for (rel, label, _), vector in zip(chunk, vectors):
            records.append((rel, label, vector))

    write_embset(records, FEATURE_DIM, job.output_path)
    return ExportSummary(
        count=len(records),
        dim=FEATURE_DIM,
        model=job.model_id,
        failures=failures,
        preprocess=preprocess_description(),
    )
