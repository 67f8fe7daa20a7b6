"""Writer for the EMBSET v1 interchange format.

Kept self-contained: the consuming system and this tool share only the file
contract, not code. Format: a header line

    EMBSET v1 dim=<n> count=<k> precision=f32

then one record per line: ``<id> TAB <label-or-minus> TAB <base64 of
little-endian 32-bit floats>``.
"""

from __future__ import annotations

import base64

import numpy as np


def write_embset(records: list[tuple[str, str | None, np.ndarray]],
                 dim: int, path) -> None:
    """Write (id, label, vector) triples; a label of None means unlabeled."""
    lines = [f"EMBSET v1 dim={dim} count={len(records)} precision=f32"]
    seen: set[str] = set()
    for record_id, label, vector in records:
        if not record_id or "\t" in record_id or "\n" in record_id:
            raise ValueError(f"bad record id {record_id!r}")
        if record_id in seen:
            raise ValueError(f"duplicate record id {record_id!r}")
        seen.add(record_id)
        if label is not None and ("\t" in label or "\n" in label or label == "-"):
            raise ValueError(f"bad label {label!r} for record {record_id!r}")
        vector = np.asarray(vector, dtype="<f4")
        if vector.shape != (dim,):
            raise ValueError(
                f"record {record_id!r} has shape {vector.shape}, expected ({dim},)"
            )
        payload = base64.b64encode(vector.tobytes()).decode("ascii")
        lines.append("\t".join((record_id, label if label is not None else "-",
                                payload)))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
