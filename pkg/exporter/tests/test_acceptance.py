"""Exporter conformance: the emitted file is consumed through the naming
system's public loader, exactly as a user would wire the two tools together.
"""

import numpy as np
import pytest

from embexport.export import ExportJob, export

namethat_embeddings = pytest.importorskip(
    "namethat.embeddings",
    reason="the consuming system must be installed for the conformance check",
)


def test_exporter_conformance(image_folder, tmp_path):
    first = tmp_path / "first.embset"
    second = tmp_path / "second.embset"
    for out in (first, second):
        summary = export(
            ExportJob(
                input_dir=str(image_folder),
                output_path=str(out),
                labels_from_dirs=True,
                model_id="untrained-vits16",
            )
        )
        assert summary.count == 10
        assert summary.dim == 384

    loaded = namethat_embeddings.load(first)
    assert loaded.dim == 384
    assert len(loaded) == 10
    assert set(loaded.labels()) == {"mugs", "pens"}

    again = namethat_embeddings.load(second)
    for a, b in zip(loaded.records, again.records):
        assert a.id == b.id and a.label == b.label
        assert np.max(np.abs(a.vector - b.vector)) <= 1e-5

    print("\nACCEPTANCE PASS: exporter files validate under the primary loader")
