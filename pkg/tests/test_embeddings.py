import numpy as np
import pytest

from namethat.embeddings import (
    EmbeddingRecord,
    EmbeddingSet,
    SyntheticSpec,
    generate,
    generate_with_geometry,
    load,
    save,
)
from namethat.errors import EmbeddingFormatError, GenerationError

from oracles import nearest_key_index


def small_set():
    rng = np.random.default_rng(0)
    records = [
        EmbeddingRecord("a", "cup", rng.standard_normal(6)),
        EmbeddingRecord("b", None, rng.standard_normal(6)),
        EmbeddingRecord("c/d.png", "bottle", rng.standard_normal(6)),
    ]
    return EmbeddingSet(6, records)


class TestFileFormat:
    def test_round_trip(self, tmp_path):
        original = small_set()
        path = tmp_path / "set.embset"
        save(original, path)
        loaded = load(path)
        assert loaded.dim == 6
        assert loaded.ids() == original.ids()
        for a, b in zip(loaded.records, original.records):
            assert a.label == b.label
            assert a.vector == pytest.approx(b.vector.tolist(), abs=1e-6)

    def test_empty_set_round_trips(self, tmp_path):
        path = tmp_path / "empty.embset"
        save(EmbeddingSet(4, []), path)
        loaded = load(path)
        assert loaded.dim == 4
        assert len(loaded) == 0

    def test_save_twice_is_identical(self, tmp_path):
        a, b = tmp_path / "a.embset", tmp_path / "b.embset"
        save(small_set(), a)
        save(small_set(), b)
        assert a.read_bytes() == b.read_bytes()

    def test_header_shape(self, tmp_path):
        path = tmp_path / "set.embset"
        save(small_set(), path)
        first = path.read_text().splitlines()[0]
        assert first == "EMBSET v1 dim=6 count=3 precision=f32"

    def test_malformed_header(self, tmp_path):
        path = tmp_path / "bad.embset"
        path.write_text("EMBSET v2 dim=6 count=0 precision=f32\n")
        with pytest.raises(EmbeddingFormatError, match="header"):
            load(path)

    def test_count_mismatch(self, tmp_path):
        path = tmp_path / "bad.embset"
        save(small_set(), path)
        text = path.read_text().replace("count=3", "count=5")
        path.write_text(text)
        with pytest.raises(EmbeddingFormatError, match="5 records"):
            load(path)

    def test_wrong_vector_length_names_record(self, tmp_path):
        path = tmp_path / "bad.embset"
        save(small_set(), path)
        lines = path.read_text().splitlines()
        record_id, label, payload = lines[2].split("\t")
        lines[2] = "\t".join((record_id, label, payload[: len(payload) // 2]))
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(EmbeddingFormatError, match="'b'"):
            load(path)

    def test_duplicate_id_names_record(self, tmp_path):
        path = tmp_path / "bad.embset"
        save(small_set(), path)
        lines = path.read_text().splitlines()
        lines[3] = lines[1]
        path.write_text("\n".join(lines).replace("count=3", "count=3") + "\n")
        with pytest.raises(EmbeddingFormatError, match="duplicate"):
            load(path)

    def test_bad_base64_names_record(self, tmp_path):
        path = tmp_path / "bad.embset"
        save(small_set(), path)
        lines = path.read_text().splitlines()
        record_id, label, _ = lines[1].split("\t")
        lines[1] = "\t".join((record_id, label, "!!!not-base64!!!"))
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(EmbeddingFormatError, match="'a'"):
            load(path)

    def test_tab_in_id_rejected_on_save(self, tmp_path):
        records = [EmbeddingRecord("a\tb", None, np.zeros(2))]
        with pytest.raises(ValueError, match="tab"):
            save(EmbeddingSet(2, records), tmp_path / "x.embset")

    def test_reserved_label_rejected_on_save(self, tmp_path):
        records = [EmbeddingRecord("a", "-", np.zeros(2))]
        with pytest.raises(ValueError, match="reserved"):
            save(EmbeddingSet(2, records), tmp_path / "x.embset")

    def test_vectors_widen_to_float64(self, tmp_path):
        path = tmp_path / "set.embset"
        save(small_set(), path)
        loaded = load(path)
        assert loaded.records[0].vector.dtype == np.float64

    def test_duplicate_id_rejected_in_memory(self):
        records = [
            EmbeddingRecord("a", None, np.zeros(2)),
            EmbeddingRecord("a", None, np.ones(2)),
        ]
        with pytest.raises(ValueError, match="duplicate"):
            EmbeddingSet(2, records)

    def test_dimension_mismatch_rejected_in_memory(self):
        records = [EmbeddingRecord("a", None, np.zeros(3))]
        with pytest.raises(ValueError, match="dimension"):
            EmbeddingSet(2, records)


class TestGenerate:
    SPEC = SyntheticSpec(classes=6, samples_per_class=5, dim=48,
                         center_max_cos=0.5, intra_min_cos=0.9,
                         nuisance_dim=4, seed=3)

    def test_deterministic_per_seed(self, tmp_path):
        a = generate(self.SPEC)
        b = generate(self.SPEC)
        for ra, rb in zip(a.records, b.records):
            assert ra.id == rb.id
            assert np.array_equal(ra.vector, rb.vector)
        pa, pb = tmp_path / "a.embset", tmp_path / "b.embset"
        save(a, pa)
        save(b, pb)
        assert pa.read_bytes() == pb.read_bytes()

    def test_emitted_geometry_holds(self):
        embeddings, geometry = generate_with_geometry(self.SPEC)
        assert len(embeddings) == 30
        for cos in geometry.center_cosines:
            assert cos <= 0.5 + 1e-12
        for record in embeddings.records:
            center = geometry.centers[int(record.label.removeprefix("class"))]
            assert float(record.vector @ center) >= 0.9 - 1e-12
            assert float(np.linalg.norm(record.vector)) == pytest.approx(1.0, abs=1e-9)

    def test_nuisance_component_lives_in_subspace(self):
        embeddings, geometry = generate_with_geometry(self.SPEC)
        basis = geometry.nuisance_basis
        for record in embeddings.records:
            inside = basis @ record.vector
            assert float(np.linalg.norm(inside)) == pytest.approx(
                geometry.sample_nuisance_mag[record.id], abs=1e-9
            )
            # Remove the in-subspace part; what is left must be orthogonal.
            remainder = record.vector - basis.T @ inside
            assert np.abs(basis @ remainder).max() < 1e-9

    def test_center_floor_respected(self):
        spec = SyntheticSpec(classes=8, samples_per_class=2, dim=96,
                             center_max_cos=0.6, center_min_cos=0.45,
                             intra_min_cos=0.8, seed=5)
        _, geometry = generate_with_geometry(spec)
        for cos in geometry.center_cosines:
            assert 0.45 - 1e-12 <= cos <= 0.6 + 1e-12

    def test_zero_noise_degenerate_spec(self):
        spec = SyntheticSpec(classes=1, samples_per_class=4, dim=16,
                             intra_min_cos=1.0, seed=0)
        embeddings, geometry = generate_with_geometry(spec)
        center = geometry.centers[0]
        for record in embeddings.records:
            assert np.array_equal(record.vector, center)

    def test_unsatisfiable_spec_errors(self):
        spec = SyntheticSpec(classes=40, samples_per_class=1, dim=41,
                             center_max_cos=-0.9, intra_min_cos=0.9, seed=0)
        with pytest.raises(GenerationError, match="unsatisfiable"):
            generate(spec)

    def test_labels_cover_all_classes(self):
        embeddings = generate(self.SPEC)
        assert embeddings.labels() == [f"class{i:02d}" for i in range(6)]

    def test_separation_implies_one_shot_solvability(self, certified_set):
        # With one exemplar taught per class, the nearest-key rule must get
        # every sample right on the cleanly separated set.
        embeddings, _ = certified_set
        by_label: dict[str, list] = {}
        for record in embeddings.records:
            by_label.setdefault(record.label, []).append(record)
        labels = sorted(by_label)
        for pick in (0, 7, 19):
            keys = [by_label[label][pick].vector for label in labels]
            for record in embeddings.records:
                chosen = labels[nearest_key_index(record.vector, keys)]
                assert chosen == record.label
