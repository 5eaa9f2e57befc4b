"""Container format, labels/predictions parsing, pooling, and splitting."""

import numpy as np
import pytest

from probegrid import ingest
from probegrid.errors import ValidationError
from probegrid.stablehash import fmix64, fnv1a_64, unit_interval
from probegrid.types import LabelTable, TaskVariable, VariableKind

from _oracles import pool_mean_triple_loop

META = {"age": VariableKind.CONTINUOUS, "smoker": VariableKind.BINARY}


def _table(n=6, patients=None):
    rng = np.random.default_rng(0)
    image_ids = tuple(f"img{i}" for i in range(n))
    patient_ids = tuple(patients or (f"p{i // 2}" for i in range(n)))
    values = np.column_stack([rng.normal(size=n), rng.integers(0, 2, size=n).astype(float)])
    present = np.ones((n, 2), dtype=bool)
    variables = (TaskVariable("age", VariableKind.CONTINUOUS), TaskVariable("smoker", VariableKind.BINARY))
    return LabelTable(image_ids, tuple(patient_ids), variables, values, present)


class TestLoadLabels:
    def test_missing_cell_sets_mask(self):
        csv = b"image_id,patient_id,age,smoker\na,p1,,1\nb,p1,44,0\nc,p2,51,1\n"
        table = ingest.load_labels(csv, META)
        assert table.present[:, 0].tolist() == [False, True, True]
        assert np.isnan(table.values[0, 0])
        assert table.values[1, 0] == 44.0

    def test_binary_with_other_value_rejected(self):
        csv = b"image_id,patient_id,age,smoker\na,p1,40,0.5\nb,p1,44,0\nc,p2,51,1\n"
        with pytest.raises(ValidationError, match="smoker.*0.5|0.5.*smoker"):
            ingest.load_labels(csv, META)

    def test_duplicate_image_id_rejected(self):
        csv = b"image_id,patient_id,age,smoker\na,p1,40,0\na,p1,44,1\n"
        with pytest.raises(ValidationError, match="duplicate"):
            ingest.load_labels(csv, META)

    def test_undeclared_variable_rejected(self):
        csv = b"image_id,patient_id,age,height\na,p1,40,170\nb,p2,50,180\n"
        with pytest.raises(ValidationError, match="height"):
            ingest.load_labels(csv, META)

    def test_fewer_than_two_present_values_rejected(self):
        csv = b"image_id,patient_id,age,smoker\na,p1,40,\nb,p1,44,\nc,p2,51,1\n"
        with pytest.raises(ValidationError, match="smoker"):
            ingest.load_labels(csv, META)

    def test_nan_literal_rejected(self):
        csv = b"image_id,patient_id,age,smoker\na,p1,nan,0\nb,p1,44,1\n"
        with pytest.raises(ValidationError, match="non-finite"):
            ingest.load_labels(csv, META)

    def test_round_trip_contents(self):
        csv = b"image_id,patient_id,age,smoker\na,p1,40.5,1\nb,p1,,0\nc,p2,51.25,1\n"
        table = ingest.load_labels(csv, META)
        again = ingest.load_labels(ingest.serialize_labels(table), META)
        assert again.image_ids == table.image_ids
        assert again.patient_ids == table.patient_ids
        np.testing.assert_array_equal(again.present, table.present)
        np.testing.assert_allclose(
            again.values[again.present], table.values[table.present], rtol=0
        )


class TestPoolSpatial:
    def test_unit_spatial_is_identity(self):
        tensor = np.arange(24, dtype=np.float64).reshape(4, 1, 1, 6)
        np.testing.assert_array_equal(ingest.pool_spatial(tensor), tensor[:, 0, 0, :])

    def test_known_mean(self):
        tensor = np.array([1.0, 2.0, 3.0, 4.0]).reshape(1, 2, 2, 1)
        assert ingest.pool_spatial(tensor)[0, 0] == 2.5

    def test_matches_triple_loop_oracle(self):
        rng = np.random.default_rng(8)
        tensor = rng.normal(size=(3, 4, 5, 6)) * 11.0
        expected = pool_mean_triple_loop(tensor)
        np.testing.assert_allclose(ingest.pool_spatial(tensor), expected, rtol=1e-12)

    def test_mean_preserving_per_channel(self):
        rng = np.random.default_rng(9)
        tensor = rng.normal(size=(20, 3, 2, 5))
        pooled = ingest.pool_spatial(tensor)
        np.testing.assert_allclose(
            pooled.mean(axis=0), tensor.mean(axis=(0, 1, 2)), rtol=1e-12
        )


class TestContainer:
    def test_round_trip_exact_after_promotion(self, tmp_path):
        rng = np.random.default_rng(10)
        table = _table()
        arrays = {
            "age": [(0, "early", rng.normal(size=(6, 3)).astype(np.float32).astype(np.float64)),
                    (2, "late", rng.normal(size=(6, 2, 2, 4)).astype(np.float32).astype(np.float64))],
        }
        manifest_path = ingest.write_container(tmp_path, "unit", list(table.image_ids), arrays)
        manifest = ingest.load_manifest(manifest_path)
        embeddings = ingest.load_embeddings(manifest, table)
        assert [(e.layer_id, e.channels) for e in embeddings] == [(0, 3), (2, 4)]
        np.testing.assert_array_equal(embeddings[0].matrix, arrays["age"][0][2])
        np.testing.assert_allclose(
            embeddings[1].matrix, ingest.pool_spatial(arrays["age"][1][2]), rtol=1e-6
        )

    def test_declared_size_example(self, tmp_path):
        table = _table(n=4, patients=[f"q{i}" for i in range(4)])
        arrays = {"age": [(0, "l", np.zeros((4, 3)))]}
        manifest_path = ingest.write_container(tmp_path, "unit", list(table.image_ids), arrays)
        assert (tmp_path / "age_layer00.f32").stat().st_size == 48
        embeddings = ingest.load_embeddings(ingest.load_manifest(manifest_path), table)
        assert embeddings[0].matrix.shape == (4, 3)

    def test_truncated_file_reports_byte_counts(self, tmp_path):
        table = _table(n=4, patients=[f"q{i}" for i in range(4)])
        arrays = {"age": [(0, "l", np.zeros((4, 3)))]}
        manifest_path = ingest.write_container(tmp_path, "unit", list(table.image_ids), arrays)
        payload = (tmp_path / "age_layer00.f32").read_bytes()
        (tmp_path / "age_layer00.f32").write_bytes(payload[:-4])
        with pytest.raises(ValidationError, match="expected 48 bytes, found 44"):
            ingest.load_embeddings(ingest.load_manifest(manifest_path), table)

    def test_non_finite_value_located(self, tmp_path):
        table = _table(n=4, patients=[f"q{i}" for i in range(4)])
        matrix = np.zeros((4, 3))
        matrix[2, 1] = np.inf
        manifest_path = ingest.write_container(tmp_path, "unit", list(table.image_ids),
                                               {"age": [(0, "l", matrix)]})
        with pytest.raises(ValidationError, match=r"row 2, col 1"):
            ingest.load_embeddings(ingest.load_manifest(manifest_path), table)

    def test_spatial_pooling_from_manifest(self, tmp_path):
        table = _table(n=10, patients=[f"q{i}" for i in range(10)])
        tensor = np.random.default_rng(3).normal(size=(10, 2, 2, 5))
        manifest_path = ingest.write_container(tmp_path, "unit", list(table.image_ids),
                                               {"age": [(1, "mid", tensor)]})
        embeddings = ingest.load_embeddings(ingest.load_manifest(manifest_path), table)
        assert embeddings[0].matrix.shape == (10, 5)

    def test_wrong_dtype_rejected(self, tmp_path):
        table = _table()
        manifest_path = ingest.write_container(tmp_path, "unit", list(table.image_ids),
                                               {"age": [(0, "l", np.zeros((6, 2)))]})
        text = manifest_path.read_text().replace("f32le", "f64le")
        manifest_path.write_text(text)
        with pytest.raises(ValidationError, match="f32le"):
            ingest.load_manifest(manifest_path)

    def test_non_increasing_layer_ids_rejected(self, tmp_path):
        data = {
            "format_version": 1,
            "dataset_name": "x",
            "image_ids_file": "ids.txt",
            "sources": [{
                "source_task": "age",
                "layers": [
                    {"layer_id": 2, "layer_name": "a", "file": "f0", "rows": 1, "channels": 1, "dtype": "f32le"},
                    {"layer_id": 1, "layer_name": "b", "file": "f1", "rows": 1, "channels": 1, "dtype": "f32le"},
                ],
            }],
        }
        with pytest.raises(ValidationError, match="strictly increasing"):
            ingest.parse_manifest(data)

    def test_id_order_mismatch_rejected(self, tmp_path):
        table = _table()
        manifest_path = ingest.write_container(tmp_path, "unit", list(reversed(table.image_ids)),
                                               {"age": [(0, "l", np.zeros((6, 2)))]})
        with pytest.raises(ValidationError, match="do not match"):
            ingest.load_embeddings(ingest.load_manifest(manifest_path), table)


class TestAssignSplit:
    def test_patient_grouping(self):
        table = _table(n=6)  # pairs of images share a patient
        split = ingest.assign_split(table, 0.5, seed=3)
        flags = split.test_mask
        for i in range(0, 6, 2):
            assert flags[i] == flags[i + 1]

    def test_pinned_hash_function(self):
        # The split must follow the published rule exactly:
        # fmix64(fnv1a_64(decimal seed, NUL, patient id)) / 2^64 < fraction.
        assert fnv1a_64(b"") == 0xCBF29CE484222325
        assert fnv1a_64(b"a") == 0xAF63DC4C8601EC8C  # standard FNV test vector
        table = _table(n=4, patients=["pa", "pa", "pb", "pb"])
        split = ingest.assign_split(table, 0.3, seed=9)
        for i, patient in enumerate(table.patient_ids):
            expected = fmix64(fnv1a_64(b"9\x00" + patient.encode())) / 2.0**64 < 0.3
            assert split.test_mask[i] == expected

    def test_deterministic_across_runs(self):
        table = _table(n=6)
        a = ingest.assign_split(table, 0.125, seed=5)
        b = ingest.assign_split(table, 0.125, seed=5)
        np.testing.assert_array_equal(a.test_mask, b.test_mask)

    def test_invariant_to_other_patients_and_order(self):
        base = _table(n=4, patients=["pa", "pa", "pb", "pb"])
        extended = _table(n=6, patients=["pz", "pa", "pa", "pq", "pb", "pb"])
        split_base = ingest.assign_split(base, 0.4, seed=2)
        split_ext = ingest.assign_split(extended, 0.4, seed=2)
        assert split_base.test_mask[0] == split_ext.test_mask[1]
        assert split_base.test_mask[2] == split_ext.test_mask[4]

    def test_fraction_concentrates(self):
        n = 10000
        table = _table(n=n, patients=[f"solo{i}" for i in range(n)])
        split = ingest.assign_split(table, 0.125, seed=1)
        share = split.test_mask.mean()
        assert abs(share - 0.125) < 0.01


class TestPredictions:
    def test_subset_of_sources(self):
        table = _table(n=3, patients=["q0", "q1", "q2"])
        csv = b"image_id,age\nimg0,0.5\nimg1,\nimg2,0.25\n"
        preds = ingest.load_predictions(csv, table)
        assert list(preds) == ["age"]
        values, present = preds["age"]
        assert present.tolist() == [True, False, True]

    def test_permuted_rows_realigned(self):
        table = _table(n=3, patients=["q0", "q1", "q2"])
        csv = b"image_id,age\nimg2,3.0\nimg0,1.0\nimg1,2.0\n"
        values, present = ingest.load_predictions(csv, table)["age"]
        assert values.tolist() == [1.0, 2.0, 3.0]
        assert present.all()

    def test_unknown_image_rejected(self):
        table = _table(n=2, patients=["q0", "q1"])
        csv = b"image_id,age\nimgX,1.0\n"
        with pytest.raises(ValidationError, match="imgX"):
            ingest.load_predictions(csv, table)

    def test_round_trip(self):
        table = _table(n=3, patients=["q0", "q1", "q2"])
        csv = b"image_id,age,smoker\nimg0,0.5,0.125\nimg1,,1.5\nimg2,0.25,\n"
        preds = ingest.load_predictions(csv, table)
        assert ingest.serialize_predictions(list(table.image_ids), preds) == csv


class TestStableHash:
    def test_unit_interval_range_and_determinism(self):
        values = [unit_interval(1, f"p{i}") for i in range(500)]
        assert all(0.0 <= v < 1.0 for v in values)
        assert values == [unit_interval(1, f"p{i}") for i in range(500)]
        assert abs(np.mean(values) - 0.5) < 0.05
