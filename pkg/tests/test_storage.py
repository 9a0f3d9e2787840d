# tests/test_storage.py
import json

import numpy as np
import pytest

from src.errors import ModelFormatError
from src.estimation.vinefit import FitOptions, eval_vine_density, fit_vine
from src.evaluation.benchmark import run_scenario
from src.simulation.targets import ScenarioSpec
from src.storage.model_store import (
    deserialize_model,
    load_model,
    model_to_document,
    parse_json_bytes,
    save_model,
    serialize_model,
)
from src.storage.report_store import load_report, report_to_document, save_report


def _document_bytes(document):
    return json.dumps(document).encode("utf-8")


class TestModelStore:
    def test_round_trip_is_bit_exact(self, fitted_model3, gauss3_sample, tmp_path):
        path = tmp_path / "model.json"
        save_model(fitted_model3, path)
        restored = load_model(path)
        assert restored.structure == fitted_model3.structure
        assert restored.meta == fitted_model3.meta
        assert np.array_equal(
            eval_vine_density(restored, gauss3_sample[:50]),
            eval_vine_density(fitted_model3, gauss3_sample[:50]),
        )
        assert serialize_model(restored) == path.read_bytes()

    def test_independence_copulas_survive_round_trip(self):
        data = np.random.default_rng(8).uniform(size=(500, 3))
        model = fit_vine(data, FitOptions(independence_test=True))
        restored = deserialize_model(serialize_model(model))
        assert [p.is_independence for p in restored.pair_copulas] == [p.is_independence for p in model.pair_copulas]
        assert np.array_equal(eval_vine_density(restored, data[:10]), eval_vine_density(model, data[:10]))

    def test_truncated_file(self, fitted_model3):
        data = serialize_model(fitted_model3)
        with pytest.raises(ModelFormatError):
            deserialize_model(data[: len(data) // 2])

    def test_non_positive_margin_bandwidth(self, fitted_model3):
        document = model_to_document(fitted_model3)
        document["margins"][1]["bandwidth"] = 0.0
        with pytest.raises(ModelFormatError) as excinfo:
            deserialize_model(_document_bytes(document))
        assert excinfo.value.location == "$.margins[1].bandwidth"

    def test_unsupported_version(self, fitted_model3):
        document = model_to_document(fitted_model3)
        document["version"] = 2
        with pytest.raises(ModelFormatError) as excinfo:
            deserialize_model(_document_bytes(document))
        assert excinfo.value.location == "$.version"

    def test_nan_is_rejected(self):
        with pytest.raises(ModelFormatError):
            parse_json_bytes(b'{"version": 1, "d": NaN}')

    def test_invalid_structure(self, fitted_model3):
        document = model_to_document(fitted_model3)
        document["structure"][2]["conditioning"] = [document["structure"][2]["conditioned"][0]]
        with pytest.raises(ModelFormatError):
            deserialize_model(_document_bytes(document))

    def test_sample_size_mismatch(self, fitted_model3):
        document = model_to_document(fitted_model3)
        document["margins"][0]["sample"] = document["margins"][0]["sample"][:-1]
        with pytest.raises(ModelFormatError) as excinfo:
            deserialize_model(_document_bytes(document))
        assert excinfo.value.location == "$.margins[0].sample"

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_model(tmp_path / "absent.json")


class TestReportStore:
    @pytest.fixture(scope="class")
    def report(self):
        return run_scenario(ScenarioSpec(kind="gauss", d=2), n=60, replicates=2, mc_samples=100, seed=3)

    def test_timing_only_on_request(self, report):
        assert "wall_clock_seconds" not in report_to_document(report)
        assert report_to_document(report, record_timing=True)["wall_clock_seconds"] >= 0

    def test_round_trip(self, report, tmp_path):
        path = tmp_path / "report.json"
        save_report(report, path)
        restored = load_report(path)
        assert restored.iae_vine == report.iae_vine
        assert restored.seeds == report.seeds
        assert restored.wall_clock_seconds is None

    def test_reports_without_timing_are_reproducible(self, report, tmp_path):
        again = run_scenario(ScenarioSpec(kind="gauss", d=2), n=60, replicates=2, mc_samples=100, seed=3)
        first, second = tmp_path / "a.json", tmp_path / "b.json"
        save_report(report, first)
        save_report(again, second)
        assert first.read_bytes() == second.read_bytes()

    def test_schema_violation(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"scenario": "gauss"}')
        with pytest.raises(ModelFormatError):
            load_report(path)
