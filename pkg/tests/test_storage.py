import json

import numpy as np
import pandas as pd
import pytest

from src.exceptions import DimensionMismatch, InputNotFound, NonFinite
from src.storage.cache_client import CacheClient, array_key
from src.storage.dataset_io import cache_dataset, load_cached_dataset, load_dataset, read_matrix_csv, \
    write_matrix_csv
from src.storage.result_writer import ResultWriter, read_json_artifact


# Cache client

def test_cache_upload_download(cache):
    theta = np.arange(6.0).reshape(2, 3)
    cache.upload_arrays("precision/abc", theta=theta, tau_sq=np.ones(2))
    assert cache.exists("precision/abc")
    arrays = cache.download_arrays("precision/abc")
    np.testing.assert_array_equal(arrays["theta"], theta)
    assert cache.list_entries("precision") == ["precision/abc"]
    assert cache.list_entries("datasets") == []


def test_cache_miss_and_delete(cache):
    assert cache.download_arrays("precision/missing") is None
    cache.upload_arrays("x", a=np.zeros(1))
    cache.delete_entry("x")
    assert not cache.exists("x")


def test_cache_ignores_corrupt_entry(cache):
    path = cache.cache_dir / "broken.npz"
    path.write_bytes(b"not an archive")
    assert cache.download_arrays("broken") is None


def test_cache_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("HDINFER_CACHE_DIR", str(tmp_path / "env_cache"))
    assert CacheClient().cache_dir == tmp_path / "env_cache"


def test_array_key_depends_on_shape_and_values():
    assert array_key(np.zeros(4)) == array_key(np.zeros(4))
    assert array_key(np.zeros(4)) != array_key(np.zeros((2, 2)))
    assert array_key(np.zeros(4)) != array_key(np.ones(4))


# Dataset files

def test_load_dataset(csv_data):
    data = load_dataset(*csv_data)
    assert (data.n, data.p) == (50, 12)


def test_written_matrix_reads_back_exactly(tmp_path):
    values = np.random.default_rng(0).standard_normal((4, 3)) * 1e-7
    path = tmp_path / "m.csv"
    write_matrix_csv(path, values)
    np.testing.assert_array_equal(read_matrix_csv(path), values)
    assert b"\r\n" not in path.read_bytes()


def test_missing_file(tmp_path):
    with pytest.raises(InputNotFound):
        read_matrix_csv(tmp_path / "absent.csv")


def test_non_numeric_and_missing_entries(tmp_path):
    text = tmp_path / "text.csv"
    text.write_text("1,2\n3,abc\n")
    with pytest.raises(NonFinite):
        read_matrix_csv(text)
    gap = tmp_path / "gap.csv"
    gap.write_text("1,2\n3,\n")
    with pytest.raises(NonFinite):
        read_matrix_csv(gap)


def test_response_must_be_one_column(tmp_path, csv_data):
    x_path, _ = csv_data
    y_path = tmp_path / "wide.csv"
    write_matrix_csv(y_path, np.ones((50, 2)))
    with pytest.raises(DimensionMismatch):
        load_dataset(x_path, y_path)


def test_row_count_mismatch(tmp_path, csv_data):
    x_path, _ = csv_data
    y_path = tmp_path / "short.csv"
    write_matrix_csv(y_path, np.ones(49))
    with pytest.raises(DimensionMismatch):
        load_dataset(x_path, y_path)


def test_cached_dataset(csv_data, cache):
    data = load_dataset(*csv_data)
    key = cache_dataset(data, cache)
    restored = load_cached_dataset(key, cache)
    np.testing.assert_array_equal(restored.X, data.X)
    with pytest.raises(InputNotFound):
        load_cached_dataset("datasets/unknown", cache)


# Result writer

def test_json_artifact_embeds_config(tmp_path):
    writer = ResultWriter(str(tmp_path / "out"), {"command": "fit", "seed": 3})
    path = writer.write_json("fit.json", {"value": np.float64(1.5), "missing": float("nan")},
                             extra_provenance={"wall_time_seconds": 0.1})
    document = read_json_artifact(path)
    assert document["config"] == {"command": "fit", "seed": 3}
    assert document["result"] == {"value": 1.5, "missing": None}
    assert document["provenance"]["run_id"] == writer.run_id
    assert document["provenance"]["wall_time_seconds"] == 0.1


def test_run_id_is_deterministic(tmp_path):
    first = ResultWriter(str(tmp_path), {"a": 1, "b": [1, 2]})
    second = ResultWriter(str(tmp_path), {"b": [1, 2], "a": 1})
    assert first.run_id == second.run_id
    assert first.run_id != ResultWriter(str(tmp_path), {"a": 2}).run_id


def test_table_header_and_format(tmp_path):
    writer = ResultWriter(str(tmp_path), {"command": "simulate"})
    frame = pd.DataFrame({"metric": ["coverage"], "mean": [0.1 + 0.2]})
    path = writer.write_table("summary.csv", frame, header=["reps: 10"])
    lines = open(path, encoding="utf-8").read().split("\n")
    assert lines[0].startswith("# config: ")
    assert json.loads(lines[0][len("# config: "):]) == {"command": "simulate"}
    assert lines[1].startswith("# provenance: ")
    assert lines[2] == "# reps: 10"
    assert lines[3] == "metric,mean"
    assert float(lines[4].split(",")[1]) == 0.1 + 0.2
    reread = pd.read_csv(path, comment="#")
    assert reread["metric"].tolist() == ["coverage"]


@pytest.mark.parametrize("name", ["../escape.json", "sub/dir.json", ""])
def test_artifact_names_must_be_plain(tmp_path, name):
    writer = ResultWriter(str(tmp_path), {})
    with pytest.raises(ValueError):
        writer.write_json(name, {})
