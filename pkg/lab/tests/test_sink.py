import json

import pytest

from app.storage import open_sink, read_data_file, write_summary


def test_rows_and_header(tmp_path):
    path = tmp_path / "out" / "data.csv"
    with open_sink(path, "hull-stats", {"alpha": 0.4, "seed": 1}, ["r", "tau_r"]) as sink:
        sink.write_rows([{"r": 0, "tau_r": 0}, {"r": 1, "tau_r": 3}])
    data = read_data_file(path)
    assert data["schema"] == "hull-stats/v1"
    assert data["config"] == {"alpha": 0.4, "seed": 1}
    assert data["rows"] == [{"r": "0", "tau_r": "0"}, {"r": "1", "tau_r": "3"}]
    assert not path.with_name("data.csv.tmp").exists()


def test_rollback_on_error(tmp_path):
    path = tmp_path / "data.csv"
    with pytest.raises(RuntimeError):
        with open_sink(path, "walk", {}, ["n"]) as sink:
            sink.write_row({"n": 1})
            raise RuntimeError("boom")
    assert list(tmp_path.iterdir()) == []


def test_unknown_column_rejected(tmp_path):
    with pytest.raises(ValueError):
        with open_sink(tmp_path / "data.csv", "walk", {}, ["n"]) as sink:
            sink.write_row({"m": 1})
    assert not (tmp_path / "data.csv").exists()


def test_raw_text_sink(tmp_path):
    path = tmp_path / "map.txt"
    with open_sink(path, "sample-map", {"radius": 2}) as sink:
        sink.write("0 1\n")
    lines = path.read_text().splitlines()
    assert lines[0] == "# schema=sample-map/v1"
    assert lines[-1] == "0 1"


def test_write_summary(tmp_path):
    path = tmp_path / "s.json"
    write_summary(path, {"results": {"x": 1}})
    assert json.loads(path.read_text()) == {"results": {"x": 1}}
