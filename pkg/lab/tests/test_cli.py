import json

import pytest

from app.engine.half_plane_map import import_edge_list
from app.main import EXIT_OK, EXIT_PARTIAL, EXIT_USAGE, main
from app.storage import read_data_file


def _summary(path):
    return json.loads(path.with_suffix(".json").read_text())


def test_constants(capsys):
    assert main(["constants", "--alpha", "0.8"]) == EXIT_OK
    out = json.loads(capsys.readouterr().out)
    assert out["p_c"] == pytest.approx(0.146447, abs=1e-6)
    assert out["p_u"] == pytest.approx(0.853553, abs=1e-6)
    assert out["theta"] == pytest.approx(0.1)
    assert "c_alpha" not in out


def test_constants_with_p(capsys):
    assert main(["constants", "--alpha", "0.8", "--p", "0.5"]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["perc_drift"] == pytest.approx(0.28284, abs=1e-5)
    assert main(["constants", "--alpha", "0.4", "--p", "0.5"]) == EXIT_USAGE


def test_enumerate_single_value(capsys):
    assert main(["enumerate", "--n", "1", "--m", "3"]) == EXIT_OK
    assert capsys.readouterr().out.strip() == "4"


def test_enumerate_table(tmp_path):
    path = tmp_path / "phi.csv"
    assert main(["enumerate", "--m", "3", "--n-max", "4", "--output", str(path)]) == EXIT_OK
    data = read_data_file(path)
    assert data["schema"] == "enumerate/v1"
    assert data["config"]["m"] == 3
    assert [row["phi"] for row in data["rows"]][:2] == ["1", "4"]
    assert _summary(path)["seed"] == 0


def test_json_format(tmp_path):
    path = tmp_path / "phi.json"
    assert main(["enumerate", "--m", "4", "--n-max", "2", "--format", "json", "--output", str(path)]) == EXIT_OK
    summary = json.loads(path.read_text())
    assert summary["columns"] == ["n", "m", "phi", "log_phi"]
    assert len(summary["rows"]) == 3


@pytest.mark.parametrize("argv", [
    [],
    ["nope"],
    ["constants"],
    ["constants", "--alpha", "1.5"],
    ["enumerate", "--m", "3"],
    ["tails", "--alpha", "0.8"],
    ["percolation", "--alpha", "0.4"],
    ["percolation", "--alpha", "0.8", "--task", "density", "--p", "0.5"],
])
def test_usage_errors(argv, tmp_path):
    assert main(argv + ["--output", str(tmp_path / "x.csv")]) == EXIT_USAGE
    assert not (tmp_path / "x.csv").exists()


def test_hull_stats(tmp_path):
    path = tmp_path / "hull.csv"
    argv = ["hull-stats", "--alpha", "0.8", "--radius", "2", "--replicas", "2", "--workers", "1",
            "--seed", "5", "--output", str(path)]
    assert main(argv) == EXIT_OK
    data = read_data_file(path)
    assert len(data["rows"]) == 2 * 3
    assert {"tau_r", "boundary_len", "volume", "resistance_bound", "iso_ratio"} <= set(data["rows"][0])
    summary = _summary(path)
    assert summary["schema"] == "hull-stats/v1"
    assert summary["partial"] is False
    assert summary["results"]["truncated_replicas"] == 0
    assert "numpy" in summary["versions"]
    assert summary["results"]["median_volume_over_r2"] > 0
    assert "boundary_growth_rate" in summary["results"]


def test_hull_stats_subcritical_gamma(tmp_path):
    path = tmp_path / "hull.csv"
    argv = ["hull-stats", "--alpha", "0.3", "--radius", "4", "--replicas", "3", "--workers", "1",
            "--seed", "6", "--output", str(path)]
    assert main(argv) == EXIT_OK
    results = _summary(path)["results"]
    assert results["gamma"] > 0
    assert "boundary_growth_rate" not in results


def test_hull_stats_at_critical_alpha(tmp_path):
    path = tmp_path / "hull.csv"
    argv = ["hull-stats", "--alpha", "0.6666666666666666", "--radius", "2", "--workers", "1",
            "--i-max", "10000", "--output", str(path)]
    assert main(argv) == EXIT_OK
    assert len(read_data_file(path)["rows"]) == 3


def test_hull_stats_partial(tmp_path):
    path = tmp_path / "hull.csv"
    argv = ["hull-stats", "--alpha", "0.8", "--radius", "8", "--max-steps", "20", "--workers", "1",
            "--output", str(path)]
    assert main(argv) == EXIT_PARTIAL
    assert _summary(path)["partial"] is True
    assert read_data_file(path)["rows"][0]["truncated"] == "1"


def test_sample_map(tmp_path):
    path = tmp_path / "map.txt"
    assert main(["sample-map", "--alpha", "0.8", "--radius", "2", "--output", str(path)]) == EXIT_OK
    with open(path) as handle:
        n, root, edges = import_edge_list(handle)
    assert root == (0, 1)
    assert len(edges) > 0
    assert _summary(path)["results"]["vertices"] >= n


def test_walk(tmp_path):
    path = tmp_path / "walk.csv"
    argv = ["walk", "--alpha", "0.8", "--radius", "2", "--n", "16", "--samples", "3",
            "--boundary", "reflect", "--workers", "1", "--output", str(path)]
    assert main(argv) == EXIT_OK
    rows = read_data_file(path)["rows"]
    assert {row["walk"] for row in rows} == {"0", "1", "2"}
    assert all(int(row["displacement"]) <= int(row["n"]) for row in rows)
    profile = _summary(path)["results"]["profiles"][0]
    assert set(profile["return_probability"]) == {"2", "4", "8", "16"}
    assert all(0.0 <= p <= 1.0 for p in profile["return_probability"].values())


def test_percolation_survival(tmp_path):
    path = tmp_path / "perc.csv"
    argv = ["percolation", "--alpha", "0.8", "--task", "survival", "--p", "0.5", "--cap", "10",
            "--trials", "100", "--output", str(path)]
    assert main(argv) == EXIT_OK
    rows = read_data_file(path)["rows"]
    assert len(rows) == 1
    assert 0.0 <= float(rows[0]["survival"]) <= 1.0


def test_tails(tmp_path):
    path = tmp_path / "tails.csv"
    argv = ["tails", "--alpha", "0", "--samples", "4000", "--replicas", "2", "--workers", "1",
            "--output", str(path)]
    assert main(argv) == EXIT_OK
    summary = _summary(path)
    assert summary["results"]["samples"] == 4000
    assert summary["results"]["c_alpha"] == pytest.approx(0.564190, abs=1e-6)
    levy = summary["results"]["levy"]
    assert levy["sums"] == 40
    assert levy["reference_median"] == pytest.approx(3.4528, abs=1e-3)


@pytest.mark.slow
def test_tails_full_size(tmp_path):
    path = tmp_path / "tails.csv"
    argv = ["tails", "--alpha", "0", "--samples", "1000000", "--output", str(path)]
    assert main(argv) == EXIT_OK
    ratio = _summary(path)["results"]["tail_ratio"]["10000"]
    assert ratio == pytest.approx(0.564190, rel=0.1)
