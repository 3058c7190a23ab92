"""命令行测试：退出码与产物格式"""

import json
import os

import pytest

from cosmokg.cli import EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, build_parser, main
from cosmokg.utils import read_csv_metadata

CRUNCH = {
    "name": "crunch",
    "universe": {"kind": "TwoSidedProduct", "t_minus": 0.0, "t_plus": 1.0,
                 "c0_minus": 1.0, "eta0_minus": 0.5, "c0_plus": 1.0, "eta0_plus": 0.5},
    "coupling": {"xi": "conformal", "d": 3, "m": 0.0},
    "manifold": {"kind": "FlatTorusTd", "lengths": [6.283185307179586] * 3},
    "modes": {"eigenvalue_cutoff": 100.0, "infrared_delta": 0.5},
}


def write_config(tmp_path, data, name="scenario.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data), encoding="utf-8")
    return str(path)


def run(command, config, out, *extra):
    return main([command, "--config", config, "--out", str(out), *extra])


def load_result(path):
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


def data_lines(path):
    with open(path, "r", encoding="utf-8") as f:
        return [line for line in f if not line.startswith("#")]


def test_parser_lists_all_commands():
    args = build_parser().parse_args(["wkb-compare", "--config", "c.json", "--out", "o"])
    assert (args.command, args.threads, args.seed, args.log_level) == ("wkb-compare", 1, 0, "INFO")
    with pytest.raises(SystemExit):
        build_parser().parse_args(["teleport", "--config", "c.json", "--out", "o"])


def test_duffing_artifact(tmp_path):
    config = write_config(tmp_path, {"name": "duffing", "duffing": {"phi0": [0.5, 2.0]}})
    assert run("duffing", config, tmp_path / "out", "--seed", "7") == EXIT_OK
    path = tmp_path / "out" / "duffing.csv"
    metadata = read_csv_metadata(str(path))
    assert metadata["command"] == "duffing"
    assert metadata["scenario"] == "duffing"
    assert metadata["seed"] == 7
    assert len(metadata["config_hash"]) == 64
    lines = data_lines(path)
    assert lines[0] == "phi0,period,period_numeric,relative_difference,upper_bound,below_2pi\n"
    assert len(lines) == 3
    assert lines[1].rstrip("\n").endswith(",true")
    with open(path, "rb") as f:
        assert b"\r\n" not in f.read()


def test_artifacts_are_deterministic(tmp_path):
    config = write_config(tmp_path, {"name": "duffing", "duffing": {"phi0": [0.5, 2.0]}})
    assert run("duffing", config, tmp_path / "a") == EXIT_OK
    assert run("duffing", config, tmp_path / "b", "--threads", "2") == EXIT_OK
    with open(tmp_path / "a" / "duffing.csv", "rb") as a, open(tmp_path / "b" / "duffing.csv", "rb") as b:
        assert a.read() == b.read()


def test_classify_big_brake(tmp_path):
    config = write_config(tmp_path, {
        "name": "brake",
        "universe": {"kind": "SingleEndedFuture", "c0_plus": 1.0, "eta0_plus": 0.0,
                     "c1_plus": 1.0, "eta1_plus": 1.5},
        "coupling": {"xi": 0.0, "d": 3, "m": 1.0},
    })
    assert run("classify", config, tmp_path) == EXIT_OK
    document = load_result(tmp_path / "classify.json")
    report = document["result"]["reports"]["Future"]
    assert report["singularity_class"] == "BigBrake"
    assert report["phi0_exists"] is True
    assert report["phi1_exists"] is True
    assert "Past" not in document["result"]["reports"]
    assert document["metadata"]["command"] == "classify"


def test_riccati_artifact(tmp_path):
    config = write_config(tmp_path, {"name": "riccati", "riccati": {"n_grid": 300}})
    assert run("riccati", config, tmp_path) == EXIT_OK
    result = load_result(tmp_path / "riccati.json")["result"]
    assert result["riccati"]["sandwich_holds"] is True
    assert float(result["min_margin_lower"]) >= -1e-12
    assert "riemann" not in result


def test_wkb_compare_artifact(tmp_path):
    config = write_config(tmp_path, {"name": "wkb", "wkb": {"mus": [100.0, 1000.0], "span": [-4.0, 4.0]}})
    assert run("wkb-compare", config, tmp_path) == EXIT_OK
    assert len(data_lines(tmp_path / "wkb_compare.csv")) == 3
    result = load_result(tmp_path / "wkb_compare.json")["result"]
    assert result["order"] == 2
    assert "rows" not in result


def test_bogoliubov_conformal_crunch(tmp_path):
    config = write_config(tmp_path, CRUNCH)
    assert run("bogoliubov", config, tmp_path) == EXIT_OK
    result = load_result(tmp_path / "bogoliubov.json")["result"]
    assert float(result["bogoliubov"]["N_pairs"]) < 1e-10
    assert result["partial_sums"] == []
    assert len(data_lines(tmp_path / "bogoliubov.csv")) == 1 + result["bogoliubov"]["modes"]


def test_asymptotics_for_free_modes(tmp_path):
    data = dict(CRUNCH, modes={"mus": [1.0, 4.0]})
    config = write_config(tmp_path, data)
    assert run("asymptotics", config, tmp_path) == EXIT_OK
    records = load_result(tmp_path / "asymptotics.json")["result"]["asymptotics"]["records"]
    assert [float(r["mu"]) for r in records] == [1.0, 4.0]
    assert all(r["divergence_model"] == "none" for r in records)


def test_evolve_writes_one_file_per_mode(tmp_path):
    data = dict(CRUNCH, modes={"mus": [1.0, 4.0]}, evolve={"taus": [0.1, 0.2, 0.3]})
    config = write_config(tmp_path, data)
    assert run("evolve", config, tmp_path) == EXIT_OK
    for index, mu in enumerate((1.0, 4.0)):
        path = tmp_path / f"mode_{index}.csv"
        assert read_csv_metadata(str(path))["mu"] == f"{mu:.16e}"
        lines = data_lines(path)
        assert lines[0] == "tau,re_psi,im_psi,re_dpsi,im_dpsi\n"
        assert len(lines) == 4
        assert len(read_csv_metadata(str(path))["distances"]) == 3


def test_evolve_records_endpoint_distances(tmp_path):
    data = dict(CRUNCH, modes={"mus": [1.0]}, evolve={"distances": [1e-2, 1e-3]})
    config = write_config(tmp_path, data)
    assert run("evolve", config, tmp_path) == EXIT_OK
    path = tmp_path / "mode_0.csv"
    distances = read_csv_metadata(str(path))["distances"]
    assert [float(d) for d in distances] == pytest.approx([1e-2, 1e-3], rel=1e-12)
    assert all(len(line.split(",")) == 5 for line in data_lines(path))


def test_config_errors_exit_with_one(tmp_path):
    assert run("duffing", str(tmp_path / "missing.json"), tmp_path) == EXIT_CONFIG
    bad = write_config(tmp_path, {"duffing": {"phi0": [0.0]}}, "bad.json")
    assert run("duffing", bad, tmp_path) == EXIT_CONFIG
    standalone = write_config(tmp_path, {"duffing": {"phi0": [1.0]}}, "standalone.json")
    assert run("classify", standalone, tmp_path) == EXIT_CONFIG
    assert run("duffing", standalone, tmp_path, "--threads", "0") == EXIT_CONFIG
    occupied = tmp_path / "occupied"
    occupied.write_text("x", encoding="utf-8")
    assert run("duffing", standalone, occupied) == EXIT_CONFIG


def test_numerical_failures_exit_with_two(tmp_path):
    empty = write_config(tmp_path, dict(CRUNCH, modes={"eigenvalue_cutoff": 5.0, "infrared_delta": 1e6}))
    assert run("bogoliubov", empty, tmp_path) == EXIT_NUMERICAL
    budget = write_config(tmp_path, dict(CRUNCH, modes={"eigenvalue_cutoff": 400.0, "budget": 10}),
                          "budget.json")
    assert run("bogoliubov", budget, tmp_path) == EXIT_NUMERICAL


@pytest.mark.parametrize("M", [0.5, 1.0])
def test_riccati_requires_M_above_one(tmp_path, M):
    config = write_config(tmp_path, {"name": "riccati", "riccati": {"M": M, "n_grid": 300}})
    assert run("riccati", config, tmp_path) == EXIT_CONFIG
    assert not (tmp_path / "riccati.json").exists()


def test_distance_samples_on_infinite_side_exit_with_two(tmp_path):
    data = {
        "name": "c1_crunch",
        "universe": {"kind": "SingleEndedFuture", "t_minus": 0.0, "t_plus": 1.0,
                     "c0_plus": 1.0, "eta0_plus": 1.0},
        "coupling": {"xi": "conformal", "d": 3, "m": 0.0},
        "modes": {"mus": [1.0]},
        "evolve": {"side": "Future", "tau0": 0.0, "psi0": [1.0, 0.0], "dpsi0": [0.0, 0.0],
                   "distances": [1e-2, 1e-3]},
    }
    config = write_config(tmp_path, data)
    assert run("evolve", config, tmp_path) == EXIT_NUMERICAL
