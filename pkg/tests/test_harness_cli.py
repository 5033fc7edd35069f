import csv
import io
import json

import numpy as np
import pytest

from adiabatic_counting import harness
from adiabatic_counting.cli import COUNT_KEYS, main
from adiabatic_counting.grover import ScheduleParams
from adiabatic_counting.schedule import total_runtime


def read_csv(text):
    return list(csv.DictReader(io.StringIO(text)))


def sweep_text(config_text, *overrides):
    config = harness.parse_config(config_text, overrides)
    rows = harness.run_sweep(config)
    return harness.emit(rows, config.columns, config.format, config=config)


def test_runtime_sweep_slope():
    rows = read_csv(sweep_text("kind: runtime\neta_star: {geom: [1.0e-5, 1.0e-2, 10]}\neps: 0.1\n"))
    assert len(rows) == 10
    eta = np.array([float(r["eta_star"]) for r in rows])
    T = np.array([float(r["total_runtime"]) for r in rows])
    assert np.polyfit(np.log(eta), np.log(T), 1)[0] == pytest.approx(-0.5, abs=0.02)


@pytest.mark.slow
def test_counting_sweep_slope_in_m():
    text = sweep_text("kind: counting\nn: 1048576\nm: [16, 32, 64, 128, 256, 512, 1024]\nrepeat: 20\nseed: 0\njobs: 4\n")
    rows = read_csv(text)
    assert all(r["error"] == "" for r in rows)
    m = np.array([float(r["m"]) for r in rows])
    cost = np.array([float(r["total_cost"]) for r in rows])
    levels = np.unique(m)
    mean_cost = [cost[m == v].mean() for v in levels]
    slope = np.polyfit(np.log(levels), np.log(mean_cost), 1)[0]
    assert slope == pytest.approx(0.5, abs=0.05)


def test_empty_sweep_is_header_only():
    text = sweep_text("kind: runtime\neta_star: []\n")
    assert text == "row,eta_star,eps,seed,total_runtime,error\n"


def test_header_schema():
    config = harness.parse_config("kind: psol\neta: 0.1\n")
    assert config.columns == [
        "row", "eta", "eta_star", "eps", "tol", "seed",
        "eta_star_used", "p_sol_ode", "p_sol_small_eps", "p_sol_landau_zener",
        "dev_small_eps", "dev_landau_zener", "error",
    ]


def test_csv_row_round_trip():
    config = harness.parse_config("kind: runtime\neta_star: 0.0123\neps: 0.37\n")
    rows = harness.run_sweep(config)
    parsed = read_csv(harness.emit(rows, config.columns))
    assert float(parsed[0]["total_runtime"]) == rows[0]["total_runtime"]
    assert float(parsed[0]["eta_star"]) == 0.0123
    assert int(parsed[0]["seed"]) == rows[0]["seed"]


def test_json_shape_and_round_trip():
    doc = json.loads(sweep_text("kind: psol\neta: [0.1, 0.01]\nformat: json\n"))
    assert set(doc) == {"columns", "rows", "config"}
    assert [list(r) for r in doc["rows"]] == [doc["columns"]] * 2
    assert doc["config"]["kind"] == "psol"
    assert doc["rows"][0]["p_sol_landau_zener"] == -np.expm1(-np.pi / 0.4)


def test_seventeen_digit_floats():
    assert harness.format_value(0.1) == "0.10000000000000001"
    assert harness.format_value(None) == ""
    assert harness.format_value(True) == "true"
    assert harness.format_value(np.float64(1 / 3)) == format(1 / 3, ".17g")


def test_row_failure_recorded_in_row():
    rows = harness.run_sweep(harness.parse_config("kind: runtime\neta_star: [0.5, 0.0, 0.25]\n"))
    assert [bool(r["error"]) for r in rows] == [False, True, False]
    assert rows[1]["total_runtime"] is None
    assert "eta_star" in rows[1]["error"]
    assert rows[2]["total_runtime"] == total_runtime(ScheduleParams(0.25, 0.1))


def test_every_input_echoed():
    rows = harness.run_sweep(harness.parse_config("kind: counting\nn: 4096\nm: 5\n"))
    row = rows[0]
    for key in ("n", "m", "eps", "target_p", "mode", "backend", "precision", "runs_per_trial", "repeat", "seed"):
        assert row[key] is not None


@pytest.mark.parametrize(
    "text, fragment",
    [
        ("kind: runtime\neps: 0.1\nbogus: 3\n", "<config>:3: field 'bogus'"),
        ("kind: runtime\n", "field 'eta_star': required"),
        ("kind: nope\n", "field 'kind'"),
        ("kind: runtime\neta_star: {geom: [0, 1, 3]}\n", "<config>:2: field 'eta_star'"),
        ("kind: runtime\neta_star: {cube: 3}\n", "unknown generator"),
        ("kind: counting\nn: 1024\nm: 2.5\n", "<config>:3: field 'm'"),
        ("kind: counting\nn: 1024\nm: 1\nmode: cubic\n", "field 'mode'"),
        ("kind: runtime\neta_star: 0.1\nseed: -1\n", "field 'seed'"),
        ("kind: runtime\neta_star: 0.1\njobs: 0\n", "field 'jobs'"),
        ("kind: runtime\neta_star: 0.1\nformat: xml\n", "field 'format'"),
        ("kind: [runtime\n", "YAML syntax error"),
        ("- 1\n- 2\n", "top level must be a mapping"),
    ],
)
def test_config_diagnostics(text, fragment):
    with pytest.raises(harness.ConfigError) as info:
        harness.parse_config(text)
    assert fragment in str(info.value)


def test_generators_and_overrides():
    config = harness.parse_config("kind: classical\nn: {pow2: [4, 6]}\nm: 1\nrepeat: 3\n", ["m=[0, 2]", "seed=9"])
    assert config.axes["n"] == [16, 32, 64]
    assert config.axes["m"] == [0, 2]
    assert config.axes["repeat"] == [0, 1, 2]
    assert config.seed == 9
    assert len(list(config.rows())) == 18
    lin = harness.parse_config("kind: runtime\neta_star: {lin: [0.1, 0.5, 5]}\n")
    assert lin.axes["eta_star"] == pytest.approx([0.1, 0.2, 0.3, 0.4, 0.5])
    with pytest.raises(harness.ConfigError):
        harness.parse_config("kind: runtime\n", ["eta_star"])


def test_row_seeds_are_distinct_and_stable():
    seeds = [harness.row_seed(42, i) for i in range(100)]
    assert len(set(seeds)) == 100
    assert seeds == [harness.row_seed(42, i) for i in range(100)]
    assert all(0 <= s < 2**64 for s in seeds)


def test_parallel_output_is_identical_to_serial():
    text = "kind: counting\nn: 65536\nm: [0, 3, 40]\nrepeat: 2\nseed: 17\n"
    config = harness.parse_config(text)
    serial = harness.emit(harness.run_sweep(config, jobs=1), config.columns)
    parallel = harness.emit(harness.run_sweep(config, jobs=3), config.columns)
    assert serial == parallel


def test_sweep_cli_writes_identical_files(tmp_path, capsys):
    cfg = tmp_path / "sweep.yaml"
    cfg.write_text("kind: classical\nn: 4096\nm: [1, 50]\nk: 500\nrepeat: 3\n")
    outs = []
    for name in ("a.csv", "b.csv"):
        path = tmp_path / name
        assert main(["sweep", str(cfg), "--seed", "5", "--out", str(path), "--jobs", "2"]) == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]
    assert outs[0].startswith(b"row,n,m,k,repeat,seed,k_used,m_hat,predicted_error,total_cost,error\n")


def test_cli_schedule(capsys):
    assert main(["schedule", "--eta-star", "1", "--eps", "0.5", "--grid-points", "3"]) == 0
    rows = read_csv(capsys.readouterr().out)
    assert list(rows[0]) == ["s", "t", "ds_dt"]
    assert [float(r["t"]) for r in rows] == [0.0, 1.0, 2.0]


def test_cli_dynamics(capsys):
    assert main(["dynamics", "--eta", "0.1", "--points", "5"]) == 0
    rows = read_csv(capsys.readouterr().out)
    assert list(rows[0]) == ["s", "re_a", "im_a", "re_b", "im_b", "norm"]
    assert len(rows) == 5
    assert all(abs(float(r["norm"]) - 1) < 1e-8 for r in rows)


def test_cli_psol(capsys):
    assert main(["psol", "--eta", "0.25", "--eps", "0.01"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["p_sol_small_eps"] == 1 - 0.01**2 * 0.25 * 0.75
    assert 0.99 < doc["p_sol_integrated"] <= 1.0
    assert {"p_sol_integrated", "p_sol_small_eps", "p_sol_landau_zener"} <= set(doc)


def test_cli_fullsim(capsys):
    assert main(["fullsim", "--n", "64", "--marked", "1,7,9,33", "--seed", "3"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["m"] == 4 and doc["eta_star"] == 4 / 64
    assert {"p_sol", "runtime_T", "norm_drift"} <= set(doc)


def test_cli_count_schema(tmp_path):
    out = tmp_path / "count.json"
    assert main(["count", "--n", "65536", "--m", "20", "--seed", "1", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert list(doc)[: len(COUNT_KEYS)] == COUNT_KEYS
    assert doc["m_true"] == 20
    assert doc["params"]["seed"] == 1


@pytest.mark.parametrize(
    "argv, code",
    [
        (["psol", "--eta", "1.5"], 2),
        (["schedule", "--eta-star", "0"], 2),
        (["count", "--n", "64", "--m", "100"], 2),
        (["fullsim", "--n", "40000", "--m", "1"], 2),
        (["sweep", "/nonexistent/config.yaml"], 1),
    ],
)
def test_cli_exit_codes(argv, code, capsys):
    assert main(argv) == code
    assert "aqcount" in capsys.readouterr().err


def test_cli_sweep_config_error(tmp_path, capsys):
    cfg = tmp_path / "bad.yaml"
    cfg.write_text("kind: runtime\neta_star: 0.1\nbogus: 1\n")
    assert main(["sweep", str(cfg)]) == 2
    assert f"{cfg}:3: field 'bogus'" in capsys.readouterr().err
