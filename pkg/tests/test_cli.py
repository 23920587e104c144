import json
import math

import pytest

from ustcollide import cli
from ustcollide.cli import ExperimentConfig, data_section, load_config_file, main, resolve_config
from ustcollide.walk import InvalidConfiguration
from ustcollide.wilson import SpanningTree


def _run(tmp_path, name, *args):
    out = tmp_path / name
    code = main([*args, "--out", str(out)])
    return code, out


def _rows(path):
    return [json.loads(l) for l in data_section(path).splitlines() if l.strip()]


def test_precedence(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.WORKERS_ENV, "3")
    f = tmp_path / "c.cfg"
    f.write_text("# comment\nseed = 5\ntrees = 7\nr = 10, 20\nplot = true\n")
    file_vals = load_config_file(f)
    cfg = resolve_config("collisions", file_vals, {"seed": 9, "trees": None})
    assert cfg.seed == 9 and cfg.trees == 7 and cfg.r == [10, 20] and cfg.plot is True
    assert cfg.workers == 3
    assert resolve_config("collisions", {}, {}).seed == ExperimentConfig().seed
    (tmp_path / "j.json").write_text(json.dumps({"eps": [0.5, 0.1], "container_factor": 3}))
    cfg = resolve_config("collisions", load_config_file(tmp_path / "j.json"), {})
    assert cfg.eps == [0.5, 0.1] and cfg.container_factor == 3.0
    (tmp_path / "bad.cfg").write_text("nonsense = 1\n")
    with pytest.raises(InvalidConfiguration):
        load_config_file(tmp_path / "bad.cfg")


def test_header_block(tmp_path):
    code, out = _run(tmp_path, "c", "collisions", "--r", "5", "--trees", "2", "--seed", "4")
    assert code == 0
    lines = (out / "collisions.csv").read_text().splitlines()
    assert lines[0].startswith("# ustcollide ")
    assert lines[1] == "# seed: 4"
    cfg = json.loads(lines[2][len("# config: "):])
    assert cfg["r"] == [5] and cfg["trees"] == 2
    assert lines[3].startswith("# timestamp: ")
    assert lines[4].startswith("r,tree_index,tree_seed")


def test_validate_passes_and_negative_control(tmp_path):
    small = ["--traces", "500", "--uniform-samples", "4000"]
    code, out = _run(tmp_path, "ok", "validate", *small)
    assert code == 0
    rows = _rows(out / "validate.jsonl")
    assert rows[-1]["summary"]["passed"] is True
    code, out = _run(tmp_path, "bad", "validate", *small, "--corrupt-loop-erase")
    assert code != 0
    failed = _rows(out / "validate.jsonl")[-1]["summary"]["failed"]
    assert failed == ["loop_erasure_oracle"]


def test_validate_reports_identical(tmp_path):
    small = ["--traces", "300", "--uniform-samples", "2000", "--seed", "3"]
    _, a = _run(tmp_path, "a", "validate", *small)
    _, b = _run(tmp_path, "b", "validate", *small)
    assert data_section(a / "validate.jsonl") == data_section(b / "validate.jsonl")


def test_beta_errors_and_scaling(tmp_path):
    assert main(["beta", "--radii", "16", "--samples", "200", "--out", str(tmp_path / "x")]) == 2
    _, a = _run(tmp_path, "a", "beta", "--radii", "4", "8", "16", "--samples", "400", "--seed", "1")
    _, b = _run(tmp_path, "b", "beta", "--radii", "4", "8", "16", "--samples", "1600", "--seed", "1")
    sa, sb = _rows(a / "beta_summary.jsonl")[0], _rows(b / "beta_summary.jsonl")[0]
    assert 1.2 < sa["slope"] < 1.9
    # per-radius standard errors shrink like 1/sqrt(samples): ratio ~ 1/2 for 4x samples
    se_a = [float(l.split(",")[3]) for l in data_section(a / "beta.csv").splitlines()[1:]]
    se_b = [float(l.split(",")[3]) for l in data_section(b / "beta.csv").splitlines()[1:]]
    for x, y in zip(se_a, se_b):
        assert 0.35 < y / x < 0.7


def test_doubling_samples_shrinks_stderr(tmp_path):
    _, a = _run(tmp_path, "a", "beta", "--radii", "4", "8", "16", "--samples", "500", "--seed", "2")
    _, b = _run(tmp_path, "b", "beta", "--radii", "4", "8", "16", "--samples", "1000", "--seed", "2")
    se = lambda p: [float(l.split(",")[3]) for l in data_section(p / "beta.csv").splitlines()[1:]]
    ratios = [y / x for x, y in zip(se(a), se(b))]
    assert all(abs(r - 1 / math.sqrt(2)) < 0.15 for r in ratios)


def test_empty_collision_run_is_noop(tmp_path, caplog):
    code, out = _run(tmp_path, "e", "collisions", "--trees", "0")
    assert code == 0
    assert not out.exists()
    assert any("no trees" in r.message for r in caplog.records)


def test_workers_do_not_change_data(tmp_path):
    args = ["resistance", "--r", "6", "--trees", "6", "--seed", "8"]
    _, a = _run(tmp_path, "w1", *args, "--workers", "1")
    _, b = _run(tmp_path, "w2", *args, "--workers", "2")
    for f in ("resistance.jsonl", "resistance.csv"):
        assert data_section(a / f) == data_section(b / f)
    rows = [l.split(",") for l in data_section(a / "resistance.csv").splitlines()[1:]]
    freq = [float(r[4]) for r in rows]
    assert freq == sorted(freq)
    assert all(rec["r_eff_origin"] <= 7 for rec in _rows(a / "resistance.jsonl"))


def test_sample_ust_files_round_trip(tmp_path):
    code, out = _run(tmp_path, "s", "sample-ust", "--r", "4", "--trees", "2", "--order", "spiral")
    assert code == 0
    for name in ("ust_r4_00000.txt", "ust_r4_00001.txt"):
        text = (out / name).read_text()
        assert SpanningTree.loads(text).dumps() == text


def test_plots_written(tmp_path):
    pytest.importorskip("matplotlib")
    _, out = _run(tmp_path, "p", "resistance", "--r", "5", "--trees", "3", "--plot")
    assert (out / "lambda_exceedance.png").stat().st_size > 0
