import csv
import json

import numpy as np
import pytest

from rashomon_surv.cli import main
from rashomon_surv.core import ModelSpec
from rashomon_surv.experiment import (
    ConfigError,
    ExperimentConfig,
    compare_censoring,
    run_experiment,
    uncertainty_trend,
    with_overrides,
)

SMALL_ZOO = [
    ModelSpec("kaplan_meier", "kaplan_meier", {}),
    ModelSpec("cox_ridge", "cox_ridge", {"l2": 0.1}),
    ModelSpec("cox_lasso", "cox_lasso", {"l1": 0.05}),
    ModelSpec("survival_tree", "survival_tree", {"min_node_size": 5, "max_depth": 3}),
    ModelSpec("rsf", "random_survival_forest", {"n_trees": 20, "min_node_size": 5}),
    ModelSpec("boosted_cox", "boosted_cox", {"n_rounds": 100, "learning_rate": 0.1}),
]


def small_config(data_dir, out_dir, **kw):
    d = {
        "data_path": str(data_dir),
        "subset": "FD001",
        "censor_times": [200, 250],
        "zoo": [s.to_dict() for s in SMALL_ZOO],
        "output_dir": str(out_dir),
        "probe_times": [100, 150],
    }
    d.update(kw)
    return ExperimentConfig.from_dict(d)


@pytest.fixture(scope="module")
def small_run(surrogate_dir, tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    return run_experiment(small_config(surrogate_dir, out)), out


def test_report_structure(small_run):
    report, out = small_run
    assert not report["partial"]
    assert [b["censor_time"] for b in report["blocks"]] == [200.0, 250.0]
    for b in report["blocks"]:
        assert b["split"]["train"] + b["split"]["test"] == b["n_units"] == 100
        for name in b["artifacts"].values():
            assert (out / name).exists()
        members = b["rashomon_set"]["members"]
        best = min(m["loss"] for m in members)
        assert all(m["loss"] <= best + 0.05 for m in members)
        # every zoo model outside the set is more than epsilon worse than the best
        losses = {r["model_id"]: 1 - r["c_index"] for r in b["evaluation"]}
        outside = set(losses) - {m["model_id"] for m in members}
        assert all(losses[m] > best + 0.05 for m in outside)
    assert "sensor_1" in report["dropped_columns"]
    trend = report["uncertainty_trend"]
    widths = [b["envelope_stats"]["mean_width"] for b in report["blocks"]]
    assert trend["width_grows"] == (widths[1] >= widths[0])
    assert (trend["flag"] is None) == trend["width_grows"]


def test_envelope_csv_contains_reference(small_run):
    report, out = small_run
    b = report["blocks"][0]
    rows = np.loadtxt(out / b["artifacts"]["envelope_csv"], delimiter=",", skiprows=1)
    assert rows[0, 0] == 1.0 and rows[-1, 0] == 200.0
    assert np.all(rows[:, 1] <= rows[:, 2]) and np.all(rows[:, 2] <= rows[:, 3])


def test_run_is_byte_deterministic(surrogate_dir, tmp_path):
    cfg = small_config(surrogate_dir, tmp_path / "a", censor_times=[225])
    run_experiment(cfg)
    run_experiment(with_overrides(cfg, output_dir=tmp_path / "b"))
    for name in ("FD001_t225_envelope.csv", "FD001_t225_evaluation.csv", "FD001_t225_envelope.svg"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    ra = json.loads((tmp_path / "a" / "FD001_report.json").read_text())
    rb = json.loads((tmp_path / "b" / "FD001_report.json").read_text())
    ra["config"].pop("output_dir"), rb["config"].pop("output_dir")
    assert ra == rb


def test_config_roundtrip_and_validation(tmp_path):
    cfg = small_config(tmp_path, tmp_path)
    assert ExperimentConfig.from_dict(cfg.to_dict()) == cfg
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({**cfg.to_dict(), "bogus": 1})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({**cfg.to_dict(), "epsilon": -1})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({**cfg.to_dict(), "zoo": [SMALL_ZOO[0].to_dict()] * 2})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({**cfg.to_dict(), "zoo": [{"model_id": "x", "family": "svm", "hyperparameters": {}}]})
    with pytest.raises(ConfigError):
        ExperimentConfig.load(tmp_path / "nope.json")


def test_uncertainty_trend_flag():
    mk = lambda c, w: {"censor_time": c, "status": "ok", "envelope_stats": {"mean_width": w}}
    assert uncertainty_trend([mk(200, 0.1), mk(250, 0.2)])["flag"] is None
    shrink = uncertainty_trend([mk(250, 0.1), mk(200, 0.2)])
    assert not shrink["width_grows"] and shrink["flag"]
    assert uncertainty_trend([mk(200, 0.1)]) is None


def test_compare(small_run):
    report, _ = small_run
    rows = compare_censoring([report])
    assert [r["censor_time"] for r in rows] == [200.0, 250.0]
    other = json.loads(json.dumps(report))
    other["config"]["censor_times"] = [225.0]
    other["blocks"] = [dict(report["blocks"][0], censor_time=225.0)]
    assert [r["censor_time"] for r in compare_censoring([report, other, other])] == [200.0, 225.0, 225.0, 250.0]
    other["config"]["epsilon"] = 0.1
    with pytest.raises(ValueError, match="epsilon"):
        compare_censoring([report, other])


def _write_config(path, cfg):
    path.write_text(json.dumps(cfg.to_dict()))
    return str(path)


def test_cli_run_and_exit_codes(surrogate_dir, tmp_path, capsys):
    cfg = small_config(surrogate_dir, tmp_path / "out", censor_times=[200])
    cpath = _write_config(tmp_path / "cfg.json", cfg)
    assert main(["run", "--config", cpath]) == 0
    assert "Rashomon set size" in capsys.readouterr().out
    assert main(["run", "--config", str(tmp_path / "missing.json")]) == 2
    assert main(["run"]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["run", "--config", str(bad)]) == 2
    # a censoring time before any failure cannot be fitted: partial run
    cpath2 = _write_config(tmp_path / "cfg2.json", with_overrides(small_config(surrogate_dir, tmp_path / "o2", censor_times=[5, 200])))
    assert main(["run", "--config", cpath2]) == 1


def test_cli_ingest(surrogate_dir, tmp_path):
    out = tmp_path / "ds.csv"
    assert main(["ingest", "--data", str(surrogate_dir), "--subset", "FD001", "--censor-time", "200", "--out", str(out)]) == 0
    with open(out) as fh:
        rows = list(csv.reader(fh))
    assert rows[0][:3] == ["unit_id", "time", "event"] and len(rows) == 101
    assert "sensor_1" not in rows[0]
    assert main(["ingest", "--data", str(tmp_path / "nowhere"), "--subset", "FD001"]) == 2


def test_cli_plot_and_compare(small_run, tmp_path):
    report, out = small_run
    env_csv = out / report["blocks"][0]["artifacts"]["envelope_csv"]
    svg = tmp_path / "p.svg"
    assert main(["plot", "--envelope", str(env_csv), "--out", str(svg), "--title", "t"]) == 0
    assert svg.read_text().startswith("<svg")
    table = tmp_path / "cmp.csv"
    assert main(["compare", "--reports", report["report_path"], "--out", str(table)]) == 0
    lines = table.read_text().splitlines()
    assert lines[0].startswith("censor_time,status,set_size") and len(lines) == 3
    assert main(["compare", "--reports", str(tmp_path / "none.json")]) == 2
