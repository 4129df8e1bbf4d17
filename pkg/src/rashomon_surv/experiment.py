"""Config-driven pipeline: ingest -> censor -> split -> fit zoo -> evaluate -> Rashomon -> envelope."""
from __future__ import annotations

import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .core import ModelSpec, default_grid
from .eval import EvaluationError, evaluate_model
from .ingest import (
    SUBSETS,
    CensoringSpec,
    CovariateSpec,
    Standardizer,
    build_survival_dataset,
    drop_constant_columns,
    load_subset,
    split_train_test,
)
from .models import check_unique_ids, default_zoo, fit_model, model_to_json
from .models.nonparametric import censoring_km
from .plotting import emit_plot
from .rashomon import (
    build_envelope,
    build_rashomon_set,
    envelope_stats,
    envelope_to_dict,
    write_envelope_csv,
)

log = logging.getLogger(__name__)

THREADS_ENV = "RASHOMON_SURV_THREADS"

# published Rashomon set sizes and member C-index (mean, sd) for a larger
# model zoo; not reproducible here, echoed in reports for orientation only
PUBLISHED_REFERENCE = {
    "FD001": {"set_size": 5, "c_index_mean": 0.8259, "c_index_sd": 0.0204},
    "FD002": {"set_size": 4, "c_index_mean": 0.7189, "c_index_sd": 0.0124},
    "FD003": {"set_size": 4, "c_index_mean": 0.8707, "c_index_sd": 0.0181},
    "FD004": {"set_size": 8, "c_index_mean": 0.8027, "c_index_sd": 0.0146},
}


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    data_path: str
    subset: str = "FD001"
    censor_times: list = field(default_factory=lambda: [200.0, 225.0, 250.0])
    epsilon: float = 0.05
    loss_name: str = "c_index"
    train_fraction: float = 0.8
    seed: int = 0
    covariate_spec: CovariateSpec = field(default_factory=CovariateSpec)
    zoo: list = field(default_factory=default_zoo)
    grid_step: float = 1.0
    output_dir: str = "results"
    envelope_mode: str = "population"
    probe_times: list = field(default_factory=list)
    save_models: bool = False

    def __post_init__(self):
        if self.subset not in SUBSETS:
            raise ConfigError(f"subset must be one of {SUBSETS}, got {self.subset!r}")
        self.censor_times = [float(c) for c in self.censor_times]
        if not self.censor_times or any(c <= 0 for c in self.censor_times):
            raise ConfigError("censor_times must be a non-empty list of positive numbers")
        if self.epsilon < 0:
            raise ConfigError("epsilon must be >= 0")
        if self.loss_name not in ("c_index", "integrated_brier"):
            raise ConfigError("loss_name must be 'c_index' or 'integrated_brier'")
        if not 0 < self.train_fraction < 1:
            raise ConfigError("train_fraction must lie in (0, 1)")
        if self.grid_step <= 0:
            raise ConfigError("grid_step must be positive")
        if self.envelope_mode not in ("population", "individual"):
            raise ConfigError("envelope_mode must be 'population' or 'individual'")
        if not self.zoo:
            raise ConfigError("zoo must list at least one model")
        try:
            check_unique_ids(self.zoo)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        self.probe_times = [float(t) for t in self.probe_times]

    def to_dict(self) -> dict:
        return {
            "data_path": str(self.data_path),
            "subset": self.subset,
            "censor_times": list(self.censor_times),
            "epsilon": self.epsilon,
            "loss_name": self.loss_name,
            "train_fraction": self.train_fraction,
            "seed": self.seed,
            "covariate_spec": self.covariate_spec.to_dict(),
            "zoo": [s.to_dict() for s in self.zoo],
            "grid_step": self.grid_step,
            "output_dir": str(self.output_dir),
            "envelope_mode": self.envelope_mode,
            "probe_times": list(self.probe_times),
            "save_models": self.save_models,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "data_path" not in d:
            raise ConfigError("config needs 'data_path'")
        try:
            if "covariate_spec" in d:
                d["covariate_spec"] = CovariateSpec.from_dict(d["covariate_spec"])
            if "zoo" in d:
                d["zoo"] = [ModelSpec.from_dict(s) for s in d["zoo"]]
            return cls(**d)
        except ConfigError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"invalid config: {exc}") from None

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            with open(path) as fh:
                return cls.from_dict(json.load(fh))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None


def _thread_count() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def _fmt_time(c: float) -> str:
    return str(int(c)) if float(c).is_integer() else repr(float(c))


def _fit_zoo(specs, train, seed):
    threads = _thread_count()

    def fit(spec):
        try:
            return spec.model_id, fit_model(spec, train, seed=seed), None
        except (ArithmeticError, ValueError, RuntimeError) as exc:
            return spec.model_id, None, f"{type(exc).__name__}: {exc}"

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(fit, specs))
    else:
        results = [fit(s) for s in specs]
    models = [m for _, m, err in results if m is not None]
    excluded = {mid: err for mid, _, err in results if err is not None}
    return models, excluded


def write_evaluation_csv(records, path) -> None:
    horizons = sorted({t for r in records for t in r.brier_at})
    with open(path, "w") as fh:
        cols = ["model_id", "c_index", "integrated_brier", "n_comparable_pairs"] + [
            f"brier@{_fmt_time(t)}" for t in horizons
        ]
        fh.write(",".join(cols) + "\n")
        for r in records:
            row = [r.model_id, repr(r.c_index), repr(r.integrated_brier), str(r.n_comparable_pairs)]
            row += [repr(r.brier_at[t]) if t in r.brier_at else "" for t in horizons]
            fh.write(",".join(row) + "\n")


def _member_summary(records, rset):
    member_c = np.array([r.c_index for r in records if r.model_id in set(rset.member_ids)])
    return {
        "size": rset.size,
        "member_ids": rset.member_ids,
        "c_index_mean": float(member_c.mean()),
        "c_index_sd": float(member_c.std(ddof=1)) if len(member_c) > 1 else None,
    }


def run_block(config: ExperimentConfig, table, censor_time: float, out_dir: Path) -> dict:
    """Full pipeline for one administrative censoring time."""
    c = float(censor_time)
    tag = f"{config.subset}_t{_fmt_time(c)}"
    data = build_survival_dataset(table, CensoringSpec(c), config.covariate_spec)
    train, test = split_train_test(data, config.train_fraction, config.seed)
    scaler = Standardizer.fit(train)
    train, test = scaler.transform(train), scaler.transform(test)

    models, excluded = _fit_zoo(config.zoo, train, config.seed)
    for mid, err in excluded.items():
        log.warning("%s: model %s excluded: %s", tag, mid, err)

    grid = default_grid(c, config.grid_step)
    horizons = np.unique(np.array([grid[len(grid) // 2], grid[(3 * len(grid)) // 4], grid[-1]]))
    g_hat = censoring_km(train.time, train.event)
    records = []
    for m in models:
        try:
            records.append(evaluate_model(m, test, horizons, g_hat, risk_horizon=c, ibs_grid=grid))
        except EvaluationError as exc:
            excluded[m.model_id] = str(exc)
            log.warning("%s: %s", tag, exc)
    if not records:
        raise RuntimeError("no model could be fitted and evaluated")
    records.sort(key=lambda r: r.model_id)
    scored = [m for m in models if m.model_id not in excluded]

    rset = build_rashomon_set(records, config.epsilon, config.loss_name)
    if config.envelope_mode == "population":
        env = build_envelope(rset, scored, grid, population=test)
    else:
        # the test unit with median observed time stands in for "a given unit"
        k = int(np.argsort(test.time, kind="stable")[len(test) // 2])
        env = build_envelope(rset, scored, grid, x=test.X[k])
    probes = sorted({t for t in config.probe_times if grid[0] <= t <= grid[-1]} | {float(grid[-1])})
    stats = envelope_stats(env, probes)

    artifacts = {
        "envelope_csv": f"{tag}_envelope.csv",
        "envelope_json": f"{tag}_envelope.json",
        "evaluation_csv": f"{tag}_evaluation.csv",
        "plot_svg": f"{tag}_envelope.svg",
    }
    write_envelope_csv(env, out_dir / artifacts["envelope_csv"])
    (out_dir / artifacts["envelope_json"]).write_text(json.dumps(envelope_to_dict(env), sort_keys=True) + "\n")
    write_evaluation_csv(records, out_dir / artifacts["evaluation_csv"])
    emit_plot(env, stats, out_dir / artifacts["plot_svg"], title=f"{config.subset}, censoring at t = {_fmt_time(c)}")
    if config.save_models:
        model_dir = out_dir / f"{tag}_models"
        model_dir.mkdir(exist_ok=True)
        for m in models:
            (model_dir / f"{m.model_id}.json").write_text(model_to_json(m) + "\n")
        artifacts["models_dir"] = model_dir.name

    return {
        "censor_time": c,
        "status": "ok",
        "n_units": len(data),
        "n_events": int(data.event.sum()),
        "split": {
            "train": len(train),
            "test": len(test),
            "train_events": int(train.event.sum()),
            "test_events": int(test.event.sum()),
        },
        "excluded_models": dict(sorted(excluded.items())),
        "evaluation": [r.to_dict() for r in records],
        "rashomon_set": rset.to_dict(),
        "summary": _member_summary(records, rset),
        "envelope_stats": stats.to_dict(),
        "artifacts": artifacts,
    }


def uncertainty_trend(blocks) -> dict | None:
    """Does mean envelope width grow from the earliest to the latest censoring time?"""
    ok = [b for b in blocks if b["status"] == "ok"]
    if len(ok) < 2:
        return None
    first = min(ok, key=lambda b: b["censor_time"])
    last = max(ok, key=lambda b: b["censor_time"])
    w0 = first["envelope_stats"]["mean_width"]
    w1 = last["envelope_stats"]["mean_width"]
    return {
        "from_censor_time": first["censor_time"],
        "to_censor_time": last["censor_time"],
        "mean_width_from": w0,
        "mean_width_to": w1,
        "width_grows": bool(w1 >= w0),
        "flag": None if w1 >= w0 else "mean envelope width did not grow with the censoring time",
    }


def run_experiment(config: ExperimentConfig) -> dict:
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    table = load_subset(config.data_path, config.subset)
    table, dropped = drop_constant_columns(table)

    blocks = []
    for c in config.censor_times:
        try:
            blocks.append(run_block(config, table, c, out_dir))
        except Exception as exc:  # one bad censoring time must not sink the others
            log.error("censor_time %s failed: %s", c, exc)
            blocks.append({"censor_time": float(c), "status": "failed", "error": f"{type(exc).__name__}: {exc}"})

    report = {
        "tool": {"name": "rashomon-surv", "version": __version__},
        "config": config.to_dict(),
        "subset": config.subset,
        "n_units": int(table["unit_number"].nunique()),
        "dropped_columns": dropped,
        "partial": any(b["status"] != "ok" for b in blocks),
        "blocks": blocks,
        "uncertainty_trend": uncertainty_trend(blocks),
        "notes": {
            "evaluation": "metrics computed on the held-out test split",
            "censoring": "administrative censoring applied to train and test splits alike",
            "envelope_mode": config.envelope_mode,
            "risk_score": "linear predictor for Cox-type models, 1 - S(censor_time | x) otherwise",
        },
        "published_reference": {
            "status": "reference (not reproducible): different model zoo, seeds and covariates",
            **PUBLISHED_REFERENCE[config.subset],
        },
    }
    report_path = out_dir / f"{config.subset}_report.json"
    report_path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    report["report_path"] = str(report_path)
    return report


def load_report(path) -> dict:
    with open(path) as fh:
        return json.load(fh)


_COMPARE_IGNORED = ("censor_times", "output_dir", "probe_times")


def compare_censoring(reports) -> list[dict]:
    """One row per censoring block across reports sharing everything but censor_time."""
    if not reports:
        raise ValueError("no reports to compare")

    def key(r):
        return {k: v for k, v in r["config"].items() if k not in _COMPARE_IGNORED}

    base = key(reports[0])
    for r in reports[1:]:
        if key(r) != base:
            diff = sorted(k for k in set(base) | set(key(r)) if base.get(k) != key(r).get(k))
            raise ValueError(f"reports differ beyond censor_time: {diff}")

    rows = []
    for r in reports:
        for b in r["blocks"]:
            if b["status"] != "ok":
                rows.append({"censor_time": b["censor_time"], "status": "failed"})
                continue
            st = b["envelope_stats"]
            rows.append(
                {
                    "censor_time": b["censor_time"],
                    "status": "ok",
                    "set_size": b["summary"]["size"],
                    "c_index_mean": b["summary"]["c_index_mean"],
                    "mean_width": st["mean_width"],
                    "max_width": st["max_width"],
                    "width_at": st["width_at"],
                }
            )
    return sorted(rows, key=lambda row: row["censor_time"])


def with_overrides(config: ExperimentConfig, output_dir=None, seed=None) -> ExperimentConfig:
    changes = {}
    if output_dir is not None:
        changes["output_dir"] = str(output_dir)
    if seed is not None:
        changes["seed"] = int(seed)
    return replace(config, **changes) if changes else config
