"""CMAPSS run-to-failure files -> censored per-unit survival datasets."""
from __future__ import annotations

import csv
import enum
import io
import os
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable

import numpy as np
import pandas as pd

from .core import TimeToEventDataset

OP_COLUMNS = [f"op_set_{i}" for i in range(1, 4)]
SENSOR_COLUMNS = [f"sensor_{i}" for i in range(1, 22)]
FEATURE_COLUMNS = OP_COLUMNS + SENSOR_COLUMNS
CMAPSS_COLUMNS = ["unit_number", "time_in_cycles"] + FEATURE_COLUMNS
SUBSETS = ("FD001", "FD002", "FD003", "FD004")


class CmapssParseError(ValueError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


@dataclass(frozen=True)
class CmapssRecord:
    unit_number: int
    time_in_cycles: int
    features: tuple[float, ...]

    def __getattr__(self, name):
        # op_set_1 .. sensor_21 accessors
        try:
            return self.features[FEATURE_COLUMNS.index(name)]
        except ValueError:
            raise AttributeError(name) from None


@dataclass(frozen=True)
class CensoringSpec:
    censor_time: float

    def __post_init__(self):
        if not self.censor_time > 0:
            raise ValueError("censor_time must be positive")


class CovariateStrategy(str, enum.Enum):
    FIRST_CYCLE = "first_cycle"
    WINDOW_MEAN = "window_mean"


@dataclass(frozen=True)
class CovariateSpec:
    strategy: CovariateStrategy = CovariateStrategy.WINDOW_MEAN
    window_length: int = 30

    def __post_init__(self):
        object.__setattr__(self, "strategy", CovariateStrategy(self.strategy))
        if self.window_length < 1:
            raise ValueError("window_length must be >= 1")

    def to_dict(self):
        return {"strategy": self.strategy.value, "window_length": self.window_length}

    @classmethod
    def from_dict(cls, d):
        return cls(CovariateStrategy(d.get("strategy", "window_mean")), int(d.get("window_length", 30)))


def parse_cmapss(source: IO | str | bytes | os.PathLike) -> pd.DataFrame:
    """Parse whitespace-delimited CMAPSS text into a record table.

    Accepts a path, raw bytes/str content, or an open (text or binary) stream.
    Returns a DataFrame with ``CMAPSS_COLUMNS`` in input order.
    """
    if isinstance(source, (str, os.PathLike)) and not (isinstance(source, str) and "\n" in source):
        with open(source, "rb") as fh:
            data = fh.read()
    elif isinstance(source, (bytes, str)):
        data = source
    else:
        data = source.read()
    if isinstance(data, bytes):
        data = data.decode("ascii")

    rows = []
    for line_no, line in enumerate(io.StringIO(data), start=1):
        tokens = line.split()
        if not tokens:
            continue
        if len(tokens) != len(CMAPSS_COLUMNS):
            raise CmapssParseError(line_no, f"expected {len(CMAPSS_COLUMNS)} columns, got {len(tokens)}")
        try:
            values = [float(tok) for tok in tokens]
        except ValueError as exc:
            raise CmapssParseError(line_no, str(exc)) from None
        if values[0] != int(values[0]) or values[1] != int(values[1]) or values[0] < 1 or values[1] < 1:
            raise CmapssParseError(line_no, "unit_number and time_in_cycles must be positive integers")
        rows.append(values)

    df = pd.DataFrame(rows, columns=CMAPSS_COLUMNS) if rows else pd.DataFrame(columns=CMAPSS_COLUMNS)
    df[["unit_number", "time_in_cycles"]] = df[["unit_number", "time_in_cycles"]].astype(int)
    df[FEATURE_COLUMNS] = df[FEATURE_COLUMNS].astype(float)
    return df


def records_from_table(df: pd.DataFrame) -> list[CmapssRecord]:
    feats = [c for c in FEATURE_COLUMNS if c in df.columns]
    return [
        CmapssRecord(int(u), int(t), tuple(float(v) for v in row))
        for u, t, row in zip(df["unit_number"], df["time_in_cycles"], df[feats].to_numpy())
    ]


def check_consecutive_cycles(df: pd.DataFrame) -> None:
    for unit, g in df.groupby("unit_number", sort=False):
        cycles = g["time_in_cycles"].to_numpy()
        if not np.array_equal(cycles, np.arange(1, len(cycles) + 1)):
            raise ValueError(f"unit {unit}: cycles are not consecutive from 1")


def load_subset(data_dir: str | os.PathLike, subset: str) -> pd.DataFrame:
    if subset not in SUBSETS:
        raise ValueError(f"unknown subset {subset!r}; expected one of {SUBSETS}")
    path = Path(data_dir)
    if path.is_dir():
        path = path / f"train_{subset}.txt"
    return parse_cmapss(path)


def drop_constant_columns(table: pd.DataFrame) -> tuple[pd.DataFrame, list[str]]:
    """Remove feature columns holding a single value across all rows."""
    if len(table) == 0:
        raise ValueError("cannot inspect columns of an empty table")
    features = [c for c in table.columns if c not in ("unit_number", "time_in_cycles")]
    dropped = [c for c in features if table[c].nunique(dropna=False) < 2]
    if len(dropped) == len(features):
        raise ValueError("every feature column is constant; no covariates remain")
    return table.drop(columns=dropped), dropped


def _unit_covariates(values: np.ndarray, spec: CovariateSpec) -> np.ndarray:
    if spec.strategy is CovariateStrategy.FIRST_CYCLE:
        return values[0]
    # shorter trajectories fall back to the mean of what is available
    return values[: spec.window_length].mean(axis=0)


def build_survival_dataset(
    table: pd.DataFrame,
    censoring: CensoringSpec,
    covariates: CovariateSpec = CovariateSpec(),
) -> TimeToEventDataset:
    """Administratively censor run-to-failure trajectories at a fixed cycle.

    A unit failing at or before ``censor_time`` is an event at its last cycle;
    others are censored at ``censor_time``. Covariates only read cycles
    ``<= min(T_fail, censor_time)``.
    """
    if len(table) == 0:
        raise ValueError("no records to build a dataset from")
    features = [c for c in table.columns if c not in ("unit_number", "time_in_cycles")]
    c = float(censoring.censor_time)

    ids, times, events, X = [], [], [], []
    for unit, g in table.groupby("unit_number", sort=True):
        cycles = g["time_in_cycles"].to_numpy()
        t_fail = float(cycles.max())
        if t_fail <= c:
            times.append(t_fail)
            events.append(True)
        else:
            times.append(c)
            events.append(False)
        visible = g.loc[cycles <= min(t_fail, c)].sort_values("time_in_cycles")
        X.append(_unit_covariates(visible[features].to_numpy(dtype=float), covariates))
        ids.append(int(unit))
    if not any(events):
        raise ValueError(f"no unit fails by cycle {c:g}; nothing to fit")
    return TimeToEventDataset(ids, times, events, np.array(X), features)


def split_train_test(data: TimeToEventDataset, train_fraction: float = 0.8, seed: int = 0):
    """Unit-level random partition; train size is round(n * fraction)."""
    if not 0 < train_fraction < 1:
        raise ValueError("train_fraction must lie strictly between 0 and 1")
    n = len(data)
    if n < 2:
        raise ValueError("need at least two units to split")
    n_train = int(round(n * train_fraction))
    n_train = min(max(n_train, 1), n - 1)
    perm = np.random.default_rng(seed).permutation(n)
    train_idx = np.sort(perm[:n_train])
    test_idx = np.sort(perm[n_train:])
    return data.subset(train_idx), data.subset(test_idx)


@dataclass(frozen=True)
class Standardizer:
    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, data: TimeToEventDataset) -> "Standardizer":
        mean = data.X.mean(axis=0)
        scale = data.X.std(axis=0)
        # a column constant within the training split carries no information
        scale = np.where(scale > 0, scale, 1.0)
        return cls(mean, scale)

    def transform(self, data: TimeToEventDataset) -> TimeToEventDataset:
        return data.with_covariates((data.X - self.mean) / self.scale)


def write_dataset_csv(data: TimeToEventDataset, path_or_buf) -> None:
    close = False
    if isinstance(path_or_buf, (str, os.PathLike)):
        path_or_buf = open(path_or_buf, "w", newline="")
        close = True
    try:
        w = csv.writer(path_or_buf, lineterminator="\n")
        w.writerow(["unit_id", "time", "event"] + data.feature_names)
        for u, t, e, x in zip(data.unit_ids, data.time, data.event, data.X):
            w.writerow([u, repr(float(t)), int(e)] + [repr(float(v)) for v in x])
    finally:
        if close:
            path_or_buf.close()


def read_dataset_csv(path_or_buf) -> TimeToEventDataset:
    df = pd.read_csv(path_or_buf, float_precision="round_trip")
    missing = {"unit_id", "time", "event"} - set(df.columns)
    if missing:
        raise ValueError(f"dataset CSV lacks columns {sorted(missing)}")
    features = [c for c in df.columns if c not in ("unit_id", "time", "event")]
    return TimeToEventDataset(
        df["unit_id"].to_numpy(),
        df["time"].to_numpy(float),
        df["event"].to_numpy().astype(bool),
        df[features].to_numpy(float),
        features,
    )


def event_counts(table: pd.DataFrame, censor_times: Iterable[float]) -> dict[float, int]:
    t_fail = table.groupby("unit_number")["time_in_cycles"].max().to_numpy()
    return {float(c): int((t_fail <= c).sum()) for c in censor_times}
