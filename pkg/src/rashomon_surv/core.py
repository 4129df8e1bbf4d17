"""Shared domain types: time-to-event datasets, step survival curves, model specs."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

# slack for floating point noise when checking monotonicity / bounds
_TOL = 1e-12


class InvalidCurveError(ValueError):
    pass


@dataclass(frozen=True)
class TimeToEventRow:
    unit_id: Any
    time: float
    event: bool
    covariates: tuple[float, ...]

    def __post_init__(self):
        if not self.time > 0:
            raise ValueError(f"time must be positive, got {self.time}")


class TimeToEventDataset:
    """Column-oriented survival data: one row per unit.

    Stored as numpy arrays (``time``, ``event``, ``X``) because every
    estimator works on the arrays; ``rows`` gives the row view.
    """

    def __init__(self, unit_ids, time, event, X, feature_names: Sequence[str]):
        self.unit_ids = np.asarray(unit_ids)
        self.time = np.asarray(time, dtype=float)
        self.event = np.asarray(event, dtype=bool)
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(len(self.time), -1)
        self.X = X
        self.feature_names = list(feature_names)

        n = len(self.time)
        if not (len(self.unit_ids) == len(self.event) == X.shape[0] == n):
            raise ValueError("unit_ids, time, event and X must have the same length")
        if X.shape[1] != len(self.feature_names):
            raise ValueError(
                f"{X.shape[1]} covariate columns but {len(self.feature_names)} feature names"
            )
        if n and np.any(self.time <= 0):
            raise ValueError("all observed times must be positive")
        for a in (self.time, self.event, self.X):
            a.setflags(write=False)

    @classmethod
    def from_rows(cls, rows: Sequence[TimeToEventRow], feature_names):
        p = len(feature_names)
        X = np.array([r.covariates for r in rows], dtype=float).reshape(len(rows), p)
        return cls(
            [r.unit_id for r in rows],
            [r.time for r in rows],
            [r.event for r in rows],
            X,
            feature_names,
        )

    @property
    def rows(self) -> list[TimeToEventRow]:
        return [
            TimeToEventRow(u, float(t), bool(e), tuple(float(v) for v in x))
            for u, t, e, x in zip(self.unit_ids, self.time, self.event, self.X)
        ]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    def __len__(self):
        return len(self.time)

    def subset(self, idx) -> "TimeToEventDataset":
        idx = np.asarray(idx)
        return TimeToEventDataset(
            self.unit_ids[idx], self.time[idx], self.event[idx], self.X[idx], self.feature_names
        )

    def with_covariates(self, X) -> "TimeToEventDataset":
        return TimeToEventDataset(self.unit_ids, self.time, self.event, X, self.feature_names)

    def __repr__(self):
        return (
            f"TimeToEventDataset(n={len(self)}, events={int(self.event.sum())}, "
            f"features={self.n_features})"
        )


@dataclass(frozen=True, eq=False)
class SurvivalCurve:
    """Right-continuous, non-increasing step function S(t).

    ``S(t) = probs[i]`` for ``times[i] <= t < times[i+1]``, 1 before the first
    grid time, and the last value past the last grid time.
    """

    times: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        times = np.array(self.times, dtype=float).ravel()
        probs = np.array(self.probs, dtype=float).ravel()
        if times.shape != probs.shape:
            raise InvalidCurveError("times and probs must have equal length")
        if times.size == 0:
            raise InvalidCurveError("a survival curve needs at least one grid time")
        if np.any(times < 0) or np.any(np.diff(times) <= 0):
            raise InvalidCurveError("times must be non-negative and strictly increasing")
        if not np.all(np.isfinite(probs)):
            raise InvalidCurveError("probs must be finite")
        if np.any(probs < -_TOL) or np.any(probs > 1 + _TOL):
            raise InvalidCurveError("probs must lie in [0, 1]")
        if np.any(np.diff(probs) > _TOL):
            raise InvalidCurveError("probs must be non-increasing")
        # absorb rounding noise so downstream comparisons are exact
        probs = np.minimum.accumulate(np.clip(probs, 0.0, 1.0))
        times.setflags(write=False)
        probs.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "probs", probs)

    def __call__(self, t):
        return curve_eval(self, t)

    def __eq__(self, other):
        if not isinstance(other, SurvivalCurve):
            return NotImplemented
        return np.array_equal(self.times, other.times) and np.array_equal(self.probs, other.probs)

    def __len__(self):
        return len(self.times)

    def to_dict(self) -> dict:
        return {"times": self.times.tolist(), "probs": self.probs.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "SurvivalCurve":
        return cls(np.asarray(d["times"], float), np.asarray(d["probs"], float))


def curve_eval(curve: SurvivalCurve, t):
    """Evaluate the step function at ``t`` (scalar or array)."""
    t_arr = np.asarray(t, dtype=float)
    idx = np.searchsorted(curve.times, t_arr, side="right") - 1
    out = np.where(idx >= 0, curve.probs[np.clip(idx, 0, None)], 1.0)
    return float(out) if out.ndim == 0 else out


def curve_eval_left(curve: SurvivalCurve, t):
    """Left limit S(t-): value at the largest grid time strictly below ``t``."""
    t_arr = np.asarray(t, dtype=float)
    idx = np.searchsorted(curve.times, t_arr, side="left") - 1
    out = np.where(idx >= 0, curve.probs[np.clip(idx, 0, None)], 1.0)
    return float(out) if out.ndim == 0 else out


def _check_grid(grid) -> np.ndarray:
    grid = np.asarray(grid, dtype=float).ravel()
    if grid.size == 0:
        raise ValueError("grid must contain at least one time")
    if np.any(grid < 0) or np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be non-negative and strictly increasing")
    return grid


def curve_restrict(curve: SurvivalCurve, grid) -> SurvivalCurve:
    grid = _check_grid(grid)
    return SurvivalCurve(grid, curve_eval(curve, grid))


def mean_curve(curves: Sequence[SurvivalCurve], grid) -> SurvivalCurve:
    if len(curves) == 0:
        raise ValueError("mean_curve needs at least one curve")
    grid = _check_grid(grid)
    stacked = np.vstack([curve_eval(c, grid) for c in curves])
    # columns where every member agrees keep the exact value
    same = stacked.min(axis=0) == stacked.max(axis=0)
    return SurvivalCurve(grid, np.where(same, stacked[0], stacked.mean(axis=0)))


def step_curve_from_cumhaz(times, cumhaz) -> SurvivalCurve:
    """S = exp(-H) on the jump times of a cumulative hazard."""
    return SurvivalCurve(times, np.exp(-np.asarray(cumhaz, dtype=float)))


def default_grid(censor_time: float, step: float = 1.0) -> np.ndarray:
    """Cycle grid step, 2*step, ... up to censor_time inclusive."""
    n = int(np.floor(censor_time / step + 1e-9))
    return step * np.arange(1, n + 1, dtype=float)


class ModelFamily(str, enum.Enum):
    KAPLAN_MEIER = "kaplan_meier"
    NELSON_AALEN = "nelson_aalen"
    COX_PH = "cox_ph"
    COX_RIDGE = "cox_ridge"
    COX_LASSO = "cox_lasso"
    SURVIVAL_TREE = "survival_tree"
    RANDOM_SURVIVAL_FOREST = "random_survival_forest"
    BOOSTED_COX = "boosted_cox"


@dataclass(frozen=True)
class ModelSpec:
    model_id: str
    family: ModelFamily
    hyperparameters: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "family", ModelFamily(self.family))
        object.__setattr__(self, "hyperparameters", dict(self.hyperparameters))

    def to_dict(self) -> dict:
        return {
            "model_id": self.model_id,
            "family": self.family.value,
            "hyperparameters": dict(sorted(self.hyperparameters.items())),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModelSpec":
        return cls(d["model_id"], ModelFamily(d["family"]), d.get("hyperparameters", {}))


class FittedModel:
    """Base class for fitted estimators.

    Subclasses implement ``_predict_curve(x)`` returning a SurvivalCurve on
    their native grid. ``risk_score`` defaults to ``1 - S(horizon | x)``;
    Cox-type models override it with the linear predictor.
    """

    spec: ModelSpec
    n_features: int

    def _predict_curve(self, x: np.ndarray) -> SurvivalCurve:
        raise NotImplementedError

    def _check_x(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float).ravel()
        if x.shape[0] != self.n_features:
            raise ValueError(
                f"{self.spec.model_id}: expected {self.n_features} covariates, got {x.shape[0]}"
            )
        return x

    def predict_survival(self, x, grid=None) -> SurvivalCurve:
        curve = self._predict_curve(self._check_x(x))
        if grid is None:
            return curve
        return curve_restrict(curve, grid)

    def predict_survival_matrix(self, X, grid) -> np.ndarray:
        """Rows of S(grid | x_i); shape (n, len(grid))."""
        grid = _check_grid(grid)
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.vstack([curve_eval(self.predict_survival(x), grid) for x in X])

    def risk_score(self, X, horizon: float) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.array([1.0 - curve_eval(self.predict_survival(x), horizon) for x in X])

    @property
    def model_id(self) -> str:
        return self.spec.model_id

    def to_dict(self) -> dict:
        raise NotImplementedError
