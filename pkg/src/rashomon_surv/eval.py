"""Concordance and IPCW Brier scoring of fitted survival models."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.integrate import trapezoid

from .core import FittedModel, SurvivalCurve, TimeToEventDataset, curve_eval, curve_eval_left


class MetricError(ValueError):
    pass


class EvaluationError(RuntimeError):
    def __init__(self, model_id, cause):
        super().__init__(f"model {model_id!r}: {cause}")
        self.model_id = model_id


def c_index(predicted_risk, times, events) -> tuple[float, int]:
    """Harrell's C over pairs with times[i] < times[j] and events[i].

    Tied risks get half credit; pairs with tied times are not comparable.
    """
    risk = np.asarray(predicted_risk, dtype=float)
    times = np.asarray(times, dtype=float)
    events = np.asarray(events, dtype=bool)
    if not (len(risk) == len(times) == len(events)):
        raise MetricError("risk, times and events must have equal length")
    comparable = (times[:, None] < times[None, :]) & events[:, None]
    pairs = int(comparable.sum())
    if pairs == 0:
        raise MetricError("no comparable pairs")
    diff = risk[:, None] - risk[None, :]
    score = np.where(diff > 0, 1.0, np.where(diff == 0, 0.5, 0.0))
    return float(score[comparable].sum() / pairs), pairs


def brier_from_predictions(surv_at_t, times, events, t: float, censor_km: SurvivalCurve) -> float:
    """IPCW Brier score at ``t`` given each subject's predicted S(t | x_i)."""
    s = np.asarray(surv_at_t, dtype=float)
    times = np.asarray(times, dtype=float)
    events = np.asarray(events, dtype=bool)
    failed = (times <= t) & events
    alive = times > t

    g_t = curve_eval(censor_km, t)
    g_fail = curve_eval_left(censor_km, times[failed])
    if (alive.any() and g_t <= 0) or np.any(g_fail <= 0):
        raise MetricError(f"censoring survival is zero at horizon {t}; Brier score not estimable")

    total = 0.0
    if failed.any():
        total += np.sum(s[failed] ** 2 / g_fail)
    if alive.any():
        total += np.sum((1.0 - s[alive]) ** 2) / g_t
    return float(total / len(times))


def brier_score(model: FittedModel, test: TimeToEventDataset, t: float, censor_km: SurvivalCurve) -> float:
    s = np.array([curve_eval(model.predict_survival(x), t) for x in test.X])
    return brier_from_predictions(s, test.time, test.event, t, censor_km)


def integrated_brier(model, test, grid, censor_km) -> float:
    """Trapezoidal mean of the Brier curve over ``grid``."""
    grid = np.asarray(grid, dtype=float)
    S = model.predict_survival_matrix(test.X, grid)
    scores = np.array(
        [brier_from_predictions(S[:, k], test.time, test.event, t, censor_km) for k, t in enumerate(grid)]
    )
    if len(grid) == 1:
        return float(scores[0])
    return float(trapezoid(scores, grid) / (grid[-1] - grid[0]))


@dataclass
class EvaluationRecord:
    model_id: str
    c_index: float
    integrated_brier: float
    n_comparable_pairs: int
    brier_at: dict = field(default_factory=dict)

    def loss(self, name: str) -> float:
        if name == "c_index":
            return 1.0 - self.c_index
        if name == "integrated_brier":
            return self.integrated_brier
        raise ValueError(f"unknown loss {name!r}; expected 'c_index' or 'integrated_brier'")

    def to_dict(self):
        return {
            "model_id": self.model_id,
            "c_index": self.c_index,
            "integrated_brier": self.integrated_brier,
            "n_comparable_pairs": self.n_comparable_pairs,
            "brier_at": {repr(float(k)): v for k, v in sorted(self.brier_at.items())},
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            d["model_id"],
            float(d["c_index"]),
            float(d["integrated_brier"]),
            int(d["n_comparable_pairs"]),
            {float(k): float(v) for k, v in d.get("brier_at", {}).items()},
        )


def evaluate_model(model, test, horizons, censor_km, risk_horizon, ibs_grid=None) -> EvaluationRecord:
    try:
        c, pairs = c_index(model.risk_score(test.X, risk_horizon), test.time, test.event)
        brier_at = {float(t): brier_score(model, test, float(t), censor_km) for t in horizons}
        grid = horizons if ibs_grid is None else ibs_grid
        ibs = integrated_brier(model, test, grid, censor_km)
    except (MetricError, ValueError) as exc:
        raise EvaluationError(model.model_id, exc) from exc
    return EvaluationRecord(model.model_id, c, ibs, pairs, brier_at)


def evaluate_zoo(
    models: Sequence[FittedModel],
    test: TimeToEventDataset,
    horizons,
    censor_km: SurvivalCurve,
    risk_horizon: float | None = None,
    ibs_grid=None,
) -> list[EvaluationRecord]:
    """One record per model, ordered by model_id.

    ``risk_horizon`` is where curve-only models are ranked by 1 - S(t | x);
    it defaults to the last horizon.
    """
    horizons = np.atleast_1d(np.asarray(horizons, dtype=float))
    if risk_horizon is None:
        risk_horizon = float(horizons[-1])
    records = [evaluate_model(m, test, horizons, censor_km, risk_horizon, ibs_grid) for m in models]
    return sorted(records, key=lambda r: r.model_id)
