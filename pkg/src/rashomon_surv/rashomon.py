"""Rashomon survival sets and their survival-curve envelopes."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .core import FittedModel, SurvivalCurve, TimeToEventDataset, _check_grid, curve_eval, mean_curve

LOSSES = ("c_index", "integrated_brier")


@dataclass(frozen=True)
class RashomonSet:
    epsilon: float
    best_model_id: str
    best_loss: float
    members: tuple[tuple[str, float], ...]
    loss_name: str = "c_index"

    @property
    def member_ids(self) -> list[str]:
        return [m for m, _ in self.members]

    @property
    def size(self) -> int:
        return len(self.members)

    def to_dict(self):
        return {
            "epsilon": self.epsilon,
            "loss_name": self.loss_name,
            "best_model_id": self.best_model_id,
            "best_loss": self.best_loss,
            "members": [{"model_id": m, "loss": l} for m, l in self.members],
        }


def rashomon_filter(losses: Mapping[str, float], epsilon: float) -> list[tuple[str, float]]:
    """All (id, loss) with loss <= min loss + epsilon, ascending by (loss, id)."""
    if not losses:
        raise ValueError("no models to filter")
    if epsilon < 0:
        raise ValueError("epsilon must be non-negative")
    best = min(losses.values())
    keep = [(k, float(v)) for k, v in losses.items() if v <= best + epsilon]
    return sorted(keep, key=lambda kv: (kv[1], kv[0]))


def build_rashomon_set(records, epsilon: float = 0.05, loss_name: str = "c_index") -> RashomonSet:
    """Models whose loss is within ``epsilon`` of the best one.

    With ``loss_name="c_index"`` the loss is ``1 - C`` so membership reads
    ``C >= C_best - epsilon``.
    """
    if loss_name not in LOSSES:
        raise ValueError(f"unknown loss {loss_name!r}; expected one of {LOSSES}")
    records = list(records)
    if not records:
        raise ValueError("no evaluation records")
    members = rashomon_filter({r.model_id: r.loss(loss_name) for r in records}, epsilon)
    best_id, best_loss = members[0]
    return RashomonSet(float(epsilon), best_id, best_loss, tuple(members), loss_name)


@dataclass
class RashomonEnvelope:
    grid: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    reference: SurvivalCurve
    member_curves: dict = field(default_factory=dict)

    def __post_init__(self):
        self.grid = _check_grid(self.grid)
        self.lower = np.asarray(self.lower, dtype=float)
        self.upper = np.asarray(self.upper, dtype=float)
        if not (self.lower.shape == self.upper.shape == self.grid.shape):
            raise ValueError("grid, lower and upper must have equal length")
        if np.any(self.lower < 0) or np.any(self.upper > 1) or np.any(self.lower > self.upper):
            raise ValueError("envelope must satisfy 0 <= lower <= upper <= 1")

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower

    @property
    def reference_values(self) -> np.ndarray:
        return curve_eval(self.reference, self.grid)


def envelope_from_curves(curves: Mapping[str, SurvivalCurve], reference_id: str, grid) -> RashomonEnvelope:
    grid = _check_grid(grid)
    if reference_id not in curves:
        raise KeyError(f"reference model {reference_id!r} not among member curves")
    ids = sorted(curves)
    values = np.vstack([curve_eval(curves[k], grid) for k in ids])
    restricted = {k: SurvivalCurve(grid, v) for k, v in zip(ids, values)}
    return RashomonEnvelope(
        grid, values.min(axis=0), values.max(axis=0), restricted[reference_id], restricted
    )


def build_envelope(
    rset: RashomonSet,
    models: Sequence[FittedModel],
    grid,
    x=None,
    population: TimeToEventDataset | None = None,
) -> RashomonEnvelope:
    """Pointwise [min, max] of member survival curves on ``grid``.

    Individual mode (``x``): each member's curve for one covariate vector.
    Population mode (``population``): each member's mean curve over all units.
    """
    if (x is None) == (population is None):
        raise ValueError("pass exactly one of x or population")
    grid = _check_grid(grid)
    by_id = {m.model_id: m for m in models}
    missing = [m for m in rset.member_ids if m not in by_id]
    if missing:
        raise KeyError(f"Rashomon member(s) {missing} missing from the provided models")

    curves = {}
    for mid in rset.member_ids:
        model = by_id[mid]
        if x is not None:
            curves[mid] = model.predict_survival(x, grid)
        else:
            curves[mid] = mean_curve([model.predict_survival(xi) for xi in population.X], grid)
    return envelope_from_curves(curves, rset.best_model_id, grid)


@dataclass
class EnvelopeStats:
    width_at: dict
    mean_width: float
    max_width: float
    argmax_time: float

    def to_dict(self):
        return {
            "width_at": {repr(float(k)): v for k, v in self.width_at.items()},
            "mean_width": self.mean_width,
            "max_width": self.max_width,
            "argmax_time": self.argmax_time,
        }


def envelope_stats(env: RashomonEnvelope, probe_times=()) -> EnvelopeStats:
    probe = np.atleast_1d(np.asarray(probe_times, dtype=float))
    lo, hi = env.grid[0], env.grid[-1]
    bad = probe[(probe < lo) | (probe > hi)]
    if bad.size:
        raise ValueError(f"probe times {bad.tolist()} outside envelope span [{lo}, {hi}]")
    width = env.width
    # step-function lookup: width in force at the largest grid time <= t
    idx = np.searchsorted(env.grid, probe, side="right") - 1
    width_at = {float(t): float(width[i]) for t, i in zip(probe, idx)}
    k = int(np.argmax(width))
    return EnvelopeStats(width_at, float(width.mean()), float(width[k]), float(env.grid[k]))


def write_envelope_csv(env: RashomonEnvelope, path) -> None:
    ref = env.reference_values
    with open(path, "w", newline="") as fh:
        fh.write("time,lower,reference,upper\n")
        for t, l, r, u in zip(env.grid, env.lower, ref, env.upper):
            fh.write(",".join(repr(float(v)) for v in (t, l, r, u)) + "\n")


def read_envelope_csv(path) -> RashomonEnvelope:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    grid, lower, ref, upper = data.T
    return RashomonEnvelope(grid, lower, upper, SurvivalCurve(grid, ref), {})


def envelope_to_dict(env: RashomonEnvelope) -> dict:
    return {
        "grid": env.grid.tolist(),
        "lower": env.lower.tolist(),
        "upper": env.upper.tolist(),
        "reference": env.reference_values.tolist(),
        "members": {k: v.probs.tolist() for k, v in sorted(env.member_curves.items())},
    }
