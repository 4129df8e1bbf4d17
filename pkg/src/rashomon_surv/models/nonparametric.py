"""Kaplan-Meier and Nelson-Aalen estimators (covariate-free)."""
from __future__ import annotations

import numpy as np

from ..core import FittedModel, ModelFamily, ModelSpec, SurvivalCurve, TimeToEventDataset


class NoEventsError(ValueError):
    pass


def event_table(time, event):
    """Distinct event times with deaths ``d`` and at-risk counts ``n``."""
    time = np.asarray(time, dtype=float)
    event = np.asarray(event, dtype=bool)
    if not event.any():
        raise NoEventsError("no observed events")
    uniq = np.unique(time[event])
    d = np.bincount(np.searchsorted(uniq, time[event]), minlength=len(uniq)).astype(float)
    sorted_t = np.sort(time)
    n = (len(time) - np.searchsorted(sorted_t, uniq, side="left")).astype(float)
    return uniq, d, n


def kaplan_meier_curve(time, event) -> SurvivalCurve:
    t, d, n = event_table(time, event)
    return SurvivalCurve(t, np.cumprod(1.0 - d / n))


def nelson_aalen_cumhaz(time, event):
    t, d, n = event_table(time, event)
    return t, np.cumsum(d / n)


def censoring_km(time, event) -> SurvivalCurve:
    """KM of the censoring distribution (event indicator flipped).

    With no censored observations the censoring survival is identically 1.
    """
    event = np.asarray(event, dtype=bool)
    if event.all():
        return SurvivalCurve([float(np.min(time))], [1.0])
    return kaplan_meier_curve(time, ~event)


class KaplanMeierModel(FittedModel):
    def __init__(self, spec: ModelSpec, curve: SurvivalCurve, n_features: int):
        self.spec = spec
        self.curve = curve
        self.n_features = n_features

    def _predict_curve(self, x):
        return self.curve

    def to_dict(self):
        return {"curve": self.curve.to_dict()}

    @classmethod
    def from_dict(cls, spec, n_features, d):
        return cls(spec, SurvivalCurve.from_dict(d["curve"]), n_features)


class NelsonAalenModel(FittedModel):
    def __init__(self, spec: ModelSpec, times, cumhaz, n_features: int):
        self.spec = spec
        self.times = np.asarray(times, dtype=float)
        self.cumhaz = np.asarray(cumhaz, dtype=float)
        self.curve = SurvivalCurve(self.times, np.exp(-self.cumhaz))
        self.n_features = n_features

    def _predict_curve(self, x):
        return self.curve

    def to_dict(self):
        return {"times": self.times.tolist(), "cumhaz": self.cumhaz.tolist()}

    @classmethod
    def from_dict(cls, spec, n_features, d):
        return cls(spec, d["times"], d["cumhaz"], n_features)


def fit_kaplan_meier(data: TimeToEventDataset, spec: ModelSpec | None = None) -> KaplanMeierModel:
    spec = spec or ModelSpec("kaplan_meier", ModelFamily.KAPLAN_MEIER)
    return KaplanMeierModel(spec, kaplan_meier_curve(data.time, data.event), data.n_features)


def fit_nelson_aalen(data: TimeToEventDataset, spec: ModelSpec | None = None) -> NelsonAalenModel:
    spec = spec or ModelSpec("nelson_aalen", ModelFamily.NELSON_AALEN)
    t, H = nelson_aalen_cumhaz(data.time, data.event)
    return NelsonAalenModel(spec, t, H, data.n_features)
