"""Survival model zoo behind one fit / predict interface."""
from __future__ import annotations

import json
from typing import Sequence

from ..core import FittedModel, ModelFamily, ModelSpec, TimeToEventDataset
from .boosting import fit_boosted_cox
from .cox import CoxConvergenceError, CoxSeparationError, LinearRiskModel, fit_cox
from .nonparametric import (
    KaplanMeierModel,
    NelsonAalenModel,
    NoEventsError,
    fit_kaplan_meier,
    fit_nelson_aalen,
)
from .tree import (
    RandomSurvivalForestModel,
    SurvivalTreeModel,
    fit_random_survival_forest,
    fit_survival_tree,
)

MODEL_FORMAT_VERSION = 1

DEFAULT_HYPERPARAMETERS = {
    ModelFamily.KAPLAN_MEIER: {},
    ModelFamily.NELSON_AALEN: {},
    ModelFamily.COX_PH: {},
    ModelFamily.COX_RIDGE: {"l2": 0.1},
    ModelFamily.COX_LASSO: {"l1": 0.05},
    ModelFamily.SURVIVAL_TREE: {"min_node_size": 5, "max_depth": 4},
    ModelFamily.RANDOM_SURVIVAL_FOREST: {"n_trees": 200, "min_node_size": 5},
    ModelFamily.BOOSTED_COX: {"n_rounds": 250, "learning_rate": 0.1},
}


def default_zoo() -> list[ModelSpec]:
    return [ModelSpec(f.value, f, dict(DEFAULT_HYPERPARAMETERS[f])) for f in ModelFamily]


def fit_model(spec: ModelSpec, data: TimeToEventDataset, seed: int = 0, n_jobs: int = 1) -> FittedModel:
    """Fit one zoo member; ``seed`` is used when the spec does not pin one."""
    hp = {**DEFAULT_HYPERPARAMETERS[spec.family], **spec.hyperparameters}
    f = spec.family
    if f is ModelFamily.KAPLAN_MEIER:
        return fit_kaplan_meier(data, spec)
    if f is ModelFamily.NELSON_AALEN:
        return fit_nelson_aalen(data, spec)
    if f in (ModelFamily.COX_PH, ModelFamily.COX_RIDGE, ModelFamily.COX_LASSO):
        return fit_cox(data, l2=float(hp.get("l2", 0.0)), l1=float(hp.get("l1", 0.0)), spec=spec)
    if f is ModelFamily.SURVIVAL_TREE:
        return fit_survival_tree(data, int(hp["min_node_size"]), hp.get("max_depth"), spec=spec)
    if f is ModelFamily.RANDOM_SURVIVAL_FOREST:
        return fit_random_survival_forest(
            data,
            n_trees=int(hp["n_trees"]),
            mtry=hp.get("mtry"),
            min_node_size=int(hp["min_node_size"]),
            seed=int(hp.get("seed", seed)),
            bootstrap=bool(hp.get("bootstrap", True)),
            max_depth=hp.get("max_depth"),
            n_jobs=n_jobs,
            spec=spec,
        )
    if f is ModelFamily.BOOSTED_COX:
        return fit_boosted_cox(
            data,
            n_rounds=int(hp["n_rounds"]),
            learning_rate=float(hp["learning_rate"]),
            seed=int(hp.get("seed", seed)),
            spec=spec,
        )
    raise ValueError(f"unsupported family {f}")


_CLASSES = {
    ModelFamily.KAPLAN_MEIER: KaplanMeierModel,
    ModelFamily.NELSON_AALEN: NelsonAalenModel,
    ModelFamily.COX_PH: LinearRiskModel,
    ModelFamily.COX_RIDGE: LinearRiskModel,
    ModelFamily.COX_LASSO: LinearRiskModel,
    ModelFamily.BOOSTED_COX: LinearRiskModel,
    ModelFamily.SURVIVAL_TREE: SurvivalTreeModel,
    ModelFamily.RANDOM_SURVIVAL_FOREST: RandomSurvivalForestModel,
}


def model_to_json(model: FittedModel) -> str:
    doc = {
        "format": "rashomon_surv.model",
        "version": MODEL_FORMAT_VERSION,
        "spec": model.spec.to_dict(),
        "n_features": model.n_features,
        "state": model.to_dict(),
    }
    return json.dumps(doc, sort_keys=True)


def model_from_json(text: str) -> FittedModel:
    doc = json.loads(text)
    if doc.get("format") != "rashomon_surv.model":
        raise ValueError("not a serialized rashomon_surv model")
    if doc.get("version") != MODEL_FORMAT_VERSION:
        raise ValueError(f"unsupported model format version {doc.get('version')}")
    spec = ModelSpec.from_dict(doc["spec"])
    return _CLASSES[spec.family].from_dict(spec, int(doc["n_features"]), doc["state"])


def check_unique_ids(specs: Sequence[ModelSpec]) -> None:
    seen = set()
    for s in specs:
        if s.model_id in seen:
            raise ValueError(f"duplicate model_id {s.model_id!r}")
        seen.add(s.model_id)


__all__ = [
    "CoxConvergenceError",
    "CoxSeparationError",
    "DEFAULT_HYPERPARAMETERS",
    "NoEventsError",
    "default_zoo",
    "fit_boosted_cox",
    "fit_cox",
    "fit_kaplan_meier",
    "fit_model",
    "fit_nelson_aalen",
    "fit_random_survival_forest",
    "fit_survival_tree",
    "model_from_json",
    "model_to_json",
]
