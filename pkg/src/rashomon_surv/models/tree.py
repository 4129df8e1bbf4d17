"""Log-rank survival trees and random survival forests."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..core import (
    FittedModel,
    ModelFamily,
    ModelSpec,
    SurvivalCurve,
    TimeToEventDataset,
)
from .nonparametric import kaplan_meier_curve, nelson_aalen_cumhaz


def logrank_split_scores(x, time, event, min_node_size):
    """Log-rank chi-square for every admissible threshold on one feature.

    Returns ``(thresholds, scores)``; a split sends ``x <= threshold`` left.
    Thresholds are midpoints between consecutive distinct sorted values and
    both children must hold at least ``min_node_size`` samples.
    """
    x = np.asarray(x, dtype=float)
    n = len(x)
    uniq_t = np.unique(time[event])
    if len(uniq_t) == 0 or n < 2 * min_node_size:
        return np.empty(0), np.empty(0)

    order = np.argsort(x, kind="stable")
    xs, ts, es = x[order], time[order], event[order]
    at_risk = ts[:, None] >= uniq_t[None, :]
    deaths = (ts[:, None] == uniq_t[None, :]) & es[:, None]

    # left child = first (pos + 1) sorted samples, for every admissible pos
    pos = np.nonzero(xs[:-1] < xs[1:])[0]
    left_n = pos + 1
    ok = (left_n >= min_node_size) & (n - left_n >= min_node_size)
    pos = pos[ok]
    if len(pos) == 0:
        return np.empty(0), np.empty(0)

    Y = at_risk.sum(axis=0).astype(float)
    d = deaths.sum(axis=0).astype(float)
    Y1 = np.cumsum(at_risk, axis=0)[pos].astype(float)
    d1 = np.cumsum(deaths, axis=0)[pos].astype(float)

    frac = Y1 / Y
    num = (d1 - frac * d).sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        tie_corr = np.where(Y > 1, (Y - d) / (Y - 1), 0.0)
    var = (frac * (1 - frac) * tie_corr * d).sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        scores = np.where(var > 0, num**2 / var, 0.0)
    lo, hi = xs[pos], xs[pos + 1]
    thresholds = lo + 0.5 * (hi - lo)
    # adjacent floats: the midpoint may round up onto the right-hand value
    thresholds = np.where(thresholds < hi, thresholds, lo)
    return thresholds, scores


@dataclass
class _Leaf:
    km: SurvivalCurve
    na_times: np.ndarray
    na_cumhaz: np.ndarray


def _make_leaf(time, event) -> _Leaf:
    if event.any():
        km = kaplan_meier_curve(time, event)
        t, H = nelson_aalen_cumhaz(time, event)
    else:
        t0 = float(np.min(time))
        km = SurvivalCurve([t0], [1.0])
        t, H = np.array([t0]), np.array([0.0])
    return _Leaf(km, np.asarray(t, float), np.asarray(H, float))


class SurvivalTree:
    """Binary log-rank tree stored as flat arrays (node 0 is the root)."""

    def __init__(self):
        self.feature: list[int] = []
        self.threshold: list[float] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.leaves: dict[int, _Leaf] = {}

    @classmethod
    def grow(cls, X, time, event, min_node_size=5, max_depth=None, mtry=None, rng=None):
        tree = cls()
        p = X.shape[1]
        max_depth = math.inf if max_depth is None else max_depth
        stack = [(tree._new_node(), np.arange(len(time)), 0)]
        while stack:
            node, idx, depth = stack.pop()
            best = None
            if depth < max_depth and len(idx) >= 2 * min_node_size and event[idx].any():
                if mtry is None or mtry >= p:
                    feats = range(p)
                else:
                    feats = np.sort(rng.choice(p, size=mtry, replace=False))
                best = _best_split(X[idx], time[idx], event[idx], feats, min_node_size)
            if best is None:
                tree.leaves[node] = _make_leaf(time[idx], event[idx])
                continue
            f, thr = best
            go_left = X[idx, f] <= thr
            l, r = tree._new_node(), tree._new_node()
            tree.feature[node], tree.threshold[node] = int(f), float(thr)
            tree.left[node], tree.right[node] = l, r
            # push right first so the left subtree is expanded first (stable node numbering)
            stack.append((r, idx[~go_left], depth + 1))
            stack.append((l, idx[go_left], depth + 1))
        return tree

    def _new_node(self) -> int:
        self.feature.append(-1)
        self.threshold.append(np.nan)
        self.left.append(-1)
        self.right.append(-1)
        return len(self.feature) - 1

    def apply(self, x) -> _Leaf:
        node = 0
        while node not in self.leaves:
            node = self.left[node] if x[self.feature[node]] <= self.threshold[node] else self.right[node]
        return self.leaves[node]

    @property
    def n_leaves(self):
        return len(self.leaves)

    @property
    def is_root_only(self):
        return len(self.feature) == 1

    def to_dict(self):
        return {
            "feature": list(self.feature),
            "threshold": [None if np.isnan(t) else t for t in self.threshold],
            "left": list(self.left),
            "right": list(self.right),
            "leaves": {
                str(k): {
                    "km": v.km.to_dict(),
                    "na_times": v.na_times.tolist(),
                    "na_cumhaz": v.na_cumhaz.tolist(),
                }
                for k, v in sorted(self.leaves.items())
            },
        }

    @classmethod
    def from_dict(cls, d):
        tree = cls()
        tree.feature = [int(v) for v in d["feature"]]
        tree.threshold = [np.nan if t is None else float(t) for t in d["threshold"]]
        tree.left = [int(v) for v in d["left"]]
        tree.right = [int(v) for v in d["right"]]
        tree.leaves = {
            int(k): _Leaf(
                SurvivalCurve.from_dict(v["km"]),
                np.asarray(v["na_times"], float),
                np.asarray(v["na_cumhaz"], float),
            )
            for k, v in d["leaves"].items()
        }
        return tree


def _best_split(X, time, event, features, min_node_size):
    best, best_score = None, 0.0
    for f in features:
        thr, scores = logrank_split_scores(X[:, f], time, event, min_node_size)
        if len(scores) == 0:
            continue
        k = int(np.argmax(scores))  # first max = lowest threshold
        if scores[k] > best_score:
            best, best_score = (int(f), float(thr[k])), float(scores[k])
    return best


def _step_eval(times, values, grid):
    idx = np.searchsorted(times, grid, side="right") - 1
    return np.where(idx >= 0, values[np.clip(idx, 0, None)], 0.0)


class SurvivalTreeModel(FittedModel):
    def __init__(self, spec: ModelSpec, tree: SurvivalTree, n_features: int):
        self.spec = spec
        self.tree = tree
        self.n_features = n_features

    def _predict_curve(self, x):
        return self.tree.apply(x).km

    def predict_cumhaz(self, x):
        leaf = self.tree.apply(self._check_x(x))
        return leaf.na_times, leaf.na_cumhaz

    def to_dict(self):
        return {"tree": self.tree.to_dict()}

    @classmethod
    def from_dict(cls, spec, n_features, d):
        return cls(spec, SurvivalTree.from_dict(d["tree"]), n_features)


class RandomSurvivalForestModel(FittedModel):
    """Averages tree cumulative hazards, then S = exp(-mean H)."""

    def __init__(self, spec, trees, event_times, n_features, params=None):
        self.spec = spec
        self.trees = list(trees)
        self.event_times = np.asarray(event_times, dtype=float)
        self.n_features = n_features
        self.params = dict(params or {})

    def cumhaz(self, x, grid):
        total = np.zeros(len(grid))
        for tree in self.trees:
            leaf = tree.apply(x)
            total += _step_eval(leaf.na_times, leaf.na_cumhaz, grid)
        return total / len(self.trees)

    def _predict_curve(self, x):
        return SurvivalCurve(self.event_times, np.exp(-self.cumhaz(x, self.event_times)))

    def to_dict(self):
        return {
            "event_times": self.event_times.tolist(),
            "params": self.params,
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, spec, n_features, d):
        trees = [SurvivalTree.from_dict(t) for t in d["trees"]]
        return cls(spec, trees, d["event_times"], n_features, d.get("params"))


def fit_survival_tree(
    data: TimeToEventDataset,
    min_node_size: int = 5,
    max_depth: int | None = None,
    spec: ModelSpec | None = None,
) -> SurvivalTreeModel:
    if min_node_size < 1:
        raise ValueError("min_node_size must be >= 1")
    spec = spec or ModelSpec(
        "survival_tree", ModelFamily.SURVIVAL_TREE, {"min_node_size": min_node_size, "max_depth": max_depth}
    )
    tree = SurvivalTree.grow(data.X, data.time, data.event, min_node_size, max_depth)
    return SurvivalTreeModel(spec, tree, data.n_features)


def _grow_forest_tree(X, time, event, child_seed, bootstrap, min_node_size, max_depth, mtry):
    rng = np.random.default_rng(child_seed)
    n = len(time)
    idx = rng.integers(0, n, size=n) if bootstrap else np.arange(n)
    return SurvivalTree.grow(X[idx], time[idx], event[idx], min_node_size, max_depth, mtry, rng)


def fit_random_survival_forest(
    data: TimeToEventDataset,
    n_trees: int = 200,
    mtry: int | None = None,
    min_node_size: int = 5,
    seed: int = 0,
    bootstrap: bool = True,
    max_depth: int | None = None,
    n_jobs: int = 1,
    spec: ModelSpec | None = None,
) -> RandomSurvivalForestModel:
    p = data.n_features
    if mtry is None:
        mtry = int(math.ceil(math.sqrt(p)))
    if not 1 <= mtry <= p:
        raise ValueError(f"mtry must lie in [1, {p}], got {mtry}")
    if n_trees < 1:
        raise ValueError("n_trees must be >= 1")
    params = {
        "n_trees": n_trees,
        "mtry": mtry,
        "min_node_size": min_node_size,
        "seed": seed,
        "bootstrap": bootstrap,
        "max_depth": max_depth,
    }
    spec = spec or ModelSpec("random_survival_forest", ModelFamily.RANDOM_SURVIVAL_FOREST, params)
    child_seeds = np.random.SeedSequence(seed).spawn(n_trees)
    args = (data.X, data.time, data.event)

    def grow(s):
        return _grow_forest_tree(*args, s, bootstrap, min_node_size, max_depth, mtry)

    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            trees = list(pool.map(grow, child_seeds))
    else:
        trees = [grow(s) for s in child_seeds]
    return RandomSurvivalForestModel(spec, trees, np.unique(data.time[data.event]), p, params)


def tree_survival_from_cumhaz(model: SurvivalTreeModel, x, grid) -> np.ndarray:
    """exp(-H) of a single tree's leaf on ``grid`` (used to compare with forests)."""
    t, H = model.predict_cumhaz(x)
    return np.exp(-_step_eval(t, H, np.asarray(grid, float)))

