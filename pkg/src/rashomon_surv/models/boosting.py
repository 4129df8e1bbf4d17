"""Componentwise linear boosting of the Cox partial likelihood (GLMBoost style)."""
from __future__ import annotations

import numpy as np

from ..core import ModelFamily, ModelSpec, TimeToEventDataset
from .cox import LinearRiskModel, breslow_baseline


def cox_gradient_eta(eta, time, event):
    """d loglik / d eta_i = event_i - exp(eta_i) * H_breslow(t_i)  (martingale residuals)."""
    t, H = breslow_baseline(time, event, eta)
    idx = np.searchsorted(t, time, side="right") - 1
    H_at = np.where(idx >= 0, H[np.clip(idx, 0, None)], 0.0)
    return event.astype(float) - np.exp(eta) * H_at


def fit_boosted_cox(
    data: TimeToEventDataset,
    n_rounds: int = 250,
    learning_rate: float = 0.1,
    seed: int = 0,
    spec: ModelSpec | None = None,
) -> LinearRiskModel:
    """Each round regresses the negative gradient on the single best covariate.

    The procedure is deterministic; ``seed`` is recorded for interface parity
    with the stochastic families.
    """
    if n_rounds < 1:
        raise ValueError("n_rounds must be >= 1")
    if not 0 < learning_rate <= 1:
        raise ValueError("learning_rate must lie in (0, 1]")
    spec = spec or ModelSpec(
        "boosted_cox",
        ModelFamily.BOOSTED_COX,
        {"n_rounds": n_rounds, "learning_rate": learning_rate, "seed": seed},
    )
    X, time, event = data.X, data.time, data.event
    ss = np.einsum("ij,ij->j", X, X)
    usable = ss > 0
    beta = np.zeros(X.shape[1])
    eta = np.zeros(len(time))
    for _ in range(n_rounds):
        u = cox_gradient_eta(eta, time, event)
        xu = X.T @ u
        gain = np.where(usable, xu**2 / np.where(usable, ss, 1.0), -np.inf)
        j = int(np.argmax(gain))
        step = learning_rate * xu[j] / ss[j]
        beta[j] += step
        eta = eta + step * X[:, j]
    bt, bh = breslow_baseline(time, event, X @ beta)
    return LinearRiskModel(spec, beta, bt, bh, {"n_rounds": n_rounds})
