"""Cox proportional hazards with Breslow ties, optional ridge / lasso penalties.

The minimised objective is

    F(beta) = -loglik(beta) / n + l2/2 * ||beta||^2 + l1 * ||beta||_1

(glmnet scaling, so penalty strengths do not depend on sample size).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import FittedModel, ModelFamily, ModelSpec, SurvivalCurve, TimeToEventDataset
from .nonparametric import NoEventsError

MAX_ITER = 100
GRAD_TOL = 1e-8
BETA_LIMIT = 1e3
# a non-converged unpenalized fit whose log hazard ratio per covariate SD
# exceeds this is diverging towards a separated (monotone likelihood) solution
SEPARATION_SCALE = 10.0


class CoxConvergenceError(RuntimeError):
    def __init__(self, message, grad_norm, beta=None):
        super().__init__(f"{message} (gradient inf-norm {grad_norm:.3e})")
        self.grad_norm = grad_norm
        self.beta = beta


class CoxSeparationError(CoxConvergenceError):
    pass


class RiskSets:
    """Precomputed ordering so risk-set sums are reverse cumulative sums.

    Rows are sorted by descending time; ``stop[k]`` is the last sorted index
    whose time equals the k-th sorted time, so ``cumsum[stop]`` is the sum
    over the risk set {j : t_j >= t_k} (Breslow handling of ties).
    """

    def __init__(self, time, event):
        time = np.asarray(time, dtype=float)
        self.order = np.argsort(-time, kind="stable")
        t_sorted = time[self.order]
        self.stop = np.searchsorted(-t_sorted, -t_sorted, side="right") - 1
        self.event_sorted = np.asarray(event, dtype=bool)[self.order]
        self.n = len(time)


def partial_loglik(beta, X, rs: RiskSets, derivatives: int = 0):
    """Breslow partial log-likelihood and optionally gradient / Hessian."""
    beta = np.asarray(beta, dtype=float)
    Xs = X[rs.order]
    eta = Xs @ beta
    shift = eta.max() if len(eta) else 0.0
    w = np.exp(eta - shift)
    ev = rs.event_sorted

    s0 = np.cumsum(w)[rs.stop]
    ll = float(np.sum(eta[ev] - shift - np.log(s0[ev])))
    if derivatives == 0:
        return ll

    s1 = np.cumsum(w[:, None] * Xs, axis=0)[rs.stop]
    xbar = s1[ev] / s0[ev, None]
    grad = Xs[ev].sum(axis=0) - xbar.sum(axis=0)
    if derivatives == 1:
        return ll, grad

    s2 = np.cumsum(w[:, None, None] * Xs[:, :, None] * Xs[:, None, :], axis=0)[rs.stop]
    hess = -(s2[ev] / s0[ev, None, None]).sum(axis=0) + xbar.T @ xbar
    return ll, grad, hess


def breslow_baseline(time, event, eta):
    """Breslow cumulative baseline hazard at the distinct event times."""
    time = np.asarray(time, dtype=float)
    event = np.asarray(event, dtype=bool)
    w = np.exp(np.asarray(eta, dtype=float))
    uniq = np.unique(time[event])
    d = np.bincount(np.searchsorted(uniq, time[event]), minlength=len(uniq)).astype(float)
    order = np.argsort(time)
    tail = np.cumsum(w[order][::-1])[::-1]  # tail[k] = sum of w over sorted positions >= k
    first = np.searchsorted(time[order], uniq, side="left")
    s0 = tail[first]
    return uniq, np.cumsum(d / s0)


@dataclass
class CoxFit:
    beta: np.ndarray
    baseline_times: np.ndarray
    baseline_cumhaz: np.ndarray
    iterations: int
    grad_norm: float


def _objective(beta, X, rs, l2, l1):
    with np.errstate(all="ignore"):
        val = -partial_loglik(beta, X, rs) / rs.n + 0.5 * l2 * beta @ beta + l1 * np.abs(beta).sum()
    # overflow in exp(eta) means the step went far past any sensible optimum
    return val if np.isfinite(val) else np.inf


def _smooth_derivs(beta, X, rs, l2):
    _, g, h = partial_loglik(beta, X, rs, derivatives=2)
    grad = -g / rs.n + l2 * beta
    hess = -h / rs.n + l2 * np.eye(len(beta))
    return grad, hess


def _solve(h, g):
    try:
        return np.linalg.solve(h, g)
    except np.linalg.LinAlgError:
        return np.linalg.lstsq(h, g, rcond=None)[0]


def _check_beta(beta, grad_norm):
    if not np.all(np.isfinite(beta)) or np.max(np.abs(beta), initial=0.0) > BETA_LIMIT:
        raise CoxSeparationError(_SEPARATION_MSG, grad_norm, beta)


def _newton(X, rs, l2, max_iter):
    p = X.shape[1]
    beta = np.zeros(p)
    obj = _objective(beta, X, rs, l2, 0.0)
    gnorm = np.inf
    for it in range(1, max_iter + 1):
        grad, hess = _smooth_derivs(beta, X, rs, l2)
        gnorm = float(np.max(np.abs(grad), initial=0.0))
        if gnorm < GRAD_TOL:
            return beta, it - 1, gnorm
        step = _solve(hess, grad)
        t = 1.0
        while True:
            cand = beta - t * step
            cand_obj = _objective(cand, X, rs, l2, 0.0)
            if cand_obj <= obj or t < 1e-10:
                break
            t *= 0.5
        beta, obj = cand, cand_obj
        _check_beta(beta, gnorm)
    grad, _ = _smooth_derivs(beta, X, rs, l2)
    gnorm = float(np.max(np.abs(grad), initial=0.0))
    if gnorm < GRAD_TOL:
        return beta, max_iter, gnorm
    raise CoxConvergenceError(f"Newton-Raphson did not converge in {max_iter} iterations", gnorm, beta)


def _soft(z, a):
    return np.sign(z) * max(abs(z) - a, 0.0)


def _lasso_subproblem(beta, grad, hess, l1, sweeps=2000, tol=1e-13):
    """Coordinate descent on  g'd + d'Hd/2 + l1*||beta + d||_1  (returns beta + d)."""
    b = beta.copy()
    diag = np.diag(hess)
    for _ in range(sweeps):
        max_change = 0.0
        for j in range(len(b)):
            if diag[j] <= 0:
                continue
            # gradient of the quadratic model at b, excluding the l1 term
            gj = grad[j] + hess[j] @ (b - beta)
            new = _soft(b[j] - gj / diag[j], l1 / diag[j])
            max_change = max(max_change, abs(new - b[j]))
            b[j] = new
        if max_change < tol:
            break
    return b


def _kkt_violation(beta, grad, l1):
    viol = np.where(
        beta != 0,
        np.abs(grad + l1 * np.sign(beta)),
        np.maximum(np.abs(grad) - l1, 0.0),
    )
    return float(np.max(viol, initial=0.0))


def _proximal_newton(X, rs, l2, l1, max_iter):
    p = X.shape[1]
    beta = np.zeros(p)
    obj = _objective(beta, X, rs, l2, l1)
    viol = np.inf
    for it in range(1, max_iter + 1):
        grad, hess = _smooth_derivs(beta, X, rs, l2)
        viol = _kkt_violation(beta, grad, l1)
        if viol < GRAD_TOL:
            return beta, it - 1, viol
        target = _lasso_subproblem(beta, grad, hess, l1)
        step = target - beta
        t = 1.0
        while True:
            cand = beta + t * step
            cand_obj = _objective(cand, X, rs, l2, l1)
            if cand_obj <= obj or t < 1e-10:
                break
            t *= 0.5
        beta, obj = cand, cand_obj
        _check_beta(beta, viol)
    grad, _ = _smooth_derivs(beta, X, rs, l2)
    viol = _kkt_violation(beta, grad, l1)
    if viol < GRAD_TOL:
        return beta, max_iter, viol
    raise CoxConvergenceError(f"proximal Newton did not converge in {max_iter} iterations", viol)


def _unpenalized_newton(X, rs, max_iter):
    try:
        return _newton(X, rs, 0.0, max_iter)
    except CoxSeparationError:
        raise
    except CoxConvergenceError as err:
        # a converged fit is a finite MLE, however large; only a gradient that
        # creeps towards zero while coefficients keep growing signals separation
        if _diverging(err.beta, X.std(axis=0)):
            raise CoxSeparationError(_SEPARATION_MSG, err.grad_norm, err.beta) from None
        raise


_SEPARATION_MSG = "coefficients diverging (likely separation); add an l2 or l1 penalty"


def _diverging(beta, scale):
    return beta is not None and np.max(np.abs(beta) * scale, initial=0.0) > SEPARATION_SCALE


def fit_cox_arrays(X, time, event, l2=0.0, l1=0.0, max_iter=MAX_ITER) -> CoxFit:
    X = np.asarray(X, dtype=float)
    event = np.asarray(event, dtype=bool)
    if l2 < 0 or l1 < 0:
        raise ValueError("penalties must be non-negative")
    if not event.any():
        raise NoEventsError("Cox model needs at least one event")
    rs = RiskSets(time, event)
    if l1 > 0:
        beta, iters, gnorm = _proximal_newton(X, rs, l2, l1, max_iter)
    elif l2 > 0:
        beta, iters, gnorm = _newton(X, rs, l2, max_iter)
    else:
        beta, iters, gnorm = _unpenalized_newton(X, rs, max_iter)
    bt, bh = breslow_baseline(time, event, X @ beta)
    return CoxFit(beta, bt, bh, iters, gnorm)


class LinearRiskModel(FittedModel):
    """S(t|x) = exp(-H0(t) * exp(beta'x)); shared by Cox fits and boosting."""

    def __init__(self, spec: ModelSpec, beta, baseline_times, baseline_cumhaz, info=None):
        self.spec = spec
        self.beta = np.asarray(beta, dtype=float)
        self.baseline_times = np.asarray(baseline_times, dtype=float)
        self.baseline_cumhaz = np.asarray(baseline_cumhaz, dtype=float)
        self.n_features = len(self.beta)
        self.info = dict(info or {})

    def linear_predictor(self, X):
        return np.atleast_2d(np.asarray(X, dtype=float)) @ self.beta

    def _predict_curve(self, x):
        return SurvivalCurve(self.baseline_times, np.exp(-self.baseline_cumhaz * np.exp(x @ self.beta)))

    def risk_score(self, X, horizon=None):
        return self.linear_predictor(X)

    def to_dict(self):
        return {
            "beta": self.beta.tolist(),
            "baseline_times": self.baseline_times.tolist(),
            "baseline_cumhaz": self.baseline_cumhaz.tolist(),
            "info": self.info,
        }

    @classmethod
    def from_dict(cls, spec, n_features, d):
        return cls(spec, d["beta"], d["baseline_times"], d["baseline_cumhaz"], d.get("info"))


def fit_cox(
    data: TimeToEventDataset,
    l2: float = 0.0,
    l1: float = 0.0,
    spec: ModelSpec | None = None,
    max_iter: int = MAX_ITER,
) -> LinearRiskModel:
    if spec is None:
        family = ModelFamily.COX_LASSO if l1 > 0 else ModelFamily.COX_RIDGE if l2 > 0 else ModelFamily.COX_PH
        spec = ModelSpec(family.value, family, {"l2": l2, "l1": l1})
    fit = fit_cox_arrays(data.X, data.time, data.event, l2=l2, l1=l1, max_iter=max_iter)
    info = {"iterations": fit.iterations, "grad_norm": fit.grad_norm}
    return LinearRiskModel(spec, fit.beta, fit.baseline_times, fit.baseline_cumhaz, info)
