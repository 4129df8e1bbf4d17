import numpy as np
import pytest

from rashomon_surv.models import fit_cox
from rashomon_surv.models.boosting import cox_gradient_eta, fit_boosted_cox
from rashomon_surv.models.cox import RiskSets, partial_loglik
from rashomon_surv.simulate import simulate_cox


def test_gradient_matches_partial_loglik_gradient():
    # chain rule: X' u equals the beta-gradient of the Breslow log-likelihood
    data = simulate_cox(n=120, seed=1)
    beta = np.array([0.4, -0.3])
    u = cox_gradient_eta(data.X @ beta, data.time, data.event)
    _, g = partial_loglik(beta, data.X, RiskSets(data.time, data.event), derivatives=1)
    np.testing.assert_allclose(data.X.T @ u, g, rtol=1e-10, atol=1e-10)


def test_long_run_approaches_cox():
    data = simulate_cox(n=300, beta=(1.0, -0.5), seed=2)
    boosted = fit_boosted_cox(data, n_rounds=3000, learning_rate=0.2)
    cox = fit_cox(data)
    assert np.all(np.sign(boosted.beta) == np.sign(cox.beta))
    np.testing.assert_allclose(boosted.beta, cox.beta, atol=0.05)


def test_one_round_moves_one_coefficient():
    data = simulate_cox(n=200, beta=(1.0, 0.0, 0.0), seed=3)
    m = fit_boosted_cox(data, n_rounds=1)
    assert np.count_nonzero(m.beta) == 1
    assert m.beta[0] != 0


def test_short_run_shrinks_relative_to_cox():
    data = simulate_cox(n=200, seed=4)
    assert np.linalg.norm(fit_boosted_cox(data, n_rounds=20).beta) < np.linalg.norm(fit_cox(data).beta)


@pytest.mark.parametrize("kw", [{"n_rounds": 0}, {"learning_rate": 0.0}, {"learning_rate": 1.5}])
def test_invalid_settings(kw):
    with pytest.raises(ValueError):
        fit_boosted_cox(simulate_cox(n=50, seed=0), **kw)


def test_deterministic():
    data = simulate_cox(n=100, seed=5)
    a = fit_boosted_cox(data, n_rounds=50, seed=1)
    b = fit_boosted_cox(data, n_rounds=50, seed=2)
    np.testing.assert_array_equal(a.beta, b.beta)
