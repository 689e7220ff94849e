import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from conftest import small_instance
from seabeam import RobustBeamformer, QosSpec, penalty_sca_solve


def test_params_roundtrip():
    est = RobustBeamformer(rate_near=0.4, robust=False)
    assert est.get_params()["rate_near"] == 0.4
    c = clone(est)
    assert c.get_params() == est.get_params()


def test_fit_predict_matches_solver():
    ch, unc = small_instance(2)
    est = RobustBeamformer(rate_near=0.6, rate_off=0.6).fit(ch, uncertainty=unc)
    sol, _ = penalty_sca_solve(ch, QosSpec(0.6, 0.6), unc)
    assert est.solution_.total_power == pytest.approx(sol.total_power, rel=1e-12)
    rates = est.predict(ch)
    assert rates.shape == (4,)
    assert np.all(rates >= 0.6 - 1e-3)
    assert est.score(ch) >= -1e-3
    assert est.n_iter_ >= 1


def test_nonrobust_flag():
    ch, unc = small_instance(2)
    rob = RobustBeamformer(0.6, 0.6).fit(ch, uncertainty=unc)
    nom = RobustBeamformer(0.6, 0.6, robust=False).fit(ch, uncertainty=unc)
    assert nom.solution_.total_power < rob.solution_.total_power


def test_predict_before_fit():
    ch, _ = small_instance(0)
    with pytest.raises(NotFittedError):
        RobustBeamformer().predict(ch)
