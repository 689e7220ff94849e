"""scikit-learn style wrapper around the robust solver."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from . import conic
from .beamformer import PenaltyConfig, QosSpec, nonrobust_solve, penalty_sca_solve
from .channel_model import ChannelSet, all_rates


class RobustBeamformer(BaseEstimator):
    """Minimum-power beamformer that meets rate targets for every bounded CSI error.

    Parameters
    ----------
    rate_near, rate_off : float
        Required rates (bps/Hz) of near-shore and off-shore users.
    tbs_power_cap, sat_per_antenna_cap : float
        Power budgets in watts.
    robust : bool
        If False the CSI errors are ignored.
    penalty_initial, penalty_increment, max_iterations, rank_gap_tol, objective_rel_tol
        Penalty loop settings.
    tolerance : float
        Conic solver tolerance.

    Attributes
    ----------
    solution_ : RobustSolution
    report_ : SolveReport
    """

    def __init__(self, rate_near=0.1, rate_off=0.1, tbs_power_cap=50.0, sat_per_antenna_cap=1.0,
                 robust=True, penalty_initial=1.0, penalty_increment=5.0, max_iterations=50,
                 rank_gap_tol=1e-3, objective_rel_tol=1e-4, tolerance=conic.DEFAULT_TOLERANCE):
        self.rate_near = rate_near
        self.rate_off = rate_off
        self.tbs_power_cap = tbs_power_cap
        self.sat_per_antenna_cap = sat_per_antenna_cap
        self.robust = robust
        self.penalty_initial = penalty_initial
        self.penalty_increment = penalty_increment
        self.max_iterations = max_iterations
        self.rank_gap_tol = rank_gap_tol
        self.objective_rel_tol = objective_rel_tol
        self.tolerance = tolerance

    def fit(self, X: ChannelSet, y=None, uncertainty=None):
        """Design beams for the channel estimates ``X``.

        ``y`` is ignored. ``uncertainty`` is an :class:`UncertaintyModel`;
        None means perfect CSI.
        """
        qos = QosSpec(self.rate_near, self.rate_off, tbs_power_cap=self.tbs_power_cap,
                      sat_per_antenna_cap=self.sat_per_antenna_cap)
        cfg = PenaltyConfig(self.penalty_initial, self.penalty_increment, self.max_iterations,
                            self.rank_gap_tol, self.objective_rel_tol)
        if self.robust:
            self.solution_, self.report_ = penalty_sca_solve(X, qos, uncertainty, cfg, self.tolerance)
        else:
            self.solution_, self.report_ = nonrobust_solve(X, qos, cfg, self.tolerance)
        self.n_iter_ = self.report_.iterations
        return self

    def predict(self, X: ChannelSet):
        """Rates achieved on the channels ``X`` as one array (near-shore users first)."""
        if not hasattr(self, "solution_"):
            raise NotFittedError("call fit before predict")
        near, off = all_rates(X, self.solution_.beams)
        return np.concatenate([near, off])

    def score(self, X: ChannelSet, y=None):
        """Smallest rate margin over the targets; non-negative means every user is served."""
        rates = self.predict(X)
        target = np.concatenate([np.full(X.n_near, self.rate_near), np.full(X.n_off, self.rate_off)])
        return float(np.min(rates - target)) if rates.size else 0.0
