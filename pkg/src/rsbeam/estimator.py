"""Estimator-style wrappers so the solvers compose with sklearn tooling.

The channel matrix plays the role of the data: `fit(H)` computes a
beamforming matrix for that channel, after which the fitted attributes and
`score` are available. Parameters follow the sklearn convention (stored
verbatim in __init__, validated in fit), so `get_params`, `set_params`,
`clone` and parameter searches work out of the box.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .model import SystemConfig, evaluate
from .solver import solve, solve_sdma
from .validation import check_channel


class RsmaBeamformer(BaseEstimator):
    """Weighted sum-rate beamforming with a common plus K private streams.

    Parameters
    ----------
    power : float
        Transmit power budget.
    noise_power : float or array_like
        Per-user noise variances; scalars broadcast.
    weights : array_like or None
        Per-user rate weights; None means all ones.
    rho : float
        Damping offset of the dual updates.
    tol : float
        Stopping tolerance, applied to the outer loop and (unless inner_tol
        is given) the inner one.
    inner_tol : float or None
        Separate inner tolerance, defaulting to tol.
    max_outer, max_inner : int
        Iteration caps.
    rate_unit : str
        "nats" or "bits"; reporting only.
    warm_start_duals : bool
        Carry dual variables across outer iterations.

    Attributes (after fit)
    ----------------------
    W_ : ndarray of shape (antennas, users + 1)
        Beamforming matrix; column 0 is the common beam.
    wsr_ : float
        Achieved weighted sum rate in nats.
    report_, duals_, converged_, n_iter_, n_inner_iter_, wsr_trace_
        Run diagnostics, matching the functional solver's Solution fields.
    """

    _solver = staticmethod(solve)

    def __init__(
        self,
        power=1.0,
        noise_power=1.0,
        weights=None,
        rho=0.5,
        tol=1e-4,
        inner_tol=None,
        max_outer=500,
        max_inner=2000,
        rate_unit="nats",
        warm_start_duals=True,
    ):
        self.power = power
        self.noise_power = noise_power
        self.weights = weights
        self.rho = rho
        self.tol = tol
        self.inner_tol = inner_tol
        self.max_outer = max_outer
        self.max_inner = max_inner
        self.rate_unit = rate_unit
        self.warm_start_duals = warm_start_duals

    def _build_config(self, L, K) -> SystemConfig:
        return SystemConfig(
            L=L,
            K=K,
            Pt=self.power,
            sigma2=self.noise_power,
            delta=1.0 if self.weights is None else np.asarray(self.weights, dtype=float),
            rho=self.rho,
            tol_outer=self.tol,
            tol_inner=self.tol if self.inner_tol is None else self.inner_tol,
            max_outer=self.max_outer,
            max_inner=self.max_inner,
            rate_unit=self.rate_unit,
            warm_start=self.warm_start_duals,
        )

    def fit(self, X, y=None):
        """Compute beamformers for the channel matrix X of shape (L, K)."""
        H = check_channel(X)
        L, K = H.shape
        cfg = self._build_config(L, K)
        sol = self._solver(H, cfg)
        self.n_antennas_ = L
        self.n_users_ = K
        self.config_ = cfg
        self.W_ = sol.W
        self.wsr_ = sol.report.wsr
        self.report_ = sol.report
        self.duals_ = sol.duals
        self.converged_ = sol.converged
        self.n_iter_ = sol.outer_iterations
        self.n_inner_iter_ = sol.inner_iterations
        self.wsr_trace_ = sol.wsr_trace
        return self

    def _check_fitted(self):
        if not hasattr(self, "W_"):
            raise NotFittedError(
                "this %s instance is not fitted yet; call fit(H) first"
                % type(self).__name__
            )

    def score(self, X, y=None) -> float:
        """Weighted sum rate (nats) of the fitted beamformers on channel X."""
        self._check_fitted()
        H = check_channel(X, self.n_antennas_, self.n_users_)
        return evaluate(self.W_, H, self.config_).wsr


class SdmaBeamformer(RsmaBeamformer):
    """Private-streams-only baseline under the same estimator interface."""

    _solver = staticmethod(solve_sdma)
