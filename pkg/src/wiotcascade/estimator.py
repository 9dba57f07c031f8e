"""scikit-learn compatible front end for the p_c search."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .cascade import CascadeConfig, Metric, run_cascade
from .ingest import IOTable
from .network import EconNetwork, build_network, network_from_arrays
from .solver import SolverConfig, build_pc_table, survivor_curve


class CriticalTolerance(BaseEstimator):
    """Estimate each node's critical tolerance p_c on one network.

    Parameters
    ----------
    survivor_threshold : float, default=0.30
        p_c is the smallest tolerance leaving strictly more than this
        fraction of nodes alive.
    epsilon : float, default=1e-4
        Bisection resolution.
    metric : {"survivor_fraction", "largest_component"}, default="survivor_fraction"
    exclude_domestic : bool, default=True
        Failures do not reduce revenues of same-region nodes.
    strict : bool, default=True
        A node fails when its loss fraction is strictly above ``p``.
    revenue_base : {"total", "intermediate"}, default="total"
        Only used when fitting on raw arrays or an ``IOTable``.
    n_regions : int, optional
        Region count when fitting on a raw ``Z`` array.
    n_jobs : int, optional
        Worker processes; ``None`` reads ``WIOTCASCADE_WORKERS``.

    Attributes
    ----------
    pc_ : ndarray of shape (n_nodes,)
    saturated_ : ndarray of shape (n_nodes,)
    network_ : EconNetwork
    """

    def __init__(self, survivor_threshold=0.30, epsilon=1e-4, metric="survivor_fraction",
                 exclude_domestic=True, strict=True, revenue_base="total",
                 n_regions=None, n_jobs=None):
        self.survivor_threshold = survivor_threshold
        self.epsilon = epsilon
        self.metric = metric
        self.exclude_domestic = exclude_domestic
        self.strict = strict
        self.revenue_base = revenue_base
        self.n_regions = n_regions
        self.n_jobs = n_jobs

    def _solver_config(self):
        cascade = CascadeConfig(exclude_domestic=self.exclude_domestic,
                                metric=Metric(self.metric), strict=self.strict)
        return SolverConfig(self.survivor_threshold, self.epsilon, cascade=cascade)

    def _as_network(self, X, F=None):
        if isinstance(X, EconNetwork):
            return X
        if isinstance(X, IOTable):
            return build_network(X, revenue_base=self.revenue_base)
        return network_from_arrays(X, F, n_regions=self.n_regions or 1,
                                   revenue_base=self.revenue_base)

    def fit(self, X, y=None, F=None):
        """Compute p_c for every node of ``X``.

        ``X`` is an ``EconNetwork``, an ``IOTable`` or a square sales
        matrix (then ``F`` gives final-use sales and ``n_regions`` the
        region split). ``y`` is ignored.
        """
        network = self._as_network(X, F)
        table = build_pc_table({0: network}, config=self._solver_config(), n_jobs=self.n_jobs)
        self.network_ = network
        self.pc_ = table.pc[0].ravel().copy()
        self.saturated_ = table.saturated[0].ravel().copy()
        self.n_features_in_ = network.n_nodes
        return self

    def predict(self, seeds):
        """p_c for the given nodes (indices or ``REGION.industry`` codes)."""
        check_is_fitted(self, "pc_")
        idx = [self.network_.resolve(s) for s in np.atleast_1d(np.asarray(seeds, dtype=object))]
        return self.pc_[idx]

    def ranking(self):
        """Node codes ordered from most to least critical (stable on ties)."""
        check_is_fitted(self, "pc_")
        order = np.argsort(-self.pc_, kind="stable")
        codes = self.network_.node_codes()
        return [codes[i] for i in order]

    def curve(self, seed, grid=None):
        check_is_fitted(self, "pc_")
        cfg = self._solver_config()
        if grid is not None:
            cfg = SolverConfig(cfg.survivor_threshold, cfg.epsilon, tuple(grid), cfg.cascade)
        return survivor_curve(self.network_, seed, cfg)

    def simulate(self, seeds, p):
        check_is_fitted(self, "network_")
        cfg = CascadeConfig(p, self.exclude_domestic, Metric(self.metric), self.strict)
        return run_cascade(self.network_, seeds, cfg)
