"""Synchronous cascading-failure simulation.

Round 1 fails the seeds. In each later round every surviving node whose
cumulative loss fraction against the whole failed set exceeds the tolerance
``p`` fails simultaneously. The process stops at the first empty round.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from ._validation import check_fraction
from .errors import ContractError
from .network import EconNetwork, exact_loss

# fast-path loss fractions this close to p are re-decided with an exact sum
_TIE_BAND = 1e-9


class Metric(str, enum.Enum):
    SURVIVOR_FRACTION = "survivor_fraction"
    LARGEST_COMPONENT = "largest_component"


@dataclass(frozen=True)
class CascadeConfig:
    p: float = 0.0
    exclude_domestic: bool = True
    metric: Metric = Metric.SURVIVOR_FRACTION
    strict: bool = True

    def __post_init__(self):
        object.__setattr__(self, "p", check_fraction(self.p, "p"))
        object.__setattr__(self, "metric", Metric(self.metric))

    def with_p(self, p: float) -> "CascadeConfig":
        return CascadeConfig(p, self.exclude_domestic, self.metric, self.strict)


@dataclass(frozen=True, eq=False)
class CascadeResult:
    failed: frozenset[int]
    rounds: tuple[tuple[int, ...], ...]
    n_nodes: int
    p: float
    _network: EconNetwork = field(repr=False, compare=False, default=None)

    @property
    def steps(self) -> int:
        return len(self.rounds)

    @property
    def survivor_fraction(self) -> float:
        return 1.0 - len(self.failed) / self.n_nodes

    @cached_property
    def largest_component_fraction(self) -> float:
        return largest_surviving_component(self._network, self.failed) / self.n_nodes

    def failed_codes(self) -> list[str]:
        return [self._network.node_code(i) for i in sorted(self.failed)]

    def trace(self) -> dict:
        """Per-round failures as ``REGION.industry`` codes, keyed by round number."""
        net = self._network
        return {
            "p": self.p,
            "steps": self.steps,
            "survivor_fraction": self.survivor_fraction,
            "rounds": {str(k): [net.node_code(i) for i in nodes]
                       for k, nodes in enumerate(self.rounds, start=1)},
        }

    def write_trace(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.trace(), fh, indent=2, sort_keys=False)
            fh.write("\n")


def largest_surviving_component(network: EconNetwork, failed) -> int:
    """Size of the largest weakly connected component among survivors."""
    mask = np.ones(network.n_nodes, dtype=bool)
    mask[list(failed)] = False
    survivors = np.flatnonzero(mask)
    if survivors.size == 0:
        return 0
    sub = network.Z[np.ix_(survivors, survivors)] > 0
    n_comp, labels = connected_components(csr_matrix(sub), directed=True, connection="weak")
    return int(np.bincount(labels, minlength=n_comp).max())


def run_cascade(network: EconNetwork, seeds, config: CascadeConfig | None = None) -> CascadeResult:
    """Run one cascade from ``seeds`` at tolerance ``config.p``.

    Losses are accumulated incrementally: each newly failed buyer adds its
    column of purchases to every supplier's running loss. Nodes whose fast
    loss fraction lies within a tiny band of ``p`` are re-evaluated with a
    correctly rounded sum over the full failed set, so the outcome does not
    depend on accumulation order.
    """
    config = config or CascadeConfig()
    seed_idx = network.resolve_set(seeds)
    if seed_idx.size == 0:
        raise ContractError("seed set must be non-empty")

    n = network.n_nodes
    p = config.p
    by_buyer = network.buyer_major(config.exclude_domestic)
    by_supplier = (network.foreign_Z if config.exclude_domestic else network.Z)
    R = network.R
    can_fail = R > 0

    failed = np.zeros(n, dtype=bool)
    failed[seed_idx] = True
    loss = by_buyer[seed_idx].sum(axis=0)
    rounds = [tuple(seed_idx.tolist())]
    frac = np.zeros(n)

    while True:
        np.divide(loss, R, out=frac, where=can_fail)
        frac[~can_fail] = 0.0
        alive = can_fail & ~failed
        hit = (frac > p) if config.strict else (frac >= p)
        near = alive & (np.abs(frac - p) <= _TIE_BAND)
        new = alive & hit & ~near
        if near.any():
            failed_idx = np.flatnonzero(failed)
            for i in np.flatnonzero(near):
                exact = exact_loss(by_supplier[i], failed_idx) / float(R[i])
                new[i] = exact > p if config.strict else exact >= p
        new_idx = np.flatnonzero(new)
        if new_idx.size == 0:
            break
        rounds.append(tuple(new_idx.tolist()))
        failed[new_idx] = True
        loss += by_buyer[new_idx].sum(axis=0)

    return CascadeResult(frozenset(np.flatnonzero(failed).tolist()), tuple(rounds),
                         n, p, network)


def survivor_metric(network: EconNetwork, result: CascadeResult, metric=Metric.SURVIVOR_FRACTION) -> float:
    metric = Metric(metric)
    if metric is Metric.SURVIVOR_FRACTION:
        return result.survivor_fraction
    return largest_surviving_component(network, result.failed) / network.n_nodes
