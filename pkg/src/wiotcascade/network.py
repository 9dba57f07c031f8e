"""Simulation network built from an IO table.

The matrix stays supplier-row: ``Z[i, j]`` is what ``i`` earns from ``j``.
Money flows from ``j`` to ``i`` along that entry, so when buyer ``j`` fails,
``i`` loses ``Z[i, j]`` of its revenue.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, NamedTuple

import numpy as np

from ._validation import check_final_vector, check_flow_matrix
from .errors import ContractError, InputError

REVENUE_BASES = ("total", "intermediate")


class NodeId(NamedTuple):
    region_index: int
    industry_index: int

    def flat(self, n_industries: int) -> int:
        return self.region_index * n_industries + self.industry_index


@dataclass(frozen=True, eq=False)
class EconNetwork:
    """Immutable sales network with per-node revenue bases.

    ``R[i]`` is the revenue base used as the denominator of the loss fraction:
    row sum of ``Z`` plus final-use sales ``F`` by default, or the row sum
    alone with ``revenue_base="intermediate"``.
    """

    Z: np.ndarray
    F: np.ndarray
    R: np.ndarray
    region_of: np.ndarray
    regions: tuple[str, ...]
    industries: tuple[str, ...]
    year: int | None = None
    revenue_base: str = "total"

    @property
    def n_nodes(self) -> int:
        return self.Z.shape[0]

    @property
    def n_industries(self) -> int:
        return len(self.industries)

    @cached_property
    def foreign_Z(self) -> np.ndarray:
        """``Z`` with same-region entries zeroed."""
        same = self.region_of[:, None] == self.region_of[None, :]
        Zf = np.where(same, 0.0, self.Z)
        Zf.setflags(write=False)
        return Zf

    @cached_property
    def _buyer_major(self) -> dict[bool, np.ndarray]:
        # row j of the transpose lists what every supplier earns from buyer j
        out = {True: np.ascontiguousarray(self.foreign_Z.T),
               False: np.ascontiguousarray(self.Z.T)}
        for arr in out.values():
            arr.setflags(write=False)
        return out

    def buyer_major(self, exclude_domestic: bool) -> np.ndarray:
        return self._buyer_major[bool(exclude_domestic)]

    def node_codes(self) -> list[str]:
        return [f"{r}.{i}" for r in self.regions for i in self.industries]

    def node_code(self, node: int) -> str:
        r, k = divmod(int(node), self.n_industries)
        return f"{self.regions[r]}.{self.industries[k]}"

    def resolve(self, node) -> int:
        """Map a flat index, :class:`NodeId` or ``"REGION.industry"`` code to a flat index."""
        if isinstance(node, NodeId):
            if not (0 <= node.region_index < len(self.regions)
                    and 0 <= node.industry_index < self.n_industries):
                raise ContractError(f"node {node} is outside the network")
            return node.flat(self.n_industries)
        if isinstance(node, str):
            region, sep, industry = node.partition(".")
            try:
                if not sep:
                    raise ValueError
                return self.regions.index(region) * self.n_industries + self.industries.index(industry)
            except ValueError:
                raise ContractError(f"unknown node code {node!r}") from None
        idx = int(node)
        if not 0 <= idx < self.n_nodes:
            raise ContractError(f"node index {idx} is outside 0..{self.n_nodes - 1}")
        return idx

    def resolve_set(self, nodes: Iterable) -> np.ndarray:
        return np.unique(np.array([self.resolve(n) for n in nodes], dtype=np.int64))

    def __getstate__(self):
        # cached derived matrices are rebuilt on demand after unpickling
        return {k: v for k, v in self.__dict__.items()
                if k not in ("foreign_Z", "_buyer_major")}

    def __setstate__(self, state):
        self.__dict__.update(state)


def _readonly(arr):
    arr = np.array(arr, copy=True)
    arr.setflags(write=False)
    return arr


def network_from_arrays(Z, F=None, *, n_regions=None, region_of=None, regions=None,
                        industries=None, year=None, revenue_base="total") -> EconNetwork:
    """Build a network directly from arrays.

    Either ``n_regions`` (nodes are split region-major into equal blocks) or
    explicit ``regions``/``industries`` code lists must be given.
    """
    if revenue_base not in REVENUE_BASES:
        raise ContractError(f"revenue_base must be one of {REVENUE_BASES}, got {revenue_base!r}")
    Z = check_flow_matrix(Z)
    n = Z.shape[0]
    F = check_final_vector(F, n)
    if regions is None:
        if n_regions is None:
            raise ContractError("need n_regions or explicit regions")
        if n % n_regions:
            raise InputError(f"{n} nodes cannot be split into {n_regions} equal regions")
        regions = tuple(f"R{r}" for r in range(n_regions))
    if industries is None:
        industries = tuple(f"c{k + 1}" for k in range(n // len(regions)))
    regions, industries = tuple(regions), tuple(industries)
    if len(regions) * len(industries) != n:
        raise InputError(f"{len(regions)} regions x {len(industries)} industries != {n} nodes")
    if region_of is None:
        region_of = np.repeat(np.arange(len(regions)), len(industries))
    # fsum keeps R >= any correctly rounded subset sum of the row, so p' <= 1
    R = np.array([math.fsum(row) for row in Z.tolist()], dtype=np.float64).reshape(n)
    if revenue_base == "total":
        R = R + F
    return EconNetwork(_readonly(Z), _readonly(F), _readonly(R),
                       _readonly(np.asarray(region_of, dtype=np.int64)),
                       regions, industries, year, revenue_base)


def build_network(table, revenue_base: str = "total") -> EconNetwork:
    """Convert an :class:`~wiotcascade.ingest.IOTable` into an :class:`EconNetwork`."""
    n = len(table.regions) * len(table.industries)
    if table.Z.shape != (n, n):
        raise InputError(f"table Z has shape {table.Z.shape}, expected {(n, n)}")
    return network_from_arrays(table.Z, table.F, regions=table.regions,
                               industries=table.industries, year=table.year,
                               revenue_base=revenue_base)


def loss_fraction(network: EconNetwork, node, failed: Iterable, exclude_domestic: bool = True) -> float:
    """Cumulative revenue fraction ``node`` loses to the failed buyers."""
    i = network.resolve(node)
    failed_idx = network.resolve_set(failed)
    if i in set(failed_idx.tolist()):
        raise ContractError(f"node {network.node_code(i)} is itself in the failed set")
    if network.R[i] <= 0 or failed_idx.size == 0:
        return 0.0
    row = network.foreign_Z[i] if exclude_domestic else network.Z[i]
    return exact_loss(row, failed_idx) / float(network.R[i])


def exact_loss(row: np.ndarray, failed_idx: np.ndarray) -> float:
    """Correctly rounded sum of ``row`` over ``failed_idx`` (order independent)."""
    return math.fsum(row[failed_idx].tolist())
