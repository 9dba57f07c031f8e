"""Critical tolerance search and batch tables of p_c.

``p_c`` for a seed is the smallest tolerance at which the post-cascade
survivor metric is strictly above ``survivor_threshold``. Survivors are
monotone in ``p``, so the search is a bisection on ``[0, 1]``.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, NamedTuple, Sequence

import numpy as np

from ._validation import check_fraction
from .cascade import CascadeConfig, run_cascade, survivor_metric
from .errors import ContractError, InputError
from .network import EconNetwork, NodeId

logger = logging.getLogger(__name__)

WORKERS_ENV = "WIOTCASCADE_WORKERS"
PC_HEADER = ("year", "region", "industry", "pc", "saturated")


def default_grid(step: float = 0.005) -> np.ndarray:
    n = int(round(1.0 / step))
    return np.linspace(0.0, 1.0, n + 1)


@dataclass(frozen=True)
class SolverConfig:
    survivor_threshold: float = 0.30
    epsilon: float = 1e-4
    grid: tuple[float, ...] | None = None
    cascade: CascadeConfig = field(default_factory=CascadeConfig)

    def __post_init__(self):
        check_fraction(self.survivor_threshold, "survivor_threshold", open_low=True, open_high=True)
        if not (self.epsilon > 0 and self.epsilon < 1):
            raise ContractError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if self.grid is not None:
            object.__setattr__(self, "grid", tuple(float(g) for g in self.grid))

    def grid_values(self) -> np.ndarray:
        return default_grid() if self.grid is None else np.asarray(self.grid, dtype=float)

    def fingerprint(self) -> dict:
        return {
            "survivor_threshold": self.survivor_threshold,
            "epsilon": self.epsilon,
            "metric": self.cascade.metric.value,
            "exclude_domestic": self.cascade.exclude_domestic,
            "strict": self.cascade.strict,
        }


class CurvePoint(NamedTuple):
    p: float
    survivor_fraction: float
    steps: int
    metric_value: float


class PcEstimate(NamedTuple):
    pc: float
    saturated: bool
    evaluations: int


def _seed_set(network, seed) -> np.ndarray:
    if isinstance(seed, (str, NodeId, int, np.integer)):
        seed = [seed]
    idx = network.resolve_set(seed)
    if idx.size == 0:
        raise ContractError("seed set must be non-empty")
    return idx


def _metric_at(network, seed_idx, config: SolverConfig, p: float) -> float:
    result = run_cascade(network, seed_idx, config.cascade.with_p(p))
    return survivor_metric(network, result, config.cascade.metric)


def survivor_curve(network: EconNetwork, seed, config: SolverConfig | None = None) -> list[CurvePoint]:
    """One cascade per grid tolerance, returned in grid order."""
    config = config or SolverConfig()
    grid = config.grid_values()
    if grid.size == 0:
        raise ContractError("grid must be non-empty")
    if np.any(np.diff(grid) < 0):
        raise ContractError("grid must be sorted ascending")
    seed_idx = _seed_set(network, seed)
    points = []
    for p in grid:
        res = run_cascade(network, seed_idx, config.cascade.with_p(float(p)))
        points.append(CurvePoint(float(p), res.survivor_fraction, res.steps,
                                 survivor_metric(network, res, config.cascade.metric)))
    return points


def find_pc(network: EconNetwork, seed, config: SolverConfig | None = None) -> PcEstimate:
    """Bisect for the infimum tolerance whose survivor metric exceeds the threshold.

    At most ``2 + ceil(log2(1 / epsilon))`` cascades are run. The returned
    value is the smallest tolerance probed that leaves more than the
    threshold surviving, so it overshoots the true infimum by at most
    ``epsilon``.
    """
    config = config or SolverConfig()
    seed_idx = _seed_set(network, seed)
    thr = config.survivor_threshold
    eps = config.epsilon

    if _metric_at(network, seed_idx, config, 0.0) > thr:
        return PcEstimate(0.0, False, 1)
    hi = 1.0 - eps
    if _metric_at(network, seed_idx, config, hi) <= thr:
        return PcEstimate(1.0, True, 2)
    lo = 0.0
    evals = 2
    while hi - lo > eps:
        mid = 0.5 * (lo + hi)
        evals += 1
        if _metric_at(network, seed_idx, config, mid) > thr:
            hi = mid
        else:
            lo = mid
    return PcEstimate(hi, False, evals)


@dataclass(eq=False)
class PcTable:
    """p_c for every (year, region, industry); NaN marks entries not computed."""

    years: tuple[int, ...]
    regions: tuple[str, ...]
    industries: tuple[str, ...]
    pc: np.ndarray
    saturated: np.ndarray
    config: dict = field(default_factory=dict)
    missing_years: tuple[int, ...] = ()

    @property
    def partial(self) -> bool:
        return bool(self.missing_years) or bool(np.isnan(self.pc).any())

    def _year_index(self, year) -> int:
        try:
            return self.years.index(int(year))
        except ValueError:
            raise KeyError(f"year {year} is not in the table") from None

    def _region_index(self, region) -> int:
        try:
            return self.regions.index(region)
        except ValueError:
            raise KeyError(f"region {region!r} is not in the table") from None

    def get(self, year, region, industry) -> float:
        k = self.industries.index(industry)
        return float(self.pc[self._year_index(year), self._region_index(region), k])

    def region_values(self, year, region) -> np.ndarray:
        """p_c of every industry of ``region`` in ``year``, in industry order."""
        return self.pc[self._year_index(year), self._region_index(region)]

    def industry_series(self, region, industry) -> np.ndarray:
        k = self.industries.index(industry)
        return self.pc[:, self._region_index(region), k]

    def entries(self) -> dict[tuple[int, str, str], float]:
        out = {}
        for y, year in enumerate(self.years):
            for r, region in enumerate(self.regions):
                for k, industry in enumerate(self.industries):
                    v = self.pc[y, r, k]
                    if not np.isnan(v):
                        out[(year, region, industry)] = float(v)
        return out

    def same_values(self, other: "PcTable") -> bool:
        return (self.years == other.years and self.regions == other.regions
                and self.industries == other.industries
                and np.array_equal(self.pc, other.pc, equal_nan=True)
                and np.array_equal(self.saturated, other.saturated))

    # serialization

    def to_csv_text(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(PC_HEADER)
        for y, year in enumerate(self.years):
            for r, region in enumerate(self.regions):
                for k, industry in enumerate(self.industries):
                    v = self.pc[y, r, k]
                    if np.isnan(v):
                        continue
                    writer.writerow([year, region, industry, format_value(v),
                                     int(bool(self.saturated[y, r, k]))])
        return buf.getvalue()

    def sidecar(self) -> dict:
        return {
            "config": dict(self.config),
            "years": list(self.years),
            "regions": list(self.regions),
            "industries": list(self.industries),
            "missing_years": list(self.missing_years),
            "partial": self.partial,
        }

    def write(self, csv_path, sidecar_path=None):
        with open(csv_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(self.to_csv_text())
        if sidecar_path is None:
            sidecar_path = f"{csv_path}.json"
        with open(sidecar_path, "w", encoding="utf-8") as fh:
            json.dump(self.sidecar(), fh, indent=2)
            fh.write("\n")

    @classmethod
    def read(cls, csv_path, sidecar_path=None) -> "PcTable":
        """Load a table, taking code order from the sidecar when it exists."""
        if sidecar_path is None:
            sidecar_path = f"{csv_path}.json"
        meta = {}
        if os.path.exists(sidecar_path):
            with open(sidecar_path, encoding="utf-8") as fh:
                meta = json.load(fh)
        with open(csv_path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or tuple(header) != PC_HEADER:
                raise InputError(f"{csv_path}: header must be {','.join(PC_HEADER)}")
            rows = [row for row in reader if row]
        years = list(meta.get("years", []))
        regions = list(meta.get("regions", []))
        industries = list(meta.get("industries", []))
        parsed = []
        for line, row in enumerate(rows, start=2):
            if len(row) != len(PC_HEADER):
                raise InputError(f"{csv_path}: line {line}: expected {len(PC_HEADER)} columns")
            try:
                year, value, sat = int(row[0]), float(row[3]), bool(int(row[4]))
            except ValueError:
                raise InputError(f"{csv_path}: line {line}: malformed value") from None
            for seen, item in ((years, year), (regions, row[1]), (industries, row[2])):
                if item not in seen:
                    seen.append(item)
            parsed.append((year, row[1], row[2], value, sat))
        pc = np.full((len(years), len(regions), len(industries)), np.nan)
        saturated = np.zeros(pc.shape, dtype=bool)
        yi = {y: i for i, y in enumerate(years)}
        ri = {r: i for i, r in enumerate(regions)}
        ki = {k: i for i, k in enumerate(industries)}
        for year, region, industry, value, sat in parsed:
            pc[yi[year], ri[region], ki[industry]] = value
            saturated[yi[year], ri[region], ki[industry]] = sat
        return cls(tuple(years), tuple(regions), tuple(industries), pc, saturated,
                   dict(meta.get("config", {})), tuple(meta.get("missing_years", ())))


def format_value(v: float) -> str:
    """Fixed 6-significant-digit formatting used by every CSV emitter."""
    return format(float(v), ".6g")


def _solve_chunk(network: EconNetwork, seeds: Sequence[int], config: SolverConfig):
    return [find_pc(network, int(s), config) for s in seeds]


def resolve_workers(n_jobs: int | None) -> int:
    if n_jobs is None:
        env = os.environ.get(WORKERS_ENV, "").strip()
        n_jobs = int(env) if env else 1
    if n_jobs < 0:
        n_jobs = os.cpu_count() or 1
    return max(1, n_jobs)


def build_pc_table(networks: Mapping[int, EconNetwork], seeds=None, config: SolverConfig | None = None,
                   years: Sequence[int] | None = None, n_jobs: int | None = None,
                   progress=None) -> PcTable:
    """Compute p_c for every requested (year, seed) pair.

    Requested years absent from ``networks`` are logged and recorded in
    ``missing_years``. Results are collected in (year, node) order whatever
    the pool width. ``progress`` is called as ``progress(done, total)``.
    """
    config = config or SolverConfig()
    if years is None:
        years = sorted(networks)
    years = [int(y) for y in years]
    present = [y for y in years if y in networks]
    missing = tuple(y for y in years if y not in networks)
    for y in missing:
        logger.warning("no network for year %d; p_c table will be partial", y)
    if not present:
        raise InputError("none of the requested years has a network")

    first = networks[present[0]]
    for y in present[1:]:
        net = networks[y]
        if net.regions != first.regions or net.industries != first.industries:
            raise InputError(f"network for {y} does not share node indexing with {present[0]}")
    if seeds is None:
        seed_idx = np.arange(first.n_nodes)
    else:
        seed_idx = first.resolve_set(seeds)

    n_reg, n_ind = len(first.regions), len(first.industries)
    pc = np.full((len(present), n_reg, n_ind), np.nan)
    saturated = np.zeros(pc.shape, dtype=bool)
    workers = resolve_workers(n_jobs)
    chunk = max(1, math.ceil(len(seed_idx) / (4 * workers)))
    jobs = [(y, seed_idx[i:i + chunk]) for y in present for i in range(0, len(seed_idx), chunk)]
    total = len(present) * len(seed_idx)
    done = 0

    def collect(year, chunk_seeds, estimates):
        nonlocal done
        yi = present.index(year)
        for s, est in zip(chunk_seeds, estimates):
            r, k = divmod(int(s), n_ind)
            pc[yi, r, k] = est.pc
            saturated[yi, r, k] = est.saturated
        done += len(chunk_seeds)
        if progress is not None:
            progress(done, total)

    if workers == 1:
        for year, chunk_seeds in jobs:
            collect(year, chunk_seeds, _solve_chunk(networks[year], chunk_seeds, config))
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_solve_chunk, networks[y], s, config) for y, s in jobs]
            for (year, chunk_seeds), fut in zip(jobs, futures):
                collect(year, chunk_seeds, fut.result())

    fingerprint = config.fingerprint()
    fingerprint["revenue_base"] = first.revenue_base
    return PcTable(tuple(present), first.regions, first.industries, pc, saturated,
                   fingerprint, missing)
