"""Canonical flow CSV ingestion: parsing, region aggregation and clamping.

The flows file is a long-format CSV with one row per (supplier, buyer) cell::

    year,supplier_region,supplier_industry,buyer_region,buyer_kind,buyer_industry,value
    2009,CHN,c14,USA,IND,c8,12.5
    2009,CHN,c14,DEU,FIN,,3.0

Regions outside the kept list are folded into the aggregate region through the
scheme's ``aggregation_map``. Negative cells are clamped to zero *after*
aggregation.
"""

from __future__ import annotations

import csv
import enum
import json
import math
from array import array
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, NamedTuple

import numpy as np

from .errors import FlowParseError, InputError, SchemaError, SchemeError

FLOW_HEADER = ("year", "supplier_region", "supplier_industry", "buyer_region",
               "buyer_kind", "buyer_industry", "value")


class BuyerKind(enum.Enum):
    INDUSTRY = "IND"
    FINAL = "FIN"


@dataclass(frozen=True)
class RegionScheme:
    """Which regions are modelled individually and how the rest are folded.

    ``aggregation_map`` maps every known source region code to a kept region or
    to ``row_code``. Kept regions and ``row_code`` map to themselves even when
    absent from the supplied map.
    """

    kept_regions: tuple[str, ...]
    industry_codes: tuple[str, ...]
    row_code: str = "ROW"
    aggregation_map: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        kept = tuple(self.kept_regions)
        inds = tuple(self.industry_codes)
        object.__setattr__(self, "kept_regions", kept)
        object.__setattr__(self, "industry_codes", inds)
        if not kept or not inds:
            raise SchemeError("scheme needs at least one kept region and one industry")
        if len(set(kept)) != len(kept):
            raise SchemeError("kept_regions contains duplicates")
        if len(set(inds)) != len(inds):
            raise SchemeError("industry_codes contains duplicates")
        if self.row_code in kept:
            raise SchemeError(f"kept_regions must not contain the aggregate code {self.row_code!r}")
        if any(not c for c in kept + inds) or not self.row_code:
            raise SchemeError("codes must be non-empty")
        full = {code: code for code in kept}
        full[self.row_code] = self.row_code
        targets = set(full)
        for src, dst in dict(self.aggregation_map).items():
            if dst not in targets:
                raise SchemeError(f"region {src!r} maps to {dst!r}, which is neither kept nor {self.row_code!r}")
            if src in full and full[src] != dst:
                raise SchemeError(f"region {src!r} is kept and cannot be remapped to {dst!r}")
            full[src] = dst
        object.__setattr__(self, "aggregation_map", full)

    @property
    def regions(self) -> tuple[str, ...]:
        """Model regions: the kept ones followed by the aggregate."""
        return self.kept_regions + (self.row_code,)

    @property
    def n_nodes(self) -> int:
        return len(self.regions) * len(self.industry_codes)

    def target_region(self, code: str) -> str | None:
        return self.aggregation_map.get(code)

    def to_dict(self) -> dict:
        explicit = {k: v for k, v in self.aggregation_map.items()
                    if k not in self.regions}
        return {
            "kept_regions": list(self.kept_regions),
            "row_code": self.row_code,
            "aggregation_map": dict(sorted(explicit.items())),
            "industry_codes": list(self.industry_codes),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RegionScheme":
        try:
            return cls(
                kept_regions=tuple(data["kept_regions"]),
                industry_codes=tuple(data["industry_codes"]),
                row_code=data.get("row_code", "ROW"),
                aggregation_map=dict(data.get("aggregation_map", {})),
            )
        except KeyError as exc:
            raise SchemeError(f"scheme is missing field {exc.args[0]!r}") from None


def load_scheme(path) -> RegionScheme:
    """Read a scheme from a JSON or YAML file (chosen by extension)."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix.lower() in (".yaml", ".yml"):
        import yaml
        data = yaml.safe_load(text)
    else:
        data = json.loads(text)
    if not isinstance(data, dict):
        raise SchemeError(f"{path}: scheme must be a mapping")
    return RegionScheme.from_dict(data)


class RawFlowRecord(NamedTuple):
    year: int
    supplier_region: str
    supplier_industry: str
    buyer_region: str
    buyer_kind: BuyerKind
    buyer_industry: str | None
    value: float


def iter_flows(stream, scheme: RegionScheme) -> Iterator[RawFlowRecord]:
    """Yield one record per data row of a canonical flows CSV."""
    industries = {code: code for code in scheme.industry_codes}
    reader = csv.reader(stream)
    try:
        header = next(reader)
    except StopIteration:
        raise FlowParseError("empty input, expected a header row", line=1) from None
    if tuple(h.strip() for h in header) != FLOW_HEADER:
        raise FlowParseError(f"header must be exactly {','.join(FLOW_HEADER)}", line=1)

    for row in reader:
        line = reader.line_num
        if not row:
            continue
        if len(row) != len(FLOW_HEADER):
            raise FlowParseError(f"expected {len(FLOW_HEADER)} columns, got {len(row)}", line=line)
        year_s, s_reg, s_ind, b_reg, kind_s, b_ind, value_s = (c.strip() for c in row)
        try:
            year = int(year_s)
        except ValueError:
            raise FlowParseError(f"year {year_s!r} is not an integer", line=line) from None
        try:
            value = float(value_s)
        except ValueError:
            raise FlowParseError(f"value {value_s!r} is not numeric", line=line) from None
        if not math.isfinite(value):
            raise FlowParseError(f"value {value_s!r} is not finite", line=line)
        if not (s_reg and s_ind and b_reg):
            raise FlowParseError("region and industry codes must be non-empty", line=line)
        try:
            kind = BuyerKind(kind_s)
        except ValueError:
            raise FlowParseError(f"buyer_kind must be IND or FIN, got {kind_s!r}", line=line) from None
        if kind is BuyerKind.INDUSTRY:
            if not b_ind:
                raise FlowParseError("buyer_industry is required when buyer_kind is IND", line=line)
        elif b_ind:
            raise FlowParseError("buyer_industry must be empty when buyer_kind is FIN", line=line)

        s_ind_c = industries.get(s_ind)
        if s_ind_c is None:
            raise SchemaError(f"line {line}: unknown industry code {s_ind!r}")
        b_ind_c = None
        if kind is BuyerKind.INDUSTRY:
            b_ind_c = industries.get(b_ind)
            if b_ind_c is None:
                raise SchemaError(f"line {line}: unknown industry code {b_ind!r}")
        yield RawFlowRecord(year, s_reg, s_ind_c, b_reg, kind, b_ind_c, value)


def parse_flows(stream, scheme: RegionScheme) -> list[RawFlowRecord]:
    return list(iter_flows(stream, scheme))


@dataclass(frozen=True, eq=False)
class IOTable:
    """One year's aggregated, clamped flow table.

    Nodes are (region, industry) pairs flattened region-major:
    ``node = region_index * n_industries + industry_index``.

    Attributes
    ----------
    Z : ndarray of shape (n_nodes, n_nodes)
        ``Z[i, j]`` is the value node ``i`` sells to node ``j``.
    F : ndarray of shape (n_nodes,)
        Total final-use sales of each node across all consuming regions.
    final_by_region : ndarray of shape (n_nodes, n_regions + 1) or None
        Final-use sales split by consuming region; the last column holds sales
        to consumers whose region is not in the scheme.
    """

    year: int
    regions: tuple[str, ...]
    industries: tuple[str, ...]
    Z: np.ndarray
    F: np.ndarray
    clamp_count: int = 0
    final_by_region: np.ndarray | None = None

    def __post_init__(self):
        n = len(self.regions) * len(self.industries)
        Z = np.array(self.Z, dtype=np.float64)
        F = np.array(self.F, dtype=np.float64).ravel()
        if Z.shape != (n, n) or F.shape != (n,):
            raise InputError(f"table dimensions {Z.shape}/{F.shape} do not match "
                             f"{len(self.regions)} regions x {len(self.industries)} industries")
        Z.setflags(write=False)
        F.setflags(write=False)
        object.__setattr__(self, "Z", Z)
        object.__setattr__(self, "F", F)
        object.__setattr__(self, "regions", tuple(self.regions))
        object.__setattr__(self, "industries", tuple(self.industries))
        if self.final_by_region is not None:
            fb = np.array(self.final_by_region, dtype=np.float64)
            if fb.shape != (n, len(self.regions) + 1):
                raise InputError(f"final_by_region has shape {fb.shape}, expected {(n, len(self.regions) + 1)}")
            fb.setflags(write=False)
            object.__setattr__(self, "final_by_region", fb)

    @property
    def n_nodes(self) -> int:
        return self.Z.shape[0]

    def node_codes(self) -> list[str]:
        return [f"{r}.{i}" for r in self.regions for i in self.industries]

    def clamped(self) -> "IOTable":
        """Return a copy with negative cells set to zero (idempotent)."""
        Z = np.maximum(self.Z, 0.0)
        count = int((self.Z < 0).sum())
        if self.final_by_region is None:
            fb = None
            F = np.maximum(self.F, 0.0)
            count += int((self.F < 0).sum())
        else:
            fb = np.maximum(self.final_by_region, 0.0)
            F = fb.sum(axis=1)
            count += int((self.final_by_region < 0).sum())
        return IOTable(self.year, self.regions, self.industries, Z, F,
                       self.clamp_count + count, fb)


class _FlowAccumulator:
    """Columnar per-year cell accumulator for streams of flow records.

    Each record becomes a (cell, value) pair in a matrix of shape
    ``n_nodes x (n_nodes + n_regions + 1)``: industry buyers first, then one
    final-demand column per model region, then one for unmapped consumers.
    """

    def __init__(self, scheme: RegionScheme):
        self.scheme = scheme
        self.n_ind = len(scheme.industry_codes)
        self.n_reg = len(scheme.regions)
        self.n_nodes = self.n_reg * self.n_ind
        self.n_cols = self.n_nodes + self.n_reg + 1
        self._region_idx = {r: k for k, r in enumerate(scheme.regions)}
        self._ind_idx = {c: k for k, c in enumerate(scheme.industry_codes)}
        self._cells: dict[int, array] = {}
        self._values: dict[int, array] = {}
        self._source_total: dict[int, float] = {}

    def _region(self, code):
        target = self.scheme.target_region(code)
        return None if target is None else self._region_idx[target]

    def add(self, rec: RawFlowRecord):
        s_reg = self._region(rec.supplier_region)
        if s_reg is None:
            raise SchemeError(f"supplier region {rec.supplier_region!r} is not covered by the scheme")
        s_ind = self._ind_idx.get(rec.supplier_industry)
        if s_ind is None:
            raise SchemaError(f"unknown industry code {rec.supplier_industry!r}")
        supplier = s_reg * self.n_ind + s_ind
        b_reg = self._region(rec.buyer_region)
        if rec.buyer_kind is BuyerKind.INDUSTRY:
            if b_reg is None:
                raise SchemeError(f"buyer region {rec.buyer_region!r} is not covered by the scheme")
            b_ind = self._ind_idx.get(rec.buyer_industry)
            if b_ind is None:
                raise SchemaError(f"unknown industry code {rec.buyer_industry!r}")
            col = b_reg * self.n_ind + b_ind
        else:
            col = self.n_nodes + (self.n_reg if b_reg is None else b_reg)
        if rec.year not in self._cells:
            self._cells[rec.year] = array("q")
            self._values[rec.year] = array("d")
        self._cells[rec.year].append(supplier * self.n_cols + col)
        self._values[rec.year].append(rec.value)

    @property
    def years(self) -> list[int]:
        return sorted(self._cells)

    def table(self, year: int) -> IOTable:
        cells = np.frombuffer(self._cells.get(year, array("q")), dtype=np.int64)
        values = np.frombuffer(self._values.get(year, array("d")), dtype=np.float64)
        dense = np.zeros(self.n_nodes * self.n_cols)
        if cells.size:
            # sorting by (cell, value) fixes the summation order, so the result
            # does not depend on record order
            order = np.lexsort((values, cells))
            cells, values = cells[order], values[order]
            starts = np.flatnonzero(np.r_[True, cells[1:] != cells[:-1]])
            dense[cells[starts]] = np.add.reduceat(values, starts)
        dense = dense.reshape(self.n_nodes, self.n_cols)
        negative = dense < 0
        clamp_count = int(negative.sum())
        dense[negative] = 0.0
        Z = dense[:, :self.n_nodes]
        final = dense[:, self.n_nodes:]
        return IOTable(year, self.scheme.regions, self.scheme.industry_codes,
                       Z, final.sum(axis=1), clamp_count, final)


def build_io_table(records: Iterable[RawFlowRecord], scheme: RegionScheme, year: int) -> IOTable:
    """Aggregate one year's records into a clamped :class:`IOTable`."""
    acc = _FlowAccumulator(scheme)
    for rec in records:
        if rec.year != year:
            raise InputError(f"record for year {rec.year} passed to build_io_table(year={year})")
        acc.add(rec)
    return acc.table(year)


def build_io_tables(records: Iterable[RawFlowRecord], scheme: RegionScheme) -> dict[int, IOTable]:
    """Aggregate a multi-year record stream into one table per year."""
    acc = _FlowAccumulator(scheme)
    for rec in records:
        acc.add(rec)
    return {year: acc.table(year) for year in acc.years}


def read_flow_tables(path, scheme: RegionScheme) -> dict[int, IOTable]:
    with open(path, newline="", encoding="utf-8") as fh:
        return build_io_tables(iter_flows(fh, scheme), scheme)


@dataclass
class ValidationReport:
    year: int
    shape: tuple[int, int]
    dimension_ok: bool
    zero_revenue: list[str]
    clamp_count: int
    nonzero_fraction: float

    @property
    def ok(self) -> bool:
        return self.dimension_ok and not self.zero_revenue

    def status(self) -> str:
        return "ok" if self.ok else "warnings"

    def to_dict(self) -> dict:
        return {
            "year": self.year,
            "status": self.status(),
            "shape": list(self.shape),
            "dimension_ok": self.dimension_ok,
            "zero_revenue": list(self.zero_revenue),
            "clamp_count": self.clamp_count,
            "nonzero_fraction": self.nonzero_fraction,
        }


def validate_table(table: IOTable) -> ValidationReport:
    """Report zero-revenue nodes, clamping and density for a table."""
    n = len(table.regions) * len(table.industries)
    dim_ok = table.Z.shape == (n, n) and table.F.shape == (n,)
    revenue = table.Z.sum(axis=1) + table.F
    codes = table.node_codes()
    zero = [codes[i] for i in np.flatnonzero(revenue <= 0)]
    nz = float(np.count_nonzero(table.Z)) / table.Z.size if table.Z.size else 0.0
    return ValidationReport(table.year, table.Z.shape, dim_ok, zero,
                            int(table.clamp_count), nz)
