"""Rankings and comparisons derived from a p_c table."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Mapping, NamedTuple

import numpy as np

from .errors import ContractError, InputError
from .solver import PcTable

_TOP_RE = re.compile(r"^TOP\(?(\d+)\)?$")


class Rule(NamedTuple):
    """Selection rule for country importance: all industries or the ``k`` largest."""

    k: int | None = None

    @property
    def label(self) -> str:
        return "ALL" if self.k is None else f"TOP{self.k}"

    @classmethod
    def parse(cls, rule) -> "Rule":
        if isinstance(rule, Rule):
            return rule
        if rule is None:
            return cls(None)
        if isinstance(rule, (int, np.integer)) and not isinstance(rule, bool):
            if rule <= 0:
                raise ContractError(f"TOP(k) needs k >= 1, got {rule}")
            return cls(int(rule))
        text = str(rule).strip().upper()
        if text == "ALL":
            return cls(None)
        m = _TOP_RE.match(text)
        if not m or int(m.group(1)) <= 0:
            raise ContractError(f"unknown importance rule {rule!r}; use ALL or TOP<k>")
        return cls(int(m.group(1)))


ALL = Rule(None)


def _select_mean(values: np.ndarray, rule: Rule) -> float:
    if rule.k is None:
        return float(np.mean(values))
    k = min(rule.k, values.size)
    return float(np.mean(np.sort(values)[::-1][:k]))


def country_importance(table: PcTable, year: int, rule=ALL) -> dict[str, float]:
    """Mean p_c of each region's industries in ``year`` (all, or the top ``k``)."""
    rule = Rule.parse(rule)
    out = {}
    for region in table.regions:
        values = table.region_values(year, region)
        if np.isnan(values).any():
            raise InputError(f"p_c table is incomplete for {region} in {year}")
        out[region] = _select_mean(values, rule)
    return out


def country_importance_table(table: PcTable, rule=ALL) -> dict[tuple[str, int], float]:
    out = {}
    for year in table.years:
        for region, value in country_importance(table, year, rule).items():
            out[(region, year)] = value
    return out


def industry_importance(table: PcTable, country: str, industry: str) -> float:
    """Average p_c of one industry over the years it was computed."""
    series = table.industry_series(country, industry)
    series = series[~np.isnan(series)]
    if series.size == 0:
        raise KeyError(f"no p_c entries for {country}.{industry}")
    return series.sum() / series.size


def industry_importance_table(table: PcTable) -> dict[tuple[str, str], float]:
    return {(c, k): industry_importance(table, c, k)
            for c in table.regions for k in table.industries}


def top_industries(table: PcTable, n: int = 20) -> list[str]:
    """Industries ordered by cross-country mean importance, ``n`` largest first."""
    imp = industry_importance_table(table)
    means = {k: float(np.mean([imp[(c, k)] for c in table.regions])) for k in table.industries}
    order = sorted(table.industries, key=lambda k: (-means[k], table.industries.index(k)))
    return order[:n]


def kendall_counts(a, b) -> tuple[int, int, int]:
    """Concordant pairs, discordant pairs and total pairs for two rankings.

    Pairs tied in either list count as neither concordant nor discordant.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ContractError(f"rankings must be 1-D and equally long, got {a.shape} and {b.shape}")
    n = a.size
    if n < 2:
        raise ContractError("Kendall tau needs at least two observations")
    iu = np.triu_indices(n, k=1)
    prod = (np.sign(a[:, None] - a[None, :]) * np.sign(b[:, None] - b[None, :]))[iu]
    return int((prod > 0).sum()), int((prod < 0).sum()), n * (n - 1) // 2


def kendall_tau(a, b, variant: str = "a") -> float:
    """Kendall rank correlation; ``variant="b"`` applies the tie correction."""
    n_plus, n_minus, n_pairs = kendall_counts(a, b)
    if variant == "a":
        return (n_plus - n_minus) / n_pairs
    if variant != "b":
        raise ContractError(f"variant must be 'a' or 'b', got {variant!r}")
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    ties_a = sum(c * (c - 1) // 2 for c in np.unique(a, return_counts=True)[1])
    ties_b = sum(c * (c - 1) // 2 for c in np.unique(b, return_counts=True)[1])
    denom = math.sqrt((n_pairs - ties_a) * (n_pairs - ties_b))
    return (n_plus - n_minus) / denom if denom else float("nan")


@dataclass
class KendallMatrix:
    country: str
    years: tuple[int, ...]
    tau: np.ndarray


def kendall_matrix(table: PcTable, country: str, variant: str = "a") -> KendallMatrix:
    """Rank correlation of a country's industry p_c vectors between every pair of years."""
    vectors = []
    for year in table.years:
        v = table.region_values(year, country)
        if np.isnan(v).any():
            raise InputError(f"p_c table is incomplete for {country} in {year}")
        vectors.append(v)
    T = len(vectors)
    tau = np.ones((T, T))
    for s in range(T):
        for t in range(s, T):
            tau[s, t] = tau[t, s] = kendall_tau(vectors[s], vectors[t], variant)
    return KendallMatrix(country, tuple(table.years), tau)


@dataclass
class OutputRecord:
    country: str
    year: int
    intermediate_exports: float
    final_exports: float | None
    value_added: float | None

    @property
    def output(self) -> float:
        return self.intermediate_exports + (self.final_exports or 0.0) + (self.value_added or 0.0)

    def components(self) -> str:
        parts = [f"intermediate={self.intermediate_exports:.6g}"]
        parts.append("final=excluded" if self.final_exports is None else f"final={self.final_exports:.6g}")
        parts.append("value_added=absent" if self.value_added is None else f"value_added={self.value_added:.6g}")
        return ";".join(parts)


def country_output_series(tables: Mapping[int, object], value_added: Mapping[tuple[str, int], float] | None = None,
                          ) -> list[OutputRecord]:
    """Money each region supplies to other regions, per year.

    The intermediate part is the sum of ``Z`` from the region's nodes to
    nodes of other regions. Final-use exports are added when the tables carry
    a per-consumer-region split (``final_by_region``); sales to consumers of
    unknown region are not counted. Value added is added when supplied as a
    ``(country, year) -> value`` mapping.
    """
    records = []
    regions = None
    for year in sorted(tables):
        t = tables[year]
        if regions is None:
            regions = t.regions
        elif t.regions != regions:
            raise InputError(f"table for {year} uses a different region list")
        n_ind = len(t.industries)
        region_of = np.repeat(np.arange(len(t.regions)), n_ind)
        for r, region in enumerate(t.regions):
            rows = region_of == r
            inter = float(t.Z[rows][:, ~rows].sum())
            final = None
            if getattr(t, "final_by_region", None) is not None:
                fb = t.final_by_region[rows, :len(t.regions)]
                final = float(np.delete(fb, r, axis=1).sum())
            va = None
            if value_added is not None and (region, year) in value_added:
                va = float(value_added[(region, year)])
            records.append(OutputRecord(region, int(year), inter, final, va))
    return records
