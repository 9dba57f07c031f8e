"""Command-line interface: ``wiotcascade {ingest,cascade,pc,rank,kendall,outputs}``.

Exit codes: 0 success, 1 usage error, 2 data or schema error, 3 internal error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analytics import (Rule, country_importance_table, country_output_series, industry_importance_table,
                        kendall_matrix, top_industries)
from .bundle import read_bundle, write_bundle
from .cascade import CascadeConfig, Metric, run_cascade
from .errors import ContractError, InputError, WiotError
from .ingest import iter_flows, build_io_tables, load_scheme, validate_table
from .network import REVENUE_BASES, build_network
from .report import (country_importance_csv, heatmap_svg, industry_importance_csv, kendall_csv, outputs_csv)
from .solver import (PcTable, SolverConfig, build_pc_table, format_value, resolve_workers, survivor_curve)

logger = logging.getLogger("wiotcascade")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3
CACHE_FORMAT = "wiotcascade-pc-cache/1"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _emit(text: str, path):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _load_networks(bundle_path, revenue_base):
    tables, _ = read_bundle(bundle_path)
    return tables, {y: build_network(t, revenue_base=revenue_base) for y, t in tables.items()}


def _pick_year(tables, year):
    if year is None:
        if len(tables) != 1:
            raise UsageError(f"bundle holds years {sorted(tables)}; pass --year")
        return next(iter(tables))
    if year not in tables:
        raise UsageError(f"year {year} not in bundle (available: {sorted(tables)})")
    return year


def _resolve_seeds(network, codes):
    try:
        return network.resolve_set(codes)
    except ContractError:
        bad = [c for c in codes if not _resolves(network, c)]
        raise UsageError(f"unknown seed {', '.join(bad)}; valid codes: {' '.join(network.node_codes())}") from None


def _resolves(network, code):
    try:
        network.resolve(code)
        return True
    except ContractError:
        return False


def _cascade_config(args, p=0.0):
    return CascadeConfig(p, exclude_domestic=not args.no_domestic_exclusion,
                         metric=Metric(args.metric), strict=not args.non_strict)


# commands

def cmd_ingest(args):
    scheme = load_scheme(args.scheme)
    with open(args.flows, newline="", encoding="utf-8") as fh:
        tables = build_io_tables(iter_flows(fh, scheme), scheme)
    if not tables:
        raise InputError(f"{args.flows}: no data rows")
    write_bundle(args.out, tables, scheme)
    for year in sorted(tables):
        rep = validate_table(tables[year])
        print(f"{year}: {rep.status()} nodes={rep.shape[0]} clamped={rep.clamp_count} "
              f"nonzero={rep.nonzero_fraction:.3f} zero_revenue={len(rep.zero_revenue)}", file=sys.stderr)
    print(f"wrote {len(tables)} table(s) to {args.out}", file=sys.stderr)
    return EXIT_OK


def cmd_cascade(args):
    tables, networks = _load_networks(args.bundle, args.revenue_base)
    year = _pick_year(tables, args.year)
    net = networks[year]
    seeds = _resolve_seeds(net, args.seed)
    result = run_cascade(net, seeds, _cascade_config(args, args.p))
    line = f"failed={len(result.failed)} steps={result.steps} survivors={result.survivor_fraction:.3f}"
    if Metric(args.metric) is Metric.LARGEST_COMPONENT:
        line += f" largest_component={result.largest_component_fraction:.3f}"
    print(line)
    if args.trace:
        result.write_trace(args.trace)
    if args.curve:
        cfg = SolverConfig(cascade=_cascade_config(args))
        rows = [(format_value(pt.p), format_value(pt.survivor_fraction), pt.steps, format_value(pt.metric_value))
                for pt in survivor_curve(net, seeds, cfg)]
        with open(args.curve, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("p", "survivor_fraction", "steps", "metric"))
            w.writerows(rows)
    return EXIT_OK


def _fingerprint(bundle_path, payload: dict) -> str:
    h = hashlib.sha256()
    with open(bundle_path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    h.update(json.dumps(payload, sort_keys=True).encode("utf-8"))
    return h.hexdigest()


def _read_cache(path: Path, fingerprint: str):
    if not path.exists():
        return None
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
        if data.get("format") != CACHE_FORMAT or data.get("fingerprint") != fingerprint:
            raise ValueError("fingerprint mismatch")
        pc = np.array(data["pc"], dtype=float)
        sat = np.array(data["saturated"], dtype=bool)
        table = PcTable(tuple(data["years"]), tuple(data["regions"]), tuple(data["industries"]),
                        pc, sat, data["config"], tuple(data["missing_years"]))
        if pc.shape != (len(table.years), len(table.regions), len(table.industries)) or pc.shape != sat.shape:
            raise ValueError("shape mismatch")
        return table
    except (ValueError, KeyError, TypeError) as exc:
        logger.warning("cache entry %s is unusable (%s); rebuilding", path, exc)
        return None


def _write_cache(path: Path, fingerprint: str, table: PcTable):
    path.parent.mkdir(parents=True, exist_ok=True)
    data = {
        "format": CACHE_FORMAT,
        "fingerprint": fingerprint,
        "years": list(table.years),
        "regions": list(table.regions),
        "industries": list(table.industries),
        "pc": [[[None if np.isnan(v) else float(v) for v in row] for row in block] for block in table.pc],
        "saturated": table.saturated.tolist(),
        "config": table.config,
        "missing_years": list(table.missing_years),
    }
    tmp = path.with_suffix(f".tmp{os.getpid()}")
    tmp.write_text(json.dumps(data), encoding="utf-8")
    os.replace(tmp, path)


def cmd_pc(args):
    tables, networks = _load_networks(args.bundle, args.revenue_base)
    years = sorted(tables) if args.all_years or not args.year else sorted(set(args.year))
    first = networks[sorted(tables)[0]]
    seeds = None if args.all_seeds or not args.seed else _resolve_seeds(first, args.seed)
    config = SolverConfig(args.threshold, args.epsilon, cascade=_cascade_config(args))
    payload = {"solver": config.fingerprint(), "revenue_base": args.revenue_base, "years": years,
               "seeds": None if seeds is None else seeds.tolist()}
    fp = _fingerprint(args.bundle, payload)
    cache_path = Path(args.cache_dir) / f"pc-{fp[:32]}.json"
    table = _read_cache(cache_path, fp)
    if table is not None:
        logger.info("p_c table served from cache %s", cache_path)
    else:
        next_report = 0.0

        def progress(done, total):
            nonlocal next_report
            if done / total >= next_report or done == total:
                logger.info("p_c progress %d/%d", done, total)
                next_report += 0.1

        table = build_pc_table(networks, seeds, config, years=years,
                               n_jobs=resolve_workers(args.workers), progress=progress)
        _write_cache(cache_path, fp, table)
    if table.partial:
        print(f"warning: p_c table is partial (missing years: {list(table.missing_years)})", file=sys.stderr)
    if args.out in (None, "-"):
        sys.stdout.write(table.to_csv_text())
    else:
        table.write(args.out)
    return EXIT_OK


def _parse_rule(args):
    if args.rule is not None:
        return Rule.parse(args.rule)
    return Rule.parse("ALL" if args.top_m == 0 else args.top_m)


def cmd_rank(args):
    table = PcTable.read(args.pc_table)
    if args.by == "country":
        rule = _parse_rule(args)
        values = country_importance_table(table, rule)
        _emit(country_importance_csv(values, table.regions, table.years, rule.label), args.out)
        if args.svg:
            M = np.array([[values[(c, y)] for y in table.years] for c in table.regions])
            Path(args.svg).write_text(heatmap_svg(M, table.regions, table.years,
                                                  f"Country importance ({rule.label})"), encoding="utf-8")
    else:
        values = industry_importance_table(table)
        _emit(industry_importance_csv(values, table.regions, table.industries), args.out)
        if args.svg:
            inds = top_industries(table, args.top_industries)
            M = np.array([[values[(c, k)] for c in table.regions] for k in inds])
            Path(args.svg).write_text(heatmap_svg(M, inds, table.regions, "Industry importance"),
                                      encoding="utf-8")
    return EXIT_OK


def cmd_kendall(args):
    table = PcTable.read(args.pc_table)
    if args.country not in table.regions:
        raise UsageError(f"unknown country {args.country!r}; valid: {' '.join(table.regions)}")
    if len(table.years) < 2:
        raise UsageError("Kendall matrix needs a p_c table covering at least two years")
    km = kendall_matrix(table, args.country, args.variant)
    _emit(kendall_csv(km), args.out)
    if args.svg:
        Path(args.svg).write_text(heatmap_svg(km.tau, km.years, km.years, f"Kendall tau, {args.country}"),
                                  encoding="utf-8")
    return EXIT_OK


def _read_value_added(path):
    out = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["country", "year", "value_added"]:
            raise InputError(f"{path}: header must be country,year,value_added")
        for line, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                out[(row[0].strip(), int(row[1]))] = float(row[2])
            except (ValueError, IndexError):
                raise InputError(f"{path}: line {line}: malformed row") from None
    return out


def cmd_outputs(args):
    tables, _ = read_bundle(args.bundle)
    va = _read_value_added(args.value_added) if args.value_added else None
    _emit(outputs_csv(country_output_series(tables, va)), args.out)
    return EXIT_OK


def _add_cascade_flags(p):
    p.add_argument("--no-domestic-exclusion", action="store_true",
                   help="let failures reduce revenues of same-region industries")
    p.add_argument("--metric", choices=[m.value for m in Metric], default=Metric.SURVIVOR_FRACTION.value)
    p.add_argument("--non-strict", action="store_true", help="fail at p' >= p instead of p' > p")
    p.add_argument("--revenue-base", choices=REVENUE_BASES, default="total")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="wiotcascade", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--config", help="JSON file whose keys override command-line flags")
    parser.add_argument("-v", "--verbose", action="store_true")
    # accepted after the subcommand too; SUPPRESS keeps an earlier value intact
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS, help=argparse.SUPPRESS)
    common.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS, help=argparse.SUPPRESS)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("ingest", parents=[common], help="parse a flows CSV into a table bundle")
    p.add_argument("flows")
    p.add_argument("scheme")
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("cascade", parents=[common], help="run one cascade and report survivors")
    p.add_argument("bundle")
    p.add_argument("--year", type=int)
    p.add_argument("--seed", action="append", required=True, help="REGION.industry, repeatable")
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--trace", help="write per-round failures as JSON")
    p.add_argument("--curve", help="write the survivor/step curve over the default grid as CSV")
    _add_cascade_flags(p)
    p.set_defaults(func=cmd_cascade)

    p = sub.add_parser("pc", parents=[common], help="compute the p_c table")
    p.add_argument("bundle")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--year", type=int, action="append")
    g.add_argument("--all-years", action="store_true")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--seed", action="append")
    g.add_argument("--all-seeds", action="store_true")
    p.add_argument("--threshold", type=float, default=0.30)
    p.add_argument("--epsilon", type=float, default=1e-4)
    p.add_argument("--cache-dir", default=".wiotcascade-cache")
    p.add_argument("--workers", type=int, help="pool width (default: $WIOTCASCADE_WORKERS or 1)")
    p.add_argument("-o", "--out")
    _add_cascade_flags(p)
    p.set_defaults(func=cmd_pc)

    p = sub.add_parser("rank", parents=[common], help="country or industry importance")
    p.add_argument("pc_table")
    p.add_argument("--by", choices=("country", "industry"), default="country")
    p.add_argument("--top-m", type=int, default=4, help="average the m largest p_c (0 = all)")
    p.add_argument("--rule", help="explicit rule, ALL or TOP<k>; overrides --top-m")
    p.add_argument("--top-industries", type=int, default=20)
    p.add_argument("-o", "--out")
    p.add_argument("--svg")
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("kendall", parents=[common], help="Kendall tau matrix between years")
    p.add_argument("pc_table")
    p.add_argument("--country", required=True)
    p.add_argument("--variant", choices=("a", "b"), default="a")
    p.add_argument("-o", "--out")
    p.add_argument("--svg")
    p.set_defaults(func=cmd_kendall)

    p = sub.add_parser("outputs", parents=[common], help="per-country output supplied to other regions")
    p.add_argument("bundle")
    p.add_argument("--value-added", help="CSV country,year,value_added")
    p.add_argument("-o", "--out")
    p.set_defaults(func=cmd_outputs)
    return parser


def _apply_config(args):
    with open(args.config, encoding="utf-8") as fh:
        overrides = json.load(fh)
    if not isinstance(overrides, dict):
        raise UsageError("config file must hold a JSON object")
    for key, value in overrides.items():
        dest = key.replace("-", "_")
        if hasattr(args, dest):
            setattr(args, dest, value)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        if args.config:
            _apply_config(args)
        return args.func(args)
    except (UsageError, ContractError) as exc:
        print(f"wiotcascade: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (WiotError, OSError) as exc:
        print(f"wiotcascade: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001
        logger.exception("internal error")
        print(f"wiotcascade: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
