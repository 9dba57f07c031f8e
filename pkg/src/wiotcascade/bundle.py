"""Deterministic on-disk bundle of per-year IO tables.

A bundle is a zip archive holding ``meta.json`` (codes, scheme, validation
reports) and one ``.npy`` member per array. Member timestamps are fixed so
identical inputs produce byte-identical files.
"""

from __future__ import annotations

import io
import json
import zipfile

import numpy as np

from .errors import InputError
from .ingest import IOTable, RegionScheme, validate_table

FORMAT = "wiotcascade-bundle/1"
_EPOCH = (1980, 1, 1, 0, 0, 0)


def _npy_bytes(arr: np.ndarray) -> bytes:
    buf = io.BytesIO()
    np.lib.format.write_array(buf, np.ascontiguousarray(arr), allow_pickle=False)
    return buf.getvalue()


def _write_member(zf: zipfile.ZipFile, name: str, data: bytes):
    info = zipfile.ZipInfo(name, date_time=_EPOCH)
    info.compress_type = zipfile.ZIP_DEFLATED
    info.external_attr = 0o644 << 16
    zf.writestr(info, data)


def write_bundle(path, tables: dict[int, IOTable], scheme: RegionScheme | None = None):
    years = sorted(tables)
    if not years:
        raise InputError("bundle needs at least one table")
    first = tables[years[0]]
    meta = {
        "format": FORMAT,
        "years": years,
        "regions": list(first.regions),
        "industries": list(first.industries),
        "scheme": scheme.to_dict() if scheme is not None else None,
        "tables": {},
    }
    with zipfile.ZipFile(path, "w") as zf:
        for year in years:
            t = tables[year]
            if t.regions != first.regions or t.industries != first.industries:
                raise InputError(f"table {year} does not share node indexing")
            _write_member(zf, f"{year}/Z.npy", _npy_bytes(t.Z))
            _write_member(zf, f"{year}/F.npy", _npy_bytes(t.F))
            has_fb = t.final_by_region is not None
            if has_fb:
                _write_member(zf, f"{year}/final_by_region.npy", _npy_bytes(t.final_by_region))
            meta["tables"][str(year)] = {
                "clamp_count": int(t.clamp_count),
                "final_by_region": has_fb,
                "validation": validate_table(t).to_dict(),
            }
        _write_member(zf, "meta.json", json.dumps(meta, indent=2, sort_keys=True).encode("utf-8"))


def read_bundle(path) -> tuple[dict[int, IOTable], dict]:
    try:
        zf = zipfile.ZipFile(path)
    except (zipfile.BadZipFile, OSError) as exc:
        raise InputError(f"{path}: not a table bundle ({exc})") from None
    with zf:
        try:
            meta = json.loads(zf.read("meta.json"))
        except KeyError:
            raise InputError(f"{path}: bundle has no meta.json") from None
        if meta.get("format") != FORMAT:
            raise InputError(f"{path}: unsupported bundle format {meta.get('format')!r}")

        def load(name):
            return np.lib.format.read_array(io.BytesIO(zf.read(name)), allow_pickle=False)

        tables = {}
        for year in meta["years"]:
            info = meta["tables"][str(year)]
            fb = load(f"{year}/final_by_region.npy") if info.get("final_by_region") else None
            tables[int(year)] = IOTable(int(year), tuple(meta["regions"]), tuple(meta["industries"]),
                                        load(f"{year}/Z.npy"), load(f"{year}/F.npy"),
                                        int(info["clamp_count"]), fb)
    return tables, meta
