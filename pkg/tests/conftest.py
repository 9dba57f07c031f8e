import json

import numpy as np
import pytest

from wiotcascade.ingest import RegionScheme
from wiotcascade.synthetic import toy_network

HEADER = "year,supplier_region,supplier_industry,buyer_region,buyer_kind,buyer_industry,value\n"

# the toy instance as canonical flows: X is kept, Y is the aggregate region and
# AUT folds into Y
TOY_ROWS = """{y},Y,1,X,IND,1,50
{y},X,2,Y,IND,1,30
{y},Y,2,X,IND,2,10
{y},X,1,X,FIN,,100
{y},X,2,X,FIN,,30
{y},Y,1,Y,FIN,,50
{y},Y,2,Y,FIN,,60
{y},AUT,2,AUT,FIN,,30
"""

TOY_SCHEME = {
    "kept_regions": ["X"],
    "row_code": "Y",
    "aggregation_map": {"AUT": "Y"},
    "industry_codes": ["1", "2"],
}


@pytest.fixture
def toy():
    return toy_network()


@pytest.fixture
def toy_scheme():
    return RegionScheme.from_dict(TOY_SCHEME)


def toy_csv(years=(2009,)):
    return HEADER + "".join(TOY_ROWS.format(y=y) for y in years)


@pytest.fixture
def toy_files(tmp_path):
    flows = tmp_path / "flows.csv"
    flows.write_text(toy_csv((2009, 2010)))
    scheme = tmp_path / "scheme.json"
    scheme.write_text(json.dumps(TOY_SCHEME))
    return flows, scheme


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, status, detail in mod.RESULTS:
        terminalreporter.write_line(f"[{status}] {name}: {detail}")
