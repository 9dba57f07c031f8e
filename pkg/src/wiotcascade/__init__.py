"""Cascading-failure stress testing of world input-output networks."""

__version__ = "0.1.0"

from .analytics import (Rule, country_importance, country_output_series, industry_importance, kendall_matrix,
                        kendall_tau, top_industries)
from .cascade import CascadeConfig, CascadeResult, Metric, run_cascade, survivor_metric
from .errors import ContractError, FlowParseError, InputError, SchemaError, SchemeError, WiotError
from .estimator import CriticalTolerance
from .ingest import IOTable, RawFlowRecord, RegionScheme, build_io_table, build_io_tables, parse_flows, validate_table
from .network import EconNetwork, NodeId, build_network, loss_fraction, network_from_arrays
from .solver import PcTable, SolverConfig, build_pc_table, find_pc, survivor_curve

__all__ = [
    "CascadeConfig", "CascadeResult", "ContractError", "CriticalTolerance", "EconNetwork", "FlowParseError",
    "IOTable", "InputError", "Metric", "NodeId", "PcTable", "RawFlowRecord", "RegionScheme", "Rule",
    "SchemaError", "SchemeError", "SolverConfig", "WiotError", "build_io_table", "build_io_tables",
    "build_network", "build_pc_table", "country_importance", "country_output_series", "find_pc",
    "industry_importance", "kendall_matrix", "kendall_tau", "loss_fraction", "network_from_arrays",
    "parse_flows", "run_cascade", "survivor_curve", "survivor_metric", "top_industries", "validate_table",
]
