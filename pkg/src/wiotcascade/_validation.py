"""Input validation helpers in the style of ``sklearn.utils.validation``."""

import numbers

import numpy as np
from sklearn.utils import check_array

from .errors import ContractError, InputError


def check_flow_matrix(Z, name="Z"):
    """Return ``Z`` as a finite, square, non-negative float64 array."""
    Z = check_array(Z, dtype=np.float64, ensure_all_finite=True,
                    ensure_min_samples=1, ensure_min_features=1,
                    input_name=name)
    if Z.shape[0] != Z.shape[1]:
        raise InputError(f"{name} must be square, got shape {Z.shape}")
    if (Z < 0).any():
        raise InputError(f"{name} has negative entries; clamp before building a network")
    return Z


def check_final_vector(F, n_nodes, name="F"):
    if F is None:
        return np.zeros(n_nodes)
    F = check_array(np.asarray(F, dtype=np.float64).reshape(-1, 1),
                    ensure_all_finite=True, input_name=name).ravel()
    if F.shape[0] != n_nodes:
        raise InputError(f"{name} has length {F.shape[0]}, expected {n_nodes}")
    if (F < 0).any():
        raise InputError(f"{name} has negative entries")
    return F


def check_fraction(value, name, *, open_low=False, open_high=False):
    """Validate a scalar in [0, 1] (optionally open at either end)."""
    if not isinstance(value, numbers.Real) or isinstance(value, bool):
        raise ContractError(f"{name} must be a real number, got {value!r}")
    value = float(value)
    low_ok = value > 0 if open_low else value >= 0
    high_ok = value < 1 if open_high else value <= 1
    if not (low_ok and high_ok and np.isfinite(value)):
        lo = "(" if open_low else "["
        hi = ")" if open_high else "]"
        raise ContractError(f"{name} must lie in {lo}0, 1{hi}, got {value}")
    return value


def check_node_set(nodes, n_nodes, name="seeds"):
    """Return sorted unique flat node indices, rejecting out-of-range values."""
    arr = np.unique(np.asarray(list(nodes), dtype=np.int64))
    if arr.size and (arr[0] < 0 or arr[-1] >= n_nodes):
        raise ContractError(f"{name} contains an invalid node index (valid: 0..{n_nodes - 1})")
    return arr
