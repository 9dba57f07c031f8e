"""Random networks for property tests and benchmarks."""

import numpy as np

from .network import network_from_arrays


def random_network(rng, n_regions, n_industries, density=0.5, final_scale=1.0, revenue_base="total"):
    """Network with i.i.d. exponential weights on a random subset of cells.

    ``final_scale`` multiplies a node's intermediate sales to draw its
    final-use sales, so smaller values give more fragile networks.
    """
    rng = np.random.default_rng(rng)
    n = n_regions * n_industries
    Z = rng.exponential(1.0, size=(n, n)) * (rng.random((n, n)) < density)
    np.fill_diagonal(Z, 0.0)
    F = Z.sum(axis=1) * final_scale * rng.random(n)
    return network_from_arrays(Z, F, n_regions=n_regions, revenue_base=revenue_base)


def toy_network():
    """Two regions X and Y, industries 1 and 2, with three cross-region sales.

    Y1 sells 50 to X1, X2 sells 30 to Y1 and Y2 sells 10 to X2; final-use
    sales bring the revenue bases to R[X1]=100, R[X2]=60, R[Y1]=100, R[Y2]=100.
    """
    Z = np.zeros((4, 4))
    X1, X2, Y1, Y2 = range(4)
    Z[Y1, X1] = 50
    Z[X2, Y1] = 30
    Z[Y2, X2] = 10
    F = np.array([100.0, 30.0, 50.0, 90.0])
    return network_from_arrays(Z, F, regions=("X", "Y"), industries=("1", "2"))
