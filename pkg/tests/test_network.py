import pickle

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wiotcascade.errors import ContractError, InputError
from wiotcascade.ingest import IOTable
from wiotcascade.network import NodeId, build_network, loss_fraction, network_from_arrays
from wiotcascade.synthetic import random_network

X1, X2, Y1, Y2 = range(4)


def test_revenue_includes_final_use():
    Z = np.zeros((4, 4))
    Z[0, 2] = 50
    t = IOTable(2009, ("X", "Y"), ("1", "2"), Z, [50, 0, 0, 0])
    net = build_network(t)
    assert net.R[0] == 100
    assert build_network(t, revenue_base="intermediate").R[0] == 50


def test_all_zero_network_is_inert():
    net = build_network(IOTable(2009, ("X", "Y"), ("1", "2"), np.zeros((4, 4)), np.zeros(4)))
    assert np.all(net.R == 0)
    assert loss_fraction(net, 0, [1, 2, 3]) == 0.0


def test_network_is_immutable(toy):
    with pytest.raises(ValueError):
        toy.Z[0, 0] = 1
    with pytest.raises(AttributeError):
        toy.year = 3


def test_region_partition_and_codes(toy):
    assert toy.region_of.tolist() == [0, 0, 1, 1]
    assert toy.node_codes() == ["X.1", "X.2", "Y.1", "Y.2"]
    assert toy.resolve("Y.2") == 3
    assert toy.resolve(NodeId(1, 0)) == 2
    for bad in ("ZZ.99", "X", 7, NodeId(2, 0)):
        with pytest.raises(ContractError):
            toy.resolve(bad)


def test_rejects_bad_inputs():
    with pytest.raises(InputError):
        network_from_arrays(np.zeros((3, 4)), n_regions=1)
    with pytest.raises(InputError):
        network_from_arrays(-np.ones((2, 2)), n_regions=1)
    with pytest.raises(InputError):
        network_from_arrays(np.zeros((4, 4)), n_regions=3)
    with pytest.raises(ContractError):
        build_network(IOTable(2009, ("X", "Y"), ("1",), np.zeros((2, 2)), np.zeros(2)), revenue_base="bogus")


def test_loss_fraction_toy(toy):
    assert loss_fraction(toy, Y1, []) == 0
    assert loss_fraction(toy, Y1, [X1]) == 0.5
    assert loss_fraction(toy, X2, [Y1]) == 0.5
    # X2 and X1 share a region: excluded
    assert loss_fraction(toy, X2, [X1]) == 0
    with pytest.raises(ContractError):
        loss_fraction(toy, X1, [X1])


def test_domestic_loss_counted_when_inclusion_on():
    Z = np.array([[0, 40.0], [0, 0]])
    net = network_from_arrays(Z, [60, 10], n_regions=1)
    assert loss_fraction(net, 0, [1], exclude_domestic=True) == 0
    assert loss_fraction(net, 0, [1], exclude_domestic=False) == 0.4


def test_pickle_roundtrip(toy):
    _ = toy.foreign_Z
    clone = pickle.loads(pickle.dumps(toy))
    assert np.array_equal(clone.foreign_Z, toy.foreign_Z)
    assert clone.node_codes() == toy.node_codes()


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 4), st.integers(1, 4), st.booleans(),
       st.sampled_from(["total", "intermediate"]))
def test_loss_fraction_properties(seed, n_reg, n_ind, excl, base):
    rng = np.random.default_rng(seed)
    net = random_network(rng, n_reg, n_ind, density=0.8, revenue_base=base)
    n = net.n_nodes
    node = int(rng.integers(n))
    others = [j for j in range(n) if j != node]
    small = [j for j in others if rng.random() < 0.4]
    big = sorted(set(small) | {j for j in others if rng.random() < 0.5})
    a = loss_fraction(net, node, small, excl)
    b = loss_fraction(net, node, big, excl)
    assert 0.0 <= a <= b <= 1.0
    assert loss_fraction(net, node, others, excl) <= 1.0
    if excl:
        domestic = [j for j in others if net.region_of[j] == net.region_of[node]]
        assert loss_fraction(net, node, sorted(set(small) | set(domestic)), True) == a
