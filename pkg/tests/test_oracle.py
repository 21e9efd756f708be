import math

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linprog

from udbargain import oracle
from udbargain.instance import Edge, Instance, generate_random_graph

TRIANGLE = Instance(3, (Edge(1, 2, 1.0, 0.5), Edge(2, 3, 1.0, 0.5), Edge(1, 3, 1.0, 0.5)))


def test_triangle_is_fractional():
    value, vertex = oracle.fractional_lp_optimum(TRIANGLE)
    assert value == pytest.approx(1.5)
    assert not vertex.is_integral
    assert vertex.value(2, 1) == 0.5
    assert oracle.brute_force_mwm(TRIANGLE).weight == 1.0
    assert not oracle.has_integral_optimum(TRIANGLE)
    assert oracle.lp_optimum_is_unique(TRIANGLE)
    # empty set, three single edges, the half cycle
    assert len(list(oracle.lp_vertices(TRIANGLE))) == 5


def test_matching_counts():
    path4 = Instance(4, tuple(Edge(i, i + 1, 0.5, 0.5) for i in range(1, 4)))
    assert len([v for v in oracle.lp_vertices(path4) if v.is_integral]) == 5
    k4 = Instance(4, tuple(Edge(u, v, 0.5, 0.5) for u in range(1, 5) for v in range(u + 1, 5)))
    verts = list(oracle.lp_vertices(k4))
    # 10 matchings; 4 triangles, each alone (K4 has no room for a matching beside one)
    assert sum(v.is_integral for v in verts) == 10
    assert len(verts) == 14


def test_gap():
    inst = Instance(3, (Edge(1, 2, 1.0, 0.5), Edge(2, 3, 0.6, 0.5)))
    rep = oracle.lp_gap(inst)
    assert rep.best_matching_weight == 1.0
    assert rep.second_best_corner_weight == 0.6
    assert rep.g == pytest.approx(0.4)
    assert rep.unique


def test_tied_matchings():
    inst = Instance(3, (Edge(1, 2, 0.5, 0.5), Edge(2, 3, 0.5, 0.5)))
    assert len(oracle.brute_force_mwm(inst).matchings) == 2
    assert not oracle.lp_gap(inst).unique
    assert not oracle.lp_optimum_is_unique(inst)


def test_cap():
    inst = generate_random_graph(10, 1.0, seed=0)
    with pytest.raises(oracle.OracleCapError):
        oracle.brute_force_mwm(inst, cap=10)


def _lp_by_simplex(inst):
    A = np.zeros((inst.n, inst.m))
    for k, e in enumerate(inst.edges):
        A[e.u - 1, k] = A[e.v - 1, k] = 1
    c = -np.array([e.w for e in inst.edges])
    return -linprog(c, A_ub=A, b_ub=np.ones(inst.n), bounds=(0, None), method="highs").fun


@given(st.integers(0, 100_000))
@settings(max_examples=100, deadline=None)
def test_against_independent_solvers(seed):
    rng = np.random.default_rng(seed)
    inst = generate_random_graph(int(rng.integers(2, 8)), float(rng.uniform(0.2, 0.9)), 1.0, seed=seed)
    if inst.m == 0 or inst.m > 18:
        return
    g = nx.Graph()
    g.add_weighted_edges_from((e.u, e.v, e.w) for e in inst.edges)
    nx_best = sum(g[u][v]["weight"] for u, v in nx.max_weight_matching(g))
    assert oracle.brute_force_mwm(inst).weight == pytest.approx(nx_best, abs=1e-9)
    assert oracle.fractional_lp_optimum(inst)[0] == pytest.approx(_lp_by_simplex(inst), abs=1e-7)


def test_odd_cycle_half_value():
    pent = Instance(5, tuple(Edge(i, i % 5 + 1, 1.0, 0.5) for i in range(1, 6)))
    value, vertex = oracle.fractional_lp_optimum(pent)
    assert value == pytest.approx(2.5)
    assert not vertex.is_integral
    assert math.isclose(oracle.brute_force_mwm(pent).weight, 2.0)
