"""The compiled and pure-Python kernels must agree."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from udbargain import _kernels_py
from udbargain.instance import Matching, generate_random_graph

try:
    from udbargain import _kernels
except ImportError:  # extension not built
    _kernels = None

needs_ext = pytest.mark.skipif(_kernels is None, reason="compiled kernels not built")


def _setup(seed):
    rng = np.random.default_rng(seed)
    inst = generate_random_graph(int(rng.integers(2, 12)), 0.5, 1.0, seed=seed)
    used, pairs = set(), []
    for e in inst.edges:
        if e.u not in used and e.v not in used and rng.random() < 0.8:
            used.update((e.u, e.v))
            pairs.append((e.u, e.v))
    M = Matching.of(pairs)
    gamma = np.zeros(inst.n)
    for u, v in M:
        x = rng.random() * inst.weight(u, v)
        gamma[u - 1], gamma[v - 1] = x, inst.weight(u, v) - x
    return rng, inst, M, gamma


@needs_ext
@given(st.integers(0, 100_000))
@settings(max_examples=100, deadline=None)
def test_rebalance_kernels_agree(seed):
    _, inst, M, gamma = _setup(seed)
    a = inst.arrays
    partner, pw, rsplit = inst.matching_arrays(M)
    outs = []
    for mod in (_kernels, _kernels_py):
        ext = np.empty(inst.n)
        mod.rebalance_ext(a.indptr, a.nbr, a.wt, partner, pw, rsplit, gamma.copy(), ext)
        g = gamma.copy()
        trace = np.empty(20)
        run = mod.rebalance_run(a.indptr, a.nbr, a.wt, partner, pw, rsplit, g, np.empty(inst.n), 0.3, -1.0, 20, trace)
        outs.append((ext, g, trace, run))
    (e1, g1, t1, r1), (e2, g2, t2, r2) = outs
    np.testing.assert_allclose(e1, e2, atol=1e-14)
    np.testing.assert_allclose(g1, g2, atol=1e-13)
    np.testing.assert_allclose(t1, t2, atol=1e-13)
    assert r1[:2] == r2[:2]


@needs_ext
@given(st.integers(0, 100_000))
@settings(max_examples=100, deadline=None)
def test_bp_kernels_agree(seed):
    rng, inst, _, _ = _setup(seed)
    a = inst.arrays
    m0 = rng.random(2 * inst.m)
    res = []
    for mod in (_kernels, _kernels_py):
        out = np.empty_like(m0)
        mod.bp_step(a.indptr, a.nbr, a.wt, a.arc_in, a.arc_out, m0.copy(), out)
        m = m0.copy()
        run = mod.bp_run(a.indptr, a.nbr, a.wt, a.arc_in, a.arc_out, m, np.empty_like(m), 30, 1e-12)
        res.append((out, m, run))
    np.testing.assert_array_equal(res[0][0], res[1][0])
    np.testing.assert_array_equal(res[0][1], res[1][1])
    assert tuple(res[0][2]) == tuple(res[1][2])


def test_backend_names():
    from udbargain import BACKEND

    assert _kernels_py.NAME == "python"
    assert BACKEND in ("cython", "python")
    if _kernels is not None:
        assert _kernels.NAME == "cython"


def test_pure_python_override(monkeypatch):
    import importlib

    import udbargain._backend as backend

    monkeypatch.setenv("UDBARGAIN_PURE_PYTHON", "1")
    try:
        assert importlib.reload(backend).BACKEND == "python"
    finally:
        monkeypatch.delenv("UDBARGAIN_PURE_PYTHON")
        importlib.reload(backend)
