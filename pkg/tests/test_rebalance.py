import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from udbargain import oracle
from udbargain.instance import Edge, Instance, Matching, Outcome, generate_random_bipartite, generate_ring
from udbargain.rebalance import (
    InvariantError,
    RebalanceError,
    SolveConfig,
    SolveStatus,
    T_op,
    Termination,
    edge_rebalancing,
    iteration_bound,
    rate_envelope,
    rebalance_op,
    slow_progress_demo,
    solve,
    threshold_op,
)
from udbargain.verify import check_eps_correct_division, check_stability

PATH = Instance(3, (Edge(1, 2, 1.0, 0.5), Edge(2, 3, 0.6, 0.5)))
M12 = Matching.of([(1, 2)])


def test_iteration_bound_values():
    assert iteration_bound(0.5, 1e-3) == 1_273_240
    assert iteration_bound(0.5, 0.1) == 128
    assert rate_envelope(0.5, 4) == pytest.approx(1 / math.sqrt(math.pi))


def test_rebalance_and_threshold():
    ext = rebalance_op(PATH, M12, [1.0, 0.0, 0.0])
    np.testing.assert_allclose(ext, [0.2, 0.8, 0.0])
    # alt_2 = 0.6 exceeds w12 - alt_1 when gamma_3 = 0 and w_12 is small
    inst = Instance(3, (Edge(1, 2, 0.5, 0.5), Edge(2, 3, 0.9, 0.5)))
    ext = rebalance_op(inst, M12, [0.25, 0.25, 0.0])
    assert ext[0] < 0
    np.testing.assert_allclose(threshold_op(inst, M12, ext), [0.0, 0.5, 0.0])


def test_threshold_both_negative():
    inst = Instance(2, (Edge(1, 2, 0.1, 0.5),))
    # a loose tolerance lets the malformed allocation past the sum check
    with pytest.raises(InvariantError):
        threshold_op(inst, Matching.of([(1, 2)]), [-0.1, -0.1], tol=1.0)


def test_ud_solution_is_fixed_point():
    gamma = np.array([0.2, 0.8, 0.0])
    np.testing.assert_allclose(T_op(PATH, M12, gamma), gamma)


@given(st.integers(0, 10_000), st.floats(0.05, 0.5))
@settings(max_examples=60, deadline=None)
def test_stability_kept_and_residual_monotone(seed, kappa):
    inst = generate_random_bipartite(3, 4, 0.7, seed=seed)
    if inst.m == 0:
        return
    seen = []
    res = solve(inst, SolveConfig(epsilon=1e-4, kappa=kappa), callback=lambda t, g: seen.append(g))
    assert res.status is SolveStatus.SOLVED
    for g in seen:
        assert check_stability(inst, Outcome(g, res.outcome.matching), 1e-9).stable
    assert np.all(np.diff(res.trace) <= 1e-12)
    for t in range(1, len(res.trace)):
        assert res.trace[t] <= rate_envelope(kappa, t) + 1e-9


@given(st.integers(0, 10_000))
@settings(max_examples=100, deadline=None)
def test_nonexpansive(seed):
    rng = np.random.default_rng(seed)
    inst = generate_random_bipartite(4, 4, 0.6, seed=seed)
    pairs, used = [], set()
    for e in inst.edges:
        if e.u not in used and e.v not in used:
            used.update((e.u, e.v))
            pairs.append((e.u, e.v))
    M = Matching.of(pairs)

    def alloc():
        g = np.zeros(inst.n)
        for u, v in M:
            x = rng.random() * inst.weight(u, v)
            g[u - 1], g[v - 1] = x, inst.weight(u, v) - x
        return g

    a, b = alloc(), alloc()
    assert np.max(np.abs(T_op(inst, M, a) - T_op(inst, M, b)), initial=0) <= np.max(np.abs(a - b), initial=0) + 1e-12


def test_solve_path():
    res = solve(PATH, SolveConfig(epsilon=1e-6))
    assert res.status is SolveStatus.SOLVED
    np.testing.assert_allclose(res.outcome.gamma, [0.2, 0.8, 0.0], atol=1e-6)
    assert res.certificates["matching_weight"] == 1.0


def test_solve_backends_agree():
    inst = generate_random_bipartite(4, 4, 0.8, seed=5)
    a = solve(inst, SolveConfig(epsilon=1e-6, step1_backend="oracle"))
    b = solve(inst, SolveConfig(epsilon=1e-6, step1_backend="bp"))
    assert a.outcome.matching == b.outcome.matching
    np.testing.assert_allclose(a.outcome.gamma, b.outcome.gamma, atol=1e-5)


def test_solve_rescales_weight_bound():
    inst = generate_random_bipartite(3, 3, 0.9, seed=2)
    big = inst.scaled(4.0)
    a = solve(inst, SolveConfig(epsilon=1e-4))
    b = solve(big, SolveConfig(epsilon=4e-4))
    assert b.status is SolveStatus.SOLVED
    assert check_eps_correct_division(big, b.outcome) <= 4e-4
    np.testing.assert_allclose(b.outcome.gamma, 4 * a.outcome.gamma, atol=1e-9)


def test_fixed_termination_runs_bound():
    inst = generate_random_bipartite(3, 3, 0.9, seed=2)
    res = solve(inst, SolveConfig(epsilon=0.1, termination=Termination.FIXED))
    assert res.iterations_step2 == iteration_bound(0.5, 0.1) == 128


def test_triangle_unstable():
    tri = Instance(3, (Edge(1, 2, 1.0, 0.5), Edge(2, 3, 1.0, 0.5), Edge(1, 3, 1.0, 0.5)))
    assert solve(tri).status is SolveStatus.UNSTABLE
    assert solve(tri, SolveConfig(step1_backend="bp", bp_max_iters=100)).status is SolveStatus.STEP1_INCONCLUSIVE


def test_unstable_start_rejected():
    ring = generate_ring(2, 1 / 3)
    with pytest.raises(RebalanceError):
        edge_rebalancing(ring.instance, ring.outcome)


def test_iteration_cap_reported():
    inst = Instance(3, (Edge(1, 2, 1.0, 0.9), Edge(2, 3, 0.6, 0.5)))
    with pytest.raises(RebalanceError):
        solve(inst, SolveConfig(epsilon=1e-9, max_iters=1))


@pytest.mark.parametrize("kwargs", [{"kappa": 0.6}, {"kappa": 0.0}, {"epsilon": 0.0}, {"max_iters": -1}])
def test_config_validation(kwargs):
    with pytest.raises(RebalanceError):
        SolveConfig(**kwargs)


def test_slow_demo_small():
    rep = slow_progress_demo(3, 1 / 3)
    assert rep.eps_prime == pytest.approx(0.25)
    assert rep.initial_deficit == pytest.approx(1.0)
    assert rep.first_half_stable is not None and rep.first_half_stable >= rep.lower_bound
    assert rep.max_step_change <= rep.eps_prime + 1e-9


def test_exact_limit_is_ud():
    from udbargain.rebalance import iterate_to_exact

    start = Outcome(np.array([0.4, 0.6, 0.0]), M12)
    res = iterate_to_exact(PATH, start)
    assert res.converged
    assert oracle.exact_ud_check(PATH, res.outcome, 1e-10)
