"""Exhaustive reference computations for small instances.

Everything here enumerates: all matchings, and all half-integral vertices of
the fractional matching polytope ``{x >= 0 : sum_{j ~ i} x_ij <= 1}``.  The
vertices of that polytope are exactly the points whose 1/2-valued edges form
node-disjoint odd cycles and whose 1-valued edges form a matching avoiding
those cycles, so enumeration is complete.  This module deliberately shares no
code with :mod:`udbargain.verify` so it can serve as an independent check.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, NamedTuple

from .instance import TOL_EQ, Instance, InstanceError, Matching, Outcome

DEFAULT_EDGE_CAP = 24


class OracleCapError(ValueError):
    pass


class LpVertex(NamedTuple):
    support: tuple  # ((u, v), 1.0 or 0.5), sorted by edge
    objective: float

    @property
    def is_integral(self) -> bool:
        return all(x == 1.0 for _, x in self.support)

    def value(self, u: int, v: int) -> float:
        key = (min(u, v), max(u, v))
        for e, x in self.support:
            if e == key:
                return x
        return 0.0


class MwmResult(NamedTuple):
    weight: float
    matchings: list  # every maximum-weight Matching, sorted


@dataclass(frozen=True)
class GapReport:
    best_matching_weight: float
    second_best_corner_weight: float
    g: float
    unique: bool


def _guard(inst: Instance, cap: int) -> None:
    if inst.m > cap:
        raise OracleCapError(f"instance has {inst.m} edges, enumeration cap is {cap}")


def _all_matchings(inst: Instance) -> list[tuple[int, float, tuple[int, ...]]]:
    """Every matching as ``(node bitmask, weight, edge indices)``."""
    edges = [(1 << e.u) | (1 << e.v) for e in inst.edges]
    weights = [e.w for e in inst.edges]
    out = []

    def rec(k: int, mask: int, weight: float, chosen: tuple[int, ...]) -> None:
        if k == len(edges):
            out.append((mask, weight, chosen))
            return
        rec(k + 1, mask, weight, chosen)
        if not mask & edges[k]:
            rec(k + 1, mask | edges[k], weight + weights[k], chosen + (k,))

    rec(0, 0, 0.0, ())
    return out


def _odd_cycles(inst: Instance) -> list[tuple[int, float, tuple[int, ...]]]:
    """Simple odd cycles as ``(node bitmask, weight, edge indices)``."""
    adj = inst.adjacency
    found = []
    for s in range(1, inst.n + 1):
        stack = [(s, [s])]
        while stack:
            node, path = stack.pop()
            for k, _ in adj[node]:
                if k == s and len(path) >= 3 and len(path) % 2 == 1 and path[1] < path[-1]:
                    found.append(path)
                elif k > s and k not in path:
                    stack.append((k, path + [k]))
    cycles = []
    for path in found:
        ring = path + [path[0]]
        idx = tuple(sorted(inst.edge_index(a, b) for a, b in zip(ring, ring[1:])))
        mask = 0
        for a in path:
            mask |= 1 << a
        cycles.append((mask, sum(inst.edges[k].w for k in idx), idx))
    return cycles


def _edge_key(inst: Instance, k: int) -> tuple[int, int]:
    e = inst.edges[k]
    return (min(e.u, e.v), max(e.u, e.v))


def _vertex(inst: Instance, full: tuple[int, ...], half: tuple[int, ...], objective: float) -> LpVertex:
    support = [(_edge_key(inst, k), 1.0) for k in full] + [(_edge_key(inst, k), 0.5) for k in half]
    return LpVertex(tuple(sorted(support)), objective)


def lp_vertices(inst: Instance, cap: int = DEFAULT_EDGE_CAP) -> Iterator[LpVertex]:
    """Yield every vertex of the fractional matching polytope (including 0)."""
    _guard(inst, cap)
    matchings = _all_matchings(inst)
    cycles = _odd_cycles(inst)

    def collections(start: int, mask: int, weight: float, half: tuple[int, ...]):
        yield mask, weight, half
        for c in range(start, len(cycles)):
            cm, cw, ce = cycles[c]
            if not mask & cm:
                yield from collections(c + 1, mask | cm, weight + cw / 2, half + ce)

    for cmask, cweight, half in collections(0, 0, 0.0, ()):
        for mmask, mweight, full in matchings:
            if not mmask & cmask:
                yield _vertex(inst, full, half, mweight + cweight)


def brute_force_mwm(inst: Instance, cap: int = DEFAULT_EDGE_CAP, tol: float = TOL_EQ) -> MwmResult:
    """Maximum matching weight and all matchings attaining it (within ``tol``)."""
    _guard(inst, cap)
    allm = _all_matchings(inst)
    best = max(w for _, w, _ in allm)
    opt = [
        Matching.of(_edge_key(inst, k) for k in chosen)
        for _, w, chosen in allm
        if w >= best - tol
    ]
    opt.sort(key=lambda m: list(m))
    return MwmResult(best, opt)


def fractional_lp_optimum(inst: Instance, cap: int = DEFAULT_EDGE_CAP, tol: float = TOL_EQ) -> tuple[float, LpVertex]:
    """Optimal value of the matching LP and one optimal vertex.

    Among vertices within ``tol`` of the optimum an integral one is preferred,
    then the lexicographically smallest edge list.
    """
    verts = list(lp_vertices(inst, cap))
    value = max(v.objective for v in verts)
    near = [v for v in verts if v.objective >= value - tol]
    best = min(near, key=lambda v: (v.is_integral is False, [e for e, _ in v.support]))
    return value, best


def has_integral_optimum(inst: Instance, cap: int = DEFAULT_EDGE_CAP, tol: float = TOL_EQ) -> bool:
    return brute_force_mwm(inst, cap, tol).weight >= fractional_lp_optimum(inst, cap, tol)[0] - tol


def lp_optimum_is_unique(inst: Instance, cap: int = DEFAULT_EDGE_CAP, tol: float = TOL_EQ) -> bool:
    """True when exactly one polytope vertex attains the LP optimum."""
    verts = [v.objective for v in lp_vertices(inst, cap)]
    value = max(verts)
    return sum(1 for x in verts if x >= value - tol) == 1


def lp_gap(inst: Instance, cap: int = DEFAULT_EDGE_CAP, tol: float = TOL_EQ) -> GapReport:
    """Gap between the heaviest and next heaviest matching.

    Corners are the integral ones (matchings, the empty one included).  With
    a single corner (no edges) the gap is the best weight itself.
    """
    _guard(inst, cap)
    weights = sorted((w for _, w, _ in _all_matchings(inst)), reverse=True)
    best = weights[0]
    if len(weights) < 2:
        return GapReport(best, 0.0, best, True)
    second = weights[1]
    g = max(best - second, 0.0)
    return GapReport(best, second, g, g > tol)


def exact_ud_check(inst: Instance, out: Outcome, tol: float = TOL_EQ) -> bool:
    """Direct check that ``out`` is a UD solution up to ``tol``.

    Validity (matched sums, zero for unmatched, range), stability on every
    unmatched edge, no positive offers to unmatched nodes, and the correct
    division equation at both endpoints of every matched edge.
    """
    g = {i: float(out.gamma[i - 1]) for i in range(1, inst.n + 1)}
    try:
        inst.check_matching(out.matching)
    except InstanceError:
        return False
    mate = {}
    for u, v in out.matching:
        mate[u], mate[v] = v, u
    nbrs: dict[int, list[tuple[int, float]]] = {i: [] for i in g}
    for e in inst.edges:
        nbrs[e.u].append((e.v, e.w))
        nbrs[e.v].append((e.u, e.w))

    for i, x in g.items():
        if x < -tol or x > inst.weight_bound + tol:
            return False
        if i not in mate and abs(x) > tol:
            return False

    for e in inst.edges:
        if mate.get(e.u) == e.v:
            if abs(g[e.u] + g[e.v] - e.w) > tol:
                return False
        elif g[e.u] + g[e.v] < e.w - tol:
            return False

    def alt(i: int, j: int) -> float:
        offers = [max(w - g[k], 0.0) for k, w in nbrs[i] if k != j]
        return max(offers, default=0.0)

    for i in g:
        if i not in mate and alt(i, None) > tol:
            return False

    for e in inst.edges:
        if mate.get(e.u) != e.v:
            continue
        a_u, a_v = alt(e.u, e.v), alt(e.v, e.u)
        surp = e.w - a_u - a_v
        if abs(g[e.u] - a_u - e.r * surp) > tol:
            return False
        if abs(g[e.v] - a_v - (1 - e.r) * surp) > tol:
            return False
    return True
