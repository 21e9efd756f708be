"""Bargaining-network instances, matchings, outcomes, text I/O and generators.

Node ids are 1-based everywhere in the public API.  Allocation vectors are
numpy arrays of length ``n`` where ``gamma[i - 1]`` is the earning of node
``i``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, NamedTuple, Optional

import numpy as np

TOL_EQ = 1e-9


class InstanceError(ValueError):
    """Invalid instance data or malformed instance/outcome text."""

    def __init__(self, message: str, lineno: Optional[int] = None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


class Edge(NamedTuple):
    u: int
    v: int
    w: float
    r: float  # split fraction of ``u``; ``v`` gets ``1 - r``


class GraphArrays(NamedTuple):
    """CSR adjacency with 0-based nodes, shared by the numeric kernels.

    Row ``i`` spans ``indptr[i]:indptr[i + 1]``.  For slot ``p`` in that row,
    ``nbr[p]`` is the neighbour, ``wt[p]`` the edge weight, ``arc_in[p]`` the
    arc ``nbr[p] -> i`` and ``arc_out[p]`` the arc ``i -> nbr[p]``.  Arc
    ``2k`` is ``u -> v`` of edge ``k`` and arc ``2k + 1`` is ``v -> u``.
    """

    indptr: np.ndarray
    nbr: np.ndarray
    wt: np.ndarray
    arc_in: np.ndarray
    arc_out: np.ndarray
    arc_src: np.ndarray
    arc_dst: np.ndarray
    arc_w: np.ndarray


def _key(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class Matching:
    """A set of node-disjoint undirected edges, stored as sorted pairs."""

    edges: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        seen: set[int] = set()
        for u, v in self.edges:
            if u == v or u > v:
                raise InstanceError(f"matching edge ({u}, {v}) is not a sorted pair")
            if u in seen or v in seen:
                raise InstanceError(f"node of edge ({u}, {v}) appears twice in matching")
            seen.update((u, v))

    @classmethod
    def of(cls, pairs: Iterable[tuple[int, int]]) -> "Matching":
        return cls(frozenset(_key(int(u), int(v)) for u, v in pairs))

    def __iter__(self) -> Iterator[tuple[int, int]]:
        return iter(sorted(self.edges))

    def __len__(self) -> int:
        return len(self.edges)

    def __contains__(self, e) -> bool:
        return _key(*e) in self.edges

    def partner(self) -> dict[int, int]:
        out: dict[int, int] = {}
        for u, v in self.edges:
            out[u] = v
            out[v] = u
        return out


@dataclass(frozen=True)
class Instance:
    node_count: int
    edges: tuple[Edge, ...]
    weight_bound: float = 1.0

    def __post_init__(self):
        if self.node_count < 1:
            raise InstanceError("node count must be positive")
        if not self.weight_bound > 0:
            raise InstanceError("weight bound must be positive")
        edges = tuple(Edge(int(e[0]), int(e[1]), float(e[2]), float(e[3])) for e in self.edges)
        object.__setattr__(self, "edges", edges)
        seen: set[tuple[int, int]] = set()
        for u, v, w, r in edges:
            _check_edge(self.node_count, self.weight_bound, u, v, w, r, seen)
            seen.add(_key(u, v))

    @property
    def n(self) -> int:
        return self.node_count

    @property
    def m(self) -> int:
        return len(self.edges)

    @cached_property
    def _index(self) -> dict[tuple[int, int], int]:
        return {_key(e.u, e.v): k for k, e in enumerate(self.edges)}

    @cached_property
    def adjacency(self) -> dict[int, list[tuple[int, float]]]:
        adj: dict[int, list[tuple[int, float]]] = {i: [] for i in range(1, self.n + 1)}
        for u, v, w, _ in self.edges:
            adj[u].append((v, w))
            adj[v].append((u, w))
        for lst in adj.values():
            lst.sort()
        return adj

    def neighbors(self, i: int) -> list[int]:
        return [k for k, _ in self.adjacency[i]]

    def has_edge(self, u: int, v: int) -> bool:
        return _key(u, v) in self._index

    def edge_index(self, u: int, v: int) -> int:
        try:
            return self._index[_key(u, v)]
        except KeyError:
            raise InstanceError(f"({u}, {v}) is not an edge") from None

    def weight(self, u: int, v: int) -> float:
        return self.edges[self.edge_index(u, v)].w

    def split(self, i: int, j: int) -> float:
        """Split fraction r_ij of node ``i`` on edge (i, j)."""
        e = self.edges[self.edge_index(i, j)]
        return e.r if e.u == i else 1.0 - e.r

    def check_matching(self, matching: Matching) -> None:
        for u, v in matching:
            if not self.has_edge(u, v):
                raise InstanceError(f"matching edge ({u}, {v}) is not an edge of the instance")

    def matching_weight(self, matching: Matching) -> float:
        return sum(self.weight(u, v) for u, v in matching)

    def scaled(self, factor: float) -> "Instance":
        """Copy with weights and bound multiplied by ``factor``."""
        return Instance(
            self.n,
            tuple(Edge(u, v, w * factor, r) for u, v, w, r in self.edges),
            self.weight_bound * factor,
        )

    @cached_property
    def arrays(self) -> GraphArrays:
        n, m = self.n, self.m
        deg = np.zeros(n, dtype=np.intp)
        for u, v, _, _ in self.edges:
            deg[u - 1] += 1
            deg[v - 1] += 1
        indptr = np.zeros(n + 1, dtype=np.intp)
        np.cumsum(deg, out=indptr[1:])
        fill = indptr[:-1].copy()
        nbr = np.empty(2 * m, dtype=np.intp)
        wt = np.empty(2 * m, dtype=np.float64)
        arc_in = np.empty(2 * m, dtype=np.intp)
        arc_out = np.empty(2 * m, dtype=np.intp)
        arc_src = np.empty(2 * m, dtype=np.intp)
        arc_dst = np.empty(2 * m, dtype=np.intp)
        arc_w = np.empty(2 * m, dtype=np.float64)
        for k, (u, v, w, _) in enumerate(self.edges):
            a, b = u - 1, v - 1
            arc_src[2 * k], arc_dst[2 * k] = a, b
            arc_src[2 * k + 1], arc_dst[2 * k + 1] = b, a
            arc_w[2 * k] = arc_w[2 * k + 1] = w
            for x, y, out_arc, in_arc in ((a, b, 2 * k, 2 * k + 1), (b, a, 2 * k + 1, 2 * k)):
                p = fill[x]
                fill[x] += 1
                nbr[p], wt[p] = y, w
                arc_out[p], arc_in[p] = out_arc, in_arc
        return GraphArrays(indptr, nbr, wt, arc_in, arc_out, arc_src, arc_dst, arc_w)

    def matching_arrays(self, matching: Matching) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Per-node (partner, matched weight, split fraction) arrays, 0-based.

        Unmatched nodes get partner -1, weight 0 and split 0.
        """
        self.check_matching(matching)
        partner = np.full(self.n, -1, dtype=np.intp)
        pw = np.zeros(self.n, dtype=np.float64)
        rsplit = np.zeros(self.n, dtype=np.float64)
        for u, v in matching:
            w = self.weight(u, v)
            partner[u - 1], partner[v - 1] = v - 1, u - 1
            pw[u - 1] = pw[v - 1] = w
            rsplit[u - 1] = self.split(u, v)
            rsplit[v - 1] = self.split(v, u)
        return partner, pw, rsplit


def _check_edge(n, bound, u, v, w, r, seen, lineno=None):
    if not (1 <= u <= n and 1 <= v <= n):
        raise InstanceError(f"edge ({u}, {v}) has a node id outside 1..{n}", lineno)
    if u == v:
        raise InstanceError(f"self-loop on node {u}", lineno)
    if _key(u, v) in seen:
        raise InstanceError(f"duplicate edge ({u}, {v})", lineno)
    if not (w > 0):
        raise InstanceError(f"weight {w!r} of edge ({u}, {v}) is not positive", lineno)
    if w > bound * (1 + 1e-12):
        raise InstanceError(f"weight {w!r} of edge ({u}, {v}) exceeds bound {bound!r}", lineno)
    if not (0 < r < 1):
        raise InstanceError(f"split fraction {r!r} of edge ({u}, {v}) is not inside (0, 1)", lineno)


@dataclass
class Outcome:
    gamma: np.ndarray
    matching: Matching

    def __post_init__(self):
        self.gamma = np.asarray(self.gamma, dtype=np.float64)

    def earning(self, i: int) -> float:
        return float(self.gamma[i - 1])

    def validate(self, inst: Instance, tol: float = TOL_EQ) -> None:
        """Raise InstanceError unless this is a valid outcome for ``inst``."""
        if self.gamma.shape != (inst.n,):
            raise InstanceError(f"allocation has shape {self.gamma.shape}, expected ({inst.n},)")
        inst.check_matching(self.matching)
        matched = set()
        for u, v in self.matching:
            matched.update((u, v))
            total = self.gamma[u - 1] + self.gamma[v - 1]
            if abs(total - inst.weight(u, v)) > tol:
                raise InstanceError(f"matched edge ({u}, {v}) splits {total!r}, weight is {inst.weight(u, v)!r}")
        for i in range(1, inst.n + 1):
            g = self.gamma[i - 1]
            if i not in matched and abs(g) > tol:
                raise InstanceError(f"unmatched node {i} earns {g!r}")
            if g < -tol or g > inst.weight_bound + tol:
                raise InstanceError(f"earning {g!r} of node {i} outside [0, {inst.weight_bound!r}]")


# ---------------------------------------------------------------------------
# text formats


def _fields(text: str):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line.split()


def _num(tok: str, lineno: int, kind=float):
    try:
        val = kind(tok)
    except ValueError:
        raise InstanceError(f"cannot parse {tok!r} as {kind.__name__}", lineno) from None
    if kind is float and not math.isfinite(val):
        raise InstanceError(f"non-finite number {tok!r}", lineno)
    return val


def parse_instance(text: str, weight_bound: Optional[float] = None) -> Instance:
    """Parse the line-oriented instance format.

    Recognised directives are ``nodes <n>``, an optional ``bound <W>`` and
    ``edge <u> <v> <w> <r>``.  ``r`` belongs to the endpoint listed first.
    An explicit ``bound`` line overrides ``weight_bound``; the default is 1.
    """
    n = None
    bound = weight_bound
    pending: list[tuple[int, Edge]] = []
    for lineno, toks in _fields(text):
        kw = toks[0]
        if kw == "nodes":
            if len(toks) != 2:
                raise InstanceError("expected 'nodes <n>'", lineno)
            if n is not None:
                raise InstanceError("repeated 'nodes' directive", lineno)
            if pending:
                raise InstanceError("'nodes' must precede edges", lineno)
            n = _num(toks[1], lineno, int)
            if n < 1:
                raise InstanceError("node count must be positive", lineno)
        elif kw == "bound":
            if len(toks) != 2:
                raise InstanceError("expected 'bound <W>'", lineno)
            bound = _num(toks[1], lineno)
            if not bound > 0:
                raise InstanceError("weight bound must be positive", lineno)
        elif kw == "edge":
            if n is None:
                raise InstanceError("'edge' before 'nodes'", lineno)
            if len(toks) != 5:
                raise InstanceError("expected 'edge <u> <v> <w> <r>'", lineno)
            u = _num(toks[1], lineno, int)
            v = _num(toks[2], lineno, int)
            pending.append((lineno, Edge(u, v, _num(toks[3], lineno), _num(toks[4], lineno))))
        else:
            raise InstanceError(f"unknown directive {kw!r}", lineno)
    if n is None:
        raise InstanceError("missing 'nodes' directive")
    if bound is None:
        bound = 1.0
    seen: set[tuple[int, int]] = set()
    for lineno, (u, v, w, r) in pending:
        _check_edge(n, bound, u, v, w, r, seen, lineno)
        seen.add(_key(u, v))
    return Instance(n, tuple(e for _, e in pending), bound)


def serialize_instance(inst: Instance) -> str:
    """Canonical text: edges listed with ``u < v`` and ``r`` re-oriented."""
    lines = [f"nodes {inst.n}"]
    if inst.weight_bound != 1.0:
        lines.append(f"bound {inst.weight_bound!r}")
    for u, v, w, r in inst.edges:
        if u > v:
            u, v, r = v, u, 1.0 - r
        lines.append(f"edge {u} {v} {w!r} {r!r}")
    return "\n".join(lines) + "\n"


def parse_matching(text: str) -> Matching:
    """Read only the ``match`` lines of an outcome file."""
    pairs = []
    for lineno, toks in _fields(text):
        if toks[0] == "match":
            if len(toks) != 3:
                raise InstanceError("expected 'match <u> <v>'", lineno)
            pairs.append((_num(toks[1], lineno, int), _num(toks[2], lineno, int)))
        elif toks[0] != "gamma":
            raise InstanceError(f"unknown directive {toks[0]!r}", lineno)
    try:
        return Matching.of(pairs)
    except InstanceError as exc:
        raise InstanceError(str(exc)) from None


def parse_outcome(text: str, n: int) -> Outcome:
    gamma = np.full(n, np.nan)
    for lineno, toks in _fields(text):
        if toks[0] == "gamma":
            if len(toks) != 3:
                raise InstanceError("expected 'gamma <i> <value>'", lineno)
            i = _num(toks[1], lineno, int)
            if not 1 <= i <= n:
                raise InstanceError(f"node {i} outside 1..{n}", lineno)
            if not np.isnan(gamma[i - 1]):
                raise InstanceError(f"repeated gamma for node {i}", lineno)
            gamma[i - 1] = _num(toks[2], lineno)
    missing = [i + 1 for i in np.flatnonzero(np.isnan(gamma))]
    if missing:
        raise InstanceError(f"missing gamma for nodes {missing[:5]}")
    return Outcome(gamma, parse_matching(text))


def serialize_outcome(out: Outcome) -> str:
    lines = [f"match {u} {v}" for u, v in out.matching]
    lines += [f"gamma {i} {float(g)!r}" for i, g in enumerate(out.gamma, start=1)]
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# generators


class Ring(NamedTuple):
    instance: Instance
    outcome: Outcome
    eps_prime: float
    bad_edge: tuple[int, int]


def generate_ring(N: int, r: float, pad: int = 0) -> Ring:
    """Adversarial ring on ``8N`` nodes with an unstable, almost-balanced outcome.

    All ring edges weigh ``W = 1 + 2/(beta - 1)`` with ``beta = (1 - r)/r``.
    The returned outcome lives on the matching {(1,2), (3,4), ...}, satisfies
    ``eps_prime``-correct division with ``eps_prime = beta**-(N-1)``, and the
    edge ``(6N, 6N+1)`` falls short of stability by exactly 1.

    ``pad`` extra nodes are appended as disjoint edges of weight W (split 1/2,
    earning W/2 each); an odd leftover node is isolated.
    """
    if N < 1:
        raise InstanceError("N must be at least 1")
    if not 0 < r < 0.5:
        raise InstanceError("r must lie in (0, 1/2)")
    if pad < 0:
        raise InstanceError("pad must be non-negative")
    beta = (1 - r) / r
    W = 1 + 2 / (beta - 1)
    n = 8 * N

    def refl(l: int) -> int:
        return 8 * N - l + 1

    # split fraction of the odd endpoint on matched edge (2k-1, 2k)
    r_odd: dict[int, float] = {}
    for a in range(1, 2 * N, 2):
        r_odd[a] = r
    for a in range(2 * N + 1, 4 * N, 2):
        r_odd[a] = 1 - r
    for a in range(4 * N + 1, 8 * N, 2):
        # r_{a,a+1} = r_{R(a),R(a+1)} = 1 - r_{R(a+1),R(a)}
        r_odd[a] = 1 - r_odd[refl(a + 1)]

    edges = []
    for i in range(1, n):
        edges.append(Edge(i, i + 1, W, r_odd[i] if i % 2 else 0.5))
    edges.append(Edge(1, n, W, 0.5))

    gamma = np.zeros(n + 1)
    for i in range(N):
        g = W / 2 + 0.5 + (1 - beta ** (-i)) / (beta - 1)
        gamma[2 * (N - i)] = g
        gamma[2 * (N + i) + 1] = g
    for j in range(1, N + 1):
        gamma[2 * j - 1] = W - gamma[2 * j]
    for j in range(N + 1, 2 * N + 1):
        gamma[2 * j] = W - gamma[2 * j - 1]
    for i in range(4 * N + 1, 8 * N + 1):
        gamma[i] = W - gamma[refl(i)]
    gamma = list(gamma[1:])
    pairs = [(2 * k - 1, 2 * k) for k in range(1, 4 * N + 1)]

    node = n
    for _ in range(pad // 2):
        edges.append(Edge(node + 1, node + 2, W, 0.5))
        pairs.append((node + 1, node + 2))
        gamma += [W / 2, W / 2]
        node += 2
    if pad % 2:
        gamma.append(0.0)
        node += 1

    inst = Instance(node, tuple(edges), W)
    out = Outcome(np.array(gamma), Matching.of(pairs))
    return Ring(inst, out, beta ** (-(N - 1)), (6 * N, 6 * N + 1))


def _weights(rng: np.random.Generator, size: int, max_weight: float) -> np.ndarray:
    # 1 - U maps [0, 1) onto (0, 1]
    return max_weight * (1.0 - rng.random(size))


def _check_r_range(r_range: tuple[float, float]) -> None:
    lo, hi = r_range
    if not 0 < lo <= hi < 1:
        raise InstanceError(f"split range {r_range} must be a closed subinterval of (0, 1)")


def generate_random_bipartite(
    n_left: int,
    n_right: int,
    density: float,
    max_weight: float = 1.0,
    seed: int = 0,
    r_range: tuple[float, float] = (0.1, 0.9),
) -> Instance:
    """Random bipartite instance, left nodes ``1..n_left``, right the rest.

    Each left-right pair is an edge with probability ``density``; weights are
    i.i.d. uniform on ``(0, max_weight]`` and split fractions uniform on
    ``r_range``.  Deterministic in ``seed``.
    """
    if n_left < 1 or n_right < 1:
        raise InstanceError("both sides need at least one node")
    if not 0 < density <= 1:
        raise InstanceError("density must lie in (0, 1]")
    if not max_weight > 0:
        raise InstanceError("max_weight must be positive")
    _check_r_range(r_range)
    rng = np.random.default_rng(seed)
    keep = rng.random((n_left, n_right)) < density
    if density == 1:
        keep[:] = True
    ws = _weights(rng, n_left * n_right, max_weight).reshape(n_left, n_right)
    rs = rng.uniform(r_range[0], r_range[1], size=(n_left, n_right))
    edges = [
        Edge(a + 1, n_left + b + 1, float(ws[a, b]), float(rs[a, b]))
        for a in range(n_left)
        for b in range(n_right)
        if keep[a, b]
    ]
    return Instance(n_left + n_right, tuple(edges), max_weight)


def generate_random_graph(
    n: int,
    density: float,
    max_weight: float = 1.0,
    seed: int = 0,
    r_range: tuple[float, float] = (0.1, 0.9),
) -> Instance:
    """Erdos-Renyi style instance on ``n`` nodes (not necessarily bipartite)."""
    if n < 1:
        raise InstanceError("n must be positive")
    if not 0 < density <= 1:
        raise InstanceError("density must lie in (0, 1]")
    _check_r_range(r_range)
    rng = np.random.default_rng(seed)
    pairs = [(u, v) for u in range(1, n + 1) for v in range(u + 1, n + 1)]
    keep = rng.random(len(pairs)) < density
    ws = _weights(rng, len(pairs), max_weight)
    rs = rng.uniform(r_range[0], r_range[1], size=len(pairs))
    edges = [Edge(u, v, float(ws[k]), float(rs[k])) for k, (u, v) in enumerate(pairs) if keep[k]]
    return Instance(n, tuple(edges), max_weight)


def generate_odd_cycle_instance(
    seed: int,
    cycle_length: int = 3,
    extra_nodes: int = 3,
    r_range: tuple[float, float] = (0.1, 0.9),
) -> Instance:
    """An odd cycle of heavy edges (weights in [0.8, 1]) plus light pendants.

    Extra nodes hang off random cycle nodes with weights in (0, 0.3], so the
    half-integral cycle usually beats every matching.  Callers that need a
    certified fractional optimum must still check with the oracle.
    """
    if cycle_length < 3 or cycle_length % 2 == 0:
        raise InstanceError("cycle_length must be odd and at least 3")
    _check_r_range(r_range)
    rng = np.random.default_rng(seed)
    L = cycle_length
    edges = []
    for i in range(1, L + 1):
        j = i % L + 1
        edges.append(Edge(min(i, j), max(i, j), float(rng.uniform(0.8, 1.0)), float(rng.uniform(*r_range))))
    for x in range(L + 1, L + extra_nodes + 1):
        anchor = int(rng.integers(1, L + 1))
        edges.append(Edge(anchor, x, float(0.3 * (1 - rng.random())), float(rng.uniform(*r_range))))
    return Instance(L + extra_nodes, tuple(edges), 1.0)
