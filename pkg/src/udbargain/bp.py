"""Max-product belief propagation for maximum weight matching.

Messages live on directed edges: arc ``2k`` is ``u -> v`` and ``2k + 1`` is
``v -> u`` for the ``k``-th instance edge ``(u, v)``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from ._backend import kernels
from .instance import TOL_EQ, Instance, InstanceError, Matching, Outcome
from .verify import check_stability

DELTA = 1e-12
_CHUNK = 1 << 14


@dataclass(frozen=True)
class MessageState:
    inst: Instance
    values: np.ndarray
    t: int = 0

    def __post_init__(self):
        vals = np.array(self.values, dtype=np.float64)
        if vals.shape != (2 * self.inst.m,):
            raise InstanceError(f"expected {2 * self.inst.m} messages, got shape {vals.shape}")
        object.__setattr__(self, "values", vals)

    @classmethod
    def zeros(cls, inst: Instance) -> "MessageState":
        return cls(inst, np.zeros(2 * inst.m))

    def arc(self, i: int, j: int) -> int:
        k = self.inst.edge_index(i, j)
        return 2 * k if self.inst.edges[k].u == i else 2 * k + 1

    def msg(self, i: int, j: int) -> float:
        """Message from ``i`` to ``j``."""
        return float(self.values[self.arc(i, j)])

    def incoming(self, i: int) -> list[tuple[int, float]]:
        return [(k, self.msg(k, i)) for k in self.inst.neighbors(i)]

    def in_range(self, tol: float = TOL_EQ) -> bool:
        v = self.values
        return bool(np.all(v >= -tol) and np.all(v <= self.inst.weight_bound + tol))


class Status(str, enum.Enum):
    CONVERGED = "converged"
    NO_CONVERGENCE = "no_convergence"
    AMBIGUOUS = "ambiguous"
    UNSTABLE = "unstable"


@dataclass
class BpResult:
    status: Status
    fixed_point: MessageState
    iterations: int
    max_iters: int
    matching: Optional[Matching] = None
    dual: Optional[np.ndarray] = None
    bound_is_heuristic: bool = False

    @property
    def converged(self) -> bool:
        return self.status is Status.CONVERGED

    @property
    def outcome(self) -> Optional[Outcome]:
        if self.matching is None or self.dual is None:
            return None
        return Outcome(self.dual, self.matching)


def bp_step(inst: Instance, m: MessageState) -> MessageState:
    """One synchronous update ``m_ij <- (w_ij - max_{k ~ i, k != j} m_ki)_+``."""
    a = inst.arrays
    out = np.empty_like(m.values)
    kernels.bp_step(a.indptr, a.nbr, a.wt, a.arc_in, a.arc_out, m.values.copy(), out)
    return MessageState(inst, out, m.t + 1)


def _iterate(inst: Instance, m0: np.ndarray, max_iters: int, delta: float, callback) -> tuple[np.ndarray, int, bool]:
    """Run until a step moves nothing by more than ``delta``.

    Returns ``(messages, t, converged)`` where ``t`` is the index of the
    iterate found to be fixed.  Up to ``max_iters + 1`` steps are evaluated
    so that a fixed point reached exactly at ``max_iters`` is recognised.
    """
    a = inst.arrays
    m = m0.copy()
    work = np.empty_like(m)
    t = 0
    budget = max_iters + 1
    while budget > 0:
        if callback is not None:
            callback(MessageState(inst, m, t))
            chunk = 1
        else:
            chunk = min(budget, _CHUNK)
        s, done = kernels.bp_run(a.indptr, a.nbr, a.wt, a.arc_in, a.arc_out, m, work, chunk, delta)
        if done:
            return m, t + s, True
        t += s
        budget -= s
    return m, t, False


def default_max_iters(inst: Instance, g: Optional[float] = None) -> tuple[int, bool]:
    """Iteration budget for BP-MWM and whether it is a heuristic.

    With the LP gap ``g`` the budget is ``ceil(2 |V| W / g)``; without it,
    ``10 |V| ceil(W / w_min)``.
    """
    W = inst.weight_bound
    if g is not None and g > 0:
        return math.ceil(2 * inst.n * W / g), False
    w_min = min((e.w for e in inst.edges), default=W)
    return 10 * inst.n * math.ceil(W / w_min), True


def extract_matching(inst: Instance, m: MessageState, delta: float = DELTA) -> Optional[Matching]:
    """Read the matching off a fixed point; ``None`` when some argmax is tied.

    Node ``i`` picks the neighbour sending the largest message, provided that
    message is positive; the choice must be mutual.  Ties within ``delta`` and
    non-mutual choices both count as ambiguous.
    """
    choice: dict[int, Optional[int]] = {}
    for i in range(1, inst.n + 1):
        inc = m.incoming(i)
        top = max((x for _, x in inc), default=0.0)
        if top <= delta:
            choice[i] = None
            continue
        arg = [k for k, x in inc if x >= top - delta]
        if len(arg) > 1:
            return None
        choice[i] = arg[0]
    pairs = []
    for i, j in choice.items():
        if j is None:
            continue
        if choice.get(j) != i:
            return None
        if i < j:
            pairs.append((i, j))
    return Matching.of(pairs)


def dual_from_fixed_point(inst: Instance, m_star: MessageState) -> np.ndarray:
    """Half the sum of the two largest incoming messages at every node."""
    y = np.zeros(inst.n)
    for i in range(1, inst.n + 1):
        inc = sorted((x for _, x in m_star.incoming(i)), reverse=True) + [0.0, 0.0]
        y[i - 1] = (inc[0] + inc[1]) / 2
    return y


def run_bp_mwm(
    inst: Instance,
    max_iters: Optional[int] = None,
    delta: float = DELTA,
    g: Optional[float] = None,
    callback: Optional[Callable[[MessageState], None]] = None,
) -> BpResult:
    """BP-MWM from the all-zero messages.

    Converged runs carry the extracted matching and the dual built from the
    fixed point.  Without ``max_iters`` the budget follows
    :func:`default_max_iters`.
    """
    heuristic = False
    if max_iters is None:
        max_iters, heuristic = default_max_iters(inst, g)
    if max_iters < 1:
        raise ValueError("max_iters must be at least 1")
    m, t, done = _iterate(inst, np.zeros(2 * inst.m), max_iters, delta, callback)
    state = MessageState(inst, m, t)
    if not done:
        return BpResult(Status.NO_CONVERGENCE, state, t, max_iters, bound_is_heuristic=heuristic)
    matching = extract_matching(inst, state, delta)
    if matching is None:
        return BpResult(Status.AMBIGUOUS, state, t, max_iters, bound_is_heuristic=heuristic)
    return BpResult(Status.CONVERGED, state, t, max_iters, matching, dual_from_fixed_point(inst, state), heuristic)


def matching_init(inst: Instance, matching: Matching) -> MessageState:
    """Weights on both arcs of matched edges, zero elsewhere."""
    inst.check_matching(matching)
    vals = np.zeros(2 * inst.m)
    for u, v in matching:
        k = inst.edge_index(u, v)
        vals[2 * k] = vals[2 * k + 1] = inst.edges[k].w
    return MessageState(inst, vals)


def run_algorithm_A(
    inst: Instance,
    matching: Matching,
    max_iters: Optional[int] = None,
    delta: float = DELTA,
    tol: float = TOL_EQ,
    callback: Optional[Callable[[MessageState], None]] = None,
) -> BpResult:
    """Max-product BP started from a given maximum weight matching.

    Runs at most ``2|E|`` iterations by default.  The returned outcome pairs
    the fixed-point dual with ``matching`` and is checked for validity and
    stability; failure of either means the matching was not a maximum weight
    matching of an instance with a stable outcome.
    """
    if max_iters is None:
        max_iters = 2 * inst.m
    m0 = matching_init(inst, matching).values
    m, t, done = _iterate(inst, m0, max_iters, delta, callback)
    state = MessageState(inst, m, t)
    if not done:
        return BpResult(Status.NO_CONVERGENCE, state, t, max_iters)
    y = dual_from_fixed_point(inst, state)
    out = Outcome(y, matching)
    try:
        out.validate(inst, tol)
    except InstanceError:
        return BpResult(Status.UNSTABLE, state, t, max_iters, matching, y)
    if not check_stability(inst, out, tol).stable:
        return BpResult(Status.UNSTABLE, state, t, max_iters, matching, y)
    return BpResult(Status.CONVERGED, state, t, max_iters, matching, y)


class Order(str, enum.Enum):
    LESS_EQUAL = "less-equal"
    GREATER_EQUAL = "greater-equal"
    EQUAL = "equal"
    INCOMPARABLE = "incomparable"


def message_partial_order(m: MessageState, m_hat: MessageState, matching: Matching, tol: float = TOL_EQ) -> Order:
    """Compare message vectors in the order induced by ``matching``.

    ``m <= m_hat`` means ``m`` is at least ``m_hat`` on both arcs of every
    matched edge and at most ``m_hat`` on every other arc.
    """
    if m.inst != m_hat.inst:
        raise InstanceError("message states belong to different instances")
    inst = m.inst
    sign = np.ones(2 * inst.m)
    for u, v in matching:
        k = inst.edge_index(u, v)
        sign[2 * k] = sign[2 * k + 1] = -1.0
    d = sign * (m_hat.values - m.values)  # >= 0 everywhere iff m <= m_hat
    le = bool(np.all(d >= -tol))
    ge = bool(np.all(d <= tol))
    if le and ge:
        return Order.EQUAL
    if le:
        return Order.LESS_EQUAL
    if ge:
        return Order.GREATER_EQUAL
    return Order.INCOMPARABLE


def critical_path(inst: Instance, m_star: MessageState, start: tuple[int, int]) -> tuple[int, ...]:
    """Walk back from message ``start = (i1, i0)`` along largest incoming messages.

    Returns ``(i_k, ..., i_1, i_0)``.  The walk stops when the current message
    is zero, when the current node has no other neighbour, or when a directed
    edge repeats.  Ties go to the lowest node id.
    """
    i1, i0 = start
    inst.edge_index(i1, i0)
    path = [i0, i1]
    seen = {(i1, i0)}
    while m_star.msg(path[-1], path[-2]) > 0:
        cur, prev = path[-1], path[-2]
        cands = [(k, m_star.msg(k, cur)) for k in inst.neighbors(cur) if k != prev]
        if not cands:
            break
        top = max(x for _, x in cands)
        nxt = min(k for k, x in cands if x == top)
        path.append(nxt)
        if (nxt, cur) in seen:
            break
        seen.add((nxt, cur))
    return tuple(reversed(path))
