"""Damped edge rebalancing and the two-step solver built on it.

Step 1 produces a stable outcome (maximum weight matching plus an optimal
dual), or reports that none exists.  Step 2 repeatedly moves every matched
edge part of the way toward its correct division while staying stable.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from . import bp, oracle
from ._backend import kernels
from .instance import TOL_EQ, Instance, InstanceError, Matching, Outcome, generate_ring
from .verify import check_eps_correct_division, check_stability

_CHUNK = 1 << 16


class RebalanceError(ValueError):
    """Bad configuration or a start outcome that is not stable."""


class InvariantError(RuntimeError):
    """An internal guarantee failed; indicates a bug or numerical breakdown."""


class Termination(str, enum.Enum):
    RESIDUAL = "residual"
    FIXED = "fixed"


class Backend(str, enum.Enum):
    ORACLE = "oracle"
    BP = "bp"


class SolveStatus(str, enum.Enum):
    SOLVED = "SOLVED"
    UNSTABLE = "UNSTABLE"
    STEP1_INCONCLUSIVE = "STEP1_INCONCLUSIVE"


@dataclass(frozen=True)
class SolveConfig:
    epsilon: float = 1e-3
    kappa: float = 0.5
    termination: Termination = Termination.RESIDUAL
    max_iters: Optional[int] = None
    step1_backend: Backend = Backend.ORACLE
    tol_eq: float = TOL_EQ
    delta: float = bp.DELTA
    oracle_cap: int = oracle.DEFAULT_EDGE_CAP
    bp_max_iters: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "termination", Termination(self.termination))
        object.__setattr__(self, "step1_backend", Backend(self.step1_backend))
        if not 0 < self.kappa <= 0.5:
            raise RebalanceError(f"kappa must lie in (0, 1/2], got {self.kappa!r}")
        if not self.epsilon > 0:
            raise RebalanceError(f"epsilon must be positive, got {self.epsilon!r}")
        if self.max_iters is not None and self.max_iters < 0:
            raise RebalanceError("max_iters must be non-negative")


def iteration_bound(kappa: float, epsilon: float) -> int:
    """``ceil(1 / (pi kappa (1 - kappa) epsilon^2))`` for unit weight bound."""
    return math.ceil(1.0 / (math.pi * kappa * (1 - kappa) * epsilon**2))


def rate_envelope(kappa: float, t: int, diameter: float = 1.0) -> float:
    """Residual bound after ``t >= 1`` damped steps on a set of given diameter."""
    return diameter / math.sqrt(math.pi * kappa * (1 - kappa) * t)


# ---------------------------------------------------------------------------
# operators


def _check_allocation(inst: Instance, matching: Matching, gamma: np.ndarray, tol: float) -> np.ndarray:
    gamma = np.asarray(gamma, dtype=np.float64)
    if gamma.shape != (inst.n,):
        raise InstanceError(f"allocation has shape {gamma.shape}, expected ({inst.n},)")
    partner, pw, _ = inst.matching_arrays(matching)
    for i in range(inst.n):
        j = partner[i]
        if j < 0:
            if abs(gamma[i]) > tol:
                raise InstanceError(f"unmatched node {i + 1} earns {gamma[i]!r}")
        elif i < j and abs(gamma[i] + gamma[j] - pw[i]) > tol:
            raise InstanceError(f"matched edge ({i + 1}, {j + 1}) does not split its weight")
    return gamma


def rebalance_op(inst: Instance, matching: Matching, gamma, tol: float = TOL_EQ) -> np.ndarray:
    """Give every matched edge its correct division against the current offers.

    Entries may come out negative when a surplus is negative.
    """
    gamma = _check_allocation(inst, matching, gamma, tol)
    a = inst.arrays
    partner, pw, rsplit = inst.matching_arrays(matching)
    out = np.empty(inst.n)
    kernels.rebalance_ext(a.indptr, a.nbr, a.wt, partner, pw, rsplit, gamma.copy(), out)
    return out


def threshold_op(inst: Instance, matching: Matching, gamma_ext, tol: float = TOL_EQ) -> np.ndarray:
    """Clamp each matched endpoint into ``[0, w_ij]``; unmatched nodes to 0."""
    gamma_ext = _check_allocation(inst, matching, gamma_ext, tol)
    partner, pw, _ = inst.matching_arrays(matching)
    both = (partner >= 0) & (gamma_ext < 0) & (gamma_ext[np.maximum(partner, 0)] < 0)
    if np.any(both):
        raise InvariantError("both endpoints of a matched edge are negative")
    return np.where(partner >= 0, np.clip(gamma_ext, 0.0, pw), 0.0)


def T_op(inst: Instance, matching: Matching, gamma, tol: float = TOL_EQ) -> np.ndarray:
    return threshold_op(inst, matching, rebalance_op(inst, matching, gamma, tol), tol)


# ---------------------------------------------------------------------------
# damped iteration


@dataclass
class RebalanceRun:
    outcome: Outcome
    iterations: int
    trace: np.ndarray  # residual of iterate t, t = 0..iterations
    stopped: bool  # residual reached the target
    max_clamp: float = 0.0

    @property
    def residual(self) -> float:
        return float(self.trace[-1])


def _damped_run(
    inst: Instance,
    matching: Matching,
    gamma0: np.ndarray,
    kappa: float,
    eps: float,
    max_mix: int,
    callback: Optional[Callable[[int, np.ndarray], None]] = None,
) -> RebalanceRun:
    """Iterate ``gamma <- kappa T gamma + (1 - kappa) gamma`` with no preconditions."""
    a = inst.arrays
    partner, pw, rsplit = inst.matching_arrays(matching)
    gamma = np.array(gamma0, dtype=np.float64)
    work = np.empty_like(gamma)
    parts = []
    t = 0
    clamp = 0.0
    while True:
        if callback is not None:
            callback(t, gamma.copy())
        n_mix = min(1 if callback is not None else _CHUNK, max_mix - t)
        if n_mix == 0:
            buf = np.empty(1)
            _, _, c = kernels.rebalance_run(a.indptr, a.nbr, a.wt, partner, pw, rsplit, gamma, work, kappa, math.inf, 1, buf)
            parts.append(buf)
            clamp = max(clamp, c)
            stopped = bool(buf[0] <= eps)
            break
        buf = np.empty(n_mix)
        s, stopped, c = kernels.rebalance_run(a.indptr, a.nbr, a.wt, partner, pw, rsplit, gamma, work, kappa, eps, n_mix, buf)
        clamp = max(clamp, c)
        if stopped:
            parts.append(buf[: s + 1])
            t += s
            break
        parts.append(buf[:s])
        t += s
    return RebalanceRun(Outcome(gamma, matching), t, np.concatenate(parts), stopped, clamp)


def edge_rebalancing(
    inst: Instance,
    start: Outcome,
    cfg: SolveConfig = SolveConfig(),
    callback: Optional[Callable[[int, np.ndarray], None]] = None,
) -> RebalanceRun:
    """Turn a stable outcome into an epsilon-approximate UD solution.

    Raises :class:`RebalanceError` when ``start`` is not a stable outcome.  In
    residual mode the loop stops at the first iterate whose residual is at
    most ``cfg.epsilon``; in fixed mode it runs exactly the worst-case number
    of iterations.  Either way the count never exceeds
    ``iteration_bound(kappa, epsilon / W)`` unless ``cfg.max_iters`` says so.
    ``callback(t, gamma)`` sees every iterate.
    """
    try:
        start.validate(inst, cfg.tol_eq)
    except InstanceError as exc:
        raise RebalanceError(f"start is not a valid outcome: {exc}") from None
    if not check_stability(inst, start, cfg.tol_eq).stable:
        raise RebalanceError("start outcome is not stable")
    bound = iteration_bound(cfg.kappa, cfg.epsilon / inst.weight_bound)
    cap = bound if cfg.max_iters is None else cfg.max_iters
    eps = cfg.epsilon if cfg.termination is Termination.RESIDUAL else -1.0
    run = _damped_run(inst, start.matching, start.gamma, cfg.kappa, eps, cap, callback)
    if cfg.termination is Termination.FIXED:
        run.stopped = run.residual <= cfg.epsilon
    return run


@dataclass
class ExactResult:
    outcome: Outcome
    converged: bool
    iterations: int
    trace: np.ndarray


def iterate_to_exact(
    inst: Instance,
    start: Outcome,
    kappa: float = 0.5,
    max_iters: int = 1_000_000,
    tol: float = 1e-12,
) -> ExactResult:
    """Keep rebalancing until the residual drops to ``tol`` (or ``max_iters``)."""
    cfg = SolveConfig(epsilon=tol, kappa=kappa, max_iters=max_iters)
    run = edge_rebalancing(inst, start, cfg)
    return ExactResult(run.outcome, run.stopped, run.iterations, run.trace)


# ---------------------------------------------------------------------------
# solver


@dataclass
class SolveResult:
    status: SolveStatus
    outcome: Optional[Outcome] = None
    iterations_step2: int = 0
    trace: np.ndarray = field(default_factory=lambda: np.empty(0))
    certificates: dict = field(default_factory=dict)


def _step1_oracle(inst: Instance, cfg: SolveConfig, cert: dict) -> Optional[Outcome]:
    mwm = oracle.brute_force_mwm(inst, cfg.oracle_cap, cfg.tol_eq)
    lp_value, vertex = oracle.fractional_lp_optimum(inst, cfg.oracle_cap, cfg.tol_eq)
    cert["matching_weight"] = mwm.weight
    cert["lp_value"] = lp_value
    cert["lp_vertex"] = vertex.support
    if mwm.weight < lp_value - cfg.tol_eq:
        return None
    for matching in mwm.matchings:
        res = bp.run_algorithm_A(inst, matching, delta=cfg.delta, tol=cfg.tol_eq)
        if res.converged:
            cert["algorithm_a_iterations"] = res.iterations
            return res.outcome
    raise InvariantError("no maximum weight matching yielded a stable outcome despite an integral LP optimum")


def _step1_bp(inst: Instance, cfg: SolveConfig, cert: dict) -> Optional[Outcome]:
    res = bp.run_bp_mwm(inst, cfg.bp_max_iters, cfg.delta)
    cert["bp_status"] = res.status.value
    cert["bp_iterations"] = res.iterations
    if not res.converged:
        return None
    out = res.outcome
    try:
        out.validate(inst, cfg.tol_eq)
    except InstanceError:
        cert["bp_status"] = "invalid_dual"
        return None
    if not check_stability(inst, out, cfg.tol_eq).stable:
        cert["bp_status"] = "infeasible_dual"
        return None
    cert["matching_weight"] = inst.matching_weight(out.matching)
    return out


def solve(
    inst: Instance,
    cfg: SolveConfig = SolveConfig(),
    callback: Optional[Callable[[int, np.ndarray], None]] = None,
) -> SolveResult:
    """Compute an epsilon-UD solution, or report that none can exist.

    Weights are rescaled to a unit bound internally; ``epsilon``, the
    returned outcome, the trace and the iterates passed to ``callback`` are
    all in the instance's own units.
    """
    W = inst.weight_bound
    work = inst if W == 1.0 else inst.scaled(1.0 / W)
    wcfg = cfg if W == 1.0 else replace(cfg, epsilon=cfg.epsilon / W)
    cert: dict = {"weight_bound": W}

    if cfg.step1_backend is Backend.ORACLE:
        start = _step1_oracle(work, wcfg, cert)
        if start is None:
            return SolveResult(SolveStatus.UNSTABLE, certificates=cert)
    else:
        start = _step1_bp(work, wcfg, cert)
        if start is None:
            return SolveResult(SolveStatus.STEP1_INCONCLUSIVE, certificates=cert)
    cert["dual_value"] = float(start.gamma.sum()) * W
    cert["matching_weight"] *= W

    cb = None if callback is None else (lambda t, g: callback(t, g * W))
    run = edge_rebalancing(work, start, wcfg, cb)
    cert["iteration_bound"] = iteration_bound(wcfg.kappa, wcfg.epsilon)
    out = Outcome(run.outcome.gamma * W, run.outcome.matching)
    if W != 1.0:
        for u, v in out.matching:
            out.gamma[v - 1] = inst.weight(u, v) - out.gamma[u - 1]

    if not check_stability(inst, out, cfg.tol_eq * W).stable:
        raise InvariantError("rebalancing returned an unstable outcome")
    residual = check_eps_correct_division(inst, out, cfg.tol_eq * W)
    if residual > cfg.epsilon + cfg.tol_eq * W:
        msg = f"division residual {residual!r} exceeds epsilon {cfg.epsilon!r}"
        if cfg.max_iters is not None:
            raise RebalanceError(msg + f" after the {cfg.max_iters}-iteration cap")
        raise InvariantError(msg)
    cert["residual"] = residual
    return SolveResult(SolveStatus.SOLVED, out, run.iterations, run.trace * W, cert)


# ---------------------------------------------------------------------------
# slow progress from an unstable start


@dataclass
class SlowDemoReport:
    N: int
    r: float
    kappa: float
    weight_bound: float
    eps_prime: float
    lower_bound: int  # floor(1 / (4 eps'))
    bad_edge: tuple
    initial_deficit: float
    first_half_stable: Optional[int]  # first t with deficit <= 1/2
    iterations: int
    max_step_change: float
    step_changes: np.ndarray
    deficits: np.ndarray
    initial_residual: float


def slow_progress_demo(N: int, r: float, kappa: float = 0.5, max_iters: Optional[int] = None) -> SlowDemoReport:
    """Rebalance the adversarial ring from its unstable outcome.

    The stability precondition of :func:`edge_rebalancing` is bypassed on
    purpose.  The run stops once the bad edge is within 1/2 of stability or
    after ``max_iters`` steps (default: 1000 times the lower bound).
    """
    if not 0 < kappa <= 0.5:
        raise RebalanceError(f"kappa must lie in (0, 1/2], got {kappa!r}")
    ring = generate_ring(N, r)
    inst, out = ring.instance, ring.outcome
    lower = math.floor(1 / (4 * ring.eps_prime))
    if max_iters is None:
        max_iters = 1000 * max(lower, 1)
    u, v = ring.bad_edge
    w = inst.weight(u, v)
    a = inst.arrays
    partner, pw, rsplit = inst.matching_arrays(out.matching)
    gamma = out.gamma.copy()
    work = np.empty_like(gamma)
    buf = np.empty(1)
    deficits = [float(w - gamma[u - 1] - gamma[v - 1])]
    changes = []
    residual0 = None
    first = 0 if deficits[0] <= 0.5 else None
    t = 0
    while first is None and t < max_iters:
        prev = gamma.copy()
        kernels.rebalance_run(a.indptr, a.nbr, a.wt, partner, pw, rsplit, gamma, work, kappa, -1.0, 1, buf)
        if residual0 is None:
            residual0 = float(buf[0])
        t += 1
        changes.append(float(np.max(np.abs(gamma - prev))))
        deficits.append(float(w - gamma[u - 1] - gamma[v - 1]))
        if deficits[-1] <= 0.5:
            first = t
    if residual0 is None:
        residual0 = float(kernels.apply_T(a.indptr, a.nbr, a.wt, partner, pw, rsplit, gamma.copy(), work)[0])
    ch = np.array(changes)
    return SlowDemoReport(
        N, r, kappa, inst.weight_bound, ring.eps_prime, lower, ring.bad_edge, deficits[0], first, t,
        float(ch.max(initial=0.0)), ch, np.array(deficits), residual0,
    )
