"""Checkers for stability and (approximate) correct division."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .instance import TOL_EQ, Instance, InstanceError, Outcome


def best_alternative(inst: Instance, gamma, i: int, exclude: Optional[int] = None) -> float:
    """Best offer node ``i`` gets from neighbours other than ``exclude``.

    This is ``max (w_ik - gamma_k)_+`` over ``k`` adjacent to ``i`` with
    ``k != exclude``, and 0 when no such neighbour exists.
    """
    best = 0.0
    for k, w in inst.adjacency[i]:
        if k != exclude:
            best = max(best, float(w - gamma[k - 1]))
    return best


def surplus(inst: Instance, gamma, i: int, j: int) -> float:
    """Edge surplus of (i, j); negative when ``gamma`` is not stable."""
    w = inst.weight(i, j)
    return w - best_alternative(inst, gamma, i, j) - best_alternative(inst, gamma, j, i)


def division_residual(inst: Instance, gamma, i: int, j: int) -> float:
    """``|gamma_i - alt_i - r_ij * Surp_ij|`` evaluated at endpoint ``i``."""
    return float(abs(gamma[i - 1] - best_alternative(inst, gamma, i, j) - inst.split(i, j) * surplus(inst, gamma, i, j)))


@dataclass
class ViolationReport:
    stability_violations: list = field(default_factory=list)  # ((u, v), deficit)
    unmatched_offers: list = field(default_factory=list)  # (node, best offer)
    division_residuals: list = field(default_factory=list)  # ((u, v), residual)
    max_deficit: float = 0.0
    max_residual: float = 0.0

    @property
    def stable(self) -> bool:
        return not self.stability_violations and not self.unmatched_offers

    def lines(self, epsilon: Optional[float] = None) -> list[str]:
        out = [f"stable {'yes' if self.stable else 'no'}"]
        out += [f"violation {u} {v} {d!r}" for (u, v), d in self.stability_violations]
        out += [f"offer {i} {x!r}" for i, x in self.unmatched_offers]
        out += [f"residual {u} {v} {x!r}" for (u, v), x in self.division_residuals]
        out.append(f"max_deficit {self.max_deficit!r}")
        out.append(f"max_residual {self.max_residual!r}")
        if epsilon is not None:
            ok = self.stable and self.max_residual <= epsilon
            out.append(f"eps_ud {'yes' if ok else 'no'} epsilon {epsilon!r}")
        return out


def check_stability(inst: Instance, out: Outcome, tol: float = TOL_EQ) -> ViolationReport:
    """List unmatched edges short of their weight and unmatched nodes with offers.

    ``max_deficit`` is the largest ``w_ij - gamma_i - gamma_j`` over unmatched
    edges (clipped at 0) whether or not it exceeds ``tol``.
    """
    g = out.gamma
    rep = ViolationReport()
    matched = out.matching.partner()
    for u, v, w, _ in inst.edges:
        if (u, v) in out.matching:
            continue
        deficit = float(w - g[u - 1] - g[v - 1])
        rep.max_deficit = max(rep.max_deficit, deficit)
        if deficit > tol:
            rep.stability_violations.append(((min(u, v), max(u, v)), deficit))
    for i in range(1, inst.n + 1):
        if i not in matched:
            offer = float(best_alternative(inst, g, i))
            if offer > tol:
                rep.unmatched_offers.append((i, offer))
    return rep


def check_eps_correct_division(inst: Instance, out: Outcome, tol: float = TOL_EQ) -> float:
    """Largest correct-division residual over matched edges (0 if none).

    The residual is taken at the endpoint owning the split fraction as listed
    in the instance; the other endpoint's residual must agree to ``tol``
    (scaled by the weight bound), otherwise ``InstanceError`` is raised.
    """
    worst = 0.0
    for u, v in out.matching:
        e = inst.edges[inst.edge_index(u, v)]
        res = division_residual(inst, out.gamma, e.u, e.v)
        other = division_residual(inst, out.gamma, e.v, e.u)
        if abs(res - other) > tol * max(1.0, inst.weight_bound) + 1e-12 * abs(res):
            raise InstanceError(f"endpoint residuals disagree on ({u}, {v}): {res!r} vs {other!r}")
        worst = max(worst, res)
    return worst


def violation_report(inst: Instance, out: Outcome, tol: float = TOL_EQ) -> ViolationReport:
    rep = check_stability(inst, out, tol)
    for u, v in out.matching:
        e = inst.edges[inst.edge_index(u, v)]
        res = division_residual(inst, out.gamma, e.u, e.v)
        rep.division_residuals.append(((u, v), res))
        rep.max_residual = max(rep.max_residual, res)
    return rep


def is_eps_ud(inst: Instance, out: Outcome, epsilon: float, tol: float = TOL_EQ) -> bool:
    return check_stability(inst, out, tol).stable and check_eps_correct_division(inst, out) <= epsilon


def stable_deficit(inst: Instance, gamma: np.ndarray, u: int, v: int) -> float:
    """``w_uv - gamma_u - gamma_v``; positive means the pair would defect."""
    return inst.weight(u, v) - gamma[u - 1] - gamma[v - 1]
