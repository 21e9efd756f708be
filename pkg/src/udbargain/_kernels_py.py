"""Pure-Python kernels.  Same signatures and semantics as ``_kernels.pyx``.

All node indices are 0-based and all arrays come from
:class:`udbargain.instance.GraphArrays` and ``Instance.matching_arrays``.
"""

import math

NAME = "python"


def best_alt(indptr, nbr, wt, gamma, i, excl):
    best = 0.0
    for p in range(indptr[i], indptr[i + 1]):
        k = nbr[p]
        if k == excl:
            continue
        offer = wt[p] - gamma[k]
        if offer > best:
            best = offer
    return best


def rebalance_ext(indptr, nbr, wt, partner, pw, rsplit, gamma, out):
    """Write the rebalanced (possibly negative) allocation into ``out``."""
    n = len(partner)
    for i in range(n):
        j = partner[i]
        if j < 0:
            out[i] = 0.0
            continue
        if j < i:
            continue
        ai = best_alt(indptr, nbr, wt, gamma, i, j)
        aj = best_alt(indptr, nbr, wt, gamma, j, i)
        w = pw[i]
        gi = ai + rsplit[i] * (w - ai - aj)
        out[i] = gi
        out[j] = w - gi


def apply_T(indptr, nbr, wt, partner, pw, rsplit, gamma, out):
    """out = T^thr(T^reb(gamma)); returns (sup residual, largest clamp)."""
    rebalance_ext(indptr, nbr, wt, partner, pw, rsplit, gamma, out)
    residual = 0.0
    clamp = 0.0
    for i in range(len(partner)):
        x = out[i]
        hi = pw[i]
        y = 0.0 if x < 0.0 else (hi if x > hi else x)
        if partner[i] >= 0 and abs(y - x) > clamp:
            clamp = abs(y - x)
        out[i] = y
        d = abs(y - gamma[i])
        if d > residual:
            residual = d
    return residual, clamp


def rebalance_run(indptr, nbr, wt, partner, pw, rsplit, gamma, work, kappa, eps, n_mix, trace):
    """Damped rebalancing, in place on ``gamma``.

    Evaluates the residual of the current iterate, stops if it is ``<= eps``,
    otherwise mixes ``gamma <- kappa*T(gamma) + (1-kappa)*gamma``; at most
    ``n_mix`` mixes.  ``trace[s]`` receives the residual of iterate ``s``.
    Returns ``(mixes, stopped, largest clamp)``.
    """
    n = len(partner)
    clamp = 0.0
    for s in range(n_mix):
        residual, c = apply_T(indptr, nbr, wt, partner, pw, rsplit, gamma, work)
        if c > clamp:
            clamp = c
        trace[s] = residual
        if residual <= eps:
            return s, True, clamp
        for i in range(n):
            j = partner[i]
            if j < 0:
                gamma[i] = 0.0
            elif i < j:
                gi = kappa * work[i] + (1.0 - kappa) * gamma[i]
                gamma[i] = gi
                gamma[j] = pw[i] - gi
    return n_mix, False, clamp


def bp_step(indptr, nbr, wt, arc_in, arc_out, m, out):
    """Synchronous max-product update of every directed message."""
    n = len(indptr) - 1
    for i in range(n):
        top1 = 0.0
        top2 = 0.0
        arg = -1
        for p in range(indptr[i], indptr[i + 1]):
            x = m[arc_in[p]]
            if x > top1:
                top2 = top1
                top1 = x
                arg = nbr[p]
            elif x > top2:
                top2 = x
        for p in range(indptr[i], indptr[i + 1]):
            alt = top2 if nbr[p] == arg else top1
            x = wt[p] - alt
            out[arc_out[p]] = x if x > 0.0 else 0.0


def bp_run(indptr, nbr, wt, arc_in, arc_out, m, work, n_steps, delta):
    """Iterate ``bp_step`` in place on ``m`` for at most ``n_steps`` steps.

    Returns ``(s, True)`` as soon as step ``s`` moves no message by more than
    ``delta`` (``m`` then holds the step's output), else ``(n_steps, False)``.
    """
    for s in range(n_steps):
        bp_step(indptr, nbr, wt, arc_in, arc_out, m, work)
        diff = 0.0
        for a in range(len(m)):
            d = math.fabs(work[a] - m[a])
            if d > diff:
                diff = d
            m[a] = work[a]
        if diff <= delta:
            return s, True
    return n_steps, False
