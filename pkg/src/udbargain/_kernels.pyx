# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels; mirror ``_kernels_py`` exactly."""

from libc.math cimport fabs

NAME = "cython"

ctypedef Py_ssize_t idx_t


cdef inline double _best_alt(const idx_t[::1] indptr, const idx_t[::1] nbr,
                             const double[::1] wt, double[::1] gamma,
                             idx_t i, idx_t excl) noexcept nogil:
    cdef double best = 0.0, offer
    cdef idx_t p, k
    for p in range(indptr[i], indptr[i + 1]):
        k = nbr[p]
        if k == excl:
            continue
        offer = wt[p] - gamma[k]
        if offer > best:
            best = offer
    return best


def best_alt(const idx_t[::1] indptr, const idx_t[::1] nbr, const double[::1] wt,
             double[::1] gamma, idx_t i, idx_t excl):
    return _best_alt(indptr, nbr, wt, gamma, i, excl)


cdef void _rebalance_ext(const idx_t[::1] indptr, const idx_t[::1] nbr,
                         const double[::1] wt, const idx_t[::1] partner,
                         const double[::1] pw, const double[::1] rsplit,
                         double[::1] gamma, double[::1] out) noexcept nogil:
    cdef idx_t n = partner.shape[0], i, j
    cdef double ai, aj, w, gi
    for i in range(n):
        j = partner[i]
        if j < 0:
            out[i] = 0.0
            continue
        if j < i:
            continue
        ai = _best_alt(indptr, nbr, wt, gamma, i, j)
        aj = _best_alt(indptr, nbr, wt, gamma, j, i)
        w = pw[i]
        gi = ai + rsplit[i] * (w - ai - aj)
        out[i] = gi
        out[j] = w - gi


def rebalance_ext(const idx_t[::1] indptr, const idx_t[::1] nbr, const double[::1] wt,
                  const idx_t[::1] partner, const double[::1] pw, const double[::1] rsplit,
                  double[::1] gamma, double[::1] out):
    _rebalance_ext(indptr, nbr, wt, partner, pw, rsplit, gamma, out)


cdef double _apply_T(const idx_t[::1] indptr, const idx_t[::1] nbr,
                     const double[::1] wt, const idx_t[::1] partner,
                     const double[::1] pw, const double[::1] rsplit,
                     double[::1] gamma, double[::1] out, double* clamp) noexcept nogil:
    cdef idx_t n = partner.shape[0], i
    cdef double residual = 0.0, x, y, hi, d
    _rebalance_ext(indptr, nbr, wt, partner, pw, rsplit, gamma, out)
    clamp[0] = 0.0
    for i in range(n):
        x = out[i]
        hi = pw[i]
        if x < 0.0:
            y = 0.0
        elif x > hi:
            y = hi
        else:
            y = x
        if partner[i] >= 0 and fabs(y - x) > clamp[0]:
            clamp[0] = fabs(y - x)
        out[i] = y
        d = fabs(y - gamma[i])
        if d > residual:
            residual = d
    return residual


def apply_T(const idx_t[::1] indptr, const idx_t[::1] nbr, const double[::1] wt,
            const idx_t[::1] partner, const double[::1] pw, const double[::1] rsplit,
            double[::1] gamma, double[::1] out):
    cdef double clamp = 0.0
    cdef double residual = _apply_T(indptr, nbr, wt, partner, pw, rsplit, gamma, out, &clamp)
    return residual, clamp


def rebalance_run(const idx_t[::1] indptr, const idx_t[::1] nbr, const double[::1] wt,
                  const idx_t[::1] partner, const double[::1] pw, const double[::1] rsplit,
                  double[::1] gamma, double[::1] work, double kappa, double eps,
                  Py_ssize_t n_mix, double[::1] trace):
    cdef idx_t n = partner.shape[0], i, j
    cdef Py_ssize_t s
    cdef double residual, c = 0.0, clamp = 0.0, gi
    with nogil:
        for s in range(n_mix):
            residual = _apply_T(indptr, nbr, wt, partner, pw, rsplit, gamma, work, &c)
            if c > clamp:
                clamp = c
            trace[s] = residual
            if residual <= eps:
                with gil:
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


cdef void _bp_step(const idx_t[::1] indptr, const idx_t[::1] nbr, const double[::1] wt,
                   const idx_t[::1] arc_in, const idx_t[::1] arc_out,
                   double[::1] m, double[::1] out) noexcept nogil:
    cdef idx_t n = indptr.shape[0] - 1, i, p, arg
    cdef double top1, top2, x, alt
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


def bp_step(const idx_t[::1] indptr, const idx_t[::1] nbr, const double[::1] wt,
            const idx_t[::1] arc_in, const idx_t[::1] arc_out,
            double[::1] m, double[::1] out):
    _bp_step(indptr, nbr, wt, arc_in, arc_out, m, out)


def bp_run(const idx_t[::1] indptr, const idx_t[::1] nbr, const double[::1] wt,
           const idx_t[::1] arc_in, const idx_t[::1] arc_out,
           double[::1] m, double[::1] work, Py_ssize_t n_steps, double delta):
    cdef Py_ssize_t s, a, na = m.shape[0]
    cdef double diff, d
    with nogil:
        for s in range(n_steps):
            _bp_step(indptr, nbr, wt, arc_in, arc_out, m, work)
            diff = 0.0
            for a in range(na):
                d = fabs(work[a] - m[a])
                if d > diff:
                    diff = d
                m[a] = work[a]
            if diff <= delta:
                with gil:
                    return s, True
    return n_steps, False
