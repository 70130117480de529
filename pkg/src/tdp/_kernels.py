"""Compiled inner loops for the pressing subproblem.

Costs are compared lexicographically as (violation, waste) pairs, where
violation is the total production outside the tolerance bands and waste the
total absolute deviation from demand.
"""

import numpy as np
from numba import njit

_MAX_WALK = 2000


@njit(cache=True)
def int_cost(S, Q, lo, hi, R):
    viol = 0
    waste = 0
    v, t = S.shape
    for i in range(v):
        p = 0
        for j in range(t):
            p += S[i, j] * R[j]
        if p < lo[i]:
            viol += lo[i] - p
        elif p > hi[i]:
            viol += p - hi[i]
        d = p - Q[i]
        waste += d if d >= 0 else -d
    return viol, waste


@njit(cache=True)
def _lex_less(a0, a1, b0, b1):
    return a0 < b0 or (a0 == b0 and a1 < b1)


@njit(cache=True)
def _tol(b):
    return 1e-9 * (1.0 + abs(b))


@njit(cache=True)
def _right_slope(p, q, l, h):
    # derivative of (violation, waste) of one variation as production increases
    if p < l - _tol(l):
        sv = -1.0
    elif p >= h - _tol(h):
        sv = 1.0
    else:
        sv = 0.0
    sw = -1.0 if p < q - _tol(q) else 1.0
    return sv, sw


@njit(cache=True)
def _left_slope(p, q, l, h):
    # derivative seen when production decreases towards p
    if p <= l + _tol(l):
        sv = -1.0
    elif p > h + _tol(h):
        sv = 1.0
    else:
        sv = 0.0
    sw = -1.0 if p <= q + _tol(q) else 1.0
    return sv, sw


@njit(cache=True)
def _jitter(k):
    # deterministic pseudo-random offset in [0.01, 0.26)
    x = (k * 2654435761 + 12345) % 4294967296
    return 0.01 + 0.25 * x / 4294967296.0


@njit(cache=True)
def _improving(dv, dw):
    return dv < -1e-9 or (abs(dv) <= 1e-9 and dw < -1e-9)


@njit(cache=True)
def _invert(A, out, work):
    # Gauss-Jordan with partial pivoting; False when A is (near) singular
    t = A.shape[0]
    for i in range(t):
        for j in range(t):
            work[i, j] = A[i, j]
            out[i, j] = 1.0 if i == j else 0.0
    for col in range(t):
        piv = col
        for r in range(col + 1, t):
            if abs(work[r, col]) > abs(work[piv, col]):
                piv = r
        if abs(work[piv, col]) < 1e-12:
            return False
        if piv != col:
            for j in range(t):
                tmp = work[col, j]
                work[col, j] = work[piv, j]
                work[piv, j] = tmp
                tmp = out[col, j]
                out[col, j] = out[piv, j]
                out[piv, j] = tmp
        f = 1.0 / work[col, col]
        for j in range(t):
            work[col, j] *= f
            out[col, j] *= f
        for r in range(t):
            if r != col:
                g = work[r, col]
                if g != 0.0:
                    for j in range(t):
                        work[r, j] -= g * work[col, j]
                        out[r, j] -= g * out[col, j]
    return True


@njit(cache=True)
def continuous_optimum(S, Q, lo, hi):
    """Walk the vertices of the breakpoint arrangement down to a minimiser of
    the convex piecewise-linear (violation, waste) objective over real R >= 0.

    Each basis holds t active hyperplanes (a variation's production pinned
    to a breakpoint, or R_j = 0). Leaving one of them along an edge and line
    searching to the next breakpoint strictly decreases the objective; with
    breakpoints in general position a vertex with no improving edge is optimal.
    """
    v, t = S.shape
    Sf = S.astype(np.float64)
    # Fixed sub-unit offsets keep breakpoints in general position so no more
    # than t hyperplanes meet at a vertex; integer costs stay exact later.
    Qf = np.empty(v)
    lof = np.empty(v)
    hif = np.empty(v)
    for i in range(v):
        lof[i] = lo[i] + _jitter(3 * i)
        Qf[i] = Q[i] + _jitter(3 * i + 1)
        hif[i] = hi[i] - _jitter(3 * i + 2)
    R = np.zeros(t)
    A = np.eye(t)
    Ainv = np.eye(t)
    work = np.empty((t, t))
    p = np.zeros(v)
    best_c = np.empty(v)
    best_d = np.empty(t)
    nbp = 3 * v
    taus = np.empty(nbp)
    jv = np.empty(nbp)
    jw = np.empty(nbp)
    rows = np.empty(nbp, dtype=np.int64)
    M = np.empty((v, t))
    for _ in range(_MAX_WALK):
        best_dv = 0.0
        best_dw = 0.0
        best_k = 0
        found = False
        # production change per unit step along edge k is column k of S @ Ainv
        for i in range(v):
            for k in range(t):
                acc = 0.0
                for j in range(t):
                    acc += Sf[i, j] * Ainv[j, k]
                M[i, k] = acc
        for k in range(t):
            up_ok = True
            down_ok = True
            for j in range(t):
                if R[j] <= 1e-9:
                    if Ainv[j, k] < -1e-12:
                        up_ok = False
                    elif Ainv[j, k] > 1e-12:
                        down_ok = False
            if not (up_ok or down_ok):
                continue
            uv = 0.0
            uw = 0.0
            dv_ = 0.0
            dw_ = 0.0
            for i in range(v):
                ci = M[i, k]
                if ci > 1e-12:
                    rv, rw = _right_slope(p[i], Qf[i], lof[i], hif[i])
                    lv, lw = _left_slope(p[i], Qf[i], lof[i], hif[i])
                    uv += rv * ci
                    uw += rw * ci
                    dv_ -= lv * ci
                    dw_ -= lw * ci
                elif ci < -1e-12:
                    rv, rw = _right_slope(p[i], Qf[i], lof[i], hif[i])
                    lv, lw = _left_slope(p[i], Qf[i], lof[i], hif[i])
                    uv += lv * ci
                    uw += lw * ci
                    dv_ -= rv * ci
                    dw_ -= rw * ci
            for si in range(2):
                if si == 0:
                    if not up_ok:
                        continue
                    dv = uv
                    dw = uw
                    sgn = 1.0
                else:
                    if not down_ok:
                        continue
                    dv = dv_
                    dw = dw_
                    sgn = -1.0
                if _improving(dv, dw) and (not found or _lex_less(dv, dw, best_dv, best_dw)):
                    found = True
                    best_dv = dv
                    best_dw = dw
                    best_k = k
                    for j in range(t):
                        best_d[j] = sgn * Ainv[j, k]
                    for i in range(v):
                        best_c[i] = sgn * M[i, k]
        if not found:
            break
        tau_max = np.inf
        bound_j = -1
        for j in range(t):
            if best_d[j] < -1e-12:
                tj = R[j] / (-best_d[j])
                if tj < tau_max:
                    tau_max = tj
                    bound_j = j
        n = 0
        for i in range(v):
            ci = best_c[i]
            if abs(ci) <= 1e-12:
                continue
            for which in range(3):
                if which == 0:
                    b = lof[i]
                elif which == 1:
                    b = Qf[i]
                else:
                    b = hif[i]
                ahead = (b - p[i]) if ci > 0 else (p[i] - b)
                if ahead <= _tol(b):
                    continue
                tb = (b - p[i]) / ci
                if tb >= tau_max:
                    continue
                taus[n] = tb
                if which == 1:
                    jv[n] = 0.0
                    jw[n] = 2.0 * abs(ci)
                else:
                    jv[n] = abs(ci)
                    jw[n] = 0.0
                rows[n] = i
                n += 1
        order = np.argsort(taus[:n])
        sv = best_dv
        sw = best_dw
        tau = tau_max
        enter_row = -1
        for idx in range(n):
            m = order[idx]
            sv += jv[m]
            sw += jw[m]
            if not _improving(sv, sw):
                tau = taus[m]
                enter_row = rows[m]
                break
        if not np.isfinite(tau):
            break
        for j in range(t):
            R[j] += tau * best_d[j]
            if R[j] < 0.0:
                R[j] = 0.0
        if enter_row >= 0:
            for j in range(t):
                A[best_k, j] = Sf[enter_row, j]
        else:
            for j in range(t):
                A[best_k, j] = 0.0
            A[best_k, bound_j] = 1.0
            R[bound_j] = 0.0
        for i in range(v):
            acc = 0.0
            for j in range(t):
                acc += Sf[i, j] * R[j]
            p[i] = acc
        if not _invert(A, Ainv, work):
            break
    return R


@njit(cache=True)
def _box_search(S, Q, lo, hi, R, bv, bw, radius, skip):
    # one sweep over the integer box around R, ignoring the inner box of
    # radius ``skip`` already known not to improve; returns the best point
    v, t = S.shape
    width = 2 * radius + 1
    total = 1
    for _ in range(t):
        total *= width
    best = R.copy()
    off = np.empty(t, dtype=np.int64)
    p0 = np.empty(v, dtype=np.int64)
    for i in range(v):
        acc = 0
        for j in range(t):
            acc += S[i, j] * R[j]
        p0[i] = acc
    improved = False
    for code in range(total):
        c = code
        ok = True
        inner = True
        for j in range(t):
            o = (c % width) - radius
            c //= width
            off[j] = o
            if R[j] + o < 0:
                ok = False
            if o > skip or o < -skip:
                inner = False
        if not ok or inner:
            continue
        viol = 0
        waste = 0
        worse = False
        for i in range(v):
            x = p0[i]
            for j in range(t):
                x += S[i, j] * off[j]
            if x < lo[i]:
                viol += lo[i] - x
            elif x > hi[i]:
                viol += x - hi[i]
            d = x - Q[i]
            waste += d if d >= 0 else -d
            if viol > bv or (viol == bv and waste >= bw):
                worse = True
                break
        if worse:
            continue
        bv = viol
        bw = waste
        for j in range(t):
            best[j] = R[j] + off[j]
        improved = True
    return best, bv, bw, improved


@njit(cache=True)
def solve_pressings(S, Q, lo, hi):
    """Integer pressing counts minimising (violation, waste) for design S."""
    v, t = S.shape
    Rc = continuous_optimum(S, Q, lo, hi)
    best = np.zeros(t, dtype=np.int64)
    bv, bw = int_cost(S, Q, lo, hi, best)
    cand = np.empty(t, dtype=np.int64)
    for mask in range(1 << t):
        for j in range(t):
            f = np.floor(Rc[j])
            cand[j] = np.int64(f) + ((mask >> j) & 1)
            if cand[j] < 0:
                cand[j] = 0
        cv, cw = int_cost(S, Q, lo, hi, cand)
        if _lex_less(cv, cw, bv, bw):
            bv = cv
            bw = cw
            best[:] = cand
    big = 2 if t <= 3 else 1
    for _ in range(100):
        best, bv, bw, improved = _box_search(S, Q, lo, hi, best, bv, bw, 1, 0)
        if improved:
            continue
        if big > 1:
            best, bv, bw, improved = _box_search(S, Q, lo, hi, best, bv, bw, big, 1)
        if not improved:
            break
    return best, bv, bw


@njit(cache=True)
def brute_force(S, Q, lo, hi, lows, highs):
    """Exhaustive scan of the integer box; ties keep the lexicographically first R."""
    v, t = S.shape
    R = lows.copy()
    best = lows.copy()
    bv, bw = int_cost(S, Q, lo, hi, R)
    # visit fast-moving variations first so the early exit fires sooner
    perm = np.argsort(-S[:, t - 1])
    S = S[perm].copy()
    Q = Q[perm].copy()
    lo = lo[perm].copy()
    hi = hi[perm].copy()
    p = np.empty(v, dtype=np.int64)
    last = t - 1
    while True:
        for i in range(v):
            acc = 0
            for j in range(last):
                acc += S[i, j] * R[j]
            p[i] = acc + S[i, last] * lows[last]
        # sweep the last coordinate; production is p + S[:, last] * k
        for k in range(highs[last] - lows[last] + 1):
            viol = 0
            waste = 0
            for i in range(v):
                x = p[i] + S[i, last] * k
                if x < lo[i]:
                    viol += lo[i] - x
                elif x > hi[i]:
                    viol += x - hi[i]
                d = x - Q[i]
                waste += d if d >= 0 else -d
                # partial sums only grow: stop once already worse than the best
                if viol > bv or (viol == bv and waste > bw):
                    break
            if viol < bv or (viol == bv and waste < bw):
                bv = viol
                bw = waste
                best[:] = R
                best[last] = lows[last] + k
        # advance the odometer over the leading coordinates
        j = last - 1
        while j >= 0:
            if R[j] < highs[j]:
                R[j] += 1
                break
            R[j] = lows[j]
            j -= 1
        if j < 0:
            break
    return best, bv, bw


@njit(cache=True)
def slot_counts(slots, v):
    s, t = slots.shape
    out = np.zeros((v, t), dtype=np.int64)
    for h in range(s):
        for j in range(t):
            out[slots[h, j] - 1, j] += 1
    return out
