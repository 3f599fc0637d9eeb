"""Compiled DPLL search loop.

Counter-based clause bookkeeping (satisfied-literal and false-literal
counts per clause) with chronological backtracking.  All assignments,
including branch literals, go through one queue; the branch literal at the
head of the queue after a decision or a flip is not counted as a
propagation.
"""

import numpy as np
from numba import njit

SAT = 1
UNSAT = 0
LIMIT = 2

STATIC_MIN_INDEX = 0
JEROSLOW_WANG = 1
RANDOM = 2


@njit(cache=True)
def _lit_index(lit):
    if lit > 0:
        return 2 * lit
    return -2 * lit + 1


@njit(cache=True)
def dpll(n, raw_lits, raw_starts, heuristic, first_phase, decision_limit, seed):
    """Returns (status, decisions, propagations, assignment array)."""
    m = raw_starts.shape[0] - 1
    assign = np.full(n + 1, -1, np.int8)

    # drop repeated literals inside a clause
    nl = 2 * (n + 1)
    stamp = np.full(nl, -1, np.int64)
    lits = np.empty(raw_lits.shape[0], np.int32)
    starts = np.zeros(m + 1, np.int64)
    pos = 0
    for c in range(m):
        for j in range(raw_starts[c], raw_starts[c + 1]):
            li = _lit_index(raw_lits[j])
            if stamp[li] != c:
                stamp[li] = c
                lits[pos] = raw_lits[j]
                pos += 1
        starts[c + 1] = pos

    clen = np.empty(m, np.int64)
    for c in range(m):
        clen[c] = starts[c + 1] - starts[c]
        if clen[c] == 0:
            return UNSAT, 0, 0, assign

    occ_start = np.zeros(nl + 1, np.int64)
    for j in range(pos):
        occ_start[_lit_index(lits[j]) + 1] += 1
    for i in range(nl):
        occ_start[i + 1] += occ_start[i]
    fill = occ_start[:-1].copy()
    occ = np.empty(pos, np.int64)
    for c in range(m):
        for j in range(starts[c], starts[c + 1]):
            li = _lit_index(lits[j])
            occ[fill[li]] = c
            fill[li] += 1

    satc = np.zeros(m, np.int64)
    falsec = np.zeros(m, np.int64)
    nsat = 0

    trail = np.empty(n + 1, np.int64)
    tlen = 0
    queue = np.empty(m + 2, np.int64)
    qh = 0
    qt = 0
    dlit = np.empty(n + 1, np.int64)
    dflipped = np.zeros(n + 1, np.bool_)
    dtrail = np.empty(n + 1, np.int64)
    dtop = 0

    scores = np.zeros(nl, np.float64)
    rstate = np.uint64(seed) ^ np.uint64(0x9E3779B97F4A7C15)
    if rstate == 0:
        rstate = np.uint64(1)

    decisions = 0
    props = 0
    uncounted = False
    status = -1

    for c in range(m):
        if clen[c] == 1:
            queue[qt] = lits[starts[c]]
            qt += 1

    while True:
        conflict = False
        while qh < qt:
            lit = queue[qh]
            qh += 1
            v = abs(lit)
            val = 1 if lit > 0 else 0
            if assign[v] != -1:
                if assign[v] != val:
                    conflict = True
                    break
                continue
            if uncounted:
                uncounted = False
            else:
                props += 1
            assign[v] = val
            trail[tlen] = v
            tlen += 1
            li = _lit_index(lit)
            for j in range(occ_start[li], occ_start[li + 1]):
                c = occ[j]
                satc[c] += 1
                if satc[c] == 1:
                    nsat += 1
            li = _lit_index(-lit)
            for j in range(occ_start[li], occ_start[li + 1]):
                c = occ[j]
                falsec[c] += 1
                if satc[c] == 0:
                    if falsec[c] == clen[c]:
                        conflict = True
                    elif falsec[c] == clen[c] - 1 and not conflict:
                        for k in range(starts[c], starts[c + 1]):
                            if assign[abs(lits[k])] == -1:
                                queue[qt] = lits[k]
                                qt += 1
                                break
            if conflict:
                break

        if conflict:
            qh = 0
            qt = 0
            uncounted = False
            while dtop > 0 and dflipped[dtop - 1]:
                dtop -= 1
            if dtop == 0:
                status = UNSAT
                break
            f = dtop - 1
            while tlen > dtrail[f]:
                tlen -= 1
                v = trail[tlen]
                lit = v if assign[v] == 1 else -v
                li = _lit_index(lit)
                for j in range(occ_start[li], occ_start[li + 1]):
                    c = occ[j]
                    satc[c] -= 1
                    if satc[c] == 0:
                        nsat -= 1
                li = _lit_index(-lit)
                for j in range(occ_start[li], occ_start[li + 1]):
                    falsec[occ[j]] -= 1
                assign[v] = -1
            dflipped[f] = True
            queue[0] = -dlit[f]
            qt = 1
            uncounted = True
            continue

        if nsat == m:
            status = SAT
            break
        if decision_limit >= 0 and decisions >= decision_limit:
            status = LIMIT
            break

        branch = 0
        if heuristic == JEROSLOW_WANG:
            scores[:] = 0.0
            for c in range(m):
                if satc[c] == 0:
                    w = 1.0 / (2.0 ** (clen[c] - falsec[c]))
                    for k in range(starts[c], starts[c + 1]):
                        if assign[abs(lits[k])] == -1:
                            scores[_lit_index(lits[k])] += w
            best = -1.0
            for v in range(1, n + 1):
                if assign[v] != -1:
                    continue
                if first_phase:
                    a, b = v, -v
                else:
                    a, b = -v, v
                if scores[_lit_index(a)] > best:
                    best = scores[_lit_index(a)]
                    branch = a
                if scores[_lit_index(b)] > best:
                    best = scores[_lit_index(b)]
                    branch = b
        elif heuristic == RANDOM:
            free = 0
            for v in range(1, n + 1):
                if assign[v] == -1:
                    free += 1
            rstate ^= rstate << np.uint64(13)
            rstate ^= rstate >> np.uint64(7)
            rstate ^= rstate << np.uint64(17)
            r = np.int64(rstate % np.uint64(free))
            for v in range(1, n + 1):
                if assign[v] == -1:
                    if r == 0:
                        branch = v if first_phase else -v
                        break
                    r -= 1
        else:
            for v in range(1, n + 1):
                if assign[v] == -1:
                    branch = v if first_phase else -v
                    break

        decisions += 1
        dlit[dtop] = branch
        dflipped[dtop] = False
        dtrail[dtop] = tlen
        dtop += 1
        queue[0] = branch
        qh = 0
        qt = 1
        uncounted = True

    return status, decisions, props, assign
