# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the loops in ``_pykernels``.

Random draws are consumed in the same order as the Python versions; any
change here must be mirrored there.
"""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint64_t, int64_t, int32_t
from libc.stdlib cimport malloc, free

cnp.import_array()

cdef enum:
    MAX_REJECTS = 32


cdef inline uint64_t _next_u64(uint64_t* s) nogil:
    s[0] += <uint64_t>0x9E3779B97F4A7C15
    cdef uint64_t z = s[0]
    z = (z ^ (z >> 30)) * <uint64_t>0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * <uint64_t>0x94D049BB133111EB
    return z ^ (z >> 31)


cdef inline double _next_double(uint64_t* s) nogil:
    return <double>(_next_u64(s) >> 11) * (1.0 / 9007199254740992.0)


cdef inline int64_t _next_below(uint64_t* s, int64_t n) nogil:
    cdef int64_t i = <int64_t>(_next_double(s) * n)
    if i >= n:
        return n - 1
    return i


cdef inline int64_t _bisect_right(const double* a, int64_t n, double x) nogil:
    cdef int64_t lo = 0, hi = n, mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if x < a[mid]:
            hi = mid
        else:
            lo = mid + 1
    return lo


cdef inline int64_t _lower_bound(const int32_t* a, int64_t lo, int64_t hi, int64_t x) nogil:
    cdef int64_t mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if a[mid] < x:
            lo = mid + 1
        else:
            hi = mid
    return lo


cdef int64_t _exact_draw(uint64_t* s, const double* cum, int64_t pool,
                         const int64_t* mark, int64_t stamp) nogil:
    cdef double resid = 0.0, prev = 0.0, acc = 0.0, w, x
    cdef int64_t i, last = -1
    for i in range(pool):
        if mark[i] != stamp:
            resid += cum[i] - prev
        prev = cum[i]
    x = _next_double(s) * resid
    prev = 0.0
    for i in range(pool):
        w = cum[i] - prev
        prev = cum[i]
        if mark[i] == stamp:
            continue
        last = i
        acc += w
        if acc > x:
            return i
    return last


def fill_references(state, const double[::1] cum, int64_t pool, int64_t start, int64_t stop,
                    const int64_t[::1] offsets, int32_t[::1] targets, double beta):
    cdef uint64_t s = <uint64_t>int(state)
    cdef double total = cum[pool - 1] if pool > 0 else 0.0
    cdef int64_t p, base, k, i, m, tgt, sidx, s0, deg, cand, rejects, idx
    cdef int64_t* mark
    if pool <= 0:
        return int(s)
    mark = <int64_t*>malloc(pool * sizeof(int64_t))
    if mark == NULL:
        raise MemoryError()
    try:
        with nogil:
            for i in range(pool):
                mark[i] = -1
            for p in range(start, stop):
                base = offsets[p]
                k = offsets[p + 1] - base
                if k == 0:
                    continue
                if k >= pool:
                    for i in range(pool):
                        targets[base + i] = <int32_t>i
                    continue
                for m in range(k):
                    tgt = -1
                    if m > 0 and beta > 0.0:
                        if _next_double(&s) < beta:
                            sidx = targets[base + _next_below(&s, m)]
                            s0 = offsets[sidx]
                            deg = offsets[sidx + 1] - s0
                            if deg > 0:
                                cand = targets[s0 + _next_below(&s, deg)]
                                if mark[cand] != p:
                                    tgt = cand
                    rejects = 0
                    while tgt < 0:
                        if rejects >= MAX_REJECTS:
                            tgt = _exact_draw(&s, &cum[0], pool, mark, p)
                            break
                        idx = _bisect_right(&cum[0], pool, _next_double(&s) * total)
                        if idx >= pool:
                            idx = pool - 1
                        if mark[idx] == p:
                            rejects += 1
                        else:
                            tgt = idx
                    mark[tgt] = p
                    targets[base + m] = <int32_t>tgt
    finally:
        free(mark)
    return int(s)


def disruption_counts(const int64_t[::1] out_off, const int32_t[::1] out_tgt,
                      const int64_t[::1] in_off, const int32_t[::1] in_src,
                      const int64_t[::1] lo_ids, const int64_t[::1] hi_ids):
    cdef int64_t n = out_off.shape[0] - 1
    ni_a = np.zeros(n, dtype=np.int64)
    nj_a = np.zeros(n, dtype=np.int64)
    nk_a = np.zeros(n, dtype=np.int64)
    stamp_a = np.full(max(n, 1), -1, dtype=np.int64)
    cdef int64_t[::1] ni = ni_a, nj = nj_a, nk = nk_a, stamp = stamp_a
    cdef int64_t p, e, r, a, b, q, lo, hi, reached, cnt_i, cnt_j
    with nogil:
        for p in range(n):
            lo = lo_ids[p]
            hi = hi_ids[p]
            reached = 0
            for e in range(out_off[p], out_off[p + 1]):
                r = out_tgt[e]
                a = _lower_bound(&in_src[0], in_off[r], in_off[r + 1], lo)
                b = in_off[r + 1]
                while a < b:
                    q = in_src[a]
                    if q >= hi:
                        break
                    if stamp[q] != p:
                        stamp[q] = p
                        reached += 1
                    a += 1
            cnt_i = 0
            cnt_j = 0
            for e in range(in_off[p], in_off[p + 1]):
                q = in_src[e]
                if q < lo:
                    continue
                if q >= hi:
                    break
                if stamp[q] == p:
                    cnt_j += 1
                else:
                    cnt_i += 1
            ni[p] = cnt_i
            nj[p] = cnt_j
            nk[p] = reached - cnt_j
    return ni_a, nj_a, nk_a


cdef inline bint _has_edge(const int64_t* off, const int32_t* tgt, int64_t a, int64_t b) nogil:
    cdef int64_t e
    for e in range(off[a], off[a + 1]):
        if tgt[e] == b:
            return True
    return False


def double_edge_swaps(state, const int32_t[::1] src, const int64_t[::1] out_off,
                      int32_t[::1] out_tgt, const int64_t[::1] years, int64_t attempts):
    cdef uint64_t s = <uint64_t>int(state)
    cdef int64_t m = out_tgt.shape[0]
    cdef int64_t it, e1, e2, a, b, c, d, accepted = 0
    if m < 2:
        return int(s), 0
    with nogil:
        for it in range(attempts):
            e1 = _next_below(&s, m)
            e2 = _next_below(&s, m)
            if e1 == e2:
                continue
            a = src[e1]
            b = out_tgt[e1]
            c = src[e2]
            d = out_tgt[e2]
            if a == c or b == d:
                continue
            if not (years[d] < years[a] and years[b] < years[c]):
                continue
            if _has_edge(&out_off[0], &out_tgt[0], a, d) or _has_edge(&out_off[0], &out_tgt[0], c, b):
                continue
            out_tgt[e1] = <int32_t>d
            out_tgt[e2] = <int32_t>b
            accepted += 1
    return int(s), accepted


def splitmix_sequence(state, Py_ssize_t count):
    """First ``count`` outputs of the generator seeded with ``state``."""
    cdef uint64_t s = <uint64_t>int(state)
    return [_next_u64(&s) for _ in range(count)]
