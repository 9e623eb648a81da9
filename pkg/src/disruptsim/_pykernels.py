"""Pure-Python implementations of the hot loops.

Every function here has a twin in ``_ckernels.pyx`` that consumes the random
stream in exactly the same order, so both backends produce identical output
for a given seed. Keep the two files in lockstep.
"""

from bisect import bisect_right

import numpy as np

MASK64 = 0xFFFFFFFFFFFFFFFF
_INV_2_53 = 1.0 / 9007199254740992.0

#: Consecutive duplicate draws tolerated before switching to exact sampling
#: over the not-yet-selected pool.
MAX_REJECTS = 32


class SplitMix64:
    """The splitmix64 generator; state is a single unsigned 64-bit int."""

    __slots__ = ("state",)

    def __init__(self, seed):
        self.state = int(seed) & MASK64

    def next_u64(self):
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def next_double(self):
        return (self.next_u64() >> 11) * _INV_2_53

    def next_below(self, n):
        i = int(self.next_double() * n)
        return n - 1 if i >= n else i


def fill_references(state, cum, pool, start, stop, offsets, targets, beta):
    """Draw reference lists for nodes ``start..stop-1`` from ``0..pool-1``.

    ``cum`` is the cumulative direct-citation weight of the pool. Each node
    gets ``offsets[p+1] - offsets[p]`` distinct targets, written in selection
    order into ``targets``. Returns the advanced generator state.
    """
    rng = SplitMix64(0)
    rng.state = int(state)
    cum_l = cum[:pool].tolist()
    total = cum_l[pool - 1] if pool > 0 else 0.0
    for p in range(start, stop):
        base = int(offsets[p])
        k = int(offsets[p + 1]) - base
        if k == 0:
            continue
        if k >= pool:
            for i in range(pool):
                targets[base + i] = i
            continue
        sel = []
        chosen = set()
        for _ in range(k):
            tgt = -1
            m = len(sel)
            if m > 0 and beta > 0.0:
                if rng.next_double() < beta:
                    s = sel[rng.next_below(m)]
                    s0 = int(offsets[s])
                    deg = int(offsets[s + 1]) - s0
                    if deg > 0:
                        cand = int(targets[s0 + rng.next_below(deg)])
                        if cand not in chosen:
                            tgt = cand
            rejects = 0
            while tgt < 0:
                if rejects >= MAX_REJECTS:
                    tgt = _exact_draw(rng, cum_l, pool, chosen)
                    break
                x = rng.next_double() * total
                idx = bisect_right(cum_l, x)
                if idx >= pool:
                    idx = pool - 1
                if idx in chosen:
                    rejects += 1
                else:
                    tgt = idx
            sel.append(tgt)
            chosen.add(tgt)
            targets[base + m] = tgt
    return rng.state


def _exact_draw(rng, cum_l, pool, chosen):
    resid = 0.0
    prev = 0.0
    for i in range(pool):
        if i not in chosen:
            resid += cum_l[i] - prev
        prev = cum_l[i]
    x = rng.next_double() * resid
    acc = 0.0
    last = -1
    prev = 0.0
    for i in range(pool):
        w = cum_l[i] - prev
        prev = cum_l[i]
        if i in chosen:
            continue
        last = i
        acc += w
        if acc > x:
            return i
    return last


def disruption_counts(out_off, out_tgt, in_off, in_src, lo_ids, hi_ids):
    """N_i, N_j, N_k for every node.

    The citing universe of node ``p`` is the id range ``[lo_ids[p], hi_ids[p])``;
    in-adjacency rows must be sorted ascending.
    """
    n = len(out_off) - 1
    ni = np.zeros(n, dtype=np.int64)
    nj = np.zeros(n, dtype=np.int64)
    nk = np.zeros(n, dtype=np.int64)
    for p in range(n):
        ni[p], nj[p], nk[p] = disruption_counts_one(
            p, out_off, out_tgt, in_off, in_src, int(lo_ids[p]), int(hi_ids[p]))
    return ni, nj, nk


def disruption_counts_one(p, out_off, out_tgt, in_off, in_src, lo, hi):
    citers = in_src[in_off[p]:in_off[p + 1]]
    citers = citers[(citers >= lo) & (citers < hi)]
    reached = set()
    for r in out_tgt[out_off[p]:out_off[p + 1]].tolist():
        seg = in_src[in_off[r]:in_off[r + 1]]
        a, b = np.searchsorted(seg, (lo, hi))
        if b > a:
            reached.update(seg[a:b].tolist())
    nj = sum(1 for q in citers.tolist() if q in reached)
    return len(citers) - nj, nj, len(reached) - nj


def double_edge_swaps(state, src, out_off, out_tgt, years, attempts):
    """Time-respecting double-edge swaps, in place on ``out_tgt``.

    Returns ``(state, accepted)``.
    """
    rng = SplitMix64(0)
    rng.state = int(state)
    m = len(out_tgt)
    accepted = 0
    if m < 2:
        return rng.state, 0
    for _ in range(attempts):
        e1 = rng.next_below(m)
        e2 = rng.next_below(m)
        if e1 == e2:
            continue
        a = int(src[e1]); b = int(out_tgt[e1])
        c = int(src[e2]); d = int(out_tgt[e2])
        if a == c or b == d:
            continue
        if not (years[d] < years[a] and years[b] < years[c]):
            continue
        if _has_edge(out_off, out_tgt, a, d) or _has_edge(out_off, out_tgt, c, b):
            continue
        out_tgt[e1] = d
        out_tgt[e2] = b
        accepted += 1
    return rng.state, accepted


def _has_edge(out_off, out_tgt, a, b):
    for e in range(int(out_off[a]), int(out_off[a + 1])):
        if out_tgt[e] == b:
            return True
    return False


def splitmix_sequence(state, count):
    """First ``count`` outputs of the generator seeded with ``state``."""
    rng = SplitMix64(state)
    return [rng.next_u64() for _ in range(count)]
