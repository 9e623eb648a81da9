"""Independent oracles and small-graph builders shared by the tests."""

import numpy as np

from disruptsim.corpus import CitationNetwork

#: One line per acceptance criterion, printed in the terminal summary.
ACCEPTANCE_LINES = []


def report(number, ok, detail, status=None):
    status = status or ("PASS" if ok else "FAIL")
    ACCEPTANCE_LINES.append(f"criterion {number}: {status}  {detail}")
    print(ACCEPTANCE_LINES[-1])
    return ok


def random_dag(rng, n_max=50, p=0.2, n_years=None):
    """Random layered DAG: every pair in strictly later year cites with prob ``p``."""
    n = int(rng.integers(1, n_max + 1))
    n_years = n_years or int(rng.integers(1, 10))
    years = np.sort(rng.integers(1, n_years + 1, size=n))
    mask = (years[None, :] < years[:, None]) & (rng.random((n, n)) < p)
    src, dst = np.nonzero(mask)
    return CitationNetwork.from_edges(years, src, dst)


def brute_force_cd(net, p, cw):
    """(N_i, N_j, N_k) by scanning every paper in the window."""
    refs_p = set(net.references(p).tolist())
    tp = int(net.years[p])
    ni = nj = nk = 0
    for q in range(net.n_nodes):
        if not tp < net.years[q] <= tp + cw:
            continue
        rq = set(net.references(q).tolist())
        cites_p = p in rq
        cites_refs = bool(rq & refs_p)
        if cites_p and not cites_refs:
            ni += 1
        elif cites_p and cites_refs:
            nj += 1
        elif cites_refs:
            nk += 1
    return ni, nj, nk


def add_paper(net, year, refs):
    """Copy of ``net`` plus one paper; returns (network, old-id -> new-id map, new id)."""
    years = np.append(net.years, year)
    order = np.argsort(years, kind="stable")
    new_id = np.empty(len(years), dtype=np.int64)
    new_id[order] = np.arange(len(years))
    src, dst = net.edges()
    q = net.n_nodes
    src = np.concatenate([src, np.full(len(refs), q)])
    dst = np.concatenate([dst, np.asarray(refs, dtype=np.int64)])
    out = CitationNetwork.from_edges(years[order], new_id[src], new_id[dst])
    return out, new_id[:q], int(new_id[q])


def star(n_leaves):
    """Hub (year 1) cited by ``n_leaves`` leaves (year 2)."""
    years = [1] + [2] * n_leaves
    return CitationNetwork.from_edges(years, list(range(1, n_leaves + 1)), [0] * n_leaves)


def dummy_ols(y, X, groups):
    """Least squares with explicit group dummy columns (no intercept)."""
    levels, inv = np.unique(groups, return_inverse=True)
    D = np.zeros((len(y), len(levels)))
    D[np.arange(len(y)), inv.ravel()] = 1.0
    A = np.column_stack([X, D])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    return coef[:X.shape[1]], coef[X.shape[1]:]
