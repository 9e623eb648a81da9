"""Windowed disruption index CD, its no-k variant and the extraneous rate R_k.

For a focal paper ``p`` with references ``{r}_p``, the citing universe is
every paper published in ``(t_p, t_p + cw]``. Within it:

* ``N_i``: papers citing ``p`` but none of ``{r}_p``
* ``N_j``: papers citing ``p`` and at least one of ``{r}_p``
* ``N_k``: papers citing at least one of ``{r}_p`` but not ``p``

and ``CD = (N_i - N_j) / (N_i + N_j + N_k) = CD_nok / (1 + R_k)``.
"""

from __future__ import annotations

from collections import namedtuple
from dataclasses import dataclass

import numpy as np

from . import _pykernels
from ._backend import kernels
from .corpus import MISSING, CorpusError


class MissingJournal(CorpusError):
    pass


@dataclass(frozen=True)
class DisruptionRecord:
    paper_id: int
    cw: int
    n_i: int
    n_j: int
    n_k: int

    @property
    def c_cw(self):
        return self.n_i + self.n_j

    @property
    def cd(self):
        return (self.n_i - self.n_j) / (self.n_i + self.n_j + self.n_k)

    @property
    def cd_nok(self):
        return (self.n_i - self.n_j) / (self.n_i + self.n_j)

    @property
    def r_k(self):
        return self.n_k / (self.n_i + self.n_j)


#: Column-oriented counts for every paper (undefined CD where ``c_cw == 0``).
CDArrays = namedtuple("CDArrays", "cw n_i n_j n_k")


def _window_bounds(net, cw):
    lo = net.first_id_after(net.years)
    hi = net.first_id_after(net.years + cw)
    return lo.astype(np.int64), hi.astype(np.int64)


def _check_cw(cw):
    if int(cw) != cw or cw < 1:
        raise ValueError("citation window must be a positive integer")
    return int(cw)


def cd_arrays(net, cw):
    """N_i, N_j, N_k for every paper as int64 arrays."""
    cw = _check_cw(cw)
    if net.n_nodes == 0:
        z = np.zeros(0, dtype=np.int64)
        return CDArrays(cw, z, z, z)
    lo, hi = _window_bounds(net, cw)
    ni, nj, nk = kernels.disruption_counts(
        net.out_offsets, net.out_targets, net.in_offsets, net.in_sources, lo, hi)
    return CDArrays(cw, ni, nj, nk)


def compute_cd(net, p, cw):
    """Disruption record of paper ``p``, or ``None`` when uncited in the window."""
    cw = _check_cw(cw)
    t = net.years[p]
    lo = int(net.first_id_after(t))
    hi = int(net.first_id_after(t + cw))
    ni, nj, nk = _pykernels.disruption_counts_one(
        int(p), net.out_offsets, net.out_targets, net.in_offsets, net.in_sources, lo, hi)
    if ni + nj == 0:
        return None
    return DisruptionRecord(int(p), cw, int(ni), int(nj), int(nk))


def records_from_arrays(arr):
    ids = np.flatnonzero(arr.n_i + arr.n_j > 0)
    return [DisruptionRecord(int(p), arr.cw, int(arr.n_i[p]), int(arr.n_j[p]), int(arr.n_k[p]))
            for p in ids]


def compute_cd_all(net, cw):
    """Records for every paper with at least one citation in the window."""
    return records_from_arrays(cd_arrays(net, cw))


def cd_values(arr):
    """``(ids, cd, cd_nok, r_k)`` over papers with defined CD."""
    c = arr.n_i + arr.n_j
    ids = np.flatnonzero(c > 0)
    num = (arr.n_i - arr.n_j)[ids].astype(float)
    den = c[ids].astype(float)
    return ids, num / (den + arr.n_k[ids]), num / den, arr.n_k[ids] / den


@dataclass(frozen=True)
class YearlySeries:
    """Per-year mean of a record quantity; ``count`` is the papers averaged."""

    years: np.ndarray
    mean: np.ndarray
    count: np.ndarray

    def as_dict(self):
        return {int(t): float(v) for t, v in zip(self.years, self.mean)}


def yearly_mean(years, values):
    """Arithmetic mean of ``values`` grouped by ``years`` (ascending)."""
    years = np.asarray(years)
    values = np.asarray(values, dtype=float)
    if len(years) == 0:
        e = np.zeros(0)
        return YearlySeries(e.astype(np.int64), e, e.astype(np.int64))
    uy, inv = np.unique(years, return_inverse=True)
    s = np.bincount(inv, weights=values)
    c = np.bincount(inv)
    return YearlySeries(uy, s / c, c)


def _records_columns(records):
    ids = np.fromiter((r.paper_id for r in records), dtype=np.int64, count=len(records))
    return ids


def mean_cd_by_year(records, net):
    if isinstance(records, CDArrays):
        ids, cd, _, _ = cd_values(records)
        return yearly_mean(net.years[ids], cd)
    ids = _records_columns(records)
    return yearly_mean(net.years[ids], [r.cd for r in records])


def mean_rk_by_year(records, net):
    if isinstance(records, CDArrays):
        ids, _, _, rk = cd_values(records)
        return yearly_mean(net.years[ids], rk)
    ids = _records_columns(records)
    return yearly_mean(net.years[ids], [r.r_k for r in records])


@dataclass(frozen=True)
class NormalizationTable:
    """(journal, year) -> mean, sample sd and size of the CD distribution."""

    journal_id: np.ndarray
    year: np.ndarray
    mean: np.ndarray
    sd: np.ndarray
    count: np.ndarray
    ddof: int = 1

    def __len__(self):
        return len(self.mean)

    def lookup(self, journal_id, year):
        hit = np.flatnonzero((self.journal_id == journal_id) & (self.year == year))
        if not len(hit):
            raise KeyError((journal_id, year))
        i = hit[0]
        return {"mean": float(self.mean[i]), "sd": float(self.sd[i]), "count": int(self.count[i])}


def normalize_values(journal, year, cd, ddof=1):
    """Journal-year z-scores of ``cd``; NaN in cells of size < 2 or zero sd."""
    journal = np.asarray(journal, dtype=np.int64)
    year = np.asarray(year, dtype=np.int64)
    cd = np.asarray(cd, dtype=float)
    if len(cd) == 0:
        e = np.zeros(0)
        ei = e.astype(np.int64)
        return e, NormalizationTable(ei, ei, e, e, ei, ddof)
    cells, inv = np.unique(np.stack([journal, year], axis=1), axis=0, return_inverse=True)
    inv = inv.ravel()
    count = np.bincount(inv)
    mean = np.bincount(inv, weights=cd) / count
    dev = cd - mean[inv]
    ss = np.bincount(inv, weights=dev * dev)
    with np.errstate(invalid="ignore", divide="ignore"):
        sd = np.where(count > ddof, np.sqrt(ss / np.maximum(count - ddof, 1)), 0.0)
    # identical values can leave float dust in ss
    sd[sd <= 1e-12 * np.maximum(1.0, np.abs(mean))] = 0.0
    ok = (count >= 2) & (sd > 0)
    z = np.full(len(cd), np.nan)
    good = ok[inv]
    z[good] = dev[good] / sd[inv][good]
    table = NormalizationTable(cells[:, 0], cells[:, 1], mean, sd, count, ddof)
    return z, table


def normalize_cd(records, net):
    """Per-record NormCD (NaN where undefined) and the normalization table."""
    if isinstance(records, CDArrays):
        ids, cd, _, _ = cd_values(records)
    else:
        ids = _records_columns(records)
        cd = np.array([r.cd for r in records], dtype=float)
    journal = net.journal_id[ids]
    if np.any(journal == MISSING):
        raise MissingJournal(
            f"journal_id missing for {int(np.count_nonzero(journal == MISSING))} papers with records")
    return normalize_values(journal, net.years[ids], cd)
