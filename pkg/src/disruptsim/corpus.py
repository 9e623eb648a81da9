"""Citation-graph data model, CSV ingestion/emission and sample filters.

A :class:`CitationNetwork` stores both adjacency directions in compressed
sparse row form. Node ids are dense (``0..N-1``) and sorted by publication
year, so the set of papers published in a year range is a contiguous id
range; the disruption kernels rely on this.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

log = logging.getLogger(__name__)

#: In-memory encoding of an absent optional integer field.
MISSING = -1

NODE_COLUMNS = ("id", "year", "journal_id", "team_size", "group_label")
EDGE_COLUMNS = ("citing_id", "cited_id")


class CorpusError(ValueError):
    """Base class for ingestion and filtering errors."""


class MalformedRow(CorpusError):
    pass


class UnknownId(CorpusError):
    pass


class YearOrderViolation(CorpusError):
    pass


class DuplicateEdge(CorpusError):
    pass


class MissingMetadata(CorpusError):
    pass


@dataclass(frozen=True)
class PaperNode:
    id: int
    year: int
    journal_id: int | None = None
    team_size: int | None = None
    group_label: int | None = None


def _opt(v):
    v = int(v)
    return None if v == MISSING else v


def _csr(rows, cols, n):
    """CSR offsets and column array with rows sorted, then columns sorted."""
    order = np.lexsort((cols, rows))
    counts = np.bincount(rows, minlength=n) if n else np.zeros(0, np.int64)
    offsets = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=offsets[1:])
    return offsets, np.ascontiguousarray(cols[order], dtype=np.int32)


def _readonly(a):
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class CitationNetwork:
    """Immutable citation DAG with per-node metadata.

    Use :meth:`from_edges` rather than the raw constructor.
    """

    years: np.ndarray
    out_offsets: np.ndarray
    out_targets: np.ndarray
    in_offsets: np.ndarray
    in_sources: np.ndarray
    journal_id: np.ndarray
    team_size: np.ndarray
    group_label: np.ndarray
    source_ids: np.ndarray | None = None
    info: dict = field(default_factory=dict)

    @classmethod
    def from_edges(cls, years, citing, cited, journal_id=None, team_size=None,
                   group_label=None, source_ids=None, info=None, validate=True):
        years = np.asarray(years, dtype=np.int64)
        n = len(years)
        citing = np.asarray(citing, dtype=np.int64).ravel()
        cited = np.asarray(cited, dtype=np.int64).ravel()
        if citing.shape != cited.shape:
            raise ValueError("citing and cited must have equal length")

        def meta(a):
            if a is None:
                return np.full(n, MISSING, dtype=np.int64)
            a = np.asarray(a, dtype=np.int64)
            if a.shape != (n,):
                raise ValueError("metadata arrays must have one entry per node")
            return a.copy()

        journal_id, team_size, group_label = map(meta, (journal_id, team_size, group_label))
        if validate:
            if n and np.any(np.diff(years) < 0):
                raise ValueError("node ids must be sorted by year")
            if np.any((team_size != MISSING) & (team_size < 1)):
                raise ValueError("team_size must be >= 1 when present")
            if len(citing):
                if citing.min() < 0 or cited.min() < 0 or max(citing.max(), cited.max()) >= n:
                    raise UnknownId("edge endpoint outside 0..N-1")
                bad = np.flatnonzero(years[cited] >= years[citing])
                if len(bad):
                    i = bad[0]
                    raise YearOrderViolation(
                        f"edge {i}: {citing[i]} (year {years[citing[i]]}) cites "
                        f"{cited[i]} (year {years[cited[i]]})")
                key = citing * n + cited
                uk, counts = np.unique(key, return_counts=True)
                if np.any(counts > 1):
                    k = uk[counts > 1][0]
                    raise DuplicateEdge(f"duplicate edge {k // n} -> {k % n}")

        out_off, out_tgt = _csr(citing, cited, n)
        in_off, in_src = _csr(cited, citing, n)
        arrays = [years.copy(), out_off, out_tgt, in_off, in_src, journal_id, team_size, group_label]
        arrays = [_readonly(a) for a in arrays]
        if source_ids is not None:
            source_ids = _readonly(np.asarray(source_ids, dtype=np.int64).copy())
        return cls(*arrays, source_ids=source_ids, info=dict(info or {}))

    @classmethod
    def empty(cls):
        return cls.from_edges(np.zeros(0, np.int64), [], [])

    @property
    def n_nodes(self):
        return len(self.years)

    @property
    def n_edges(self):
        return len(self.out_targets)

    def __len__(self):
        return self.n_nodes

    def references(self, p):
        return self.out_targets[self.out_offsets[p]:self.out_offsets[p + 1]]

    def citers(self, p):
        return self.in_sources[self.in_offsets[p]:self.in_offsets[p + 1]]

    @property
    def out_degree(self):
        return np.diff(self.out_offsets)

    @property
    def in_degree(self):
        return np.diff(self.in_offsets)

    def edge_sources(self):
        """Citing id of every entry of ``out_targets``."""
        return np.repeat(np.arange(self.n_nodes, dtype=np.int32), self.out_degree)

    def edges(self):
        """``(citing, cited)`` arrays in canonical (sorted) order."""
        return self.edge_sources(), self.out_targets.copy()

    def node(self, p):
        return PaperNode(int(p), int(self.years[p]), _opt(self.journal_id[p]),
                         _opt(self.team_size[p]), _opt(self.group_label[p]))

    def first_id_after(self, year):
        """Smallest id whose year is strictly greater than ``year`` (vectorised)."""
        return np.searchsorted(self.years, year, side="right")

    def same_edges(self, other):
        return (np.array_equal(self.out_offsets, other.out_offsets)
                and np.array_equal(self.out_targets, other.out_targets))

    def with_targets(self, out_targets, info=None):
        """New network with the same nodes and out-degrees but new targets."""
        src = self.edge_sources()
        return CitationNetwork.from_edges(
            self.years, src, out_targets, self.journal_id, self.team_size,
            self.group_label, self.source_ids, info=info)


# ---------------------------------------------------------------- ingestion

def _int_column(df, col, path, required):
    raw = df[col].str.strip()
    empty = raw == ""
    if required and empty.any():
        row = int(np.flatnonzero(empty.to_numpy())[0])
        raise MalformedRow(f"{path}: line {row + 2}: empty {col}")
    vals = pd.to_numeric(raw.where(~empty, None), errors="coerce")
    bad = vals.isna() & ~empty
    if bad.any():
        row = int(np.flatnonzero(bad.to_numpy())[0])
        raise MalformedRow(f"{path}: line {row + 2}: bad integer {df[col].iloc[row]!r} in {col}")
    frac = vals.notna() & (vals != vals.round())
    if frac.any():
        row = int(np.flatnonzero(frac.to_numpy())[0])
        raise MalformedRow(f"{path}: line {row + 2}: bad integer {df[col].iloc[row]!r} in {col}")
    return vals.fillna(MISSING).astype(np.int64).to_numpy()


def _read_table(path, columns):
    try:
        df = pd.read_csv(path, dtype=str, keep_default_na=False, na_filter=False)
    except pd.errors.ParserError as exc:
        raise MalformedRow(f"{path}: {exc}") from exc
    except pd.errors.EmptyDataError as exc:
        raise MalformedRow(f"{path}: missing header") from exc
    missing = [c for c in columns if c not in df.columns]
    if missing:
        raise MalformedRow(f"{path}: missing column(s) {', '.join(missing)}")
    return df


def load_corpus(nodes_path, edges_path, strict=False):
    """Read ``nodes.csv``/``edges.csv`` into a validated network.

    Edges that cite a same-or-later-year paper, and repeated edges, are
    dropped with a warning; with ``strict=True`` they raise instead.
    Sparse or unsorted input ids are remapped to dense year-sorted ids; the
    original ids are kept in ``net.source_ids``.
    """
    nodes = _read_table(nodes_path, ("id", "year"))
    for c in NODE_COLUMNS[2:]:
        if c not in nodes.columns:
            nodes[c] = ""
    ids = _int_column(nodes, "id", nodes_path, True)
    years = _int_column(nodes, "year", nodes_path, True)
    journal = _int_column(nodes, "journal_id", nodes_path, False)
    team = _int_column(nodes, "team_size", nodes_path, False)
    group = _int_column(nodes, "group_label", nodes_path, False)
    if np.any((team < 1) & (team != MISSING)):
        row = int(np.flatnonzero((team < 1) & (team != MISSING))[0])
        raise MalformedRow(f"{nodes_path}: line {row + 2}: team_size must be >= 1")
    for name, col in (("journal_id", journal), ("group_label", group)):
        if np.any((col < 0) & (col != MISSING)):
            row = int(np.flatnonzero((col < 0) & (col != MISSING))[0])
            raise MalformedRow(f"{nodes_path}: line {row + 2}: {name} must be non-negative")
    uniq, counts = np.unique(ids, return_counts=True)
    if np.any(counts > 1):
        raise MalformedRow(f"{nodes_path}: duplicate node id {uniq[counts > 1][0]}")

    n = len(ids)
    order = np.lexsort((ids, years))
    dense = np.array_equal(ids[order], np.arange(n))
    source_ids = None if dense else ids[order]
    new_of_sorted = np.empty(n, dtype=np.int64)
    new_of_sorted[order] = np.arange(n)
    sorted_ids_order = np.argsort(ids, kind="stable")
    sorted_ids = ids[sorted_ids_order]

    edges = _read_table(edges_path, EDGE_COLUMNS)
    citing_raw = _int_column(edges, "citing_id", edges_path, True)
    cited_raw = _int_column(edges, "cited_id", edges_path, True)

    def remap(raw, col):
        pos = np.searchsorted(sorted_ids, raw)
        pos_c = np.minimum(pos, max(n - 1, 0))
        ok = (pos < n) & (sorted_ids[pos_c] == raw) if n else np.zeros(len(raw), bool)
        if not np.all(ok):
            row = int(np.flatnonzero(~ok)[0])
            raise UnknownId(f"{edges_path}: line {row + 2}: unknown {col} {raw[row]}")
        return new_of_sorted[sorted_ids_order[pos]]

    citing = remap(citing_raw, "citing_id")
    cited = remap(cited_raw, "cited_id")
    years_sorted = years[order]

    keep = np.ones(len(citing), dtype=bool)
    viol = np.flatnonzero(years_sorted[cited] >= years_sorted[citing])
    if len(viol):
        if strict:
            row = int(viol[0])
            raise YearOrderViolation(
                f"{edges_path}: line {row + 2}: {citing_raw[row]} (year "
                f"{years_sorted[citing[row]]}) cites {cited_raw[row]} "
                f"(year {years_sorted[cited[row]]})")
        keep[viol] = False
    key = citing * max(n, 1) + cited
    _, first = np.unique(key, return_index=True)
    dup = np.ones(len(key), dtype=bool)
    dup[first] = False
    dup_rows = np.flatnonzero(dup)
    if len(dup_rows):
        if strict:
            row = int(dup_rows[0])
            raise DuplicateEdge(f"{edges_path}: line {row + 2}: repeated edge "
                                f"{citing_raw[row]} -> {cited_raw[row]}")
        keep[dup_rows] = False
    dropped_year = len(viol)
    dropped_dup = int(np.count_nonzero(dup & (years_sorted[cited] < years_sorted[citing])))
    if dropped_year or dropped_dup:
        warnings.warn(f"dropped {dropped_year} year-order violations and "
                      f"{dropped_dup} duplicate edges while loading {edges_path}",
                      stacklevel=2)
    info = {"dropped_year_order": int(dropped_year), "dropped_duplicates": dropped_dup,
            "remapped": source_ids is not None}
    return CitationNetwork.from_edges(
        years_sorted, citing[keep], cited[keep], journal[order], team[order],
        group[order], source_ids=source_ids, info=info)


def _fmt_opt(a):
    s = a.astype(str).astype(object)
    s[a == MISSING] = ""
    return s


def write_corpus(net, nodes_path, edges_path):
    """Write ``net`` as ``nodes.csv``/``edges.csv`` (dense ids, sorted edges)."""
    nodes = pd.DataFrame({
        "id": np.arange(net.n_nodes),
        "year": net.years,
        "journal_id": _fmt_opt(net.journal_id),
        "team_size": _fmt_opt(net.team_size),
        "group_label": _fmt_opt(net.group_label),
    }, columns=list(NODE_COLUMNS))
    src, tgt = net.edges()
    edges = pd.DataFrame({"citing_id": src, "cited_id": tgt}, columns=list(EDGE_COLUMNS))
    Path(nodes_path).parent.mkdir(parents=True, exist_ok=True)
    Path(edges_path).parent.mkdir(parents=True, exist_ok=True)
    nodes.to_csv(nodes_path, index=False, lineterminator="\n", encoding="utf-8")
    edges.to_csv(edges_path, index=False, lineterminator="\n", encoding="utf-8")


def write_id_map(net, path):
    """Dense-id to input-id table; only meaningful after a remapping load."""
    src = net.source_ids if net.source_ids is not None else np.arange(net.n_nodes)
    pd.DataFrame({"id": np.arange(net.n_nodes), "source_id": src}).to_csv(
        path, index=False, lineterminator="\n")


# ---------------------------------------------------------------- filtering

@dataclass(frozen=True)
class CorpusFilter:
    """Inclusive bounds on r_p, k_p, c_{p,CW} and |NormCD|.

    Any bound set to ``None`` disables that criterion. The defaults are the
    research-article selection used for the 1995-2015 journal analysis.
    """

    r_min: int | None = 10
    r_max: int | None = 200
    k_min: int | None = 1
    k_max: int | None = 25
    c_min: int | None = 1
    c_max: int | None = 1000
    normcd_abs_max: float | None = 5.0

    def __post_init__(self):
        for lo, hi in ((self.r_min, self.r_max), (self.k_min, self.k_max),
                       (self.c_min, self.c_max)):
            if lo is not None and hi is not None and lo > hi:
                raise ValueError(f"filter bound {lo} > {hi}")
        if self.normcd_abs_max is not None and not self.normcd_abs_max > 0:
            raise ValueError("normcd_abs_max must be positive")


@dataclass(frozen=True)
class FilterResult:
    retained: frozenset
    excluded: dict  # criterion -> number of papers failing it

    def __len__(self):
        return len(self.retained)


def _outside(v, lo, hi):
    bad = np.zeros(len(v), dtype=bool)
    if lo is not None:
        bad |= v < lo
    if hi is not None:
        bad |= v > hi
    return bad


def filter_corpus(net, cd_table, normcd=None, f=CorpusFilter(), papers=None):
    """Apply the sample-selection bounds; see :class:`CorpusFilter`.

    ``cd_table`` is a sequence of records with ``paper_id`` and ``c_cw``;
    papers without a record count as uncited. ``normcd`` is an optional
    per-paper array (NaN = undefined) checked only when supplied, and a
    paper with undefined NormCD then fails that criterion. A paper failing
    several criteria is counted under each of them in ``excluded``.
    ``papers`` restricts the candidates (e.g. to one journal's articles);
    by default every paper in ``net`` is a candidate.
    """
    n = net.n_nodes
    cand = np.ones(n, dtype=bool)
    if papers is not None:
        cand[:] = False
        cand[np.asarray(list(papers), dtype=np.int64)] = True
    c = np.zeros(n, dtype=np.int64)
    for rec in cd_table:
        c[rec.paper_id] = rec.c_cw
    fails = {
        "r": _outside(net.out_degree, f.r_min, f.r_max),
        "c": _outside(c, f.c_min, f.c_max),
    }
    if f.k_min is not None or f.k_max is not None:
        k = net.team_size
        if np.any(cand & (k == MISSING)):
            raise MissingMetadata(
                f"team size missing for {int(np.count_nonzero(cand & (k == MISSING)))} papers")
        fails["k"] = _outside(k, f.k_min, f.k_max)
    if normcd is not None and f.normcd_abs_max is not None:
        z = np.asarray(normcd, dtype=float)
        if z.shape != (n,):
            raise ValueError("normcd must have one entry per paper")
        with np.errstate(invalid="ignore"):
            fails["normcd"] = ~(np.abs(z) <= f.normcd_abs_max)
    bad = ~cand
    for v in fails.values():
        bad |= v & cand
    retained = frozenset(np.flatnonzero(~bad).tolist())
    excluded = {k: int(np.count_nonzero(v & cand)) for k, v in fails.items()}
    log.debug("filter retained %d of %d papers: %s", len(retained), n, excluded)
    return FilterResult(retained, excluded)
