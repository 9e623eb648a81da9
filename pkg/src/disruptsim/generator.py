"""Growth-and-redirection citation network generator.

Each period ``t`` adds ``n(t)`` papers, each citing ``r(t)`` distinct
earlier papers. A reference slot is filled either directly, by sampling a
paper with weight ``(citations + c0) * exp(-age / tau)``, or, with
probability ``beta``, by copying a reference of a paper already on the new
reference list (triadic closure). ``n(t)`` and ``r(t)`` grow exponentially;
reference-list growth can be switched off ("quenched") from a given period.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from ._pykernels import SplitMix64
from .corpus import MISSING, CitationNetwork

_ROUNDING = {"floor": math.floor, "round": lambda x: math.floor(x + 0.5)}


@dataclass(frozen=True)
class GrowthConfig:
    """Generator parameters.

    ``group_share`` and ``group_ref_factor`` are extensions for building
    two-arm synthetic corpora: a ``group_share`` fraction of each cohort gets
    group label 1 and reference lists ``group_ref_factor`` times longer.
    """

    n1: int = 30
    r1: int = 5
    g_n: float = 0.033
    g_r: float = 0.018
    T: int = 150
    T_star: int | None = None
    beta: float = 0.2
    tau: float = 5.0
    c0: float = 5.0
    seed: int = 0
    rounding: str = "floor"
    group_share: float = 0.0
    group_ref_factor: float = 1.0

    def __post_init__(self):
        if self.n1 < 1 or self.r1 < 1 or self.T < 1:
            raise ValueError("n1, r1 and T must be >= 1")
        if self.T_star is not None and not 1 <= self.T_star <= self.T:
            raise ValueError("T_star must lie in [1, T]")
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError("beta must lie in [0, 1]")
        if not self.tau > 0 or not self.c0 > 0:
            raise ValueError("tau and c0 must be positive")
        if self.rounding not in _ROUNDING:
            raise ValueError(f"rounding must be one of {sorted(_ROUNDING)}")
        if not 0.0 <= self.group_share <= 1.0 or self.group_ref_factor <= 0:
            raise ValueError("bad group_share / group_ref_factor")

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def to_dict(self):
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d):
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        d = dict(d)
        if d.get("tau") in ("inf", "Infinity"):
            d["tau"] = math.inf
        return cls(**d)

    def digest(self):
        """Short stable hash of the configuration."""
        blob = json.dumps(self.to_dict(), sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    @property
    def g_c(self):
        """Growth rate of the yearly citation supply n(t) r(t)."""
        return self.g_n + self.g_r


@dataclass(frozen=True)
class GrowthSchedule:
    """Per-period cohort sizes and reference-list lengths, ``t = 1..T``."""

    n: np.ndarray
    r: np.ndarray

    @property
    def periods(self):
        return np.arange(1, len(self.n) + 1)

    def n_at(self, t):
        return int(self.n[t - 1])

    def r_at(self, t):
        return int(self.r[t - 1])

    @property
    def total_nodes(self):
        return int(self.n.sum())

    def pool_sizes(self):
        """Number of papers published before each period."""
        pool = np.zeros(len(self.n), dtype=np.int64)
        np.cumsum(self.n[:-1], out=pool[1:])
        return pool

    def total_edges(self):
        return int((self.n * np.minimum(self.r, self.pool_sizes())).sum())


def build_schedule(cfg):
    rnd = _ROUNDING[cfg.rounding]
    n = np.empty(cfg.T, dtype=np.int64)
    r = np.empty(cfg.T, dtype=np.int64)
    for i in range(cfg.T):
        t = i + 1
        n[i] = max(1, rnd(cfg.n1 * math.exp(cfg.g_n * (t - 1))))
        tr = t if cfg.T_star is None else min(t, cfg.T_star)
        r[i] = max(1, rnd(cfg.r1 * math.exp(cfg.g_r * (tr - 1))))
    return GrowthSchedule(n, r)


def _group_labels(n_t, share):
    """Evenly interleaved 0/1 labels with ``round(share * n_t)`` ones."""
    i = np.arange(n_t)
    return (np.floor((i + 1) * share + 0.5) - np.floor(i * share + 0.5)).astype(np.int64)


def _weights(indeg, years, t, tau, c0):
    w = (indeg + c0) * np.exp(-(t - years) / tau)
    if not w[-1] > 0 or not np.all(np.isfinite(w)):
        w = np.ones_like(w)
    return np.cumsum(w)


def grow(cfg):
    """Grow one network realization; bit-reproducible for a given config."""
    sched = build_schedule(cfg)
    pool = sched.pool_sizes()
    N = sched.total_nodes
    years = np.repeat(sched.periods, sched.n).astype(np.int64)
    if cfg.group_share > 0:
        group = np.concatenate([_group_labels(k, cfg.group_share) for k in sched.n])
    else:
        group = np.full(N, MISSING, dtype=np.int64)
    r_node = np.repeat(sched.r, sched.n)
    if cfg.group_share > 0:
        boosted = np.maximum(1, np.floor(r_node * cfg.group_ref_factor + 0.5)).astype(np.int64)
        r_node = np.where(group == 1, boosted, r_node)
    k_node = np.minimum(r_node, np.repeat(pool, sched.n))
    offsets = np.zeros(N + 1, dtype=np.int64)
    np.cumsum(k_node, out=offsets[1:])
    targets = np.empty(offsets[-1], dtype=np.int32)
    indeg = np.zeros(N, dtype=np.float64)
    state = int(cfg.seed) & 0xFFFFFFFFFFFFFFFF
    for i, t in enumerate(sched.periods):
        start, stop = int(pool[i]), int(pool[i] + sched.n[i])
        if start == 0:
            continue
        cum = _weights(indeg[:start], years[:start], t, cfg.tau, cfg.c0)
        state = kernels.fill_references(state, cum, start, start, stop, offsets, targets, cfg.beta)
        indeg += np.bincount(targets[offsets[start]:offsets[stop]], minlength=N)
    citing = np.repeat(np.arange(N, dtype=np.int64), k_node)
    info = {"config": cfg.to_dict(), "config_hash": cfg.digest(), "seed": cfg.seed}
    return CitationNetwork.from_edges(years, citing, targets, group_label=group,
                                      info=info, validate=False)


def pick_references(net, t, r, rng, beta=0.2, tau=5.0, c0=5.0):
    """Reference list of one new paper published in period ``t``.

    ``net`` holds the papers published so far (all strictly before ``t``);
    ``rng`` is a :class:`SplitMix64` and is advanced in place. Targets are
    returned in selection order.
    """
    pool = net.n_nodes
    if pool == 0:
        return []
    if net.years[-1] >= t:
        raise ValueError("pool must contain only papers published before t")
    k = min(int(r), pool)
    cum = _weights(net.in_degree.astype(np.float64), net.years, t, tau, c0)
    offsets = np.append(np.asarray(net.out_offsets, dtype=np.int64), net.n_edges + k)
    targets = np.empty(net.n_edges + k, dtype=np.int32)
    targets[:net.n_edges] = net.out_targets
    rng.state = kernels.fill_references(rng.state, cum, pool, pool, pool + 1,
                                        offsets, targets, float(beta))
    return targets[net.n_edges:].tolist()


def realization_seeds(base_seed, k):
    return [int(base_seed) + i for i in range(k)]


__all__ = ["GrowthConfig", "GrowthSchedule", "SplitMix64", "build_schedule", "grow",
           "pick_references", "realization_seeds"]
