"""Reproducible pipelines for the quench simulation, the year and team-size
regressions and the two-arm quasi-experiment.

Each ``run_*`` function returns its tables and, given ``out_dir``, writes a
``manifest.json`` before the CSV outputs and finalizes it with their
checksums afterwards.
"""

from __future__ import annotations

import hashlib
import json
import logging
import platform
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from . import __version__
from ._backend import BACKEND
from .corpus import MISSING, CorpusFilter, filter_corpus
from .econometrics import (Factor, RankDeficient, RegressionSpec, Term, decompose_group_gap,
                           fit_spec, marginal_effects)
from .generator import GrowthConfig, build_schedule, grow
from .metrics import cd_arrays, cd_values, normalize_values, records_from_arrays, yearly_mean

log = logging.getLogger(__name__)


# ------------------------------------------------------------------ manifest

def sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def config_hash(obj):
    blob = json.dumps(obj, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


@dataclass
class ExperimentManifest:
    experiment: str
    config: dict
    base_seed: int | None = None
    realizations: int | None = None
    software_version: str = __version__
    backend: str = BACKEND
    python: str = platform.python_version()
    inputs: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)
    wall_clock_s: float | None = None
    status: str = "running"

    @property
    def config_hash(self):
        return config_hash(self.config)

    def to_dict(self):
        d = dict(self.__dict__)
        d["config_hash"] = self.config_hash
        return d

    def write(self, out_dir):
        path = Path(out_dir) / "manifest.json"
        path.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True, default=str) + "\n")
        return path

    @classmethod
    def read(cls, path):
        d = json.loads(Path(path).read_text())
        d.pop("config_hash", None)
        return cls(**d)

    def verify(self, out_dir):
        """True when every recorded output still matches its checksum."""
        return all(sha256_file(Path(out_dir) / name) == digest
                   for name, digest in self.outputs.items())


class _Run:
    """Writes the manifest first, outputs second, then finalizes the manifest."""

    def __init__(self, out_dir, manifest):
        self.out_dir = None if out_dir is None else Path(out_dir)
        self.manifest = manifest
        self.t0 = time.perf_counter()
        if self.out_dir is not None:
            self.out_dir.mkdir(parents=True, exist_ok=True)
            manifest.write(self.out_dir)

    def emit(self, name, df):
        if self.out_dir is None:
            return
        path = self.out_dir / name
        df.to_csv(path, index=False, lineterminator="\n", float_format="%.10g")
        self.manifest.outputs[name] = sha256_file(path)

    def emit_json(self, name, obj):
        if self.out_dir is None:
            return
        path = self.out_dir / name
        path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n")
        self.manifest.outputs[name] = sha256_file(path)

    def finish(self):
        self.manifest.wall_clock_s = round(time.perf_counter() - self.t0, 3)
        self.manifest.status = "complete"
        if self.out_dir is not None:
            self.manifest.write(self.out_dir)
        return self.manifest


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    return str(o)


# ------------------------------------------------------------------ tables

def corpus_table(net, cw=5, records=None):
    """One row per paper with defined CD: metadata, counts and CD variants.

    Columns: ``id, year, journal, k, group, r, c, ni, nj, nk, cd, cd_nok, rk``;
    absent metadata is NaN.
    """
    arr = records if records is not None else cd_arrays(net, cw)
    ids, cd, nok, rk = cd_values(arr)

    def opt(a):
        v = a[ids].astype(float)
        v[a[ids] == MISSING] = np.nan
        return v

    return pd.DataFrame({
        "id": ids, "year": net.years[ids], "journal": opt(net.journal_id),
        "k": opt(net.team_size), "group": opt(net.group_label),
        "r": net.out_degree[ids], "c": (arr.n_i + arr.n_j)[ids],
        "ni": arr.n_i[ids], "nj": arr.n_j[ids], "nk": arr.n_k[ids],
        "cd": cd, "cd_nok": nok, "rk": rk,
    })


def apply_filter(net, table, f, cw=5):
    """Restrict ``table`` to papers passing ``f``; returns (table, audit)."""
    recs = records_from_arrays(cd_arrays(net, cw))
    normcd = None
    if f.normcd_abs_max is not None and not table["journal"].isna().any():
        z, _ = normalize_values(table["journal"].astype(np.int64), table["year"], table["cd"])
        normcd = np.full(net.n_nodes, np.nan)
        normcd[table["id"].to_numpy()] = z
    res = filter_corpus(net, recs, normcd, f)
    keep = table["id"].isin(res.retained)
    return table[keep].reset_index(drop=True), res.excluded


# ------------------------------------------------------------------ quench

def _realization_series(args):
    cfg, cws, t_min = args
    net = grow(cfg)
    sched = build_schedule(cfg)
    rows = []
    for cw in cws:
        arr = cd_arrays(net, cw)
        ids, cd, _, rk = cd_values(arr)
        yrs = net.years[ids]
        s_cd = yearly_mean(yrs, cd)
        s_rk = yearly_mean(yrs, rk)
        for t, m_cd, m_rk, cnt in zip(s_cd.years, s_cd.mean, s_rk.mean, s_cd.count):
            if t_min <= t <= cfg.T - cw:
                rows.append((int(t), cw, sched.r_at(int(t)), float(m_cd), float(m_rk), int(cnt)))
    return rows


@dataclass
class QuenchResult:
    realizations: pd.DataFrame
    ensemble: pd.DataFrame
    schedule: pd.DataFrame
    manifest: ExperimentManifest

    def series(self, scenario, cw, column="cd_mean"):
        e = self.ensemble
        e = e[(e.scenario == scenario) & (e.cw == cw)]
        return e.set_index("t")[column]


def run_quench(cfg_base, realizations=10, out_dir=None, cws=(5, 10), burn_in=10, workers=1):
    """CI versus quenched-reference-growth ensembles with matched seeds.

    Realization ``i`` of both scenarios uses seed ``cfg_base.seed + i``, so
    the paired networks coincide up to period ``T_star``. CD and R_k yearly
    means are reported for ``burn_in <= t <= T - cw``.
    """
    if cfg_base.T_star is None:
        raise ValueError("cfg_base.T_star must be set")
    scen = {"ci": cfg_base.replace(T_star=None), "quench": cfg_base}
    manifest = ExperimentManifest(
        "quench", {"growth": cfg_base.to_dict(), "realizations": realizations,
                   "cws": list(cws), "burn_in": burn_in},
        base_seed=cfg_base.seed, realizations=realizations)
    run = _Run(out_dir, manifest)
    jobs, keys = [], []
    for name, cfg in scen.items():
        for i in range(realizations):
            jobs.append((cfg.replace(seed=cfg_base.seed + i), tuple(cws), burn_in))
            keys.append((name, i))
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            results = list(ex.map(_realization_series, jobs))
    else:
        results = [_realization_series(j) for j in jobs]
    rows = [(name, i, *row) for (name, i), res in zip(keys, results) for row in res]
    per = pd.DataFrame(rows, columns=["scenario", "realization", "t", "cw", "r_t",
                                      "cd_mean", "rk_mean", "papers"])
    per = per.sort_values(["scenario", "cw", "realization", "t"]).reset_index(drop=True)
    g = per.groupby(["scenario", "cw", "t"], sort=True)
    ens = g.agg(r_t=("r_t", "first"), cd_mean=("cd_mean", "mean"), cd_sd=("cd_mean", "std"),
                rk_mean=("rk_mean", "mean"), rk_sd=("rk_mean", "std"),
                n_realizations=("cd_mean", "size"), papers=("papers", "sum")).reset_index()
    ens["cd_se"] = ens["cd_sd"] / np.sqrt(ens["n_realizations"])
    ens["rk_se"] = ens["rk_sd"] / np.sqrt(ens["n_realizations"])
    s_ci, s_q = build_schedule(scen["ci"]), build_schedule(scen["quench"])
    sched = pd.DataFrame({"t": s_ci.periods, "n_t": s_ci.n, "r_ci": s_ci.r, "r_quench": s_q.r})
    run.emit("quench_realizations.csv", per)
    run.emit("quench_ensemble.csv", ens)
    run.emit("schedule.csv", sched)
    return QuenchResult(per, ens, sched, run.finish())


# ------------------------------------------------------------------ regressions

def trend_spec(table, baseline_year=None):
    """CD on team size, reference and citation terms, year factor, journal FE."""
    base = int(table["year"].min()) if baseline_year is None else baseline_year
    return RegressionSpec(
        dependent="cd",
        terms=(Term("k", "log"), Term("k", "log2"), Term("k", "log", "year"),
               Term("r", "log"), Term("r", "log2"), Term("c", "log"), Term("c", "log2")),
        factors=(Factor("year", base),), fixed_effects="journal")


def teamsize_spec(baseline_k=1):
    """Journal-year NormCD on a team-size factor with year FE."""
    return RegressionSpec(
        dependent="cd", dependent_transform="normcd",
        terms=(Term("r", "log"), Term("r", "log2"), Term("c", "log"), Term("c", "log2")),
        factors=(Factor("k", baseline_k),), fixed_effects="year")


def _effects_frame(fit_result, factor):
    return pd.DataFrame(marginal_effects(fit_result, factor))


@dataclass
class RegressionRun:
    effects: pd.DataFrame
    fit: object
    manifest: ExperimentManifest


def _input_meta(table):
    return {"rows": int(len(table)),
            "sha256": hashlib.sha256(pd.util.hash_pandas_object(table, index=False)
                                     .to_numpy().tobytes()).hexdigest()}


def run_trend_analysis(table, out_dir=None, baseline_year=None):
    """Year effects net of CI covariates (``gamma_t`` relative to baseline)."""
    spec = trend_spec(table, baseline_year)
    manifest = ExperimentManifest("trend", {"spec": spec.to_dict()})
    manifest.inputs["table"] = _input_meta(table)
    run = _Run(out_dir, manifest)
    res = fit_spec(table, spec)
    eff = _effects_frame(res, "year")
    run.emit("year_effects.csv", eff)
    run.emit_json("fit.json", res.to_dict())
    return RegressionRun(eff, res, run.finish())


def run_teamsize_analysis(table, out_dir=None, baseline_k=1):
    """Team-size effects on NormCD, in journal-year standard deviations."""
    spec = teamsize_spec(baseline_k)
    manifest = ExperimentManifest("teamsize", {"spec": spec.to_dict()})
    manifest.inputs["table"] = _input_meta(table)
    run = _Run(out_dir, manifest)
    res = fit_spec(table, spec)
    eff = _effects_frame(res, "k")
    run.emit("teamsize_effects.csv", eff)
    run.emit_json("fit.json", res.to_dict())
    return RegressionRun(eff, res, run.finish())


def sign_crossing(effects):
    """First non-baseline level whose estimate is positive after a negative one."""
    e = effects[~effects["baseline"]].sort_values("level")
    prev = None
    for lv, est in zip(e["level"], e["estimate"]):
        if prev is not None and prev < 0 <= est:
            return lv
        prev = est
    return None


# ------------------------------------------------------------------ quasi-experiment

def quasi_specs(table, group="group"):
    """The model ladder: indicator only, single covariates, full, indicator
    substituting for ln r, and the full model interacted with the indicator."""
    have_k = "k" in table and table["k"].notna().all()
    base = dict(dependent="cd", dependent_transform="abs", fixed_effects="year")
    cov = [Term("r", "log")] + ([Term("k", "log")] if have_k else []) + [Term("c", "log")]
    ladder = {"1": (Term(group),), "2": (Term("r", "log"),)}
    if have_k:
        ladder["3"] = (Term("k", "log"),)
    ladder["4"] = (Term("c", "log"),)
    ladder["5"] = tuple(cov)
    ladder["6"] = (Term(group),) + tuple(t for t in cov if t.variable != "r")
    ladder["full"] = (Term(group),) + tuple(cov) + tuple(
        Term(t.variable, t.transform, group) for t in cov)
    return {k: RegressionSpec(terms=v, **base) for k, v in ladder.items()}


@dataclass
class QuasiResult:
    summary: pd.DataFrame
    models: pd.DataFrame
    decomposition: object
    histograms: pd.DataFrame
    manifest: ExperimentManifest


def _histograms(table, group):
    out = []
    for var, vals in (("abs_cd", table["cd"].abs()), ("r", table["r"])):
        edges = np.histogram_bin_edges(vals, bins=40)
        for g, sub in vals.groupby(table[group]):
            h, _ = np.histogram(sub, bins=edges, density=True)
            out += [(var, g, lo, hi, d) for lo, hi, d in zip(edges[:-1], edges[1:], h)]
    return pd.DataFrame(out, columns=["variable", "group", "bin_lo", "bin_hi", "density"])


def run_quasi_experiment(table, out_dir=None, group="group"):
    """Two-arm comparison of |CD|: summaries, model ladder and gap decomposition."""
    table = table[table[group].notna()].copy()
    table[group] = table[group].astype(int)
    manifest = ExperimentManifest("quasi", {"group": group})
    manifest.inputs["table"] = _input_meta(table)
    run = _Run(out_dir, manifest)
    agg = {"papers": ("cd", "size"), "abs_cd_mean": ("cd", lambda s: s.abs().mean()),
           "cd_mean": ("cd", "mean"), "r_mean": ("r", "mean"), "c_mean": ("c", "mean")}
    if "k" in table and table["k"].notna().all():
        agg["k_mean"] = ("k", "mean")
    summary = table.groupby(group).agg(**agg).reset_index()
    specs = quasi_specs(table, group)
    rows = []
    for name, spec in specs.items():
        t = table.assign(**{group: table[group].astype(float)})
        try:
            res = fit_spec(t, spec)
        except RankDeficient as exc:
            # e.g. synthetic arms whose r_p is a deterministic function of arm and year
            rows.append((name, ",".join(exc.columns), np.nan, np.nan, np.nan, len(t),
                         np.nan, np.nan, "rank deficient"))
            continue
        for col, b, s, p in zip(res.columns, res.params, res.se, res.pvalues):
            rows.append((name, col, b, s, p, res.nobs, res.adj_r2, res.constant, ""))
    models = pd.DataFrame(rows, columns=["model", "term", "estimate", "se", "p", "nobs",
                                         "adj_r2", "constant", "note"])
    dec = decompose_group_gap(table, specs["5"], indicator=group)
    hist = _histograms(table, group)
    run.emit("group_summary.csv", summary)
    run.emit("model_ladder.csv", models)
    run.emit("histograms.csv", hist)
    run.emit_json("decomposition.json", dec.to_dict())
    return QuasiResult(summary, models, dec, hist, run.finish())


def synthetic_quasi_table(cfg, cw=5, burn_in=10):
    """Corpus table from a two-arm synthetic network (``cfg.group_share > 0``),
    restricted to fully observed citation windows after burn-in."""
    net = grow(cfg)
    tab = corpus_table(net, cw)
    return tab[(tab.year >= burn_in) & (tab.year <= cfg.T - cw)].reset_index(drop=True)


__all__ = ["CorpusFilter", "ExperimentManifest", "GrowthConfig", "QuasiResult", "QuenchResult",
           "RegressionRun", "apply_filter", "corpus_table", "quasi_specs", "run_quasi_experiment",
           "run_quench", "run_teamsize_analysis", "run_trend_analysis", "sign_crossing",
           "synthetic_quasi_table", "teamsize_spec", "trend_spec"]
