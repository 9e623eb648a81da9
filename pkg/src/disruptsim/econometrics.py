"""Fixed-effects least squares for disruption regressions.

Models are described declaratively by :class:`RegressionSpec`, turned into a
design matrix by :func:`build_design` and estimated by :func:`fit`, a within
(group-demeaning) estimator solved with a column-pivoted QR factorization.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from scipy import linalg, stats

from .metrics import normalize_values

Z95 = 1.959963984540054


class RegressionError(ValueError):
    pass


class NonPositiveLog(RegressionError):
    pass


class EmptyFactorLevel(RegressionError):
    pass


class RankDeficient(RegressionError):
    def __init__(self, columns):
        self.columns = list(columns)
        super().__init__(f"design is rank deficient; collinear column(s): {', '.join(self.columns)}")


class UnknownFactor(RegressionError):
    pass


class SingleGroup(RegressionError):
    pass


TRANSFORMS = ("identity", "log", "log2")
DEP_TRANSFORMS = ("identity", "abs", "normcd")


@dataclass(frozen=True)
class Term:
    """A regressor: ``transform(variable)``, optionally times ``interaction``.

    ``interaction="year"`` multiplies by the year column re-centred on the
    sample's first year; any other column name multiplies by that column.
    """

    variable: str
    transform: str = "identity"
    interaction: str | None = None

    def __post_init__(self):
        if self.transform not in TRANSFORMS:
            raise ValueError(f"transform must be one of {TRANSFORMS}")

    @property
    def name(self):
        base = {"identity": self.variable, "log": f"ln_{self.variable}",
                "log2": f"ln_{self.variable}_sq"}[self.transform]
        return base if self.interaction is None else f"{base}_x_{self.interaction}"


@dataclass(frozen=True)
class Factor:
    """Categorical expansion with one dummy per non-baseline level."""

    variable: str
    baseline: int | float | str


@dataclass(frozen=True)
class RegressionSpec:
    dependent: str
    dependent_transform: str = "identity"
    terms: tuple = ()
    factors: tuple = ()
    fixed_effects: str | None = None  # column whose levels are absorbed
    se_type: str = "classical"  # or "cluster" (CR1 by fixed-effect group)
    year_column: str = "year"
    journal_column: str = "journal"

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(
            t if isinstance(t, Term) else Term(**t) for t in self.terms))
        object.__setattr__(self, "factors", tuple(
            f if isinstance(f, Factor) else Factor(**f) for f in self.factors))
        if self.fixed_effects in ("none", ""):
            object.__setattr__(self, "fixed_effects", None)
        if self.dependent_transform not in DEP_TRANSFORMS:
            raise ValueError(f"dependent_transform must be one of {DEP_TRANSFORMS}")
        if self.se_type not in ("classical", "cluster"):
            raise ValueError("se_type must be 'classical' or 'cluster'")
        if self.se_type == "cluster" and self.fixed_effects is None:
            raise ValueError("cluster SEs cluster on the fixed-effects group")
        names = [t.name for t in self.terms]
        if len(set(names)) != len(names):
            raise ValueError("duplicate regressor term")
        if any(t.variable == self.dependent for t in self.terms):
            raise ValueError("dependent variable used as a regressor")
        fv = [f.variable for f in self.factors]
        if len(set(fv)) != len(fv) or self.dependent in fv:
            raise ValueError("bad factor list")

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def to_dict(self):
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d):
        return cls(**d)

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


@dataclass
class Design:
    y: np.ndarray
    X: np.ndarray
    columns: list
    groups: np.ndarray | None
    rows: np.ndarray  # table positions that entered the design
    meta: dict = field(default_factory=dict)


def _transform(values, transform, name):
    if transform == "identity":
        return values
    if np.any(~(values > 0)):
        raise NonPositiveLog(f"{name} has non-positive values under log transform")
    v = np.log(values)
    return v if transform == "log" else v * v


def build_design(table, spec):
    """Dependent vector, regressor matrix and group labels for ``spec``.

    Without fixed effects a leading ``const`` column is included; with them
    the intercept is absorbed. Rows whose NormCD dependent is undefined are
    dropped (recorded in ``meta``).
    """
    table = pd.DataFrame(table)
    needed = [spec.dependent] + [t.variable for t in spec.terms] + [f.variable for f in spec.factors]
    needed += [t.interaction for t in spec.terms if t.interaction not in (None, "year")]
    if any(t.interaction == "year" for t in spec.terms):
        needed.append(spec.year_column)
    if spec.fixed_effects:
        needed.append(spec.fixed_effects)
    if spec.dependent_transform == "normcd":
        needed += [spec.journal_column, spec.year_column]
    missing = sorted({c for c in needed if c not in table.columns})
    if missing:
        raise RegressionError(f"missing column(s): {', '.join(missing)}")

    rows = np.arange(len(table))
    y = table[spec.dependent].to_numpy(dtype=float)
    meta = {"dependent": spec.dependent, "dependent_transform": spec.dependent_transform}
    if spec.dependent_transform == "abs":
        y = np.abs(y)
    elif spec.dependent_transform == "normcd":
        y, _ = normalize_values(table[spec.journal_column], table[spec.year_column], y)
        ok = np.isfinite(y)
        meta["dropped_undefined_normcd"] = int(np.count_nonzero(~ok))
        rows, y = rows[ok], y[ok]
        table = table.iloc[rows]
    if len(y) == 0:
        raise RegressionError("no observations")

    cols, names = [], []
    if spec.fixed_effects is None:
        cols.append(np.ones(len(y)))
        names.append("const")
    if any(t.interaction == "year" for t in spec.terms):
        year = table[spec.year_column].to_numpy(dtype=float)
        meta["year_origin"] = float(year.min())
    for t in spec.terms:
        v = _transform(table[t.variable].to_numpy(dtype=float), t.transform, t.variable)
        if t.interaction == "year":
            v = v * (year - meta["year_origin"])
        elif t.interaction is not None:
            v = v * table[t.interaction].to_numpy(dtype=float)
        cols.append(v)
        names.append(t.name)
    meta["factors"] = {}
    for f in spec.factors:
        vals = table[f.variable].to_numpy()
        levels = sorted(pd.unique(vals).tolist())
        if f.baseline not in levels:
            raise EmptyFactorLevel(f"baseline {f.baseline!r} of {f.variable} absent from data")
        kept = [lv for lv in levels if lv != f.baseline]
        for lv in kept:
            cols.append((vals == lv).astype(float))
            names.append(f"{f.variable}[{lv}]")
        meta["factors"][f.variable] = {"baseline": f.baseline, "levels": kept}
    X = np.column_stack(cols) if cols else np.zeros((len(y), 0))
    groups = table[spec.fixed_effects].to_numpy() if spec.fixed_effects else None
    meta["fixed_effects"] = spec.fixed_effects
    return Design(y, X, names, groups, rows, meta)


@dataclass
class FitResult:
    columns: list
    params: np.ndarray
    se: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray
    pvalues: np.ndarray
    nobs: int
    n_groups: int
    r2: float
    r2_within: float
    adj_r2: float
    sigma2: float
    se_type: str
    constant: float | None = None
    group_levels: np.ndarray | None = None
    group_effects: np.ndarray | None = None
    resid: np.ndarray | None = field(default=None, repr=False)
    meta: dict = field(default_factory=dict)

    def index(self, name):
        try:
            return self.columns.index(name)
        except ValueError:
            raise KeyError(name) from None

    def coef(self, name):
        return float(self.params[self.index(name)])

    def stderr(self, name):
        return float(self.se[self.index(name)])

    def summary(self):
        return pd.DataFrame({"coef": self.params, "se": self.se, "ci_low": self.ci_low,
                             "ci_high": self.ci_high, "p": self.pvalues}, index=self.columns)

    def to_dict(self):
        def f(v):
            return None if v is None or not np.isfinite(v) else float(v)
        return {
            "columns": list(self.columns),
            "coefficients": {c: {"estimate": f(b), "se": f(s), "ci": [f(lo), f(hi)], "p": f(p)}
                             for c, b, s, lo, hi, p in zip(self.columns, self.params, self.se,
                                                           self.ci_low, self.ci_high, self.pvalues)},
            "nobs": self.nobs, "n_groups": self.n_groups, "r2": f(self.r2),
            "r2_within": f(self.r2_within), "adj_r2": f(self.adj_r2),
            "sigma2": f(self.sigma2), "se_type": self.se_type,
            "constant": f(self.constant) if self.constant is not None else None,
            "meta": self.meta,
        }


def demean(a, inv, n_groups):
    """Subtract group means (``inv`` = dense group codes) from ``a``'s columns."""
    counts = np.bincount(inv, minlength=n_groups).astype(float)
    if a.ndim == 1:
        return a - (np.bincount(inv, weights=a, minlength=n_groups) / counts)[inv]
    out = np.empty_like(a, dtype=float)
    for j in range(a.shape[1]):
        out[:, j] = a[:, j] - (np.bincount(inv, weights=a[:, j], minlength=n_groups) / counts)[inv]
    return out


def fit(y, X, groups=None, spec=None, columns=None, se_type=None, rank_tol=1e-10):
    """Within-estimator least squares.

    Classical SEs use ``N - K - G`` residual degrees of freedom (``G`` absorbed
    groups); ``se_type="cluster"`` gives CR1 cluster-robust SEs by group.
    Raises :class:`RankDeficient` rather than dropping columns.
    """
    y = np.asarray(y, dtype=float)
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    n, k = X.shape
    if columns is None:
        columns = [f"x{j}" for j in range(k)]
    columns = list(columns)
    if se_type is None:
        se_type = spec.se_type if spec is not None else "classical"
    if groups is not None:
        levels, inv = np.unique(np.asarray(groups), return_inverse=True)
        inv = inv.ravel()
        g = len(levels)
        yd, Xd = demean(y, inv, g), demean(X, inv, g)
    else:
        levels, inv, g = None, None, 0
        yd, Xd = y, X
    if se_type == "cluster" and groups is None:
        raise ValueError("cluster SEs need groups")
    dof = n - k - g
    if dof <= 0:
        raise RegressionError(f"not enough observations: N={n}, parameters={k + g}")

    if k:
        Q, R, piv = linalg.qr(Xd, mode="economic", pivoting=True)
        diag = np.abs(np.diag(R))
        scale = max(diag[0], 1e-300) if len(diag) else 1.0
        rank = int(np.count_nonzero(diag > rank_tol * scale * max(n, k) ** 0.5))
        if diag[0] == 0 or rank < k:
            raise RankDeficient([columns[j] for j in piv[rank:]] or columns)
        b_piv = linalg.solve_triangular(R, Q.T @ yd)
        Rinv = linalg.solve_triangular(R, np.eye(k))
        bread_piv = Rinv @ Rinv.T
        beta = np.empty(k)
        beta[piv] = b_piv
        bread = np.empty((k, k))
        bread[np.ix_(piv, piv)] = bread_piv
        resid = yd - Xd @ beta
    else:
        beta = np.zeros(0)
        bread = np.zeros((0, 0))
        resid = yd.copy()

    rss = float(resid @ resid)
    sigma2 = rss / dof
    if se_type == "cluster":
        scores = Xd * resid[:, None]
        meat_g = np.zeros((g, k))
        for j in range(k):
            meat_g[:, j] = np.bincount(inv, weights=scores[:, j], minlength=g)
        meat = meat_g.T @ meat_g
        c = g / (g - 1) * (n - 1) / (n - k) if g > 1 else 1.0
        cov = c * bread @ meat @ bread
    else:
        cov = sigma2 * bread
    se = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    with np.errstate(divide="ignore", invalid="ignore"):
        zstat = np.where(se > 0, beta / np.where(se > 0, se, 1.0),
                         np.where(beta == 0, np.nan, np.inf))
    pvalues = 2.0 * stats.norm.sf(np.abs(zstat))
    pvalues[np.isnan(zstat)] = 1.0

    tss_within = float(yd @ yd) if groups is not None else float(((y - y.mean()) ** 2).sum())
    tss = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - rss / tss if tss > 0 else 1.0
    r2_within = 1.0 - rss / tss_within if tss_within > 0 else 1.0
    has_const = groups is not None or "const" in columns
    p_total = k + g if groups is not None else k
    adj_r2 = 1.0 - (1.0 - r2) * (n - (1 if has_const else 0)) / max(n - p_total, 1)

    constant = effects = None
    if groups is not None:
        xbar = X.mean(axis=0) if k else np.zeros(0)
        constant = float(y.mean() - xbar @ beta)
        counts = np.bincount(inv, minlength=g).astype(float)
        gy = np.bincount(inv, weights=y, minlength=g) / counts
        gx = np.column_stack([np.bincount(inv, weights=X[:, j], minlength=g) / counts
                              for j in range(k)]) if k else np.zeros((g, 0))
        effects = gy - gx @ beta
    return FitResult(
        columns=columns, params=beta, se=se, ci_low=beta - Z95 * se, ci_high=beta + Z95 * se,
        pvalues=pvalues, nobs=n, n_groups=g, r2=r2, r2_within=r2_within, adj_r2=adj_r2,
        sigma2=sigma2, se_type=se_type, constant=constant, group_levels=levels,
        group_effects=effects, resid=resid, meta={})


def fit_spec(table, spec):
    """:func:`build_design` followed by :func:`fit`."""
    d = build_design(table, spec)
    res = fit(d.y, d.X, d.groups, spec=spec, columns=d.columns)
    res.meta.update(d.meta)
    res.meta["parameterization"] = (
        "absorbed fixed effects; 'constant' is the mean effect" if spec.fixed_effects
        else "explicit intercept")
    return res


def marginal_effects(fit_result, factor):
    """Per-level factor effects relative to the baseline (reported as 0)."""
    info = fit_result.meta.get("factors", {}).get(factor)
    if info is None:
        raise UnknownFactor(factor)
    out = [{"level": info["baseline"], "estimate": 0.0, "se": None, "ci_low": None,
            "ci_high": None, "p": None, "significant": False, "baseline": True}]
    for lv in info["levels"]:
        i = fit_result.index(f"{factor}[{lv}]")
        out.append({"level": lv, "estimate": float(fit_result.params[i]),
                    "se": float(fit_result.se[i]), "ci_low": float(fit_result.ci_low[i]),
                    "ci_high": float(fit_result.ci_high[i]), "p": float(fit_result.pvalues[i]),
                    "significant": bool(fit_result.pvalues[i] < 0.05), "baseline": False})
    return sorted(out, key=lambda d: d["level"])


@dataclass(frozen=True)
class GroupGapDecomposition:
    raw_gap: float
    raw_gap_se: float
    delta_indicator: float
    delta_se: float
    b_r: float
    covariate_gap: float  # mean ln r difference between the groups
    covariate_explained: float
    fraction_explained: float | None  # None when the raw gap is indistinguishable from 0
    group_means: dict
    fits: dict = field(repr=False, default_factory=dict)

    def to_dict(self):
        d = dataclasses.asdict(self)
        d.pop("fits")
        return d


def decompose_group_gap(table, full_spec, indicator="group", r_variable="r"):
    """Share of the between-group gap in the dependent explained by ``r_variable``.

    Fits the full model (A) and the model with the group indicator in place
    of the ``r_variable`` terms (B). The predicted gap is the sum over the
    ``r_variable`` terms of coefficient times the group difference of the
    term's mean.
    """
    table = pd.DataFrame(table)
    labels = sorted(pd.unique(table[indicator]).tolist())
    if len(labels) < 2:
        raise SingleGroup(f"only one level of {indicator} present")
    if len(labels) > 2:
        raise RegressionError(f"{indicator} must have exactly two levels")
    g0, g1 = labels
    r_terms = [t for t in full_spec.terms if t.variable == r_variable]
    if not r_terms:
        raise RegressionError(f"full model has no {r_variable} term")

    d_a = build_design(table, full_spec)
    fit_a = fit(d_a.y, d_a.X, d_a.groups, spec=full_spec, columns=d_a.columns)
    is1 = table[indicator].to_numpy()[d_a.rows] == g1
    y = d_a.y
    m1, m0 = y[is1].mean(), y[~is1].mean()
    raw = float(m1 - m0)
    raw_se = float(np.sqrt(y[is1].var(ddof=1) / is1.sum() + y[~is1].var(ddof=1) / (~is1).sum()))
    explained = 0.0
    cov_gap = 0.0
    for t in r_terms:
        j = d_a.columns.index(t.name)
        diff = float(d_a.X[is1, j].mean() - d_a.X[~is1, j].mean())
        explained += fit_a.params[j] * diff
        if t.transform == "log" and t.interaction is None:
            cov_gap = diff
    b_r = fit_a.coef(f"ln_{r_variable}") if f"ln_{r_variable}" in d_a.columns else float(
        fit_a.params[d_a.columns.index(r_terms[0].name)])

    spec_b = full_spec.replace(terms=(Term(indicator),) + tuple(
        t for t in full_spec.terms if t.variable != r_variable))
    d_b = build_design(table.assign(**{indicator: (table[indicator] == g1).astype(float)}), spec_b)
    fit_b = fit(d_b.y, d_b.X, d_b.groups, spec=spec_b, columns=d_b.columns)
    frac = float(explained / raw) if abs(raw) > Z95 * raw_se and raw != 0 else None
    return GroupGapDecomposition(
        raw_gap=raw, raw_gap_se=raw_se, delta_indicator=fit_b.coef(indicator),
        delta_se=fit_b.stderr(indicator), b_r=b_r, covariate_gap=cov_gap,
        covariate_explained=float(explained), fraction_explained=frac,
        group_means={str(g0): float(m0), str(g1): float(m1)}, fits={"A": fit_a, "B": fit_b})
