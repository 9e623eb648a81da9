"""Command-line entry point: ``disruptsim <command> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np
import pandas as pd

from .corpus import CorpusFilter, load_corpus, write_corpus, write_id_map
from .econometrics import RegressionSpec, fit_spec
from .experiments import (ExperimentManifest, _Run, apply_filter, corpus_table, run_quasi_experiment,
                          run_quench, run_teamsize_analysis, run_trend_analysis, sha256_file,
                          synthetic_quasi_table)
from .generator import GrowthConfig, grow
from .metrics import cd_arrays, cd_values, normalize_cd
from .nullmodel import RewireConfig, randomized_cd

log = logging.getLogger("disruptsim")


def load_config(path):
    """JSON document, or ``key = value`` lines (``#`` comments allowed)."""
    text = Path(path).read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        pass
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        try:
            out[key] = json.loads(val)
        except json.JSONDecodeError:
            out[key] = None if val.lower() in ("none", "null") else val
    return out


def _growth_config(d):
    d = dict(d)
    d.pop("realizations", None)
    return GrowthConfig.from_dict(d)


def _load_dir(in_dir, strict):
    in_dir = Path(in_dir)
    return load_corpus(in_dir / "nodes.csv", in_dir / "edges.csv", strict=strict)


# ------------------------------------------------------------------ commands

def cmd_generate(args):
    raw = load_config(args.config)
    cfg = _growth_config(raw.get("growth", raw))
    k = args.realizations if args.realizations is not None else int(raw.get("realizations", 1))
    out = Path(args.out_dir)
    manifest = ExperimentManifest("generate", {"growth": cfg.to_dict(), "realizations": k},
                                  base_seed=cfg.seed, realizations=k)
    run = _Run(out, manifest)
    for i in range(k):
        c = cfg.replace(seed=cfg.seed + i)
        net = grow(c)
        sub = f"realization_{i:03d}"
        write_corpus(net, out / sub / "nodes.csv", out / sub / "edges.csv")
        for name in ("nodes.csv", "edges.csv"):
            manifest.outputs[f"{sub}/{name}"] = sha256_file(out / sub / name)
        log.info("realization %d: seed=%d nodes=%d edges=%d", i, c.seed, net.n_nodes, net.n_edges)
    run.finish()


def cmd_metrics(args):
    net = _load_dir(args.in_dir, args.strict)
    arr = cd_arrays(net, args.cw)
    ids, cd, nok, rk = cd_values(arr)
    df = pd.DataFrame({"id": ids, "year": net.years[ids], "Ni": arr.n_i[ids], "Nj": arr.n_j[ids],
                       "Nk": arr.n_k[ids], "CD": cd, "CDnok": nok, "Rk": rk,
                       "c_cw": (arr.n_i + arr.n_j)[ids]})
    if net.source_ids is not None:
        write_id_map(net, Path(args.out).with_name("id_map.csv"))
    if args.normalize:
        z, table = normalize_cd(arr, net)
        df["normcd"] = z
        nt = pd.DataFrame({"journal_id": table.journal_id, "year": table.year, "mean": table.mean,
                           "sd": table.sd, "count": table.count, "ddof": table.ddof})
        nt.to_csv(Path(args.out).with_name("normtable.csv"), index=False, lineterminator="\n",
                  float_format="%.17g")
    df.to_csv(args.out, index=False, lineterminator="\n", float_format="%.17g")


def cmd_nullmodel(args):
    net = _load_dir(args.in_dir, args.strict)
    arr = cd_arrays(net, args.cw)
    ids, cd, _, _ = cd_values(arr)
    cfg = RewireConfig(swaps_per_edge=args.swaps_per_edge, seed=args.seed)
    rc = randomized_cd(net, args.cw, args.rewires, cfg)
    full = np.full(net.n_nodes, np.nan)
    full[ids] = cd
    z = rc.z(full)
    df = pd.DataFrame({"id": ids, "cd": cd, "mean_rand": rc.mean[ids], "sd_rand": rc.sd[ids],
                       "z": z[ids]})
    df.to_csv(args.out, index=False, lineterminator="\n", float_format="%.17g")
    meta = {"rewires": args.rewires, "swaps_per_edge": args.swaps_per_edge, "seed": args.seed,
            "cw": args.cw, "replicas": rc.replicas}
    Path(args.out).with_suffix(".manifest.json").write_text(json.dumps(meta, indent=2) + "\n")


def cmd_regress(args):
    spec = RegressionSpec.from_json(args.spec)
    data = pd.read_csv(args.data)
    res = fit_spec(data, spec)
    out = res.to_dict()
    out["spec"] = spec.to_dict()
    Path(args.out).write_text(json.dumps(out, indent=2, default=str) + "\n")


def _experiment_table(cfg, strict):
    """Analysis table from ``table``, ``nodes``/``edges`` or a ``growth`` block."""
    cw = int(cfg.get("cw", 5))
    if "table" in cfg:
        tab = pd.read_csv(cfg["table"])
    elif "nodes" in cfg:
        net = load_corpus(cfg["nodes"], cfg["edges"], strict=strict)
        tab = corpus_table(net, cw)
        if "filter" in cfg:
            tab, audit = apply_filter(net, tab, CorpusFilter(**cfg["filter"]), cw)
            log.info("filter exclusions: %s", audit)
    elif "growth" in cfg:
        g = _growth_config(cfg["growth"])
        tab = synthetic_quasi_table(g, cw, int(cfg.get("burn_in", 10)))
    else:
        raise ValueError("config needs one of: table, nodes/edges, growth")
    years = cfg.get("years")
    if years:
        tab = tab[(tab.year >= years[0]) & (tab.year <= years[1])]
    return tab.reset_index(drop=True)


def cmd_experiment(args):
    cfg = load_config(args.config)
    if args.name == "quench":
        g = _growth_config(cfg.get("growth", {}))
        if g.T_star is None:
            g = g.replace(T_star=108 if g.T >= 108 else max(1, int(round(0.72 * g.T))))
        run_quench(g, int(cfg.get("realizations", 10)), args.out_dir,
                   tuple(cfg.get("cws", (5, 10))), int(cfg.get("burn_in", 10)),
                   int(cfg.get("workers", 1)))
        return
    tab = _experiment_table(cfg, args.strict)
    if args.name == "trend":
        run_trend_analysis(tab, args.out_dir, cfg.get("baseline_year"))
    elif args.name == "teamsize":
        run_teamsize_analysis(tab, args.out_dir, cfg.get("baseline_k", 1))
    else:
        run_quasi_experiment(tab, args.out_dir, cfg.get("group", "group"))


def build_parser():
    p = argparse.ArgumentParser(prog="disruptsim", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="grow synthetic citation networks")
    g.add_argument("--config", required=True)
    g.add_argument("--out-dir", required=True)
    g.add_argument("--realizations", type=int)
    g.set_defaults(func=cmd_generate)

    m = sub.add_parser("metrics", help="disruption records for a corpus")
    m.add_argument("--in-dir", required=True)
    m.add_argument("--cw", type=int, default=5)
    m.add_argument("--out", required=True)
    m.add_argument("--normalize", action="store_true")
    m.add_argument("--strict", action="store_true")
    m.set_defaults(func=cmd_metrics)

    n = sub.add_parser("nullmodel", help="randomized CD and z-scores by rewiring")
    n.add_argument("--in-dir", required=True)
    n.add_argument("--rewires", type=int, default=20)
    n.add_argument("--swaps-per-edge", type=float, default=10.0)
    n.add_argument("--seed", type=int, default=0)
    n.add_argument("--cw", type=int, default=5)
    n.add_argument("--out", default="zscores.csv")
    n.add_argument("--strict", action="store_true")
    n.set_defaults(func=cmd_nullmodel)

    r = sub.add_parser("regress", help="fixed-effects regression from a JSON spec")
    r.add_argument("--spec", required=True)
    r.add_argument("--data", required=True)
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_regress)

    e = sub.add_parser("experiment", help="run one of the study pipelines")
    e.add_argument("name", choices=["quench", "trend", "teamsize", "quasi"])
    e.add_argument("--config", required=True)
    e.add_argument("--out-dir", required=True)
    e.add_argument("--strict", action="store_true")
    e.set_defaults(func=cmd_experiment)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except (ValueError, OSError) as exc:
        log.error("%s", exc)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
