import json
import subprocess
import sys

import numpy as np
import pandas as pd
import pytest

from disruptsim.cli import load_config, main
from disruptsim.corpus import CitationNetwork, load_corpus, write_corpus
from disruptsim.experiments import ExperimentManifest


@pytest.fixture
def corpus_dir(tmp_path):
    rng = np.random.default_rng(0)
    n = 300
    years = np.sort(rng.integers(1, 12, n))
    src, dst = [], []
    for i in range(n):
        earlier = np.flatnonzero(years < years[i])
        if len(earlier):
            for j in rng.choice(earlier, size=min(int(rng.integers(2, 15)), len(earlier)),
                                  replace=False):
                src.append(i)
                dst.append(int(j))
    net = CitationNetwork.from_edges(years, src, dst, journal_id=rng.integers(0, 3, n),
                                     team_size=rng.integers(1, 6, n))
    d = tmp_path / "corpus"
    write_corpus(net, d / "nodes.csv", d / "edges.csv")
    return d


def test_load_config_formats(tmp_path):
    p = tmp_path / "a.cfg"
    p.write_text("# growth\nT = 12\nseed=3\ntau = \"inf\"\nT_star = none\n")
    assert load_config(p) == {"T": 12, "seed": 3, "tau": "inf", "T_star": None}
    p.write_text('{"T": 4}')
    assert load_config(p) == {"T": 4}
    p.write_text("T 4\n")
    with pytest.raises(ValueError):
        load_config(p)


def test_generate(tmp_path):
    cfg = tmp_path / "g.json"
    cfg.write_text(json.dumps({"growth": {"T": 12, "seed": 5}, "realizations": 2}))
    assert main(["generate", "--config", str(cfg), "--out-dir", str(tmp_path / "out")]) == 0
    m = ExperimentManifest.read(tmp_path / "out" / "manifest.json")
    assert m.verify(tmp_path / "out") and len(m.outputs) == 4
    net = load_corpus(tmp_path / "out/realization_001/nodes.csv",
                      tmp_path / "out/realization_001/edges.csv", strict=True)
    assert net.n_nodes == sum(int(30 * np.exp(0.033 * (t - 1))) for t in range(1, 13))


def test_metrics_and_normalize(corpus_dir, tmp_path):
    out = tmp_path / "cd.csv"
    assert main(["metrics", "--in-dir", str(corpus_dir), "--cw", "3", "--out", str(out),
                 "--normalize"]) == 0
    df = pd.read_csv(out)
    assert list(df.columns[:9]) == ["id", "year", "Ni", "Nj", "Nk", "CD", "CDnok", "Rk", "c_cw"]
    np.testing.assert_allclose(df.CD, df.CDnok / (1 + df.Rk), atol=1e-12)
    assert "normcd" in df and (tmp_path / "normtable.csv").exists()


def test_metrics_normalize_needs_journals(tmp_path):
    d = tmp_path / "c"
    write_corpus(CitationNetwork.from_edges([1, 2], [1], [0]), d / "nodes.csv", d / "edges.csv")
    assert main(["metrics", "--in-dir", str(d), "--out", str(tmp_path / "x.csv"),
                 "--normalize"]) == 1


def test_nullmodel(corpus_dir, tmp_path):
    out = tmp_path / "z.csv"
    assert main(["nullmodel", "--in-dir", str(corpus_dir), "--rewires", "3", "--seed", "2",
                 "--out", str(out)]) == 0
    df = pd.read_csv(out)
    assert list(df.columns) == ["id", "cd", "mean_rand", "sd_rand", "z"]
    meta = json.loads(out.with_suffix(".manifest.json").read_text())
    assert meta["rewires"] == 3 and len(meta["replicas"]) == 3


def test_regress(tmp_path):
    rng = np.random.default_rng(1)
    tab = pd.DataFrame({"y": rng.normal(size=200), "x": rng.uniform(1, 5, 200),
                        "g": rng.integers(0, 4, 200)})
    tab["y"] += 2 * np.log(tab.x)
    tab.to_csv(tmp_path / "t.csv", index=False)
    spec = {"dependent": "y", "terms": [{"variable": "x", "transform": "log"}],
            "fixed_effects": "g"}
    (tmp_path / "s.json").write_text(json.dumps(spec))
    assert main(["regress", "--spec", str(tmp_path / "s.json"), "--data", str(tmp_path / "t.csv"),
                 "--out", str(tmp_path / "fit.json")]) == 0
    fit = json.loads((tmp_path / "fit.json").read_text())
    assert fit["columns"] == ["ln_x"]
    assert abs(fit["coefficients"]["ln_x"]["estimate"] - 2) < 0.5


def test_experiment_quench(tmp_path):
    cfg = tmp_path / "q.json"
    cfg.write_text(json.dumps({"growth": {"T": 30, "T_star": 20}, "realizations": 2}))
    assert main(["experiment", "quench", "--config", str(cfg), "--out-dir", str(tmp_path / "q")]) == 0
    assert ExperimentManifest.read(tmp_path / "q/manifest.json").verify(tmp_path / "q")


def test_experiment_trend_teamsize_quasi(corpus_dir, tmp_path):
    nodes = pd.read_csv(corpus_dir / "nodes.csv")
    nodes["group_label"] = nodes.id % 2
    nodes.to_csv(corpus_dir / "nodes.csv", index=False)
    base = {"nodes": str(corpus_dir / "nodes.csv"), "edges": str(corpus_dir / "edges.csv"),
            "cw": 3, "years": [2, 8]}
    for name, extra in (("trend", {"baseline_year": 2}), ("teamsize", {}), ("quasi", {})):
        cfg = tmp_path / f"{name}.json"
        cfg.write_text(json.dumps({**base, **extra}))
        assert main(["experiment", name, "--config", str(cfg),
                     "--out-dir", str(tmp_path / name)]) == 0, name
    assert (tmp_path / "trend/year_effects.csv").exists()
    assert (tmp_path / "teamsize/teamsize_effects.csv").exists()
    assert (tmp_path / "quasi/decomposition.json").exists()


def test_quasi_from_growth_block(tmp_path):
    cfg = tmp_path / "q.json"
    cfg.write_text(json.dumps({"growth": {"T": 40, "group_share": 0.5, "group_ref_factor": 2.0}}))
    assert main(["experiment", "quasi", "--config", str(cfg), "--out-dir", str(tmp_path)]) == 0
    s = pd.read_csv(tmp_path / "group_summary.csv").set_index("group")
    assert s.loc[1, "abs_cd_mean"] < s.loc[0, "abs_cd_mean"]


def test_bad_input_exit_code(tmp_path):
    assert main(["metrics", "--in-dir", str(tmp_path / "nope"), "--out", "x.csv"]) == 1


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "disruptsim", "--help"], capture_output=True,
                         text=True, check=True)
    assert "experiment" in out.stdout
