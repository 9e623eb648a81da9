import math

import numpy as np
import pytest
from scipy import stats

from disruptsim import _pykernels
from disruptsim._backend import kernels
from disruptsim.corpus import CitationNetwork
from disruptsim.generator import (GrowthConfig, SplitMix64, _weights, build_schedule, grow,
                                  pick_references, realization_seeds)
from disruptsim.metrics import cd_arrays

from helpers import star


def test_schedule_values():
    s = build_schedule(GrowthConfig(T=150, T_star=108))
    assert s.n_at(1) == 30
    assert s.r_at(1) == 5
    assert s.r_at(108) == 34 and s.r_at(150) == 34
    assert build_schedule(GrowthConfig(T=150)).r_at(150) == 73


def test_schedule_totals():
    s = build_schedule(GrowthConfig(T=150))
    assert abs(s.total_nodes - 125_270) <= 0.001 * 125_270
    assert abs(s.total_edges() - 5_948_492) <= 0.01 * 5_948_492


def test_single_period_has_no_edges():
    net = grow(GrowthConfig(T=1))
    assert net.n_nodes == 30 and net.n_edges == 0


def test_out_degree_follows_schedule():
    cfg = GrowthConfig(T=30, T_star=20, seed=5)
    s = build_schedule(cfg)
    net = grow(cfg)
    want = np.repeat(np.minimum(s.r, s.pool_sizes()), s.n)
    np.testing.assert_array_equal(net.out_degree, want)
    assert net.n_nodes == s.total_nodes
    src, dst = net.edges()
    assert np.all(net.years[dst] < net.years[src])


def test_deterministic_given_seed():
    a = grow(GrowthConfig(T=25, seed=9))
    b = grow(GrowthConfig(T=25, seed=9))
    c = grow(GrowthConfig(T=25, seed=10))
    assert a.same_edges(b)
    assert not a.same_edges(c)
    assert a.info["config_hash"] == b.info["config_hash"] != c.info["config_hash"]


def test_quench_leaves_prefix_identical():
    cfg = GrowthConfig(T=30, seed=3)
    a = grow(cfg)
    b = grow(cfg.replace(T_star=20))
    cut = a.first_id_after(19)
    np.testing.assert_array_equal(a.out_offsets[:cut + 1], b.out_offsets[:cut + 1])
    np.testing.assert_array_equal(a.out_targets[:a.out_offsets[cut]],
                                  b.out_targets[:b.out_offsets[cut]])


def test_group_labels_and_longer_lists():
    cfg = GrowthConfig(T=40, seed=1, group_share=0.5, group_ref_factor=2.0)
    net = grow(cfg)
    late = net.years >= 30
    g = net.group_label
    assert abs(np.mean(g[late]) - 0.5) < 0.02
    ratio = net.out_degree[late & (g == 1)].mean() / net.out_degree[late & (g == 0)].mean()
    assert 1.9 < ratio < 2.1


def test_single_prior_node_is_chosen():
    net = CitationNetwork.from_edges([1], [], [])
    assert pick_references(net, 2, 1, SplitMix64(0), beta=0.0) == [0]


def test_redirection_closes_triangle():
    net = star(6)
    leaf_first = 0
    for seed in range(200):
        refs = pick_references(net, 3, 2, SplitMix64(seed), beta=1.0)
        assert len(set(refs)) == 2
        if refs[0] != 0:
            leaf_first += 1
            assert refs[1] == 0
    assert leaf_first > 0


def test_rng_advances():
    rng = SplitMix64(1)
    before = rng.state
    pick_references(star(3), 3, 1, rng, beta=0.0)
    assert rng.state != before


def test_attachment_weights():
    cum = _weights(np.array([3.0, 0.0]), np.array([1, 1]), 2, math.inf, 1.0)
    np.testing.assert_allclose(cum, [4.0, 5.0])


@pytest.mark.parametrize("mod", [_pykernels, kernels])
def test_preferential_probabilities(mod):
    draws = 100_000 if mod is kernels else 20_000
    cum = _weights(np.array([3.0, 0.0]), np.array([1, 1]), 2, math.inf, 1.0)
    offsets = np.zeros(draws + 3, dtype=np.int64)
    offsets[2:] = np.arange(draws + 1)
    targets = np.empty(draws, dtype=np.int32)
    mod.fill_references(123, cum, 2, 2, 2 + draws, offsets, targets, 0.0)
    hits = np.count_nonzero(targets == 0)
    sigma = math.sqrt(draws * 0.8 * 0.2)
    assert abs(hits - 0.8 * draws) <= 3 * sigma


def j_share(net):
    a = cd_arrays(net, 5)
    return a.n_j.sum() / (a.n_i + a.n_j).sum()


def test_redirection_raises_triadic_closure():
    base = GrowthConfig(T=30)
    with_r = [j_share(grow(base.replace(seed=s, beta=0.2))) for s in range(10)]
    without = [j_share(grow(base.replace(seed=s, beta=0.0))) for s in range(10)]
    assert np.mean(with_r) > np.mean(without)
    assert stats.ttest_ind(with_r, without, alternative="greater").pvalue < 0.01


def test_config_validation_and_round_trip():
    with pytest.raises(ValueError):
        GrowthConfig(T_star=200, T=150)
    with pytest.raises(ValueError):
        GrowthConfig(beta=1.5)
    with pytest.raises(ValueError):
        GrowthConfig.from_dict({"bogus": 1})
    cfg = GrowthConfig(T=12, seed=4)
    assert GrowthConfig.from_dict(cfg.to_dict()) == cfg
    assert GrowthConfig.from_dict({"tau": "inf"}).tau == math.inf
    assert realization_seeds(10, 3) == [10, 11, 12]
