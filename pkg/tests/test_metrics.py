import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from disruptsim.corpus import CitationNetwork
from disruptsim.generator import GrowthConfig, grow
from disruptsim.metrics import (MissingJournal, cd_arrays, cd_values, compute_cd, compute_cd_all,
                                mean_cd_by_year, mean_rk_by_year, normalize_cd, normalize_values,
                                yearly_mean)

from helpers import add_paper, brute_force_cd, random_dag

seeds = st.integers(0, 2**32 - 1)


def focal_graph(ni, nj, nk):
    """Paper 1 (year 2) cites paper 0 (year 1); citers in year 3 realize the counts."""
    years = [1, 2] + [3] * (ni + nj + nk)
    src, dst = [1], [0]
    q = 2
    for _ in range(ni):
        src.append(q); dst.append(1); q += 1
    for _ in range(nj):
        src += [q, q]; dst += [1, 0]; q += 1
    for _ in range(nk):
        src.append(q); dst.append(0); q += 1
    return CitationNetwork.from_edges(years, src, dst)


def test_worked_examples():
    rec = compute_cd(focal_graph(10, 1, 2), 1, 5)
    assert (rec.n_i, rec.n_j, rec.n_k) == (10, 1, 2)
    assert rec.cd == pytest.approx(9 / 13)
    assert round(rec.cd, 2) == 0.69
    assert compute_cd(focal_graph(10, 1, 9), 1, 5).cd == pytest.approx(0.45)


def test_no_references_means_cd_one():
    net = CitationNetwork.from_edges([1, 2], [1], [0])
    rec = compute_cd(net, 0, 5)
    assert (rec.n_i, rec.n_j, rec.n_k, rec.cd) == (1, 0, 0, 1.0)


def test_uncited_paper_is_undefined():
    net = CitationNetwork.from_edges([1, 2, 9], [1, 2], [0, 0])
    assert compute_cd(net, 1, 5) is None
    # citer outside the window does not count
    assert compute_cd(net, 0, 1).n_i == 1
    assert compute_cd(net, 0, 8).n_i == 2


def test_empty_network():
    assert compute_cd_all(CitationNetwork.empty(), 5) == []


@pytest.mark.parametrize("cw", [0, -1, 2.5])
def test_window_must_be_positive_integer(cw):
    with pytest.raises(ValueError):
        compute_cd(focal_graph(1, 0, 0), 1, cw)


@pytest.mark.parametrize("cw", [1, 2, 5])
def test_matches_brute_force(cw):
    rng = np.random.default_rng(20)
    for _ in range(150):
        net = random_dag(rng)
        arr = cd_arrays(net, cw)
        for p in range(net.n_nodes):
            want = brute_force_cd(net, p, cw)
            assert (arr.n_i[p], arr.n_j[p], arr.n_k[p]) == want
            rec = compute_cd(net, p, cw)
            if want[0] + want[1] == 0:
                assert rec is None
            else:
                assert (rec.n_i, rec.n_j, rec.n_k) == want


@settings(max_examples=200, deadline=None)
@given(seeds, st.integers(1, 6))
def test_identities(seed, cw):
    net = random_dag(np.random.default_rng(seed), n_max=40, p=0.25)
    for rec in compute_cd_all(net, cw):
        assert abs(rec.cd - rec.cd_nok / (1 + rec.r_k)) <= 1e-12
        assert -1.0 <= rec.cd <= 1.0
        assert -1.0 <= rec.cd_nok <= 1.0
        assert rec.r_k >= 0
        assert rec.c_cw == len([q for q in net.citers(rec.paper_id)
                                if net.years[q] <= net.years[rec.paper_id] + cw])


@settings(max_examples=100, deadline=None)
@given(seeds)
def test_counts_grow_with_window(seed):
    net = random_dag(np.random.default_rng(seed), n_max=40, p=0.25)
    prev = cd_arrays(net, 1)
    for cw in range(2, 8):
        cur = cd_arrays(net, cw)
        assert np.all(cur.n_i + cur.n_j >= prev.n_i + prev.n_j)
        assert np.all(cur.n_k >= prev.n_k)
        assert np.all(cur.n_j >= prev.n_j)
        prev = cur


@settings(max_examples=200, deadline=None)
@given(seeds, st.data())
def test_extra_k_citer_shrinks_cd(seed, data):
    net = random_dag(np.random.default_rng(seed), n_max=30, p=0.3)
    recs = [r for r in compute_cd_all(net, 3) if r.cd != 0 and len(net.references(r.paper_id))]
    if not recs:
        return
    rec = data.draw(st.sampled_from(recs))
    refs = net.references(rec.paper_id)
    ref = int(data.draw(st.sampled_from(refs.tolist())))
    bigger, new_ids, _ = add_paper(net, int(net.years[rec.paper_id]) + 1, [ref])
    after = compute_cd(bigger, int(new_ids[rec.paper_id]), 3)
    assert after.n_k == rec.n_k + 1
    assert after.cd_nok == rec.cd_nok
    assert abs(after.cd) < abs(rec.cd)


def test_yearly_means():
    assert yearly_mean([4], [0.5]).as_dict() == {4: 0.5}
    assert yearly_mean([1, 1], [0.2, 0.4]).as_dict()[1] == pytest.approx(0.3)
    net = focal_graph(1, 0, 0)
    assert mean_rk_by_year(cd_arrays(net, 5), net).as_dict() == {1: 0.0, 2: 0.0}
    s = yearly_mean([2, 2], [1 / 1, 3 / 1])
    assert s.as_dict() == {2: 2.0} and s.count.tolist() == [2]


def test_array_and_record_paths_agree():
    net = grow(GrowthConfig(T=25, seed=1))
    arr = cd_arrays(net, 5)
    recs = compute_cd_all(net, 5)
    a = mean_cd_by_year(arr, net)
    b = mean_cd_by_year(recs, net)
    np.testing.assert_allclose(a.mean, b.mean, rtol=0, atol=1e-15)
    ids, cd, nok, rk = cd_values(arr)
    assert ids.tolist() == [r.paper_id for r in recs]
    np.testing.assert_allclose(cd, [r.cd for r in recs])


def test_normalization_examples():
    z, table = normalize_values([1, 1, 1], [2000] * 3, [0.1, 0.2, 0.3])
    assert z[2] == pytest.approx(1.0)
    assert z[1] == pytest.approx(0.0, abs=1e-12)
    assert table.lookup(1, 2000)["sd"] == pytest.approx(0.1)
    z, table = normalize_values([1, 1, 2], [2000, 2000, 2000], [0.4, 0.4, 0.9])
    assert np.isnan(z).all()
    assert table.lookup(1, 2000)["sd"] == 0


@settings(max_examples=100, deadline=None)
@given(seeds)
def test_normalized_cells_are_standardized(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(5, 200))
    j, y, cd = rng.integers(0, 4, n), rng.integers(0, 3, n), rng.uniform(-1, 1, n)
    z, _ = normalize_values(j, y, cd)
    for cell in set(zip(j.tolist(), y.tolist())):
        m = (j == cell[0]) & (y == cell[1])
        if m.sum() >= 2:
            assert abs(z[m].mean()) < 1e-9
            assert abs(z[m].std(ddof=1) - 1) < 1e-9


def test_normalize_needs_journal():
    net = focal_graph(2, 1, 1)
    with pytest.raises(MissingJournal):
        normalize_cd(cd_arrays(net, 5), net)
