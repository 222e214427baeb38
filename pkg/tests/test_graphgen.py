import math

import numpy as np
import pytest

from trustdiff.graphgen import (
    _from_pairs,
    assign_thresholds,
    assign_trust,
    gen_geometric_group,
    gen_random_group,
    gen_scale_free,
    graph_stats,
)
from trustdiff.model import GeneralInstance, RngHandle, SourceSpec, validate_instance


def edge_split(g):
    """Undirected within/across edge counts."""
    canon = g.src < g.dst
    same = g.group[g.src] == g.group[g.dst]
    return int((canon & same).sum()), int((canon & ~same).sum())


def test_scale_free_small_tree():
    g = gen_scale_free(4, 1, RngHandle(0))
    assert g.m == 6 and g.symmetric
    assert np.bincount(g.group).tolist() == [2, 2]


def test_scale_free_rejects_bad_m():
    with pytest.raises(ValueError):
        gen_scale_free(2, 2)


def test_random_group_degree_and_ratio():
    n = 10_000
    g = gen_random_group(n, 4.0, 2.0, RngHandle(1))
    assert abs(g.out_degree().mean() - 4) <= 0.15
    h = n // 2
    within, across = edge_split(g)
    pairs_w, pairs_x = h * (h - 1), h * h
    ps, pd = within / pairs_w, across / pairs_x
    sd = math.sqrt(ps * (1 - ps) / pairs_w + 4 * pd * (1 - pd) / pairs_x)
    assert abs(ps - 2 * pd) < 3 * sd
    assert np.bincount(g.group).tolist() == [h, h]


def test_random_group_ratio_one():
    g = gen_random_group(6000, 4.0, 1.0, RngHandle(2))
    h = 3000
    within, across = edge_split(g)
    ps, pd = within / (h * (h - 1)), across / (h * h)
    sd = math.sqrt(ps / (h * (h - 1)) + pd / (h * h))
    assert abs(ps - pd) < 3 * sd


def test_random_group_errors():
    with pytest.raises(ValueError):
        gen_random_group(11)
    with pytest.raises(ValueError, match="exceed 1"):
        gen_random_group(4, avg_degree=10)


def test_geometric_mean_degree():
    g = gen_geometric_group(10_000, RngHandle(3))
    assert abs(g.out_degree().mean() - 4) <= 0.3
    assert abs(np.mean(g.group == 0) - 0.3) < 1e-3


def test_geometric_mix_monotone():
    fracs = []
    for mix in (1.0, 1.5, 2.0, 3.0, 4.0):
        g = gen_geometric_group(4000, RngHandle(4), mix=mix)
        fracs.append(graph_stats(g)["within_fraction"])
    assert all(b > a for a, b in zip(fracs, fracs[1:]))


def test_geometric_large_decay_looks_like_random_group():
    n, h = 1200, 600
    g = gen_geometric_group(n, RngHandle(5), decay=1e4, mix=2.0, fractions=(0.5, 0.5))
    assert abs(g.out_degree().mean() - 4) < 0.3
    within, across = edge_split(g)
    ps, pd = within / (h * (h - 1)), across / (h * h)
    sd = math.sqrt(ps / (h * (h - 1)) + 4 * pd / (h * h))
    assert abs(ps - 2 * pd) < 3 * sd


def test_trust_homogeneous():
    g = assign_trust(gen_random_group(1000, rng=RngHandle(6)), "homogeneous")
    assert np.all(g.trust == 0.7)


def test_trust_group_variable_closed_form():
    g = gen_random_group(2000, rng=RngHandle(7))
    t = assign_trust(g, "group_variable")
    same = g.group[g.src] == g.group[g.dst]
    f_a = same.mean()
    assert np.all(t.trust[same] == pytest.approx(0.75))
    assert t.trust.mean() == pytest.approx(0.7, abs=1e-12)
    assert np.all(t.trust[~same] == pytest.approx((0.7 - f_a * 0.75) / (1 - f_a)))


def test_trust_group_variable_half_split():
    # f_A = 0.5 exactly: two within-group edges and two across
    g = _from_pairs(4, [(0, 1), (2, 3), (0, 2), (1, 3)], np.array([0, 0, 1, 1]))
    t = assign_trust(g, "group_variable")
    cross = t.trust[g.group[g.src] != g.group[g.dst]]
    assert np.allclose(cross, 0.65) and t.trust.mean() == pytest.approx(0.7)
    assert np.all(assign_trust(g, "group_variable", eps=0.0).trust == pytest.approx(0.7))


def test_trust_group_variable_unsolvable():
    g = _from_pairs(4, [(0, 1), (2, 3), (1, 2)], np.array([0, 0, 1, 1]))
    with pytest.raises(ValueError, match="f_A"):
        assign_trust(g, "group_variable", a=0.2, eps=0.7)


def test_trust_range_symmetric_and_mean():
    g = gen_random_group(4000, rng=RngHandle(8))
    t = assign_trust(g, "range", RngHandle(9))
    rev = g.reverse_arc_index()
    assert np.array_equal(t.trust, t.trust[rev])
    assert abs(t.trust.mean() - 0.7) < 0.005
    same = g.group[g.src] == g.group[g.dst]
    assert t.trust[same].min() >= 0.7 and t.trust[same].max() <= 0.8


def test_thresholds():
    g = gen_random_group(20_000, rng=RngHandle(10))
    tl, th = assign_thresholds(g, (0.15, 0.55))
    assert np.all(tl == 0.15) and np.all(th == 0.55)
    tl, th = assign_thresholds(g, (0.4, 0.4))
    assert np.all(tl == th)
    tl, th = assign_thresholds(g, None, RngHandle(11))
    se = 0.1 / math.sqrt(12 * g.n)
    assert abs(tl.mean() - 0.15) < 3 * se and abs(th.mean() - 0.55) < 3 * se
    assert np.all(tl <= th)
    with pytest.raises(ValueError):
        assign_thresholds(g, (0.5, 0.2))
    with pytest.raises(ValueError):
        assign_thresholds(g, None, tl_range=(0.1, 0.6), th_range=(0.5, 0.6))


@pytest.mark.parametrize("make", [
    lambda r: gen_scale_free(2000, 2, r),
    lambda r: gen_random_group(2000, rng=r),
    lambda r: gen_geometric_group(2000, r, decay=0.04),
])
def test_generators_valid_and_reproducible(make):
    a, b = make(RngHandle(12)), make(RngHandle(12))
    assert a == b and a.symmetric
    for scen in ("homogeneous", "group_variable", "range"):
        g = assign_trust(a, scen, RngHandle(13))
        tl, th = assign_thresholds(g, None, RngHandle(14))
        inst = GeneralInstance.build(g, tl, th, [SourceSpec(0.95, 3, 0.9)])
        assert validate_instance(inst) == []
    assert make(RngHandle(15)) != a
