import math

import numpy as np
import pytest

from conftest import degenerate_general, random_sinst
from oracles import all_seedings, maxmax_coverage
from trustdiff.gadgets import bridge_gadget, query_gadget
from trustdiff.graphgen import assign_trust, gen_random_group
from trustdiff.maxmax import SimplifiedInstance, union_coverage
from trustdiff.model import RngHandle, Seeding, TrustGraph
from trustdiff.seeders import (
    GreedyWorkspace,
    actual_greedy,
    brute_force,
    greedy_lazy_hybrid,
    greedy_maxmax,
    high_degree_seeding,
    random_seeding,
)


def star(trust=0.9, leaves=5):
    return TrustGraph.from_edges(leaves + 1, [(0, i, trust) for i in range(1, leaves + 1)])


def test_star_picks_center():
    s = SimplifiedInstance.single(star(), 0.5, 1.0, 1)
    seeding = greedy_maxmax(s)
    assert seeding == Seeding([[0]])
    assert union_coverage(s, seeding)[0] == 6


def test_two_chains_one_seed_each():
    g = TrustGraph.from_edges(6, [(0, 1, 0.9), (1, 2, 0.9), (3, 4, 0.9), (4, 5, 0.9)])
    s = SimplifiedInstance.single(g, 0.5, 1.0, 2)
    chosen = greedy_maxmax(s).sets[0]
    assert len(chosen & {0, 1, 2}) == 1 and len(chosen & {3, 4, 5}) == 1


def test_brute_force_oracle_agrees_with_enumeration():
    rs = np.random.default_rng(0)
    for _ in range(20):
        s = random_sinst(rs, 6, K=2, budgets=(1, 2))
        want = max(maxmax_coverage(s, Seeding(c)).__len__() for c in all_seedings(6, (1, 2)))
        assert brute_force(s)[1] == want


def test_greedy_bounds_small():
    rs = np.random.default_rng(1)
    for _ in range(40):
        s = random_sinst(rs, 7, K=2, budgets=(1, 2))
        opt = brute_force(s)[1]
        assert union_coverage(s, greedy_maxmax(s))[0] >= 0.5 * opt
        opt_t = brute_force(s, total_budget=3)[1]
        got = union_coverage(s, greedy_maxmax(s, total_budget=3))[0]
        assert got >= (1 - 1 / math.e) * opt_t
        assert opt >= union_coverage(s, greedy_maxmax(s))[0]


def test_brute_force_gadget_and_empty():
    inst, nm = bridge_gadget(3, tau=1, budget=1)
    seeding, val = brute_force(inst)
    assert val == 7
    assert nm["a"] in seeding.sets[0] or val == 7
    inst0, _ = bridge_gadget(3, tau=1, budget=0)
    seeding, val = brute_force(inst0)
    assert seeding.size() == 0 and val == 0


def test_brute_force_refuses_large():
    s = SimplifiedInstance.single(star(leaves=60), 0.5, 1.0, 5)
    with pytest.raises(ValueError, match="exceed cap"):
        brute_force(s, cap=1000)


def test_lazy_hybrid_equals_plain():
    rs = np.random.default_rng(2)
    for _ in range(60):
        s = random_sinst(rs, int(rs.integers(2, 40)), K=int(rs.integers(1, 4)))
        ref = greedy_maxmax(s)
        for sw in (0.0, 0.25, 1.0):
            assert greedy_lazy_hybrid(s, switch=sw) == ref
        assert greedy_lazy_hybrid(s, total_budget=4) == greedy_maxmax(s, total_budget=4)


def test_lazy_hybrid_evaluations_ratio():
    g = assign_trust(gen_random_group(5000, rng=RngHandle(3)), "group_variable")
    s = SimplifiedInstance.single(g, 0.5, 0.95, 250, 0.9)
    w_plain, w_lazy = GreedyWorkspace(), GreedyWorkspace()
    a = greedy_maxmax(s, workspace=w_plain)
    b = greedy_lazy_hybrid(s, workspace=w_lazy)
    assert a == b
    # the first pass evaluates every pair once in both variants; compare the rest
    assert w_lazy.evaluations < 0.5 * w_plain.evaluations
    rest = (w_lazy.evaluations - s.n) / (w_plain.evaluations - s.n)
    assert rest < 0.2


def test_actual_greedy_gadget_candidates():
    inst, nm = query_gadget(3, tau=10)
    a, b = nm["a"], nm["b"]
    seeding = actual_greedy(inst, replications=1, candidates=[a, b])
    assert seeding == Seeding([[a, b]])
    best = actual_greedy(inst, replications=1)
    from trustdiff.diffusion import run

    assert run(inst, best).believers >= 3 + 4


def test_actual_greedy_matches_maxmax_on_degenerate():
    rs = np.random.default_rng(4)
    for _ in range(15):
        s = random_sinst(rs, int(rs.integers(3, 12)), K=int(rs.integers(1, 3)))
        inst = degenerate_general(s)
        assert actual_greedy(inst, replications=1) == greedy_maxmax(s)


def test_actual_greedy_empty_budget_and_guard():
    inst, _ = query_gadget(3, budget=0)
    assert actual_greedy(inst, replications=1).size() == 0
    with pytest.raises(ValueError, match="size_guard"):
        actual_greedy(inst, size_guard=3)


def test_random_seeding():
    assert random_seeding(10, (4, 6), RngHandle(0)).nodes() == set(range(10))
    assert random_seeding(50, (3, 2), RngHandle(1)) == random_seeding(50, (3, 2), RngHandle(1))
    with pytest.raises(ValueError):
        random_seeding(5, (3, 3), RngHandle(0))


def test_random_seeding_frequencies():
    gen = np.random.default_rng(5)
    counts = np.zeros(100)
    draws = 10_000
    for _ in range(draws):
        counts[list(random_seeding(100, (10,), gen).nodes())] += 1
    sigma = math.sqrt(draws * 0.1 * 0.9)
    assert np.all(np.abs(counts - draws * 0.1) < 4 * sigma)
    assert np.mean(np.abs(counts - draws * 0.1) < 3 * sigma) > 0.97


def test_high_degree():
    g = TrustGraph(3, [0, 0, 1], [1, 2, 0], [0.7, 0.75, 0.9])
    assert g.out_trust()[0] == pytest.approx(1.45)
    assert high_degree_seeding(g, (1,)) == Seeding([[0]])
    assert high_degree_seeding(star(), (1,)) == Seeding([[0]])
    rs = np.random.default_rng(6)
    from conftest import random_graph

    h = random_graph(rs, 30, trust=0.6)
    deg = h.out_degree()
    order = np.lexsort((np.arange(30), -deg))[:5]
    assert high_degree_seeding(h, (2, 3)).nodes() == set(order.tolist())


def test_all_seeders_respect_budgets():
    rs = np.random.default_rng(7)
    for _ in range(20):
        s = random_sinst(rs, 15, K=3)
        for seeding in (greedy_maxmax(s), greedy_lazy_hybrid(s),
                        random_seeding(15, s.budgets, rs), high_degree_seeding(s.graph, s.budgets)):
            assert seeding.respects(s.budgets)
