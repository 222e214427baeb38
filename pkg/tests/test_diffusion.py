import math
import random

import numpy as np
import pytest

from conftest import random_graph
from oracles import reference_run
from trustdiff.diffusion import (
    BELIEVED,
    DISBELIEVED,
    EVACUATED,
    UNDECIDED,
    apply_seeding,
    estimate_coverage,
    format_trace,
    fuse_source,
    info_value,
    initial_state,
    run,
    step,
)
from trustdiff.gadgets import bridge_gadget, query_gadget
from trustdiff.graphgen import assign_trust, gen_random_group
from trustdiff.model import GeneralInstance, RngHandle, Seeding, SourceSpec, TrustGraph


def test_info_value_examples():
    assert info_value([0.3, 0.5], 0.0) == pytest.approx(0.5)
    assert info_value([0.3, 0.5], 1.0) == pytest.approx(0.8)
    assert info_value([0.3, 0.5], 0.2) == pytest.approx(0.56)
    assert info_value([0.0, 0.0], 0.3) == 0.0


def test_fuse_source_examples():
    assert fuse_source(0.2, [0.7, 0.1], 0.0) == pytest.approx(0.7)
    assert fuse_source(0.2, [0.7, 0.1], 1.0) == pytest.approx(1.0)
    assert fuse_source(0.0, [0.4, 0.2], 0.5) == pytest.approx(0.5)


def single_node(tau=5):
    g = TrustGraph(1, [], [], [])
    return GeneralInstance.build(g, 0.15, 0.55, [SourceSpec(0.95, 1, 0.9)], tau=tau)


def test_apply_seeding_value():
    inst = single_node()
    st = apply_seeding(initial_state(inst), inst, Seeding([[0]]))
    assert st.direct[0, 0] == pytest.approx(0.855)
    assert st.state[0] == BELIEVED


def test_empty_seeding_all_disbelieved():
    g = TrustGraph.from_edges(4, [(0, 1), (1, 2)])
    inst = GeneralInstance.build(g, 0.15, 0.55, [SourceSpec(0.95, 1)])
    st = apply_seeding(initial_state(inst), inst, Seeding.empty(1))
    assert not st.info.any() and (st.state == DISBELIEVED).all()


def test_same_node_two_sources():
    g = TrustGraph(2, [], [], [])
    inst = GeneralInstance.build(g, 0.1, 0.5, [SourceSpec(0.9, 1), SourceSpec(0.6, 1)])
    st = apply_seeding(initial_state(inst), inst, Seeding([[1], [1]]))
    assert st.direct[1].tolist() == [0.9, 0.6]


def test_budget_violation_rejected():
    inst = single_node()
    with pytest.raises(ValueError, match="budget"):
        apply_seeding(initial_state(inst), inst, Seeding([[0, 1]]))


def test_single_node_evacuates_after_tau():
    out = run(single_node(tau=5), Seeding([[0]]), trace_states=True)
    assert out.believers == 1 and out.evacuated == 1
    states = [c["Evacuated"] for c in out.state_trace]
    # evacuated after exactly 5 rounds
    assert states[4] == 0 and states[5] == 1
    assert out.converged


def test_one_hop():
    g = TrustGraph(2, [0], [1], [0.9])
    inst = GeneralInstance.build(g, 0.5, 0.5, [SourceSpec(1.0, 1)], tau=100)
    st = apply_seeding(initial_state(inst), inst, Seeding([[0]]))
    st, _ = step(st, inst)
    assert st.info[1] == pytest.approx(0.9)
    assert st.state[1] == BELIEVED


def test_undecided_pulls_from_non_believer():
    # node 0 holds 0.5 but does not believe; node 1 is undecided from a weak
    # second source and pulls 0's value; node 2 knows nothing and never asks
    g = TrustGraph.from_edges(3, [(0, 1, 1.0), (1, 2, 1.0)])
    tl = np.full(3, 0.1)
    th = np.array([0.9, 0.9, 0.45])
    inst = GeneralInstance.build(g, tl, th, [SourceSpec(0.5, 1), SourceSpec(0.15, 1)], tau=10)
    st = apply_seeding(initial_state(inst), inst, Seeding([[0], [1]]))
    assert st.state.tolist() == [UNDECIDED, UNDECIDED, DISBELIEVED]
    st, _ = step(st, inst)
    assert st.info[1] == pytest.approx(0.5)
    st, _ = step(st, inst)
    assert st.info[2] == 0.0


def test_empty_seeding_converges_at_step_one():
    inst, _ = query_gadget(3)
    out = run(inst, Seeding.empty(1))
    assert out.believers == 0 and out.steps_executed == 1 and out.converged


def test_bridge_gadget_counts():
    inst, nm = bridge_gadget(k=3, tau=1)
    assert run(inst, Seeding([[nm["a"]]])).believers == 7
    assert run(inst, Seeding([[nm["a"], nm["b"]]])).believers == 5


def test_query_gadget_counts():
    inst, nm = query_gadget(k=3, tau=10)
    a, b = nm["a"], nm["b"]
    assert run(inst, Seeding([[]])).believers == 0
    assert run(inst, Seeding([[a]])).believers == 1
    out_b = run(inst, Seeding([[b]]))
    assert out_b.believer_set == {b}
    assert run(inst, Seeding([[a, b]])).believers == 3 + 4


def test_p_zero_only_seeds():
    rs = np.random.default_rng(3)
    g = random_graph(rs, 20, density=0.3)
    th = rs.uniform(0.3, 0.9, 20)
    inst = GeneralInstance.build(g, 0.1, th, [SourceSpec(0.8, 6, 0.9)], transmit_p=0.0)
    seeds = [0, 3, 5, 7, 11, 13]
    out = run(inst, Seeding([seeds]), RngHandle(1))
    assert out.believers == sum(0.72 >= th[u] for u in seeds)


def test_p_one_replications_identical():
    inst, nm = query_gadget(5)
    est = estimate_coverage(inst, Seeding([[nm["a"], nm["b"]]]), 5, RngHandle(0))
    assert est.stderr == 0.0 and set(est.samples) == {9.0}


def test_trace_format():
    out = run(single_node(2), Seeding([[0]]), trace_states=True)
    lines = format_trace(out).splitlines()
    assert lines[0] == "step=0 believed=1 undecided=0 evacuated=0"
    assert lines[-1] == "step=2 believed=0 undecided=0 evacuated=1"


def _random_general(rs, n, p):
    g = random_graph(rs, n, density=float(rs.uniform(0.05, 0.3)))
    K = int(rs.integers(1, 4))
    tl = rs.uniform(0.05, 0.3, n)
    th = tl + rs.uniform(0.0, 0.5, n)
    srcs = [SourceSpec(float(rs.uniform(0.5, 1)), 3, rs.uniform(0.5, 1, n)) for _ in range(K)]
    tau = [1, 2, 5, math.inf][int(rs.integers(0, 4))]
    inst = GeneralInstance.build(
        g, tl, th, srcs, lambda_d=float(rs.choice([0, 0.3, 1.0])),
        lambda_s=float(rs.choice([0, 0.2, 1.0])), tau=tau, transmit_p=p)
    seeding = Seeding([rs.choice(n, size=3, replace=False) for _ in range(K)])
    return inst, seeding


def _oracle(inst, seeding, rng=None, max_steps=50):
    srcs = [(s.info_value, s.trust_vector(inst.n).tolist()) for s in inst.sources]
    return reference_run(inst.n, inst.graph.arcs(), inst.t_l.tolist(), inst.t_h.tolist(), srcs,
                         [sorted(s) for s in seeding.sets], inst.lambda_d, inst.lambda_s,
                         inst.tau, inst.transmit_p, rng, max_steps)


def test_matches_reference_simulator_p1():
    rs = np.random.default_rng(7)
    for _ in range(80):
        inst, seeding = _random_general(rs, int(rs.integers(3, 25)), 1.0)
        assert run(inst, seeding).believer_set == _oracle(inst, seeding)


def test_matches_reference_simulator_p075():
    rs = np.random.default_rng(11)
    g = assign_trust(gen_random_group(100, avg_degree=4, rng=RngHandle(5)), "group_variable")
    tl = np.full(100, 0.15)
    th = np.full(100, 0.55)
    inst = GeneralInstance.build(g, tl, th, [SourceSpec(0.95, 2, 0.9)] * 2,
                                 lambda_d=0.1, tau=5, transmit_p=0.75)
    seeding = Seeding([rs.choice(100, 2, replace=False), rs.choice(100, 2, replace=False)])
    R = 300
    ref = np.array([len(_oracle(inst, seeding, random.Random(r))) for r in range(R)])
    est = estimate_coverage(inst, seeding, R, RngHandle(99))
    se = math.sqrt(est.stderr ** 2 + (ref.std(ddof=1) / math.sqrt(R)) ** 2)
    assert abs(est.mean - ref.mean()) < 3 * se


def test_memory_never_decreases_and_states_consistent():
    rs = np.random.default_rng(5)
    for _ in range(20):
        inst, seeding = _random_general(rs, 20, 0.6)
        gen = RngHandle(3).generator()
        st = apply_seeding(initial_state(inst), inst, seeding)
        for _ in range(15):
            new, _ = step(st, inst, gen)
            assert (new.slots >= st.slots).all() and (new.direct >= st.direct).all()
            assert (new.ever_believed >= st.ever_believed).all()
            assert not ((st.state == EVACUATED) & (new.state != EVACUATED)).any()
            live = new.state != EVACUATED
            expect = np.where(new.info >= inst.t_h, BELIEVED,
                              np.where(new.info >= inst.t_l, UNDECIDED, DISBELIEVED))
            assert np.array_equal(new.state[live], expect[live])
            st = new


def test_monotone_without_evacuation():
    rs = np.random.default_rng(21)
    for _ in range(40):
        inst, seeding = _random_general(rs, int(rs.integers(4, 20)), 1.0)
        inst = inst.replace(tau=math.inf)
        base = run(inst, seeding).believers
        k = int(rs.integers(0, inst.K))
        x = int(rs.integers(0, inst.n))
        sets = [set(s) for s in seeding.sets]
        sets[k].add(x)
        wider = inst.replace(sources=tuple(
            SourceSpec(s.info_value, s.budget + 1, s.node_trust) for s in inst.sources))
        assert run(wider, Seeding(sets)).believers >= base


def test_gadgets_break_monotonicity_and_submodularity():
    inst, nm = bridge_gadget(3, tau=1)
    assert run(inst, Seeding([[nm["a"]]])).believers > run(inst, Seeding([[nm["a"], nm["b"]]])).believers
    inst, nm = query_gadget(3, tau=10)
    g = lambda s: run(inst, Seeding([s])).believers  # noqa: E731
    a, b = nm["a"], nm["b"]
    assert g([b]) - g([]) < g([a, b]) - g([a])


def test_replay_is_exact():
    rs = np.random.default_rng(2)
    inst, seeding = _random_general(rs, 30, 0.5)
    a = run(inst, seeding, RngHandle(4, "x"))
    b = run(inst, seeding, RngHandle(4, "x"))
    assert a == b
