import numpy as np
import pytest

from trustdiff.maxmax import SimplifiedInstance
from trustdiff.model import GeneralInstance, SourceSpec, TrustGraph


def random_graph(rs, n, density=0.15, symmetric=None, trust=None):
    """Random digraph (or symmetric graph) with trusts in (0, 1]."""
    symmetric = rs.random() < 0.5 if symmetric is None else symmetric
    arcs = {}
    for u in range(n):
        for v in range(n):
            if u == v or (symmetric and v < u) or rs.random() >= density:
                continue
            t = float(rs.uniform(0.3, 1.0)) if trust is None else trust
            arcs[(u, v)] = t
            if symmetric:
                arcs[(v, u)] = t
    src = [a[0] for a in arcs]
    dst = [a[1] for a in arcs]
    return TrustGraph(n, src, dst, list(arcs.values()), symmetric=symmetric)


def random_sinst(rs, n, K=1, budgets=None, uniform_threshold=False):
    g = random_graph(rs, n, density=float(rs.uniform(0.05, 0.4)))
    th = np.full(n, float(rs.uniform(0.2, 0.7))) if uniform_threshold else rs.uniform(0.1, 0.8, n)
    vals = rs.uniform(0.6, 1.0, K)
    a = rs.uniform(0.5, 1.0, (K, n))
    budgets = budgets if budgets is not None else tuple(int(b) for b in rs.integers(1, 3, K))
    return SimplifiedInstance(g, th, vals, a, budgets)


def degenerate_general(sinst, tau=float("inf"), p=1.0):
    """General instance that behaves like the given max-max instance."""
    srcs = [SourceSpec(float(v), b, sinst.node_trust[k].copy())
            for k, (v, b) in enumerate(zip(sinst.source_values, sinst.budgets))]
    return GeneralInstance.build(sinst.graph, sinst.threshold, sinst.threshold, srcs,
                                 lambda_d=0.0, lambda_s=0.0, tau=tau, transmit_p=p)


@pytest.fixture
def rs():
    return np.random.default_rng(12345)


# one line per acceptance criterion, printed at the end of the run
ACCEPTANCE = []


def record(num, ok, detail=""):
    ACCEPTANCE.append(f"criterion {num:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
    print(ACCEPTANCE[-1])
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
