"""Small hand-built instances that break monotonicity and submodularity.

Both use one source with value 1, full node-source trust and the max-max
combination rules (``lambda_d = lambda_s = 0``).
"""

from __future__ import annotations

import math

import numpy as np

from .model import GeneralInstance, SourceSpec, TrustGraph


def bridge_gadget(k: int = 3, tau: int = 1, transmit_p: float = 1.0, budget: int = 2):
    """Chain ``a - x1 - x2 - c`` with ``k`` leaves on ``c`` and a weak side node ``b``.

    ``c`` has thresholds (0.1, 0.1) so a faint signal from ``b`` makes it leave
    before the strong signal from ``a`` arrives, cutting off the leaves.
    Returns ``(instance, names)`` where ``names`` maps labels to node ids.
    """
    names = {"a": 0, "x1": 1, "x2": 2, "c": 3, "b": 4}
    leaves = list(range(5, 5 + k))
    for i, leaf in enumerate(leaves):
        names[f"p{i}"] = leaf
    n = 5 + k
    edges = [(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (4, 3, 0.1)]
    edges += [(3, leaf, 1.0) for leaf in leaves]
    g = TrustGraph.from_edges(n, edges)
    t_l = np.full(n, 0.5)
    t_h = np.full(n, 0.5)
    t_l[3] = t_h[3] = 0.1
    inst = GeneralInstance.build(
        g, t_l, t_h, [SourceSpec(1.0, budget, 1.0)],
        lambda_d=0.0, lambda_s=0.0, tau=tau, transmit_p=transmit_p,
    )
    return inst, names


def query_gadget(k: int = 3, tau: int = 10, transmit_p: float = 1.0, budget: int = 2):
    """``a - d`` (trust 0.9), ``d - c``, ``b - c`` (trust 0.1), ``c - e`` and ``k`` nodes past ``e``.

    ``d`` never believes (threshold 0.91) but still answers ``c``'s queries, so
    ``c`` converts only when both ``a`` and ``b`` are seeded.
    """
    names = {"a": 0, "b": 1, "c": 2, "d": 3, "e": 4}
    tail = list(range(5, 5 + k))
    for i, v in enumerate(tail):
        names[f"p{i}"] = v
    n = 5 + k
    edges = [(0, 3, 0.9), (3, 2, 1.0), (1, 2, 0.1), (2, 4, 1.0)]
    prev = 4
    for v in tail:
        edges.append((prev, v, 1.0))
        prev = v
    g = TrustGraph.from_edges(n, edges)
    t_l = np.full(n, 0.5)
    t_h = np.full(n, 0.5)
    t_l[3] = t_h[3] = 0.91
    t_l[2], t_h[2] = 0.1, 0.9
    inst = GeneralInstance.build(
        g, t_l, t_h, [SourceSpec(1.0, budget, 1.0)],
        lambda_d=0.0, lambda_s=0.0, tau=tau if tau is not None else math.inf,
        transmit_p=transmit_p,
    )
    return inst, names
