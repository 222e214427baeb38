"""Deterministic max-max model: singleton coverage sets and union coverage.

With max fusion, single thresholds and no evacuation, the converted set of a
seeding is the union of what each (seed, source) pair converts alone.  A
singleton set is the fixed point of a max-product propagation in which only
converted nodes forward, computed here as a best-first search in decreasing
value order.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numba
import numpy as np

from .model import Seeding, TrustGraph

__all__ = [
    "SimplifiedInstance",
    "SingletonCoverage",
    "singleton_coverage",
    "singleton_values",
    "union_coverage",
    "collapse_identical_sources",
    "all_singletons",
]


@dataclass(frozen=True, eq=False)
class SimplifiedInstance:
    """Max-max instance: per-node threshold, ``K`` sources with values and node trust."""

    graph: TrustGraph
    threshold: np.ndarray  # (n,)
    source_values: np.ndarray  # (K,)
    node_trust: np.ndarray  # (K, n)
    budgets: tuple

    def __post_init__(self):
        n = self.graph.n
        th = np.broadcast_to(np.asarray(self.threshold, dtype=np.float64), (n,)).copy()
        vals = np.atleast_1d(np.asarray(self.source_values, dtype=np.float64)).copy()
        a = np.broadcast_to(np.asarray(self.node_trust, dtype=np.float64), (len(vals), n)).copy()
        for arr in (th, vals, a):
            arr.flags.writeable = False
        object.__setattr__(self, "threshold", th)
        object.__setattr__(self, "source_values", vals)
        object.__setattr__(self, "node_trust", a)
        object.__setattr__(self, "budgets", tuple(int(b) for b in np.atleast_1d(self.budgets)))
        if len(self.budgets) != len(vals):
            raise ValueError("need one budget per source")

    @classmethod
    def single(cls, graph, threshold, info_value, budget, node_trust=1.0):
        n = graph.n
        a = np.broadcast_to(np.asarray(node_trust, dtype=np.float64), (n,)).reshape(1, n)
        return cls(graph, threshold, [info_value], a, (budget,))

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def K(self) -> int:
        return len(self.source_values)

    def seed_value(self, u: int, k: int) -> float:
        return float(self.node_trust[k, u] * self.source_values[k])


@dataclass(frozen=True)
class SingletonCoverage:
    seed: tuple  # (node, source)
    converted: frozenset


@numba.njit(cache=True, inline="always")
def _before(ka, ia, kb, ib):
    return ka < kb or (ka == kb and ia < ib)


@numba.njit(cache=True)
def _heap_push(keys, ids, size, key, node):
    """Min-heap on ``(key, node)`` held in two arrays; returns the new size."""
    i = size
    while i > 0:
        parent = (i - 1) >> 1
        if _before(key, node, keys[parent], ids[parent]):
            keys[i] = keys[parent]
            ids[i] = ids[parent]
            i = parent
        else:
            break
    keys[i] = key
    ids[i] = node
    return size + 1


@numba.njit(cache=True)
def _heap_pop(keys, ids, size):
    """Remove the root; the caller reads ``keys[0], ids[0]`` first.  Returns the new size."""
    size -= 1
    key = keys[size]
    node = ids[size]
    i = 0
    while True:
        c = 2 * i + 1
        if c >= size:
            break
        if c + 1 < size and _before(keys[c + 1], ids[c + 1], keys[c], ids[c]):
            c += 1
        if _before(keys[c], ids[c], key, node):
            keys[i] = keys[c]
            ids[i] = ids[c]
            i = c
        else:
            break
    keys[i] = key
    ids[i] = node
    return size


@numba.njit(cache=True)
def _best_first(out_indptr, dst, trust, threshold, start, start_value, value, order, vals,
                covered, cov_val, hkeys, hids, touched):
    """Gated max-product search from one seed.

    ``value`` is an all-zero scratch array of length n and is reset before
    returning.  Settled converted nodes go to ``order`` (values in ``vals``);
    returns their count.  Ties in value are settled in increasing node id.
    ``hkeys``/``hids`` (length m + 1) and ``touched`` (length n) are scratch.

    A node with ``covered[u]`` and ``cov_val[u] >= v`` is not expanded:
    whatever it would forward is already delivered at least as strongly by
    the covering seeds, so every node only reachable through it is covered
    too.  Pass ``covered`` all False for the plain singleton set.
    """
    size = _heap_push(hkeys, hids, 0, -start_value, start)
    value[start] = start_value
    touched[0] = start
    nt = 1
    count = 0
    while size > 0:
        v = -hkeys[0]
        u = hids[0]
        size = _heap_pop(hkeys, hids, size)
        # settled nodes carry a negative marker
        if value[u] < 0.0 or v < value[u] or v < threshold[u]:
            continue
        value[u] = -1.0 - v
        if covered[u] and cov_val[u] >= v:
            continue
        order[count] = u
        vals[count] = v
        count += 1
        for e in range(out_indptr[u], out_indptr[u + 1]):
            w = dst[e]
            cand = trust[e] * v
            if value[w] < 0.0:
                continue
            if cand > value[w]:
                if value[w] == 0.0:
                    touched[nt] = w
                    nt += 1
                value[w] = cand
                size = _heap_push(hkeys, hids, size, -cand, w)
    for i in range(nt):
        value[touched[i]] = 0.0
    return count


@numba.njit(cache=True)
def _best_first_values(out_indptr, dst, trust, threshold, start, start_value, value):
    """As ``_best_first`` but leaves final values (converted or not) in ``value``."""
    settled = np.zeros(len(value), dtype=np.bool_)
    heap = [(-start_value, start)]
    value[start] = start_value
    while len(heap) > 0:
        negv, u = heapq.heappop(heap)
        v = -negv
        if settled[u] or v < value[u]:
            continue
        settled[u] = True
        if v < threshold[u]:
            continue
        for e in range(out_indptr[u], out_indptr[u + 1]):
            w = dst[e]
            cand = trust[e] * v
            if not settled[w] and cand > value[w]:
                value[w] = cand
                heapq.heappush(heap, (-cand, w))


class _Searcher:
    """Reusable scratch space for repeated singleton searches on one instance."""

    def __init__(self, sinst: SimplifiedInstance):
        g = sinst.graph
        self.sinst = sinst
        self.indptr = np.ascontiguousarray(g.out_indptr)
        self.dst = np.ascontiguousarray(g.dst)
        self.trust = np.ascontiguousarray(g.trust)
        self.threshold = np.ascontiguousarray(sinst.threshold)
        self.value = np.zeros(g.n)
        self.order = np.empty(g.n, dtype=np.int64)
        self.vals = np.empty(g.n)
        self.no_cover = np.zeros(g.n, dtype=np.bool_)
        self.no_val = np.zeros(g.n)
        # every push follows a strict value increase on an arc, so m + 1 slots suffice
        self.hkeys = np.empty(g.m + 1)
        self.hids = np.empty(g.m + 1, dtype=np.int64)
        self.touched = np.empty(g.n, dtype=np.int64)
        self.calls = 0

    def cover(self, u: int, k: int, covered=None, cov_val=None) -> np.ndarray:
        """Converted node ids for seed ``(u, k)``, in settle order.

        With ``covered``/``cov_val`` the search is pruned at covered nodes
        already holding at least the arriving value; the result then still
        contains every uncovered member of the singleton set.
        """
        return self.cover_values(u, k, covered, cov_val)[0]

    def cover_values(self, u: int, k: int, covered=None, cov_val=None):
        self.calls += 1
        s = self.sinst.seed_value(u, k)
        if s <= 0.0 and self.threshold[u] > 0.0:
            return self.order[:0].copy(), self.vals[:0].copy()
        if covered is None:
            covered, cov_val = self.no_cover, self.no_val
        c = _best_first(self.indptr, self.dst, self.trust, self.threshold, u, s,
                        self.value, self.order, self.vals, covered, cov_val,
                        self.hkeys, self.hids, self.touched)
        return self.order[:c].copy(), self.vals[:c].copy()


def singleton_values(sinst: SimplifiedInstance, u: int, k: int) -> np.ndarray:
    """Final max-max value at every node when only ``(u, k)`` is seeded."""
    g = sinst.graph
    value = np.zeros(g.n)
    _best_first_values(
        np.ascontiguousarray(g.out_indptr), np.ascontiguousarray(g.dst),
        np.ascontiguousarray(g.trust), np.ascontiguousarray(sinst.threshold),
        int(u), sinst.seed_value(u, k), value,
    )
    return value


def singleton_coverage(sinst: SimplifiedInstance, u: int, k: int = 0) -> SingletonCoverage:
    if not 0 <= u < sinst.n:
        raise ValueError(f"node {u} out of range")
    conv = _Searcher(sinst).cover(int(u), int(k))
    return SingletonCoverage((int(u), int(k)), frozenset(conv.tolist()))


def all_singletons(sinst: SimplifiedInstance, pairs=None):
    """Converted sets for every (node, source) pair as a CSR ``(indptr, indices)``.

    Row ``u * K + k`` holds the set for pair ``(u, k)`` unless ``pairs`` (a
    list of row ids) selects a subset, in which case rows follow ``pairs``.
    """
    S = _Searcher(sinst)
    K = sinst.K
    rows = range(sinst.n * K) if pairs is None else pairs
    chunks = []
    indptr = [0]
    for r in rows:
        c = S.cover(r // K, r % K)
        chunks.append(c)
        indptr.append(indptr[-1] + len(c))
    indices = np.concatenate(chunks) if chunks else np.zeros(0, dtype=np.int64)
    return np.asarray(indptr, dtype=np.int64), indices


def union_coverage(sinst: SimplifiedInstance, seeding: Seeding):
    """Size and members of the union of singleton sets over all seeded pairs."""
    if seeding.K != sinst.K:
        raise ValueError(f"seeding has {seeding.K} sets but instance has {sinst.K} sources")
    S = _Searcher(sinst)
    covered = np.zeros(sinst.n, dtype=bool)
    for u, k in seeding.pairs():
        covered[S.cover(u, k)] = True
    conv = frozenset(np.flatnonzero(covered).tolist())
    return len(conv), conv


def collapse_identical_sources(sinst: SimplifiedInstance, rtol: float = 0.0) -> SimplifiedInstance:
    """Merge ``K`` identical sources into one with the summed budget."""
    v = sinst.source_values
    a = sinst.node_trust
    if not (np.allclose(v, v[0], rtol=rtol, atol=0) and np.allclose(a, a[0], rtol=rtol, atol=0)):
        raise ValueError("sources are not identical (values or node trust differ)")
    return SimplifiedInstance(
        sinst.graph, sinst.threshold, v[:1], a[:1], (sum(sinst.budgets),)
    )
