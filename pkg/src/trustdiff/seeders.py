"""Seed selection strategies.

Greedy on the max-max model comes in two flavours that return identical
seedings: ``greedy_maxmax`` recomputes every marginal gain each round from
stored singleton sets, while ``greedy_lazy_hybrid`` keeps stale gains in a
max-heap and only later materializes the inverse index ``delta`` so gains can
be decremented as nodes get covered.  Candidates are ``(node, source)`` pairs
flattened to ``row = node * K + source``; ties always go to the lowest row.
"""

from __future__ import annotations

import heapq
import itertools
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .diffusion import DEFAULT_MAX_STEPS, estimate_coverage
from .maxmax import SimplifiedInstance, _Searcher, all_singletons
from .model import GeneralInstance, RngHandle, Seeding, SourceSpec

log = logging.getLogger(__name__)

__all__ = [
    "GreedyWorkspace",
    "greedy_maxmax",
    "greedy_lazy_hybrid",
    "actual_greedy",
    "brute_force",
    "random_seeding",
    "high_degree_seeding",
    "split_ranked",
    "DEFAULT_SWITCH",
]

DEFAULT_SWITCH = 0.25
BRUTE_FORCE_CAP = 2_000_000


@dataclass
class GreedyWorkspace:
    """Bookkeeping shared by the greedy variants; also exposes counters."""

    covered: np.ndarray | None = None
    gains: np.ndarray | None = None  # N per row once fresh
    delta_indptr: np.ndarray | None = None
    delta_indices: np.ndarray | None = None
    materialized_at: int | None = None  # pick index at which delta was built
    evaluations: int = 0
    picks: list = field(default_factory=list)  # (node, source, gain)

    @property
    def coverage(self) -> int:
        return int(self.covered.sum()) if self.covered is not None else 0


def _caps(K, budgets, total_budget, n):
    """Per-source caps and a total cap."""
    if total_budget is not None:
        return np.full(K, n, dtype=np.int64), int(total_budget)
    b = np.minimum(np.asarray(budgets, dtype=np.int64), n)
    if len(b) != K:
        raise ValueError(f"{len(b)} budgets given for {K} sources")
    if (b < 0).any():
        raise ValueError("budgets must be non-negative")
    return b, int(b.sum())


def _to_seeding(picks, K):
    sets = [[] for _ in range(K)]
    for u, k, _ in picks:
        sets[k].append(u)
    return Seeding(sets)


def greedy_maxmax(sinst: SimplifiedInstance, budgets=None, total_budget=None,
                  workspace: GreedyWorkspace | None = None) -> Seeding:
    """Plain greedy: every round, recompute ``|gamma(u,k) - C|`` for all eligible pairs."""
    ws = workspace if workspace is not None else GreedyWorkspace()
    n, K = sinst.n, sinst.K
    caps, total = _caps(K, sinst.budgets if budgets is None else budgets, total_budget, n)
    indptr, indices = all_singletons(sinst)
    rows = n * K
    ws.evaluations += rows
    src_of = np.arange(rows) % K
    chosen = np.zeros(rows, dtype=bool)
    used = np.zeros(K, dtype=np.int64)
    covered = np.zeros(n, dtype=bool)
    ws.covered = covered
    while len(ws.picks) < total and covered.sum() < n:
        eligible = ~chosen & (used[src_of] < caps[src_of])
        if not eligible.any():
            break
        csum = np.concatenate(([0], np.cumsum(~covered[indices])))
        gains = csum[indptr[1:]] - csum[indptr[:-1]]
        ws.evaluations += int(eligible.sum())
        gains = np.where(eligible, gains, -1)
        r = int(np.argmax(gains))
        u, k = divmod(r, K)
        chosen[r] = True
        used[k] += 1
        covered[indices[indptr[r]:indptr[r + 1]]] = True
        ws.picks.append((u, k, int(gains[r])))
    ws.gains = None
    return _to_seeding(ws.picks, K)


def greedy_lazy_hybrid(sinst: SimplifiedInstance, budgets=None, total_budget=None,
                       switch: float = DEFAULT_SWITCH,
                       workspace: GreedyWorkspace | None = None) -> Seeding:
    """Lazy greedy with a late switch to incremental gain updates.

    Phase 1 keeps upper bounds on gains in a heap and re-evaluates only the
    top entry (stale bounds are valid because coverage is submodular).  Once
    ``|C| >= switch * reachable`` the inverse sets ``delta(w)`` are built for
    the remaining candidates and gains are decremented as nodes get covered.
    ``switch >= 1`` never materializes; ``switch <= 0`` does so up front.
    """
    ws = workspace if workspace is not None else GreedyWorkspace()
    n, K = sinst.n, sinst.K
    caps, total = _caps(K, sinst.budgets if budgets is None else budgets, total_budget, n)
    rows = n * K
    search = _Searcher(sinst)
    covered = np.zeros(n, dtype=bool)
    # lower bound on the value the chosen seeds deliver to each covered node
    cov_val = np.zeros(n)
    ws.covered = covered
    chosen = np.zeros(rows, dtype=bool)
    used = np.zeros(K, dtype=np.int64)

    # first pass: every gain is fresh against C = {}
    bound = np.empty(rows, dtype=np.int64)
    reach = np.zeros(n, dtype=bool)
    for r in range(rows):
        c = search.cover(r // K, r % K)
        bound[r] = len(c)
        reach[c] = True
    ws.evaluations += rows
    reachable = int(reach.sum())
    stamp = np.zeros(rows, dtype=np.int64)
    heap = [(-int(bound[r]), r) for r in range(rows)]
    heapq.heapify(heap)

    fwd_indptr = fwd_indices = row_pos = None
    gains = None

    def eligible_row(r):
        return not chosen[r] and used[r % K] < caps[r % K]

    def materialize():
        nonlocal fwd_indptr, fwd_indices, row_pos, gains
        cand = [r for r in range(rows) if eligible_row(r) and bound[r] > 0]
        # only the uncovered part of each set matters from here on
        chunks = []
        for r in cand:
            c = search.cover(r // K, r % K, covered, cov_val)
            chunks.append(c[~covered[c]])
        fwd_indptr = np.concatenate(([0], np.cumsum([len(c) for c in chunks]))).astype(np.int64)
        fwd_indices = np.concatenate(chunks) if chunks else np.zeros(0, dtype=np.int64)
        ws.evaluations += len(cand)
        row_pos = np.full(rows, -1, dtype=np.int64)
        row_pos[cand] = np.arange(len(cand))
        gains = np.zeros(rows, dtype=np.int64)
        csum = np.concatenate(([0], np.cumsum(~covered[fwd_indices])))
        gains[cand] = csum[fwd_indptr[1:]] - csum[fwd_indptr[:-1]]
        # delta(w): candidate rows whose set contains w
        owner = np.repeat(np.asarray(cand, dtype=np.int64), np.diff(fwd_indptr))
        order = np.argsort(fwd_indices, kind="stable")
        ws.delta_indices = owner[order]
        ws.delta_indptr = np.searchsorted(fwd_indices[order], np.arange(n + 1))
        ws.materialized_at = len(ws.picks)
        ws.gains = gains
        log.debug("materialized delta for %d candidates after %d picks", len(cand), len(ws.picks))

    def cover_nodes(nodes):
        new = nodes[~covered[nodes]]
        if len(new) and gains is not None:
            starts = ws.delta_indptr[new]
            lens = ws.delta_indptr[new + 1] - starts
            if lens.sum():
                pos = np.repeat(starts - np.cumsum(lens) + lens, lens) + np.arange(lens.sum())
                gains[:] -= np.bincount(ws.delta_indices[pos], minlength=rows)
        covered[new] = True
        return len(new)

    while len(ws.picks) < total and covered.sum() < n:
        if gains is None and switch < 1.0 and covered.sum() >= switch * reachable:
            materialize()
        if gains is not None:
            src = np.arange(rows) % K
            ok = ~chosen & (used[src] < caps[src])
            if not ok.any():
                break
            r = int(np.argmax(np.where(ok, gains, -1)))
            nodes = fwd_indices[fwd_indptr[row_pos[r]]:fwd_indptr[row_pos[r] + 1]] if row_pos[r] >= 0 else np.zeros(0, dtype=np.int64)
        else:
            r = -1
            while heap:
                negg, cand = heap[0]
                if not eligible_row(cand):
                    heapq.heappop(heap)
                    continue
                if stamp[cand] == len(ws.picks) or negg == 0:
                    heapq.heappop(heap)
                    r = cand
                    break
                c = search.cover(cand // K, cand % K, covered, cov_val)
                ws.evaluations += 1
                g = int((~covered[c]).sum())
                stamp[cand] = len(ws.picks)
                heapq.heapreplace(heap, (-g, cand))
            if r < 0:
                break
            nodes, vals = search.cover_values(r // K, r % K, covered, cov_val)
            np.maximum.at(cov_val, nodes, vals)
        u, k = divmod(r, K)
        chosen[r] = True
        used[k] += 1
        gain = cover_nodes(nodes)
        ws.picks.append((u, k, gain))
    return _to_seeding(ws.picks, K)


def _widen_budgets(inst: GeneralInstance, caps) -> GeneralInstance:
    """Copy whose source budgets admit every seeding within ``caps``."""
    return inst.replace(sources=tuple(
        SourceSpec(s.info_value, max(s.budget, int(c)), s.node_trust)
        for s, c in zip(inst.sources, caps)
    ))


def _with_pair(seeding: Seeding, u: int, k: int) -> Seeding:
    sets = [set(s) for s in seeding.sets]
    sets[k].add(u)
    return Seeding(sets)


def actual_greedy(inst: GeneralInstance, budgets=None, replications: int = 10,
                  rng: RngHandle | None = None, total_budget=None, candidates=None,
                  max_steps: int = DEFAULT_MAX_STEPS, size_guard: int = 300,
                  force: bool = False) -> Seeding:
    """Greedy directly on the general model, scoring pairs by simulated coverage.

    All candidates within one round share the same random streams.  This is
    ``O(B K n)`` coverage estimates, so instances above ``size_guard`` nodes
    are refused unless ``force`` is set.
    """
    if inst.n > size_guard and not force:
        raise ValueError(f"actual_greedy refused: n={inst.n} exceeds size_guard={size_guard} (pass force=True)")
    rng = rng or RngHandle(0)
    n, K = inst.n, inst.K
    caps, total = _caps(K, inst.budgets if budgets is None else budgets, total_budget, n)
    nodes = range(n) if candidates is None else sorted(int(u) for u in candidates)
    seeding = Seeding.empty(K)
    used = np.zeros(K, dtype=np.int64)
    eval_inst = _widen_budgets(inst, caps if total_budget is None else [total] * K)
    current = 0.0
    for rnd in range(total):
        stream = rng.derive(f"round/{rnd}")
        best = None
        for u in nodes:
            for k in range(K):
                if used[k] >= caps[k] or u in seeding.sets[k]:
                    continue
                est = estimate_coverage(eval_inst, _with_pair(seeding, u, k), replications, stream, max_steps)
                if best is None or est.mean > best[0]:
                    best = (est.mean, u, k)
        if best is None:
            break
        current, u, k = best
        seeding = _with_pair(seeding, u, k)
        used[k] += 1
        if current >= n:
            break
    return seeding


def _n_subsets(n, b):
    return sum(math.comb(n, j) for j in range(min(b, n) + 1))


def brute_force(inst, budgets=None, replications: int = 1, rng: RngHandle | None = None,
                total_budget=None, cap: int = BRUTE_FORCE_CAP,
                max_steps: int = DEFAULT_MAX_STEPS):
    """Exhaustive search over every budget-respecting seeding.

    Accepts a ``SimplifiedInstance`` (exact union coverage) or a
    ``GeneralInstance`` (mean of ``replications`` simulations on a fixed
    stream).  Returns ``(seeding, value)``; the first maximum in enumeration
    order wins.
    """
    simplified = isinstance(inst, SimplifiedInstance)
    n, K = inst.n, inst.K
    caps, total = _caps(K, inst.budgets if budgets is None else budgets, total_budget, n)

    if total_budget is not None:
        count = _n_subsets(n * K, total)
    else:
        count = math.prod(_n_subsets(n, int(b)) for b in caps)
    if count > cap:
        raise ValueError(f"brute_force refused: {count} candidate seedings exceed cap {cap}")

    if total_budget is not None:
        def seedings():
            for j in range(min(total, n * K) + 1):
                for combo in itertools.combinations(range(n * K), j):
                    sets = [[] for _ in range(K)]
                    for r in combo:
                        sets[r % K].append(r // K)
                    yield sets
    else:
        def seedings():
            per = [
                [c for j in range(int(b) + 1) for c in itertools.combinations(range(n), j)]
                for b in caps
            ]
            for combo in itertools.product(*per):
                yield [list(c) for c in combo]

    if simplified:
        indptr, indices = all_singletons(inst)
        masks = [
            sum(1 << int(v) for v in indices[indptr[r]:indptr[r + 1]])
            for r in range(n * K)
        ]

        def value(sets):
            m = 0
            for k, s in enumerate(sets):
                for u in s:
                    m |= masks[u * K + k]
            return bin(m).count("1")
    else:
        rng = rng or RngHandle(0)
        eval_inst = _widen_budgets(inst, caps if total_budget is None else [total] * K)

        def value(sets):
            return estimate_coverage(eval_inst, Seeding(sets), replications, rng, max_steps).mean

    best_sets, best_val = None, -math.inf
    for sets in seedings():
        v = value(sets)
        if v > best_val:
            best_sets, best_val = sets, v
    return Seeding(best_sets), best_val


def split_ranked(ranked, budgets) -> Seeding:
    """Hand out ranked nodes to sources in order, filling each budget in turn."""
    ranked = [int(u) for u in ranked]
    sets, i = [], 0
    for b in budgets:
        sets.append(ranked[i:i + b])
        i += b
    return Seeding(sets)


def random_seeding(n: int, budgets, rng) -> Seeding:
    """``sum(budgets)`` distinct nodes uniformly at random, split across sources."""
    B = int(sum(budgets))
    if B > n:
        raise ValueError(f"total budget {B} exceeds node count {n}")
    gen = rng.generator() if isinstance(rng, RngHandle) else rng
    return split_ranked(gen.choice(n, size=B, replace=False), budgets)


def high_degree_seeding(graph, budgets) -> Seeding:
    """Top nodes by total outgoing trust, ties to the lower node id."""
    B = min(int(sum(budgets)), graph.n)
    deg = graph.out_trust()
    order = np.lexsort((np.arange(graph.n), -deg))
    return split_ranked(order[:B], budgets)
