"""Random networks with two social groups, plus trust and threshold assignment."""

from __future__ import annotations

import math
import warnings

import networkx as nx
import numpy as np
from scipy.spatial import cKDTree

from .model import RngHandle, TrustGraph

__all__ = [
    "gen_scale_free",
    "gen_random_group",
    "gen_geometric_group",
    "assign_trust",
    "assign_thresholds",
    "graph_stats",
    "powerlaw_exponent",
    "TRUST_SCENARIOS",
]

TRUST_SCENARIOS = ("homogeneous", "group_variable", "range")


def _gen(rng):
    return rng.generator() if isinstance(rng, RngHandle) else rng


def _from_pairs(n, pairs, group):
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    src = np.concatenate([pairs[:, 0], pairs[:, 1]])
    dst = np.concatenate([pairs[:, 1], pairs[:, 0]])
    return TrustGraph(n, src, dst, np.ones(len(src)), group=group, symmetric=True)


def _two_groups(n, gen, fractions=(0.5, 0.5)):
    """Random group labels with exact group sizes."""
    sizes = np.floor(np.asarray(fractions) / np.sum(fractions) * n).astype(int)
    sizes[-1] = n - sizes[:-1].sum()
    labels = np.repeat(np.arange(len(sizes)), sizes)
    return gen.permutation(labels)


def gen_scale_free(n: int, m: int = 2, rng=None) -> TrustGraph:
    """Preferential attachment graph (each new node links to ``m`` existing ones)."""
    if not n > m >= 1:
        raise ValueError("need n > m >= 1")
    gen = _gen(rng or RngHandle(0))
    g = nx.barabasi_albert_graph(n, m, seed=gen)
    pairs = np.array(g.edges(), dtype=np.int64)
    return _from_pairs(n, pairs, _two_groups(n, gen))


def gen_random_group(n: int, avg_degree: float = 4.0, ratio: float = 2.0, rng=None) -> TrustGraph:
    """Two equal groups; edge probability ``p_s`` within and ``p_d = p_s / ratio`` across.

    ``p_d`` is solved from ``(n/2 - 1) p_s + (n/2) p_d = avg_degree``.
    """
    if n % 2 or n < 2:
        raise ValueError("n must be a positive even number")
    if avg_degree <= 0 or ratio <= 0:
        raise ValueError("avg_degree and ratio must be positive")
    half = n // 2
    p_d = avg_degree / ((half - 1) * ratio + half)
    p_s = ratio * p_d
    if p_s > 1 or p_d > 1:
        raise ValueError(f"implied edge probabilities p_s={p_s:.3g}, p_d={p_d:.3g} exceed 1")
    gen = _gen(rng or RngHandle(0))
    # a coin per pair == binomial edge count, then a uniform subset of that size
    n_within = half * (half - 1) // 2
    blocks = [
        _distinct_pairs(half, gen.binomial(n_within, p_s), gen),
        _distinct_pairs(half, gen.binomial(n_within, p_s), gen) + half,
    ]
    cnt = gen.binomial(half * half, p_d)
    codes = gen.choice(half * half, size=cnt, replace=False)
    blocks.append(np.stack([codes // half, half + codes % half], axis=1))
    # ids are shuffled so they carry no group information
    perm = gen.permutation(n)
    pairs = perm[np.concatenate(blocks)]
    group = np.empty(n, dtype=np.int64)
    group[perm] = np.repeat([0, 1], half)
    return _from_pairs(n, pairs, group)


def _distinct_pairs(h: int, count: int, gen) -> np.ndarray:
    """``count`` distinct unordered pairs from ``range(h)``, uniformly at random."""
    codes = np.zeros(0, dtype=np.int64)
    while len(codes) < count:
        draw = gen.integers(0, h, size=(int(2.2 * (count - len(codes))) + 16, 2))
        draw = draw[draw[:, 0] != draw[:, 1]]
        lo, hi = draw.min(axis=1), draw.max(axis=1)
        codes = np.unique(np.concatenate([codes, lo * h + hi]))
    codes = gen.choice(codes, size=count, replace=False)
    return np.stack([codes // h, codes % h], axis=1)


def gen_geometric_group(n: int, rng=None, decay: float = 0.02, mix: float = 2.0,
                        fractions=(0.3, 0.7), avg_degree: float = 4.0,
                        cutoff: float = 8.0) -> TrustGraph:
    """Nodes uniform in the unit square; P(edge) = q * w * exp(-dist / decay).

    ``w`` is ``mix`` for same-group pairs and 1 otherwise, and ``q`` is set so
    the expected mean degree is ``avg_degree``.  Pairs farther apart than
    ``cutoff * decay`` are ignored.
    """
    if decay <= 0:
        raise ValueError("decay must be positive")
    gen = _gen(rng or RngHandle(0))
    pts = gen.random((n, 2))
    group = _two_groups(n, gen, fractions)
    radius = min(cutoff * decay, math.sqrt(2.0) + 1e-9)
    pairs = cKDTree(pts).query_pairs(radius, output_type="ndarray")
    pairs = pairs[np.lexsort((pairs[:, 1], pairs[:, 0]))]
    d = np.linalg.norm(pts[pairs[:, 0]] - pts[pairs[:, 1]], axis=1)
    w = np.where(group[pairs[:, 0]] == group[pairs[:, 1]], mix, 1.0) * np.exp(-d / decay)
    q = avg_degree * n / (2.0 * w.sum())
    prob = q * w
    if (prob > 1).any():
        warnings.warn(f"{int((prob > 1).sum())} pair probabilities clipped at 1; mean degree will fall short")
    keep = gen.random(len(pairs)) < prob
    return _from_pairs(n, pairs[keep], group)


def assign_trust(graph: TrustGraph, scenario: str = "homogeneous", rng=None,
                 a: float = 0.7, eps: float = 0.05, within=(0.7, 0.8), spread: float = 0.05) -> TrustGraph:
    """Set arc trusts for one of the trust scenarios.

    * ``homogeneous``: every arc gets ``a``.
    * ``group_variable``: same-group arcs get ``a + eps``; cross-group arcs get
      the constant that makes the overall mean exactly ``a``.
    * ``range``: same-group trust ~ U(within); cross-group ~ U(a_low +- spread)
      clamped to [0, 1], with ``a_low`` chosen so the expected mean is ``a``.

    Trust is drawn per undirected edge, so symmetric graphs stay symmetric.
    """
    same = graph.group[graph.src] == graph.group[graph.dst]
    m = graph.m
    if scenario == "homogeneous":
        return graph.with_trust(np.full(m, float(a)))
    f_a = float(same.mean()) if m else 0.0
    if scenario == "group_variable":
        if f_a >= 1.0:
            a_b = float(a)
        else:
            a_b = (a - f_a * (a + eps)) / (1.0 - f_a)
        if not 0.0 <= a_b <= 1.0 or not 0.0 <= a + eps <= 1.0:
            raise ValueError(f"cross-group trust {a_b:.4g} outside [0, 1] (within-group arc fraction f_A={f_a:.4g})")
        return graph.with_trust(np.where(same, a + eps, a_b))
    if scenario == "range":
        gen = _gen(rng or RngHandle(0))
        lo, hi = within
        mean_within = 0.5 * (lo + hi)
        a_low = a if f_a >= 1.0 else (a - f_a * mean_within) / (1.0 - f_a)
        draw_w = gen.uniform(lo, hi, m)
        draw_x = np.clip(gen.uniform(a_low - spread, a_low + spread, m), 0.0, 1.0)
        t = np.where(same, draw_w, draw_x)
        if graph.symmetric and m:
            # reuse the draw of the lower-id endpoint's arc for the reverse arc
            rev = graph.reverse_arc_index()
            canon = graph.src < graph.dst
            t = np.where(canon, t, t[np.maximum(rev, 0)])
        return graph.with_trust(t)
    raise ValueError(f"unknown trust scenario {scenario!r}; choose from {TRUST_SCENARIOS}")


def assign_thresholds(graph: TrustGraph, pair=None, rng=None, tl_range=(0.1, 0.2), th_range=(0.5, 0.6)):
    """Per-node ``(t_l, t_h)``: a fixed pair for everyone, or uniform draws from ranges."""
    n = graph.n
    if pair is not None:
        t_l, t_h = float(pair[0]), float(pair[1])
        if not 0 <= t_l <= t_h:
            raise ValueError(f"threshold pair {pair} must satisfy 0 <= t_l <= t_h")
        return np.full(n, t_l), np.full(n, t_h)
    if not (0 <= tl_range[0] <= tl_range[1] and th_range[0] <= th_range[1] and tl_range[1] <= th_range[0]):
        raise ValueError(f"ranges {tl_range}, {th_range} do not guarantee t_l <= t_h")
    gen = _gen(rng or RngHandle(0))
    return gen.uniform(*tl_range, n), gen.uniform(*th_range, n)


def powerlaw_exponent(degrees, kmin: int) -> float:
    """Discrete power-law MLE (continuous approximation), returned as a negative slope."""
    k = np.asarray(degrees, dtype=float)
    k = k[k >= kmin]
    alpha = 1.0 + len(k) / np.log(k / (kmin - 0.5)).sum()
    return -alpha


def graph_stats(graph: TrustGraph, kmin: int | None = None) -> dict:
    deg = graph.out_degree()
    same = graph.group[graph.src] == graph.group[graph.dst]
    kmin = kmin or max(2 * int(np.median(deg)), 2)
    return {
        "n": graph.n,
        "arcs": graph.m,
        "degree_mean": float(deg.mean()),
        "degree_var": float(deg.var()),
        "tail_exponent": powerlaw_exponent(deg, kmin) if (deg >= kmin).sum() > 1 else float("nan"),
        "within_fraction": float(same.mean()) if graph.m else float("nan"),
        "across_fraction": float(1 - same.mean()) if graph.m else float("nan"),
        "trust_mean": float(graph.trust.mean()) if graph.m else float("nan"),
    }
