"""Core data model: trust graphs, diffusion instances, seedings and RNG streams."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "TrustGraph",
    "SourceSpec",
    "NodeProfile",
    "GeneralInstance",
    "Seeding",
    "RngHandle",
    "derive_rng",
    "validate_instance",
    "write_graph",
    "read_graph",
    "write_seeding",
    "read_seeding",
    "instance_to_json",
    "instance_from_json",
]


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype, copy=True)
    a.flags.writeable = False
    return a


class TrustGraph:
    """Directed graph with a trust weight on every arc and a group label per node.

    Arcs are stored sorted by ``(src, dst)``.  ``out_indptr`` indexes the arc
    arrays directly; ``in_arcs``/``in_indptr`` give the arc ids grouped by
    destination.  Undirected graphs are two arcs with equal trust.
    """

    def __init__(self, n, src, dst, trust, group=None, symmetric=False, check=True):
        self.n = int(n)
        src = np.asarray(src, dtype=np.int64).reshape(-1)
        dst = np.asarray(dst, dtype=np.int64).reshape(-1)
        trust = np.asarray(trust, dtype=np.float64).reshape(-1)
        if not (len(src) == len(dst) == len(trust)):
            raise ValueError("src, dst and trust must have equal length")
        if check and len(src):
            if src.min() < 0 or dst.min() < 0 or src.max() >= self.n or dst.max() >= self.n:
                raise ValueError("arc endpoint out of range")
        order = np.lexsort((dst, src))
        self.src = _frozen(src[order], np.int64)
        self.dst = _frozen(dst[order], np.int64)
        self.trust = _frozen(trust[order], np.float64)
        if group is None:
            group = np.zeros(self.n, dtype=np.int64)
        self.group = _frozen(group, np.int64)
        if len(self.group) != self.n:
            raise ValueError("group labels must have length n")
        self.symmetric = bool(symmetric)

        self.out_indptr = _frozen(np.searchsorted(self.src, np.arange(self.n + 1)), np.int64)
        in_order = np.lexsort((self.src, self.dst))
        self.in_arcs = _frozen(in_order, np.int64)
        self.in_indptr = _frozen(
            np.searchsorted(self.dst[in_order], np.arange(self.n + 1)), np.int64
        )

    @classmethod
    def from_edges(cls, n, edges, trust=1.0, group=None):
        """Build a symmetric graph from undirected ``(u, v)`` or ``(u, v, trust)`` edges."""
        src, dst, tr = [], [], []
        for e in edges:
            u, v = int(e[0]), int(e[1])
            t = float(e[2]) if len(e) > 2 else float(trust)
            src += [u, v]
            dst += [v, u]
            tr += [t, t]
        return cls(n, src, dst, tr, group=group, symmetric=True)

    @classmethod
    def from_arcs(cls, n, arcs, group=None, symmetric=False):
        arcs = list(arcs)
        if not arcs:
            return cls(n, [], [], [], group=group, symmetric=symmetric)
        src, dst, tr = zip(*arcs)
        return cls(n, src, dst, tr, group=group, symmetric=symmetric)

    @property
    def m(self) -> int:
        return len(self.src)

    def arcs(self):
        return list(zip(self.src.tolist(), self.dst.tolist(), self.trust.tolist()))

    def out_degree(self):
        return np.diff(self.out_indptr)

    def out_trust(self):
        """Total outgoing trust weight per node."""
        return np.bincount(self.src, weights=self.trust, minlength=self.n)

    def with_trust(self, trust, symmetric=None):
        """Copy with new arc trusts given in this graph's arc order."""
        return TrustGraph(
            self.n, self.src, self.dst, trust, self.group,
            self.symmetric if symmetric is None else symmetric, check=False,
        )

    def reverse_arc_index(self):
        """Index of the arc (v, u) for each arc (u, v), or -1 if absent."""
        if self.m == 0:
            return np.zeros(0, dtype=np.int64)
        key = self.src * self.n + self.dst
        rkey = self.dst * self.n + self.src
        pos = np.minimum(np.searchsorted(key, rkey), self.m - 1)
        return np.where(key[pos] == rkey, pos, -1)

    def to_networkx(self):
        import networkx as nx

        g = nx.DiGraph()
        g.add_nodes_from(range(self.n))
        g.add_weighted_edges_from(self.arcs(), weight="trust")
        return g

    def __eq__(self, other):
        if not isinstance(other, TrustGraph):
            return NotImplemented
        return (
            self.n == other.n
            and self.symmetric == other.symmetric
            and np.array_equal(self.src, other.src)
            and np.array_equal(self.dst, other.dst)
            and np.array_equal(self.trust, other.trust)
            and np.array_equal(self.group, other.group)
        )

    def __repr__(self):
        return f"TrustGraph(n={self.n}, m={self.m}, symmetric={self.symmetric})"


@dataclass(frozen=True)
class SourceSpec:
    """An information source: value ``I_k``, seed budget ``B_k`` and node trust."""

    info_value: float
    budget: int
    node_trust: float | np.ndarray = 1.0

    def trust_vector(self, n: int) -> np.ndarray:
        a = np.asarray(self.node_trust, dtype=np.float64)
        if a.ndim == 0:
            return np.full(n, float(a))
        return a


@dataclass(frozen=True)
class NodeProfile:
    t_l: float
    t_h: float


@dataclass(frozen=True, eq=False)
class GeneralInstance:
    """Graph, per-node thresholds, sources and diffusion parameters."""

    graph: TrustGraph
    t_l: np.ndarray
    t_h: np.ndarray
    sources: tuple[SourceSpec, ...]
    lambda_d: float = 0.0
    lambda_s: float = 0.0
    tau: float = 5
    transmit_p: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "t_l", _frozen(self.t_l, np.float64))
        object.__setattr__(self, "t_h", _frozen(self.t_h, np.float64))
        object.__setattr__(self, "sources", tuple(self.sources))

    @classmethod
    def build(cls, graph, t_l, t_h, sources, **params):
        n = graph.n
        t_l = np.broadcast_to(np.asarray(t_l, dtype=np.float64), (n,))
        t_h = np.broadcast_to(np.asarray(t_h, dtype=np.float64), (n,))
        return cls(graph, t_l, t_h, tuple(sources), **params)

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def K(self) -> int:
        return len(self.sources)

    @property
    def budgets(self) -> tuple[int, ...]:
        return tuple(s.budget for s in self.sources)

    def profile(self, u: int) -> NodeProfile:
        return NodeProfile(float(self.t_l[u]), float(self.t_h[u]))

    def source_values(self) -> np.ndarray:
        return np.array([s.info_value for s in self.sources], dtype=np.float64)

    def source_trust(self) -> np.ndarray:
        """(K, n) matrix of node trust in each source."""
        return np.stack([s.trust_vector(self.n) for s in self.sources]) if self.sources else np.zeros((0, self.n))

    def replace(self, **changes) -> "GeneralInstance":
        kw = dict(
            graph=self.graph, t_l=self.t_l, t_h=self.t_h, sources=self.sources,
            lambda_d=self.lambda_d, lambda_s=self.lambda_s, tau=self.tau,
            transmit_p=self.transmit_p,
        )
        kw.update(changes)
        return GeneralInstance(**kw)

    def __eq__(self, other):
        if not isinstance(other, GeneralInstance):
            return NotImplemented
        return (
            self.graph == other.graph
            and np.array_equal(self.t_l, other.t_l)
            and np.array_equal(self.t_h, other.t_h)
            and len(self.sources) == len(other.sources)
            and all(
                a.info_value == b.info_value
                and a.budget == b.budget
                and np.array_equal(np.asarray(a.node_trust), np.asarray(b.node_trust))
                for a, b in zip(self.sources, other.sources)
            )
            and (self.lambda_d, self.lambda_s, self.tau, self.transmit_p)
            == (other.lambda_d, other.lambda_s, other.tau, other.transmit_p)
        )


@dataclass(frozen=True)
class Seeding:
    """Per-source seed sets.  Sets may overlap across sources."""

    sets: tuple[frozenset, ...]

    def __init__(self, sets: Iterable[Iterable[int]]):
        object.__setattr__(self, "sets", tuple(frozenset(int(u) for u in s) for s in sets))

    @classmethod
    def empty(cls, K: int) -> "Seeding":
        return cls([()] * K)

    @property
    def K(self) -> int:
        return len(self.sets)

    def nodes(self) -> frozenset:
        return frozenset().union(*self.sets) if self.sets else frozenset()

    def size(self) -> int:
        return sum(len(s) for s in self.sets)

    def pairs(self):
        return sorted((u, k) for k, s in enumerate(self.sets) for u in s)

    def respects(self, budgets: Sequence[int]) -> bool:
        return len(budgets) == self.K and all(len(s) <= b for s, b in zip(self.sets, budgets))


@dataclass(frozen=True)
class RngHandle:
    """A labeled random stream.  Equal ``(seed, stream)`` gives equal draws."""

    seed: int
    stream: str = ""

    def derive(self, label) -> "RngHandle":
        return derive_rng(self, label)

    def generator(self) -> np.random.Generator:
        digest = hashlib.blake2b(self.stream.encode(), digest_size=16).digest()
        key = [int.from_bytes(digest[i:i + 4], "little") for i in range(0, 16, 4)]
        ss = np.random.SeedSequence(entropy=int(self.seed) % (1 << 64), spawn_key=key)
        return np.random.Generator(np.random.PCG64(ss))


def derive_rng(parent: RngHandle, label) -> RngHandle:
    return RngHandle(parent.seed, f"{parent.stream}/{label}")


def _bad(x) -> bool:
    try:
        return not math.isfinite(float(x))
    except (TypeError, ValueError):
        return True


def validate_instance(inst) -> list[str]:
    """List every invariant violation of a GeneralInstance; never raises."""
    out: list[str] = []
    try:
        g = inst.graph
        n = g.n
    except Exception as exc:  # noqa: BLE001
        return [f"instance: unreadable graph ({exc!r})"]
    try:
        seen = set()
        for i, (u, v, t) in enumerate(zip(g.src.tolist(), g.dst.tolist(), g.trust.tolist())):
            tag = f"arc {i} ({u}->{v})"
            if not (0 <= u < n and 0 <= v < n):
                out.append(f"{tag}: endpoint out of range")
            if u == v:
                out.append(f"{tag}: self-arc")
            if (u, v) in seen:
                out.append(f"{tag}: duplicate arc")
            seen.add((u, v))
            if _bad(t) or not 0.0 <= t <= 1.0:
                out.append(f"{tag}: trust {t!r} outside [0, 1]")
        if g.symmetric:
            rev = g.reverse_arc_index()
            for i in np.flatnonzero((rev < 0) | (g.trust[np.maximum(rev, 0)] != g.trust)).tolist():
                out.append(f"arc {i} ({g.src[i]}->{g.dst[i]}): graph flagged symmetric but reverse arc missing or unequal")
        if len(g.group) != n:
            out.append("graph: group labels length != n")
    except Exception as exc:  # noqa: BLE001
        out.append(f"graph: malformed arcs ({exc!r})")
    try:
        tl, th = np.asarray(inst.t_l), np.asarray(inst.t_h)
        if len(tl) != n or len(th) != n:
            out.append(f"profiles: length {len(tl)}/{len(th)} != n={n}")
        for u, (a, b) in enumerate(zip(tl.tolist(), th.tolist())):
            if _bad(a) or _bad(b) or a < 0 or b < 0:
                out.append(f"node {u}: negative or non-finite threshold ({a!r}, {b!r})")
            elif a > b:
                out.append(f"node {u}: t_l={a!r} > t_h={b!r}")
    except Exception as exc:  # noqa: BLE001
        out.append(f"profiles: malformed ({exc!r})")
    try:
        if len(inst.sources) < 1:
            out.append("sources: K must be >= 1")
        for k, s in enumerate(inst.sources):
            if _bad(s.info_value) or s.info_value < 0:
                out.append(f"source {k}: info_value {s.info_value!r} < 0")
            if int(s.budget) != s.budget or s.budget < 0:
                out.append(f"source {k}: budget {s.budget!r} not a non-negative integer")
            a = np.asarray(s.node_trust, dtype=float)
            if a.ndim > 0 and len(a) != n:
                out.append(f"source {k}: node_trust length {len(a)} != n")
            bad = np.flatnonzero(~((a >= 0) & (a <= 1))) if a.ndim else ([] if 0 <= a <= 1 else [None])
            for u in list(bad):
                where = "" if u is None else f" at node {u}"
                out.append(f"source {k}: node trust outside [0, 1]{where}")
    except Exception as exc:  # noqa: BLE001
        out.append(f"sources: malformed ({exc!r})")
    for name in ("lambda_d", "lambda_s", "transmit_p"):
        val = getattr(inst, name, None)
        if _bad(val) or not 0.0 <= float(val) <= 1.0:
            out.append(f"{name}: {val!r} outside [0, 1]")
    tau = getattr(inst, "tau", None)
    try:
        if not (tau == math.inf or (float(tau) == int(tau) and tau >= 1)):
            out.append(f"tau: {tau!r} is not a positive integer or inf")
    except (TypeError, ValueError, OverflowError):
        out.append(f"tau: {tau!r} is not a positive integer or inf")
    return out


# --- text formats -----------------------------------------------------------

def _f(x: float) -> str:
    return format(float(x), ".17g")


def write_graph(path, graph: TrustGraph, t_l=None, t_h=None) -> None:
    """Write the line-oriented graph format (header, node lines, arc lines)."""
    n = graph.n
    t_l = np.zeros(n) if t_l is None else np.broadcast_to(t_l, (n,))
    t_h = np.zeros(n) if t_h is None else np.broadcast_to(t_h, (n,))
    lines = [f"n={n} directed={0 if graph.symmetric else 1}"]
    for u in range(n):
        lines.append(f"node {u} group={int(graph.group[u])} tl={_f(t_l[u])} th={_f(t_h[u])}")
    for u, v, t in graph.arcs():
        lines.append(f"arc {u} {v} {_f(t)}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_graph(path):
    """Read a graph file; returns ``(graph, t_l, t_h)``."""
    with open(path) as fh:
        header = fh.readline().split()
        kv = dict(tok.split("=", 1) for tok in header)
        n = int(kv["n"])
        directed = int(kv.get("directed", 1))
        group = np.zeros(n, dtype=np.int64)
        tl = np.zeros(n)
        th = np.zeros(n)
        src, dst, tr = [], [], []
        for lineno, line in enumerate(fh, start=2):
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            if parts[0] == "node":
                u = int(parts[1])
                f = dict(p.split("=", 1) for p in parts[2:])
                group[u] = int(f.get("group", 0))
                tl[u] = float(f.get("tl", 0.0))
                th[u] = float(f.get("th", 0.0))
            elif parts[0] == "arc":
                src.append(int(parts[1]))
                dst.append(int(parts[2]))
                tr.append(float(parts[3]))
            else:
                raise ValueError(f"{path}:{lineno}: unknown record {parts[0]!r}")
    return TrustGraph(n, src, dst, tr, group=group, symmetric=not directed), tl, th


def write_seeding(path, seeding: Seeding) -> None:
    with open(path, "w") as fh:
        for k, s in enumerate(seeding.sets):
            fh.write(" ".join([f"source {k}:"] + [str(u) for u in sorted(s)]) + "\n")


def read_seeding(path) -> Seeding:
    sets = {}
    with open(path) as fh:
        for line in fh:
            if not line.strip():
                continue
            head, _, rest = line.partition(":")
            k = int(head.split()[1])
            sets[k] = [int(x) for x in rest.split()]
    K = max(sets) + 1 if sets else 0
    return Seeding([sets.get(k, ()) for k in range(K)])


def instance_to_json(inst: GeneralInstance) -> str:
    g = inst.graph
    doc = {
        "n": g.n,
        "symmetric": g.symmetric,
        "group": g.group.tolist(),
        "arcs": [[u, v, t] for u, v, t in g.arcs()],
        "t_l": inst.t_l.tolist(),
        "t_h": inst.t_h.tolist(),
        "sources": [
            {
                "info_value": s.info_value,
                "budget": s.budget,
                "node_trust": np.asarray(s.node_trust).tolist(),
            }
            for s in inst.sources
        ],
        "lambda_d": inst.lambda_d,
        "lambda_s": inst.lambda_s,
        "tau": None if inst.tau == math.inf else inst.tau,
        "transmit_p": inst.transmit_p,
    }
    return json.dumps(doc)


def instance_from_json(text: str) -> GeneralInstance:
    doc = json.loads(text)
    arcs = doc["arcs"]
    g = TrustGraph(
        doc["n"],
        [a[0] for a in arcs], [a[1] for a in arcs], [a[2] for a in arcs],
        group=doc["group"], symmetric=doc["symmetric"],
    )
    sources = []
    for s in doc["sources"]:
        a = s["node_trust"]
        sources.append(SourceSpec(s["info_value"], s["budget"], np.asarray(a, dtype=float) if isinstance(a, list) else a))
    return GeneralInstance(
        g, doc["t_l"], doc["t_h"], tuple(sources),
        lambda_d=doc["lambda_d"], lambda_s=doc["lambda_s"],
        tau=math.inf if doc["tau"] is None else doc["tau"],
        transmit_p=doc["transmit_p"],
    )
