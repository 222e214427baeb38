"""Simulation of the four-state trust-weighted diffusion and coverage estimation.

Each node keeps one slot per (in-arc, source) holding the best value ever
received over that arc, plus a direct slot per source for seeding.  Slots are
updated by running max, so repeated broadcasts from one neighbour are never
double counted when fusing with a sum.  Rounds are synchronous: every push and
pull reads the start-of-round state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import GeneralInstance, RngHandle, Seeding

__all__ = [
    "DISBELIEVED",
    "UNDECIDED",
    "BELIEVED",
    "EVACUATED",
    "DEFAULT_MAX_STEPS",
    "info_value",
    "fuse_source",
    "NodeInfoState",
    "RunOutcome",
    "CoverageEstimate",
    "initial_state",
    "apply_seeding",
    "step",
    "run",
    "estimate_coverage",
    "format_trace",
]

DISBELIEVED, UNDECIDED, BELIEVED, EVACUATED = 0, 1, 2, 3
STATE_NAMES = ("Disbelieved", "Undecided", "Believed", "Evacuated")
DEFAULT_MAX_STEPS = 50


def info_value(values, lambda_d: float) -> float:
    """Combine per-source values: ``lambda_d * sum + (1 - lambda_d) * max``."""
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        return 0.0
    return float(lambda_d * v.sum() + (1.0 - lambda_d) * v.max())


def fuse_source(direct: float, neighbor_values, lambda_s: float) -> float:
    """Fuse one source's direct value with the values heard from neighbours."""
    v = np.concatenate(([direct], np.asarray(neighbor_values, dtype=np.float64).reshape(-1)))
    return float(lambda_s * v.sum() + (1.0 - lambda_s) * v.max())


@dataclass
class NodeInfoState:
    direct: np.ndarray  # (n, K) values from seeding
    slots: np.ndarray  # (m, K) best value received over each arc
    fused: np.ndarray  # (n, K)
    info: np.ndarray  # (n,)
    state: np.ndarray  # (n,) int8
    countdown: np.ndarray  # (n,) int64; steps of broadcasting left while Believed
    ever_believed: np.ndarray  # (n,) bool
    step_index: int = 0

    def copy(self) -> "NodeInfoState":
        return NodeInfoState(
            self.direct.copy(), self.slots.copy(), self.fused.copy(), self.info.copy(),
            self.state.copy(), self.countdown.copy(), self.ever_believed.copy(), self.step_index,
        )

    def counts(self):
        c = np.bincount(self.state, minlength=4)
        return {name: int(c[i]) for i, name in enumerate(STATE_NAMES)}


@dataclass
class RunOutcome:
    believers: int
    evacuated: int
    steps_executed: int
    converged: bool
    trace: list = field(default_factory=list)
    believer_set: frozenset = frozenset()
    state_trace: list = field(default_factory=list)


@dataclass
class CoverageEstimate:
    mean: float
    stderr: float
    samples: np.ndarray
    evacuated_mean: float = 0.0

    @property
    def replications(self) -> int:
        return len(self.samples)


def initial_state(inst: GeneralInstance) -> NodeInfoState:
    n, m, K = inst.n, inst.graph.m, inst.K
    st = NodeInfoState(
        direct=np.zeros((n, K)),
        slots=np.zeros((m, K)),
        fused=np.zeros((n, K)),
        info=np.zeros(n),
        state=np.zeros(n, dtype=np.int8),
        countdown=np.zeros(n, dtype=np.int64),
        ever_believed=np.zeros(n, dtype=bool),
    )
    _refresh(st, inst, newly_only=False)
    return st


def _segment_max(vals: np.ndarray, indptr: np.ndarray, n: int) -> np.ndarray:
    """Row-wise max of ``vals`` grouped into ``n`` CSR segments (empty -> 0)."""
    out = np.zeros((n,) + vals.shape[1:])
    if len(vals) == 0:
        return out
    starts = indptr[:-1]
    nonempty = indptr[1:] > starts
    out[nonempty] = np.maximum.reduceat(vals, starts[nonempty], axis=0)
    return out


def _segment_sum(vals: np.ndarray, indptr: np.ndarray, n: int) -> np.ndarray:
    out = np.zeros((n,) + vals.shape[1:])
    if len(vals) == 0:
        return out
    starts = indptr[:-1]
    nonempty = indptr[1:] > starts
    out[nonempty] = np.add.reduceat(vals, starts[nonempty], axis=0)
    return out


def _fuse_all(st: NodeInfoState, inst: GeneralInstance) -> None:
    g = inst.graph
    by_dst = st.slots[g.in_arcs]
    mx = np.maximum(st.direct, _segment_max(by_dst, g.in_indptr, g.n))
    ls = inst.lambda_s
    if ls > 0:
        sm = st.direct + _segment_sum(by_dst, g.in_indptr, g.n)
        st.fused = ls * sm + (1.0 - ls) * mx
    else:
        st.fused = mx
    ld = inst.lambda_d
    if st.fused.shape[1] == 0:
        st.info = np.zeros(g.n)
    elif ld > 0:
        st.info = ld * st.fused.sum(axis=1) + (1.0 - ld) * st.fused.max(axis=1)
    else:
        st.info = st.fused.max(axis=1)


def _classify(info, t_l, t_h):
    s = np.full(len(info), DISBELIEVED, dtype=np.int8)
    s[info >= t_l] = UNDECIDED
    s[info >= t_h] = BELIEVED
    return s


def _refresh(st: NodeInfoState, inst: GeneralInstance, newly_only=True) -> np.ndarray:
    """Re-fuse and reclassify non-evacuated nodes; returns the newly Believed mask."""
    _fuse_all(st, inst)
    live = st.state != EVACUATED
    new_state = _classify(st.info, inst.t_l, inst.t_h)
    # values never decrease, so a Believed node stays Believed
    new_state[st.state == BELIEVED] = BELIEVED
    newly = live & (new_state == BELIEVED) & (st.state != BELIEVED)
    st.state = np.where(live, new_state, st.state).astype(np.int8)
    if newly.any():
        st.countdown[newly] = _tau_steps(inst.tau)
        st.ever_believed |= newly
    return newly


def _tau_steps(tau) -> int:
    return np.iinfo(np.int64).max if tau == math.inf else int(tau)


def apply_seeding(st: NodeInfoState, inst: GeneralInstance, seeding: Seeding) -> NodeInfoState:
    """Inject source values into seed nodes (attenuated by node-source trust)."""
    if seeding.K != inst.K:
        raise ValueError(f"seeding has {seeding.K} sets but instance has {inst.K} sources")
    for k, (s, b) in enumerate(zip(seeding.sets, inst.budgets)):
        if len(s) > b:
            raise ValueError(f"source {k}: {len(s)} seeds exceed budget {b}")
        bad = [u for u in s if not 0 <= u < inst.n]
        if bad:
            raise ValueError(f"source {k}: seed nodes out of range: {bad[:5]}")
    out = st.copy()
    vals = inst.source_values()
    for k, s in enumerate(seeding.sets):
        if not s:
            continue
        idx = np.fromiter(sorted(s), dtype=np.int64)
        a = inst.sources[k].trust_vector(inst.n)[idx]
        out.direct[idx, k] = np.maximum(out.direct[idx, k], a * vals[k])
    _refresh(out, inst)
    return out


def _transfers(st: NodeInfoState, inst: GeneralInstance):
    """Arc masks for pushes (Believed src) and pulls (Undecided dst)."""
    g = inst.graph
    s_src = st.state[g.src]
    s_dst = st.state[g.dst]
    push = (s_src == BELIEVED) & (s_dst != EVACUATED)
    pull = (s_dst == UNDECIDED) & (s_src != EVACUATED)
    return push, pull


def step(st: NodeInfoState, inst: GeneralInstance, rng: np.random.Generator | None = None):
    """Advance one synchronous round.  Returns ``(new_state, quiescent)``.

    ``quiescent`` is True when no transfer in this round, successful or not,
    could have raised any stored value, i.e. the values are at a fixed point.
    """
    g = inst.graph
    out = st.copy()
    out.step_index += 1
    push, pull = _transfers(st, inst)
    active = push | pull
    quiescent = True
    if active.any():
        offered = g.trust[:, None] * st.fused[g.src]
        improves = active & (offered > st.slots).any(axis=1)
        quiescent = not improves.any()
        p = inst.transmit_p
        if p < 1.0:
            if rng is None:
                raise ValueError("transmit_p < 1 requires an rng")
            r_push = rng.random(g.m)
            r_pull = rng.random(g.m)
            ok = (push & (r_push < p)) | (pull & (r_pull < p))
        else:
            ok = active
        upd = ok & improves
        if upd.any():
            out.slots[upd] = np.maximum(out.slots[upd], offered[upd])
    was_believed = st.state == BELIEVED
    if not quiescent:
        _refresh(out, inst)
    if inst.tau != math.inf:
        out.countdown[was_believed] -= 1
        gone = was_believed & (out.countdown <= 0)
        out.state[gone] = EVACUATED
    return out, quiescent


def _pending(st: NodeInfoState, inst: GeneralInstance) -> bool:
    return inst.tau != math.inf and bool((st.state == BELIEVED).any())


def run(
    inst: GeneralInstance,
    seeding: Seeding,
    rng: RngHandle | np.random.Generator | None = None,
    max_steps: int = DEFAULT_MAX_STEPS,
    trace_states: bool = False,
) -> RunOutcome:
    """Seed, then iterate rounds until everyone evacuated, a fixed point, or ``max_steps``."""
    if max_steps < 1:
        raise ValueError("max_steps must be >= 1")
    gen = rng.generator() if isinstance(rng, RngHandle) else rng
    st = apply_seeding(initial_state(inst), inst, seeding)
    trace = []
    states = [st.counts()] if trace_states else []
    converged = False
    steps = 0
    for _ in range(max_steps):
        st, quiescent = step(st, inst, gen)
        steps += 1
        trace.append(int(st.ever_believed.sum()))
        if trace_states:
            states.append(st.counts())
        if (st.state == EVACUATED).all() or (quiescent and not _pending(st, inst)):
            converged = True
            break
    return RunOutcome(
        believers=int(st.ever_believed.sum()),
        evacuated=int((st.state == EVACUATED).sum()),
        steps_executed=steps,
        converged=converged,
        trace=trace,
        believer_set=frozenset(np.flatnonzero(st.ever_believed).tolist()),
        state_trace=states,
    )


def format_trace(outcome: RunOutcome) -> str:
    """One ``step=<i> believed=.. undecided=.. evacuated=..`` line per recorded state."""
    lines = []
    for i, c in enumerate(outcome.state_trace):
        lines.append(
            f"step={i} believed={c['Believed']} undecided={c['Undecided']} evacuated={c['Evacuated']}"
        )
    return "\n".join(lines)


def estimate_coverage(
    inst: GeneralInstance,
    seeding: Seeding,
    replications: int,
    rng: RngHandle,
    max_steps: int = DEFAULT_MAX_STEPS,
) -> CoverageEstimate:
    """Mean number of believers over independent replications (derived streams ``rep/i``)."""
    if replications < 1:
        raise ValueError("replications must be >= 1")
    deterministic = inst.transmit_p >= 1.0
    samples = np.empty(replications)
    evac = np.empty(replications)
    first = None
    for r in range(replications):
        if deterministic and first is not None:
            samples[r], evac[r] = first
            continue
        out = run(inst, seeding, rng.derive(f"rep/{r}"), max_steps)
        samples[r], evac[r] = out.believers, out.evacuated
        first = (out.believers, out.evacuated)
    se = float(samples.std(ddof=1) / math.sqrt(replications)) if replications > 1 else 0.0
    return CoverageEstimate(float(samples.mean()), se, samples, float(evac.mean()))
