"""Broadcast-clique algorithms (range 1): Boruvka MSF and threshold CC.

Boruvka: each phase, every node broadcasts the lightest edge leaving its
fragment; everyone merges locally.  O(log n) phases, one round each.

Threshold CC (parameter s): nodes prefer edges toward high-degree components.
Each phase takes four broadcast rounds (degrees; edges to each node's largest
neighbor component; patch-up edges from local maxima to "lost" neighbors; new
degrees).  Components whose degree drops below s are deactivated and announce
all their remaining inter-component edges (at most s-1 per node) during the
final playoff rounds.  Active component count shrinks at least s-fold per
phase, giving O(s + log_s n) rounds; s ~ log n / log log n is sub-logarithmic.

With bandwidth b = d * 5*ceil(log2 n), playoff announcements are batched d
edges per round and the usual choice is s = d.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bits import Bits, bits_for, concat_all, pack, unpack
from .engine import InternalConsistencyError, ModelConfig, Network, RunMetrics
from .graph import EdgeKey, Graph, Partition, UnionFind, group_min


def edge_payload(u: int, v: int, w: int, n: int) -> Bits:
    """One weighted edge in 5*ceil(log2 n) bits: (w, min, max)."""
    wb = bits_for(n)
    a, b = (u, v) if u < v else (v, u)
    return pack([(w, 3 * wb), (a, wb), (b, wb)])


def decode_edge_payload(payload: Bits, n: int) -> tuple[int, int, int]:
    wb = bits_for(n)
    w, a, b = unpack(payload, [3 * wb, wb, wb])
    return a, b, w


# ------------------------------------------------------------------- Boruvka

@dataclass
class BoruvkaResult:
    edges: frozenset[EdgeKey]
    metrics: RunMetrics
    merge_phases: int


def _cross_edges(g: Graph, labels: np.ndarray, active: np.ndarray):
    src, dst, w = g.directed()
    ok = active[src] & active[dst] & (labels[src] != labels[dst])
    return src[ok], dst[ok], w[ok]


def _lightest_per_key(keys, src, dst, w):
    """Min-EdgeKey directed edge per key; returns selected indices."""
    a = np.minimum(src, dst)
    b = np.maximum(src, dst)
    return group_min(keys, w, a, b)


def boruvka_msf_broadcast(
    g: Graph, seed: int = 0, b: int | None = None, round_cap: int | None = None
) -> BoruvkaResult:
    """Distributed Boruvka in the broadcast clique; output equals the oracle MSF."""
    cfg = ModelConfig.broadcast(g.n, b or 0)
    net = Network(cfg, seed=seed, round_cap=round_cap)
    labels = np.arange(g.n, dtype=np.int64)
    always_active = np.ones(g.n, dtype=bool)
    msf: list[EdgeKey] = []
    uf = UnionFind(g.n)
    merge_phases = 0
    while True:
        src, dst, w = _cross_edges(g, labels, always_active)
        sel = _lightest_per_key(src, src, dst, w)
        payloads = {
            int(src[i]): edge_payload(int(src[i]), int(dst[i]), int(w[i]), g.n)
            for i in sel.tolist()
        }
        ledger = net.post_broadcasts(payloads)
        if not payloads:
            break
        # every node merges each fragment along its lightest announced edge
        announced = []
        for sender, payload in ledger.payloads.items():
            a, b2, wt = decode_edge_payload(payload, g.n)
            announced.append((labels[sender], wt, a, b2))
        frag = np.fromiter((t[0] for t in announced), dtype=np.int64)
        ws = np.fromiter((t[1] for t in announced), dtype=np.int64)
        aa = np.fromiter((t[2] for t in announced), dtype=np.int64)
        bb = np.fromiter((t[3] for t in announced), dtype=np.int64)
        pick = group_min(frag, ws, aa, bb)
        chosen = {(int(ws[i]), int(aa[i]), int(bb[i])) for i in pick.tolist()}
        for wt, a, b2 in sorted(chosen):
            if not uf.union(a, b2):
                raise InternalConsistencyError("fragment-minimum edges formed a cycle")
            msf.append(EdgeKey(wt, a, b2))
        labels = uf.labels()
        merge_phases += 1
    return BoruvkaResult(frozenset(msf), net.metrics, merge_phases)


# -------------------------------------------------------------- threshold CC

@dataclass
class CcPhaseLog:
    phase: int
    labels_start: np.ndarray
    active_comps_start: list[int]
    comp_deg: dict[int, int]
    r2_edges: list[tuple[int, int]]  # (v, u): v broadcast its edge toward C_max(v)
    r3_edges: list[tuple[int, int]]
    labels_end: np.ndarray
    active_comps_end: list[int]
    deactivated: list[int]


@dataclass
class BroadcastCcResult:
    partition: Partition
    metrics: RunMetrics
    phases: list[CcPhaseLog] = field(default_factory=list)
    playoff_rounds: int = 0
    s: int = 0
    d: int = 1


def default_threshold(n: int) -> int:
    """s = max(2, ceil(log n / log log n))."""
    if n < 4:
        return 2
    ln = np.log2(n)
    return max(2, int(np.ceil(ln / np.log2(ln))))


def broadcast_cc(
    g: Graph,
    s: int | None = None,
    d: int = 1,
    seed: int = 0,
    r: int | None = None,
    b: int | None = None,
    round_cap: int | None = None,
) -> BroadcastCcResult:
    """Spanning-forest partition via degree-threshold merging; oracle-equal."""
    n = g.n
    s = default_threshold(n) if s is None else int(s)
    if s < 2:
        raise ValueError("threshold s must be >= 2")
    if d < 1:
        raise ValueError("bandwidth multiplier d must be >= 1")
    wb = bits_for(n)
    cfg = ModelConfig(n, r if r is not None else 1, b if b is not None else d * 5 * wb)
    net = Network(cfg, seed=seed, round_cap=round_cap)

    labels = np.arange(n, dtype=np.int64)
    active = np.ones(n, dtype=bool)
    uf = UnionFind(n)
    playoff: dict[int, list[tuple[int, int, int]]] = {}
    phases: list[CcPhaseLog] = []

    def cross(labels_now):
        return _cross_edges(g, labels_now, active)

    def degrees(src, dst_comp):
        """deg(v) = number of distinct foreign active components next to v."""
        if len(src) == 0:
            return np.zeros(n, dtype=np.int64)
        keys = np.unique(src * n + dst_comp)
        return np.bincount(keys // n, minlength=n).astype(np.int64)

    phase_no = 0
    while active.any():
        phase_no += 1
        labels_start = labels.copy()
        act_nodes = np.nonzero(active)[0]
        src, dst, w = cross(labels)
        dst_comp = labels[dst]
        deg = degrees(src, dst_comp)

        # Round 1: every active node broadcasts its degree
        net.post_broadcasts({int(v): Bits(wb, int(deg[v])) for v in act_nodes})

        comp_deg = np.zeros(n, dtype=np.int64)
        np.maximum.at(comp_deg, labels[act_nodes], deg[act_nodes])
        start_comps = np.unique(labels[act_nodes])
        order_val = comp_deg * n + np.arange(n)  # totally ordered (deg, id) key

        # lightest edge from v toward each adjacent foreign component
        pair_keys = src * n + dst_comp
        sel = _lightest_per_key(pair_keys, src, dst, w)
        sel_src, sel_comp = src[sel], dst_comp[sel]
        sel_dst, sel_w = dst[sel], w[sel]

        # C_max(v): adjacent component maximizing the (deg, id) order
        best_val = np.full(n, -1, dtype=np.int64)
        np.maximum.at(best_val, sel_src, order_val[sel_comp])
        # a component is a local maximum iff every member's best neighbor is below it
        comp_best = np.full(n, -1, dtype=np.int64)
        np.maximum.at(comp_best, labels[sel_src], best_val[sel_src])
        is_local_max = comp_best < order_val  # per component id; vacuous for deg 0

        # Round 2: non-local-maximum members broadcast an edge toward C_max(v)
        cmax_of = {}
        for i in range(len(sel_src)):
            v = int(sel_src[i])
            if order_val[sel_comp[i]] == best_val[v]:
                cmax_of[v] = i
        r2_payloads = {}
        r2_edges = []
        r2_pairs = set()
        for v, i in cmax_of.items():
            cv = int(labels[v])
            if deg[v] == 0 or is_local_max[cv]:
                continue
            u, wt = int(sel_dst[i]), int(sel_w[i])
            r2_payloads[v] = edge_payload(v, u, wt, n)
            r2_edges.append((v, u))
            cu = int(labels[u])
            r2_pairs.add((min(cv, cu), max(cv, cu)))
        net.post_broadcasts(r2_payloads)

        # Round 3: local-maximum members reach lost neighbors (min comp ID first)
        r3_payloads = {}
        r3_edges = []
        lost_choice: dict[int, int] = {}
        for i in range(len(sel_src)):
            v = int(sel_src[i])
            cv = int(labels[v])
            if deg[v] == 0 or not is_local_max[cv]:
                continue
            c = int(sel_comp[i])
            if (min(cv, c), max(cv, c)) in r2_pairs:
                continue
            if v not in lost_choice or c < int(sel_comp[lost_choice[v]]):
                lost_choice[v] = i
        for v, i in lost_choice.items():
            u, wt = int(sel_dst[i]), int(sel_w[i])
            r3_payloads[v] = edge_payload(v, u, wt, n)
            r3_edges.append((v, u))
        net.post_broadcasts(r3_payloads)

        # everyone merges along the broadcast edges
        for v, u in r2_edges + r3_edges:
            uf.union(int(labels[v]), int(labels[u]))
        labels = uf.labels()

        # Round 4: degrees against the new partition decide deactivation
        src2, dst2, w2 = cross(labels)
        deg2 = degrees(src2, labels[dst2])
        net.post_broadcasts({int(v): Bits(wb, int(deg2[v])) for v in act_nodes})
        comp_deg2 = np.zeros(n, dtype=np.int64)
        np.maximum.at(comp_deg2, labels[act_nodes], deg2[act_nodes])

        end_comps = np.unique(labels[act_nodes])
        to_deactivate = [int(c) for c in end_comps if comp_deg2[c] < s]
        if to_deactivate:
            dead = np.isin(labels, np.asarray(to_deactivate)) & active
            # record playoff announcements: per node, its lightest edge into
            # each adjacent component as of deactivation time
            keys2 = src2 * n + labels[dst2]
            sel2 = _lightest_per_key(keys2, src2, dst2, w2)
            for i in sel2.tolist():
                v = int(src2[i])
                if dead[v]:
                    playoff.setdefault(v, []).append((int(dst2[i]), int(w2[i]), int(labels[dst2[i]])))
            active &= ~dead
        phases.append(
            CcPhaseLog(
                phase=phase_no,
                labels_start=labels_start,
                active_comps_start=[int(c) for c in start_comps],
                comp_deg={int(c): int(comp_deg[c]) for c in start_comps},
                r2_edges=r2_edges,
                r3_edges=r3_edges,
                labels_end=labels.copy(),
                active_comps_end=[int(c) for c in end_comps if c not in to_deactivate],
                deactivated=to_deactivate,
            )
        )

    # Playoff: deactivated nodes announce all recorded edges, d per round
    playoff_rounds = int(np.ceil((s - 1) / d))
    for v, targets in playoff.items():
        if len(targets) > s - 1:
            raise InternalConsistencyError(
                f"node {v} holds {len(targets)} playoff edges (> s-1 = {s - 1})"
            )
    for round_no in range(playoff_rounds):
        payloads = {}
        batch_edges = []
        for v, targets in playoff.items():
            batch = targets[round_no * d : (round_no + 1) * d]
            if not batch:
                continue
            payloads[v] = concat_all([edge_payload(v, u, wt, n) for u, wt, _ in batch])
            batch_edges.extend((v, u) for u, wt, _ in batch)
        net.post_broadcasts(payloads)
        for v, u in batch_edges:
            uf.union(int(labels[v]), int(labels[u]))
        labels = uf.labels()

    part = Partition(labels, frozenset(np.unique(labels).tolist()))
    return BroadcastCcResult(part, net.metrics, phases, playoff_rounds, s, d)
