"""Deterministic minimum spanning forest in the range-2 clique.

Phased template: maintain a partition into fragments (subtrees of the MSF);
each phase selects the mu_i lightest relevant edges of every fragment (the
lightest connector to each neighboring fragment, mu_i smallest of those kept),
announces them, and lets every node merge locally.  Merging against mu
relevant edges per fragment multiplies the smallest growable fragment size by
at least mu+1, so the doubly-exponential budget mu_1=1, mu_i =
mu_{i-1}(mu_{i-1}+1) (capped at ~n^(1/3)) finishes in O(log log n) phases.

Edge selection (select_edges) works with range 2 and 1-bit payloads: each node
spreads its own mu' lightest relevant edges inside its fragment via local
broadcast; oversized fragments are split into groups whose leaders reduce
group results first.

Two announcement styles:
  * member broadcast — the j-th member of a fragment broadcasts the j-th
    selected edge (one round, edge capacity 5*ceil(log2 n));
  * holder-set broadcast — the whole fragment global-broadcasts the
    concatenated edge list, so capacity per phase shrinks with fragment size.
The second with the two-stage budget (mu=1 while fragments are small, then
mu ~ s_i/log n) yields total capacity O(log n).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bits import Bits, bits_for, concat_all
from .engine import InternalConsistencyError, ModelConfig, Network, RunMetrics
from .graph import EdgeKey, Graph, UnionFind, group_min
from .bcc import edge_payload, decode_edge_payload
from .primitives import (
    GlobalBroadcastInstance,
    LocalBroadcastInstance,
    global_broadcast_multi,
    local_broadcast_multi,
)


def icbrt_ceil(n: int) -> int:
    """ceil(n^(1/3)) without float drift."""
    k = max(1, int(round(n ** (1 / 3))))
    while k**3 < n:
        k += 1
    while (k - 1) ** 3 >= n:
        k -= 1
    return k


def stage1_length(n: int) -> int:
    """Number of unit-budget phases in the capacity-lean schedule."""
    if n < 4:
        return 1
    return max(1, math.ceil(2 * math.log2(math.log2(n))))


@dataclass(frozen=True)
class MuSchedule:
    """Per-phase edge budgets. mode 'rcast2' squares the budget each phase;
    mode 'capacity-optimal' spends 1 while fragments are small and then
    floor(s_i / log2 n) where s_i is the smallest growable fragment size."""

    mode: str

    def budget(self, phase: int, n: int, prev_mu: int, s_min: int) -> int:
        cap = icbrt_ceil(n)
        if self.mode == "rcast2":
            return 1 if phase == 1 else min(cap, prev_mu * (prev_mu + 1))
        if self.mode == "capacity-optimal":
            if phase <= stage1_length(n):
                return 1
            return max(1, min(s_min // bits_for(n), cap))
        raise ValueError(self.mode)

    def recurrence_value(self, phase: int, n: int, prev_mu: int) -> int:
        """The literal stage-2 recurrence, recorded for comparison only."""
        if self.mode != "capacity-optimal" or phase <= stage1_length(n):
            return 1
        return max(1, min(prev_mu * prev_mu // bits_for(n), icbrt_ceil(n)))


RCAST2_SCHEDULE = MuSchedule("rcast2")
CAPACITY_SCHEDULE = MuSchedule("capacity-optimal")


# -------------------------------------------------------------- edge selection

def relevant_edges_local(
    g: Graph, nodes, mu: int, frag_labels: np.ndarray
) -> list[EdgeKey]:
    """Centralized reference: the mu lightest relevant edges of a node set.

    A relevant edge of A is the lightest edge joining a node of A to some
    foreign fragment; at most one edge per target fragment, mu smallest kept.
    """
    nodes = np.asarray(list(nodes), dtype=np.int64)
    if len(nodes) == 0:
        raise ValueError("empty node set")
    own = set(frag_labels[nodes].tolist())
    if len(own) != 1:
        raise ValueError("nodes span more than one fragment")
    src, dst, w = g.directed()
    sel = np.isin(src, nodes) & (frag_labels[dst] != frag_labels[src])
    if not sel.any():
        return []
    fsrc, fdst, fw = src[sel], dst[sel], w[sel]
    tgt = frag_labels[fdst]
    idx = group_min(tgt, fw, np.minimum(fsrc, fdst), np.maximum(fsrc, fdst))
    keys = sorted(
        EdgeKey(int(fw[i]), int(min(fsrc[i], fdst[i])), int(max(fsrc[i], fdst[i])))
        for i in idx.tolist()
    )
    return keys[:mu]


def _slots_payload(edges: list[EdgeKey], mu: int, n: int) -> Bits:
    wb = bits_for(n)
    parts = [edge_payload(e.u, e.v, e.w, n) for e in edges]
    parts += [Bits.zeros(5 * wb)] * (mu - len(edges))
    return concat_all(parts)


def _decode_slots(payload: Bits, mu: int, n: int) -> list[EdgeKey]:
    wb = bits_for(n)
    out = []
    for chunk in payload.chunks(5 * wb):
        a, b, w = decode_edge_payload(chunk, n)
        if a != b:
            out.append(EdgeKey(w, a, b))
    return out


def select_edges(
    net: Network,
    g: Graph,
    frag_labels: np.ndarray,
    mu: int,
    participating: set[int] | None = None,
) -> dict[int, list[EdgeKey]]:
    """Every member of each fragment F learns E_{F, mu'}; mu' = min(cbrt(n), mu).

    Runs O(1) local-broadcast plans with 1-bit payloads and range 2.  Returns
    the per-fragment selections (identical at every member).  Fragments not in
    `participating` (known non-growable) are skipped.
    """
    n = g.n
    wb = bits_for(n)
    mu_p = min(icbrt_ceil(n), mu)
    slot_bits = mu_p * 5 * wb

    frag_ids = np.unique(frag_labels)
    if participating is not None:
        frag_ids = np.asarray([f for f in frag_ids.tolist() if f in participating], dtype=np.int64)
    part_mask = np.zeros(n, dtype=bool)
    member_lists: dict[int, np.ndarray] = {}
    for f in frag_ids.tolist():
        members = np.nonzero(frag_labels == f)[0]
        member_lists[f] = members
        part_mask[members] = True

    # per-node candidate lists: mu' lightest relevant edges incident to v
    src, dst, w = g.directed()
    sel = part_mask[src] & (frag_labels[src] != frag_labels[dst])
    fsrc, fdst, fw = src[sel], dst[sel], w[sel]
    per_node: dict[int, list[EdgeKey]] = {}
    if len(fsrc):
        tgt = frag_labels[fdst]
        keys = fsrc * n + tgt
        idx = group_min(keys, fw, np.minimum(fsrc, fdst), np.maximum(fsrc, fdst))
        s_i, w_i = fsrc[idx], fw[idx]
        a = np.minimum(fsrc[idx], fdst[idx])
        b = np.maximum(fsrc[idx], fdst[idx])
        order = np.lexsort((b, a, w_i, s_i))
        for i in order.tolist():
            v = int(s_i[i])
            lst = per_node.setdefault(v, [])
            if len(lst) < mu_p:
                lst.append(EdgeKey(int(w_i[i]), int(a[i]), int(b[i])))

    def as_instance(members: np.ndarray, holders: np.ndarray, lists: dict) -> LocalBroadcastInstance:
        msgs = {int(t): _slots_payload(lists.get(int(t), []), mu_p, n) for t in holders}
        return LocalBroadcastInstance.make(holders.tolist(), members.tolist(), slot_bits, msgs)

    # stage A: spread per-node lists inside fragments (small) or groups (large)
    stage_a: list[LocalBroadcastInstance] = []
    stage_a_meta: list[tuple[int, np.ndarray]] = []  # (fragment, group members)
    large: dict[int, list[np.ndarray]] = {}
    for f in frag_ids.tolist():
        members = member_lists[f]
        if len(members) * mu_p * wb <= n:
            stage_a.append(as_instance(members, members, per_node))
            stage_a_meta.append((f, members))
        else:
            gsize = max(1, len(members) // (mu_p * wb))
            groups = [members[i : i + gsize] for i in range(0, len(members), gsize)]
            large[f] = groups
            for grp in groups:
                stage_a.append(as_instance(grp, grp, per_node))
                stage_a_meta.append((f, grp))

    delivered_a = local_broadcast_multi(net, stage_a)

    # group-level / fragment-level reduction of delivered candidate lists
    def reduce_for(f: int, lists: list[list[EdgeKey]]) -> list[EdgeKey]:
        best: dict[int, EdgeKey] = {}
        for lst in lists:
            for e in lst:
                fu, fv = int(frag_labels[e.u]), int(frag_labels[e.v])
                tgt = fv if fu == f else fu
                if tgt == f:
                    continue
                if tgt not in best or e < best[tgt]:
                    best[tgt] = e
        return sorted(best.values())[:mu_p]

    small_results: dict[int, list[EdgeKey]] = {}
    group_results: dict[int, list[tuple[int, list[EdgeKey]]]] = {}
    for (f, members), delivered in zip(stage_a_meta, delivered_a):
        lists = [_decode_slots(delivered[int(t)], mu_p, n) for t in members]
        reduced = reduce_for(f, lists)
        if f in large:
            leader = int(members.min())
            group_results.setdefault(f, []).append((leader, reduced))
        else:
            small_results[f] = reduced

    # stage B: leaders of large fragments spread group results fragment-wide
    stage_b: list[LocalBroadcastInstance] = []
    stage_b_frags: list[int] = []
    for f, groups in group_results.items():
        holders = np.asarray(sorted(leader for leader, _ in groups), dtype=np.int64)
        lists = {leader: reduced for leader, reduced in groups}
        stage_b.append(as_instance(member_lists[f], holders, lists))
        stage_b_frags.append(f)
    results = dict(small_results)
    if stage_b:
        delivered_b = local_broadcast_multi(net, stage_b)
        for f, inst, delivered in zip(stage_b_frags, stage_b, delivered_b):
            lists = [_decode_slots(delivered[int(t)], mu_p, n) for t in inst.transmitters]
            results[f] = reduce_for(f, lists)
    return results


def capped_boruvka_merge(
    labels: np.ndarray, announced: list[EdgeKey], mu: int, uf: UnionFind
) -> list[EdgeKey]:
    """Merge fragments along announced edges; returns the accepted edges.

    Iterated Boruvka picks: a super-fragment takes its minimum announced
    outgoing edge only while it contains at most `mu` start-of-phase
    fragments.  Under that cap the picked edge is the picker's true cut
    minimum (every lighter relevant edge of the incident fragment leads
    inside the picker, and there are fewer than mu of those), so each
    accepted edge is MSF-safe; growable super-fragments finish with more
    than mu constituents.  Plain Kruskal over the announced union is *not*
    safe: both endpoints' budgets can drop a pair's lightest connector.
    """
    frag_edges = sorted(
        {(int(labels[e.u]), int(labels[e.v]), e) for e in announced}, key=lambda t: t[2]
    )
    scratch: dict[int, int] = {}
    count: dict[int, int] = {}

    def find(x: int) -> int:
        root = x
        while scratch.get(root, root) != root:
            root = scratch.get(root, root)
        while scratch.get(x, x) != root:
            scratch[x], x = root, scratch.get(x, x)
        return root

    accepted: list[EdgeKey] = []
    while True:
        best: dict[int, EdgeKey] = {}
        for fa, fb, e in frag_edges:
            ra, rb = find(fa), find(fb)
            if ra == rb:
                continue
            for r in (ra, rb):
                if count.get(r, 1) <= mu and (r not in best or e < best[r]):
                    best[r] = e
        if not best:
            break
        for e in sorted(set(best.values())):
            ra, rb = find(int(labels[e.u])), find(int(labels[e.v]))
            if ra == rb:
                continue
            lo, hi = min(ra, rb), max(ra, rb)
            scratch[hi] = lo
            count[lo] = count.get(lo, 1) + count.get(hi, 1)
            accepted.append(e)
            if not uf.union(e.u, e.v):
                raise InternalConsistencyError("accepted edge closed a cycle")
    return accepted


# ------------------------------------------------------------------ template

@dataclass
class MsfPhaseLog:
    phase: int
    mu: int
    mu_prime: int
    s_min_known: int
    recurrence_mu: int
    announced: dict[int, list[EdgeKey]]
    accepted: list[EdgeKey]
    beta_announce: int
    labels_end: np.ndarray


@dataclass
class MsfResult:
    edges: frozenset[EdgeKey]
    metrics: RunMetrics
    phases: list[MsfPhaseLog] = field(default_factory=list)


def msf_generic(
    g: Graph,
    schedule: MuSchedule,
    announcer: str,
    seed: int = 0,
    r: int | None = None,
    b: int | None = None,
    round_cap: int | None = None,
) -> MsfResult:
    """Phased MSF: select relevant edges, announce, merge locally, repeat."""
    if announcer not in ("member-broadcast", "holder-set-broadcast"):
        raise ValueError(announcer)
    n = g.n
    wb = bits_for(n)
    cfg = ModelConfig(n, r if r is not None else min(2, n), b if b is not None else 5 * wb)
    net = Network(cfg, seed=seed, round_cap=round_cap or 1024 * wb)

    uf = UnionFind(n)
    labels = np.arange(n, dtype=np.int64)
    participating: set[int] = set(range(n))
    msf: list[EdgeKey] = []
    phases: list[MsfPhaseLog] = []
    mu_prev = 1
    phase = 0
    while True:
        phase += 1
        sizes = np.bincount(labels[np.isin(labels, list(participating))], minlength=n)
        s_min = int(sizes[sizes > 0].min()) if participating else 0
        mu = schedule.budget(phase, n, mu_prev, s_min)
        selections = select_edges(net, g, labels, mu, participating)

        announcing = {f: e for f, e in selections.items() if e}
        beta_before = len(net.metrics.beta)
        if announcer == "member-broadcast":
            payloads = {}
            for f, edges in announcing.items():
                members = np.nonzero(labels == f)[0]
                if len(edges) > len(members):
                    raise InternalConsistencyError(
                        f"fragment {f} must announce {len(edges)} edges with {len(members)} members"
                    )
                for j, e in enumerate(edges):
                    payloads[int(members[j])] = edge_payload(e.u, e.v, e.w, n)
            ledger = net.post_broadcasts(payloads)
            heard = [decode_edge_payload(p, n) for p in ledger.payloads.values()]
            announced_edges = [EdgeKey(w2, a, b2) for a, b2, w2 in heard]
        else:
            instances = []
            for f, edges in sorted(announcing.items()):
                members = np.nonzero(labels == f)[0]
                message = concat_all([edge_payload(e.u, e.v, e.w, n) for e in edges])
                instances.append(GlobalBroadcastInstance.make(members.tolist(), message))
            announced_edges = []
            if instances:
                got = global_broadcast_multi(net, instances)
                for (f, edges), message in zip(sorted(announcing.items()), got):
                    for chunk in message.chunks(5 * wb):
                        a, b2, w2 = decode_edge_payload(chunk, n)
                        announced_edges.append(EdgeKey(w2, a, b2))
            else:
                net.post_silent_round()
        beta_announce = max(net.metrics.beta[beta_before:], default=0)

        # everyone merges locally: capped Boruvka over the announced edges
        accepted = capped_boruvka_merge(
            labels, announced_edges, min(icbrt_ceil(n), mu), uf
        )
        msf.extend(accepted)
        labels = uf.labels()
        participating = {int(labels[f]) for f in announcing}
        phases.append(
            MsfPhaseLog(
                phase=phase,
                mu=mu,
                mu_prime=min(icbrt_ceil(n), mu),
                s_min_known=s_min,
                recurrence_mu=schedule.recurrence_value(phase, n, mu_prev),
                announced=announcing,
                accepted=accepted,
                beta_announce=beta_announce,
                labels_end=labels.copy(),
            )
        )
        mu_prev = mu
        if not announcing:
            break
    return MsfResult(frozenset(msf), net.metrics, phases)


def msf_rcast2(g: Graph, seed: int = 0, **kw) -> MsfResult:
    """O(log log n)-phase MSF with range 2 (member-broadcast announcements)."""
    return msf_generic(g, RCAST2_SCHEDULE, "member-broadcast", seed=seed, **kw)


def msf_capacity_optimal(g: Graph, seed: int = 0, **kw) -> MsfResult:
    """MSF with range 2 and total edge capacity O(log n)."""
    return msf_generic(g, CAPACITY_SCHEDULE, "holder-set-broadcast", seed=seed, **kw)


# ------------------------------------------------------- range-O(n) baseline

def msf_lotker_baseline(g: Graph, seed: int = 0, round_cap: int | None = None) -> MsfResult:
    """Unicast-style selection baseline: each node messages every foreign
    fragment its lightest connector (range up to the fragment count)."""
    n = g.n
    wb = bits_for(n)
    cfg = ModelConfig(n, n, 5 * wb)
    net = Network(cfg, seed=seed, round_cap=round_cap or 1024 * wb)
    uf = UnionFind(n)
    labels = np.arange(n, dtype=np.int64)
    msf: list[EdgeKey] = []
    phases: list[MsfPhaseLog] = []
    mu_prev = 1
    phase = 0
    while True:
        phase += 1
        mu = 1 if phase == 1 else mu_prev * (mu_prev + 1)
        # selection round: v sends its lightest edge toward F' to members of F'
        src, dst, w = g.directed()
        sel = labels[src] != labels[dst]
        fsrc, fdst, fw = src[sel], dst[sel], w[sel]
        sends: dict[int, list] = {}
        per_frag_candidates: dict[int, list[EdgeKey]] = {}
        if len(fsrc):
            tgt = labels[fdst]
            idx = group_min(fsrc * n + tgt, fw, np.minimum(fsrc, fdst), np.maximum(fsrc, fdst))
            for i in idx.tolist():
                v, u, wt = int(fsrc[i]), int(fdst[i]), int(fw[i])
                f_target = int(labels[u])
                members = tuple(int(x) for x in np.nonzero(labels == f_target)[0] if x != v)
                payload = edge_payload(v, u, wt, n)
                if members:
                    sends.setdefault(v, []).append((payload, members))
                per_frag_candidates.setdefault(f_target, []).append(EdgeKey(wt, min(v, u), max(v, u)))
        net.post_sends(sends)
        announcing = {}
        for f, cands in per_frag_candidates.items():
            best: dict[int, EdgeKey] = {}
            for e in cands:
                other = int(labels[e.u]) if int(labels[e.u]) != f else int(labels[e.v])
                if other not in best or e < best[other]:
                    best[other] = e
            announcing[f] = sorted(best.values())[:mu]
        payloads = {}
        for f, edges in announcing.items():
            members = np.nonzero(labels == f)[0]
            for j, e in enumerate(edges):
                payloads[int(members[j])] = edge_payload(e.u, e.v, e.w, n)
        net.post_broadcasts(payloads)
        announced_edges = sorted({e for edges in announcing.values() for e in edges})
        accepted = capped_boruvka_merge(labels, announced_edges, mu, uf)
        msf.extend(accepted)
        labels = uf.labels()
        phases.append(
            MsfPhaseLog(phase, mu, mu, 0, 1, announcing, accepted, 5 * wb, labels.copy())
        )
        mu_prev = mu
        if not announcing:
            break
    return MsfResult(frozenset(msf), net.metrics, phases)
