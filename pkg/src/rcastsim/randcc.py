"""Randomized connected components in the range-2 clique via meta-graph sketches.

Phases operate on the meta-graph whose nodes are the current active components
(meta-edge = some underlying graph edge crosses).  Once the active count fits,
each component C_i is assigned a representative block V_i of consecutive node
IDs; the block computes the rows of C_i's multi-sketch (one row per member)
from two bit-rounds and broadcasts them.  Every node then replays the same
ceil(log2 x) Boruvka steps on the sketches, one fresh sketch per step, merging
components along decoded meta-edges.  Real edges certifying the merges are
extracted (signal bit round + one announcement per merged component), a random
incident meta-edge per component keeps high-degree components progressing, and
non-growable components are deactivated.

While the active count is still too large for any valid scale (10 * L^p * |C|
< n has no solution), a phase is just the random-edge step: every growable
component merges along one uniformly chosen incident meta-edge, at least
halving the growable count, so only ~log2(80) such bootstrap phases ever run.

The capacity-lean variant picks the scale by the cubic rule, which leaves the
representative blocks 10*ceil(log2 x)^3 nodes wide: sketch rows travel inside
the block by local broadcast (1-bit payloads) and leave it by holder-set
broadcast, shrinking per-phase capacity to O(log n / log x); real-edge and
random-edge announcements ride the same block route.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bits import Bits, bits_for, concat_all
from .engine import InternalConsistencyError, ModelConfig, Network, RunMetrics
from .bcc import edge_payload, decode_edge_payload
from .graph import Graph, Partition, UnionFind
from .primitives import (
    GlobalBroadcastInstance,
    LocalBroadcastInstance,
    global_broadcast_multi,
    local_broadcast_multi,
)
from .sketch import (
    MultiSketch,
    Sketch,
    _membership_vec,
    clamp_scale,
    decode,
    edge_id,
    mix64,
    multi_row_position,
    rows_per_sketch,
    sketch_count,
    sketch_xor,
)


def pick_scale(n: int, n_comps: int, power: int) -> int | None:
    """Largest power-of-two scale x = 2^L (L >= 2) with 10 * L^power * |C| < n.

    Larger scales mean more merge steps per phase; the bound keeps the
    representative blocks (10 * L^power nodes per component) inside the
    network.  None when even L=2 does not fit (bootstrap regime).
    """
    if n_comps < 1:
        return None
    best = None
    L = 2
    while 10 * (L**power) * n_comps < n:
        best = 1 << L
        L += 1
    return best


def meta_edge_name(c: int, d: int, width: int) -> int:
    a, b = (c, d) if c < d else (d, c)
    return (a << width) | b


@dataclass
class RccPhaseLog:
    phase: int
    kind: str  # "bootstrap" | "sketch"
    x: int | None
    active_start: int
    active_end: int = 0
    labels_end: np.ndarray | None = None
    decode_success: int = 0
    used_meta: list[tuple[int, int]] = field(default_factory=list)
    real_edges: list[tuple[int, int]] = field(default_factory=list)
    random_choices: dict[int, int] = field(default_factory=dict)


@dataclass
class RandCcResult:
    partition: Partition
    metrics: RunMetrics
    phases: list[RccPhaseLog] = field(default_factory=list)


class _Run:
    """Shared state of one connected-components execution."""

    def __init__(self, g: Graph, seed: int, capacity_lean: bool, r, b, round_cap):
        n = g.n
        self.g = g
        self.n = n
        self.wb = bits_for(n)
        cfg = ModelConfig(n, r if r is not None else min(2, n), b if b is not None else 0)
        self.net = Network(cfg, seed=seed, round_cap=round_cap or 512 * self.wb)
        self.capacity_lean = capacity_lean
        self.power = 3 if capacity_lean else 2
        self.labels = np.arange(n, dtype=np.int64)
        self.uf = UnionFind(n)
        self.active = np.ones(n, dtype=bool)  # per node: component still active
        self.id_seed = mix64(self.net.public_seed(), 0x1D5)
        self.choice_seed = mix64(self.net.public_seed(), 0xC501CE)
        self.phases: list[RccPhaseLog] = []

    # ------------------------------------------------------------- helpers

    def active_comps(self) -> np.ndarray:
        labs = self.labels[self.active]
        return np.unique(labs) if len(labs) else np.empty(0, dtype=np.int64)

    def comp_members(self, comps: np.ndarray) -> dict[int, np.ndarray]:
        nodes = np.nonzero(self.active)[0]
        if len(nodes) == 0:
            return {}
        labs = self.labels[nodes]
        order = np.argsort(labs, kind="stable")
        nodes, labs = nodes[order], labs[order]
        bounds = np.nonzero(np.diff(labs))[0] + 1
        chunks = np.split(nodes, bounds)
        out = {int(ch_labs[0]): ch for ch, ch_labs in zip(chunks, np.split(labs, bounds))}
        return {int(c): out[int(c)] for c in comps.tolist()}

    def cross_pairs(self) -> tuple[np.ndarray, np.ndarray]:
        """Unique (node, foreign active component) adjacency pairs."""
        src, dst, _ = self.g.directed()
        ok = self.active[src] & self.active[dst] & (self.labels[src] != self.labels[dst])
        if not ok.any():
            return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
        pairs = np.unique(src[ok] * self.n + self.labels[dst[ok]])
        return pairs // self.n, pairs % self.n

    def neighborhood_round(self, comps: np.ndarray, blocks: list[np.ndarray]):
        """Each active node sends, for every listed component, one bit saying
        whether it has an edge into that component; the bit goes to every node
        of that component's block.  Returns the 1-bit (sender, component)
        pairs, from which any block member's knowledge is derived.
        """
        senders_one, comp_one = self.cross_pairs()
        rank = np.full(self.n, -1, dtype=np.int64)
        rank[comps] = np.arange(len(comps))
        self.net.post_bit_blocks(
            blocks=blocks,
            senders=np.nonzero(self.active)[0],
            one_senders=senders_one,
            one_blocks=rank[comp_one],
        )
        return senders_one, comp_one

    def meta_adjacency(self, senders_one, comp_one) -> dict[int, np.ndarray]:
        """N(C) per component: the components of the nodes that signaled 1."""
        if len(senders_one) == 0:
            return {}
        send_comp = self.labels[senders_one]
        keep = send_comp != comp_one
        pairs = np.unique(comp_one[keep] * self.n + send_comp[keep])
        owner = pairs // self.n
        neigh = pairs % self.n
        bounds = np.nonzero(np.diff(owner))[0] + 1
        groups = np.split(neigh, bounds)
        heads = owner[np.concatenate([[0], bounds])] if len(owner) else []
        return {int(c): grp for c, grp in zip(heads, groups)}

    def announce_edges(
        self, items: list[tuple[int, Bits]], rep_blocks: dict[int, np.ndarray] | None
    ) -> dict[int, Bits]:
        """Each (holder node, payload) announced to the whole network.

        Base variant: direct broadcast (one round).  Capacity-lean variant:
        local broadcast {holder} -> its component's representative block, then
        holder-set broadcast from the block (payload split across members).
        """
        if not items:
            if rep_blocks is None:
                self.net.post_silent_round()
            else:
                self.net.post_silent_round()
                self.net.post_silent_round()
                self.net.post_silent_round()
            return {}
        if rep_blocks is None:
            ledger = self.net.post_broadcasts({v: p for v, p in items})
            return dict(ledger.payloads)
        lb = []
        for v, payload in items:
            block = rep_blocks[int(self.labels[v])]
            lb.append(
                LocalBroadcastInstance.make([v], block.tolist(), payload.length, {v: payload})
            )
        delivered = local_broadcast_multi(self.net, lb)
        gb = [
            GlobalBroadcastInstance.make(
                rep_blocks[int(self.labels[v])].tolist(), got[v]
            )
            for (v, _), got in zip(items, delivered)
        ]
        out = global_broadcast_multi(self.net, gb)
        return {v: msg for (v, _), msg in zip(items, out)}

    # --------------------------------------------------------- random edges

    def random_edge_step(self, log: RccPhaseLog, rep_blocks=None):
        """Per growable component: its minimum member picks a uniform incident
        meta-edge; a real edge certifying it is extracted and everyone merges.
        Components whose leader stays silent are deactivated by everyone."""
        comps = self.active_comps()
        if len(comps) == 0:
            return
        members = self.comp_members(comps)
        blocks = [members[int(c)] for c in comps.tolist()]
        senders_one, comp_one = self.neighborhood_round(comps, blocks)
        nbhd = self.meta_adjacency(senders_one, comp_one)

        # choice round: leader of each growable component announces its target
        choices = []
        for c in comps.tolist():
            neigh = nbhd.get(int(c))
            if neigh is None or len(neigh) == 0:
                continue
            leader = int(members[int(c)][0])
            pick = mix64(self.choice_seed, len(self.phases), leader) % len(neigh)
            target = int(neigh[pick])
            log.random_choices[int(c)] = target
            choices.append((leader, Bits(self.wb, target)))
        heard = self.announce_edges(choices, rep_blocks)

        # silent leaders expose non-growable components: deactivate them
        growable = {int(self.labels[v]) for v in heard}
        for c in comps.tolist():
            if int(c) not in growable:
                self.active[members[int(c)]] = False

        pairs = [(int(self.labels[v]), int(p.value)) for v, p in heard.items()]
        self.extract_and_merge(sorted(pairs), log, rep_blocks)

    def extract_and_merge(self, comp_pairs, log: RccPhaseLog, rep_blocks=None):
        """Signal round + announcement round realizing one real edge per pair.

        comp_pairs lists (child component, parent/target component); the
        minimum-ID member of the child incident to the target announces its
        lightest such edge.  Everyone merges along the announced edges.
        """
        if not comp_pairs:
            self.net.post_silent_round()
            if rep_blocks is None:
                self.net.post_silent_round()
            else:
                self.net.post_silent_round()
                self.net.post_silent_round()
                self.net.post_silent_round()
            return
        n = self.n
        tgt_of = np.full(n, -1, dtype=np.int64)
        for child, target in comp_pairs:
            tgt_of[child] = target
        src, dst, w = self.g.directed()
        lsrc = self.labels[src]
        ok = (tgt_of[lsrc] >= 0) & (self.labels[dst] == tgt_of[lsrc])
        if not ok.any():
            raise InternalConsistencyError("no real edge certifies any meta merge")
        esrc, edst, ew = src[ok], dst[ok], w[ok]
        # signal round: every node with an edge into its component's target
        signal_nodes = np.unique(esrc)
        self.net.post_broadcasts({int(v): Bits(1, 1) for v in signal_nodes.tolist()})

        # the minimum-ID signaler of each child announces its lightest edge
        comp_of = self.labels[esrc]
        order = np.lexsort((np.maximum(esrc, edst), np.minimum(esrc, edst), ew, esrc, comp_of))
        csort = comp_of[order]
        first = np.ones(len(csort), dtype=bool)
        first[1:] = csort[1:] != csort[:-1]
        # per child: rows sorted by (signaler, EdgeKey); the first row per
        # child has the minimum signaler, and among its rows the lightest edge
        chosen = order[first]
        found = set(csort[first].tolist())
        for child, target in comp_pairs:
            if child not in found:
                raise InternalConsistencyError(
                    f"no member of component {child} touches component {tgt_of[child]}"
                )
        items = []
        for i in chosen.tolist():
            a, b, wt = int(esrc[i]), int(edst[i]), int(ew[i])
            items.append((a, edge_payload(a, b, wt, n)))
        items.sort()
        heard = self.announce_edges(items, rep_blocks)
        for v, payload in heard.items():
            a, b, wt = decode_edge_payload(payload, n)
            if self.labels[a] != self.labels[b]:
                self.uf.union(int(a), int(b))
            log.real_edges.append((a, b))
        self.labels = self.uf.labels()

    # -------------------------------------------------------- sketch phases

    def sketch_phase(self, x: int, log: RccPhaseLog):
        n, wb = self.n, self.wb
        L = sketch_count(x)
        y_rows = rows_per_sketch(x) * L  # multi-sketch rows = 10 * L^2
        y_block = 10 * (L**3) if self.capacity_lean else y_rows
        comps = self.active_comps()
        k = len(comps)
        if k * y_block > n:
            raise InternalConsistencyError("representative blocks do not fit")
        members = self.comp_members(comps)
        rank = {int(c): i for i, c in enumerate(comps.tolist())}
        blocks = [np.arange(i * y_block, (i + 1) * y_block, dtype=np.int64) for i in range(k)]
        row_blocks = [blk[:y_rows] for blk in blocks]

        # Round 1: meta-neighborhood bits into the row blocks
        senders_one, comp_one = self.neighborhood_round(comps, row_blocks)
        nbhd = self.meta_adjacency(senders_one, comp_one)
        membership_seed = mix64(self.net.public_seed(), 0x3E7, len(self.phases))

        # Round 2: the lower-ranked endpoint's block samples each meta-edge
        # row-wise and tells the higher-ranked endpoint's block
        meta_edges: list[tuple[int, int]] = []
        for c, neigh in sorted(nbhd.items()):
            for d in neigh.tolist():
                if rank[int(d)] > rank[int(c)]:
                    meta_edges.append((int(c), int(d)))
        names = np.asarray(
            [meta_edge_name(c, d, wb) for c, d in meta_edges], dtype=np.int64
        )
        sample = np.zeros((len(meta_edges), y_rows), dtype=np.uint8)
        for row in range(y_rows):
            t, j = multi_row_position(x, row + 1)
            sample[:, row] = _membership_vec(membership_seed, names, t, j)
        if len(meta_edges):
            s_list = np.concatenate([row_blocks[rank[c]] for c, _ in meta_edges])
            d_list = np.concatenate([row_blocks[rank[d]] for _, d in meta_edges])
            self.net.post_bit_sends(s_list, d_list, sample.reshape(-1))
        else:
            self.net.post_silent_round()

        # Round 3: each row holder publishes its row of its component's sketch
        row_len = 4 * wb
        rows_of = {int(c): [0] * y_rows for c in comps.tolist()}
        for i, (c, d) in enumerate(meta_edges):
            value = edge_id(self.id_seed, c, d, n).value()
            for row in np.nonzero(sample[i])[0].tolist():
                rows_of[c][row] ^= value
                rows_of[d][row] ^= value
        if self.capacity_lean:
            lb = []
            for c in comps.tolist():
                holders = row_blocks[rank[c]]
                msgs = {int(holders[j]): Bits(row_len, rows_of[c][j]) for j in range(y_rows)}
                lb.append(
                    LocalBroadcastInstance.make(
                        holders.tolist(), blocks[rank[c]].tolist(), row_len, msgs
                    )
                )
            delivered = local_broadcast_multi(self.net, lb)
            gb = []
            for c, got in zip(comps.tolist(), delivered):
                holders = row_blocks[rank[c]]
                whole = concat_all([got[int(holders[j])] for j in range(y_rows)])
                gb.append(GlobalBroadcastInstance.make(blocks[rank[c]].tolist(), whole))
            published = global_broadcast_multi(self.net, gb)
            tables = {
                c: [ch.value for ch in msg.chunks(row_len)]
                for c, msg in zip(comps.tolist(), published)
            }
        else:
            payloads = {}
            for c in comps.tolist():
                holders = row_blocks[rank[c]]
                for j in range(y_rows):
                    payloads[int(holders[j])] = Bits(row_len, rows_of[c][j])
            ledger = self.net.post_broadcasts(payloads)
            tables = {
                c: [ledger.payloads[int(row_blocks[rank[c]][j])].value for j in range(y_rows)]
                for c in comps.tolist()
            }

        sketches = {
            c: MultiSketch(
                tuple(
                    Sketch(
                        clamp_scale(x),
                        wb,
                        tuple(rows[t * rows_per_sketch(x) : (t + 1) * rows_per_sketch(x)]),
                    )
                    for t in range(L)
                )
            )
            for c, rows in tables.items()
        }

        # replicated local computation: L merge steps on the sketches
        _, used = boruvka_on_sketches(sketches, x, self.id_seed, n)
        log.decode_success = len(used)
        log.used_meta = used

        pairs = rooted_forest_pairs(used)
        rep = (
            {int(c): blocks[rank[int(c)]] for c in comps.tolist()}
            if self.capacity_lean
            else None
        )
        self.extract_and_merge(sorted(pairs), log, rep)
        for c, d in pairs:
            if self.labels[c] != self.labels[d]:
                raise InternalConsistencyError("announced edges missed a meta merge")

    # ----------------------------------------------------------------- main

    def execute(self) -> RandCcResult:
        while self.active.any():
            comps = self.active_comps()
            x = pick_scale(self.n, len(comps), self.power)
            sketchy = x is not None and len(comps) > 1
            log = RccPhaseLog(
                phase=len(self.phases) + 1,
                kind="sketch" if sketchy else "bootstrap",
                x=x if sketchy else None,
                active_start=len(comps),
            )
            if sketchy:
                self.sketch_phase(x, log)
                rep = None
                if self.capacity_lean:
                    comps2 = self.active_comps()
                    L = sketch_count(x)
                    yb = 10 * (L**3)
                    rep = {
                        int(c): np.arange(i * yb, (i + 1) * yb, dtype=np.int64)
                        for i, c in enumerate(comps2.tolist())
                    }
                self.random_edge_step(log, rep)
            else:
                self.random_edge_step(log, None)
            log.active_end = len(self.active_comps())
            log.labels_end = self.labels.copy()
            self.phases.append(log)
        part = Partition(self.labels, frozenset(np.unique(self.labels).tolist()))
        return RandCcResult(part, self.net.metrics, self.phases)


def boruvka_on_sketches(
    sketches: dict[int, MultiSketch], x: int, id_seed: int, n: int
) -> tuple[dict[int, int], list[tuple[int, int]]]:
    """Replicated local merging: step t decodes one outgoing meta-edge per
    super-component from the XOR of its members' t-th sketches.

    Returns (old component -> merged group root, used meta-edges).  Used
    meta-edges are exactly the picks that caused a union, so they form a
    forest over the old components.  Decode failures leave a component
    unmerged for the step (the random-edge step provides progress).
    """
    comps = sorted(sketches)
    parent: dict[int, int] = {c: c for c in comps}

    def find(c):
        root = c
        while parent[root] != root:
            root = parent[root]
        while parent[c] != root:
            parent[c], c = root, parent[c]
        return root

    used: list[tuple[int, int]] = []
    L = sketch_count(x)
    for t in range(1, L + 1):
        groups: dict[int, list[int]] = {}
        for c in comps:
            groups.setdefault(find(c), []).append(c)
        picks = []
        for root in sorted(groups):
            acc = None
            for c in groups[root]:
                s = sketches[c].sketch(t)
                acc = s if acc is None else sketch_xor(acc, s)
            got = decode(acc, id_seed)
            if got is None:
                continue
            a, b = got
            if a not in parent or b not in parent:
                continue  # check-collision garbage named a non-component
            if find(a) == find(b):
                continue
            picks.append((a, b))
        for a, b in picks:
            ra, rb = find(a), find(b)
            if ra == rb:
                continue
            parent[max(ra, rb)] = min(ra, rb)
            used.append((min(a, b), max(a, b)))
    return {c: find(c) for c in comps}, used


def rooted_forest_pairs(used: list[tuple[int, int]]) -> list[tuple[int, int]]:
    """(child, parent) pairs of the rooted forest over old components whose
    tree edges are the used meta-edges; roots are the minimum IDs."""
    adj: dict[int, list[int]] = {}
    for a, b in used:
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, []).append(a)
    seen: set[int] = set()
    pairs = []
    for root in sorted(adj):
        if root in seen:
            continue
        seen.add(root)
        frontier = [root]
        while frontier:
            nxt = []
            for p in frontier:
                for child in sorted(adj[p]):
                    if child not in seen:
                        seen.add(child)
                        pairs.append((child, p))
                        nxt.append(child)
            frontier = nxt
    return pairs


def cc_logstar(
    g: Graph, seed: int = 0, r: int | None = None, b: int | None = None, round_cap=None
) -> RandCcResult:
    """Randomized connected components; output equals the oracle partition."""
    return _Run(g, seed, capacity_lean=False, r=r, b=b, round_cap=round_cap).execute()


def cc_capacity_optimal(
    g: Graph, seed: int = 0, r: int | None = None, b: int | None = None, round_cap=None
) -> RandCcResult:
    """Connected components with total edge capacity O(log n)."""
    return _Run(g, seed, capacity_lean=True, r=r, b=b, round_cap=round_cap).execute()
