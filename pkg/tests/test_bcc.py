"""Broadcast-clique algorithms against the oracles, plus phase invariants."""
import numpy as np
import pytest

from rcastsim.bcc import (
    BroadcastCcResult,
    boruvka_msf_broadcast,
    broadcast_cc,
    decode_edge_payload,
    default_threshold,
    edge_payload,
)
from rcastsim.graph import Graph, generate, oracle_components, oracle_msf


def phase_meta_graph(g: Graph, log):
    """Directed component graph of one phase, from the broadcast logs.

    Type-1 edges follow round-2 broadcasts; type-2 edges connect a local
    maximum C1 that patched up a lost neighbor C' to the components that C'
    members adjacent to C1 broadcast toward in round 2.
    """
    labels = log.labels_start
    edges = set()
    r2_target = {}  # node -> component it broadcast toward
    for v, u in log.r2_edges:
        c1, c2 = int(labels[v]), int(labels[u])
        edges.add((c1, c2))
        r2_target[v] = c2
    adj = {}
    src, dst, _ = g.directed()
    for a, b in zip(src.tolist(), dst.tolist()):
        adj.setdefault(a, set()).add(b)
    active_nodes = {
        v for c in log.active_comps_start for v in np.nonzero(labels == c)[0].tolist()
    }
    for v, u in log.r3_edges:
        c1 = int(labels[v])
        cprime = int(labels[u])
        for w in np.nonzero(labels == cprime)[0].tolist():
            if w not in active_nodes:
                continue
            # members of C' adjacent to C1 broadcast toward something above C1
            touches_c1 = any(
                labels[x] == c1 and x in active_nodes for x in adj.get(w, ())
            )
            if touches_c1 and w in r2_target:
                edges.add((c1, r2_target[w]))
    return edges


def check_phase_invariants(g: Graph, res: BroadcastCcResult):
    s = res.s
    for log in res.phases:
        start_comps = set(log.active_comps_start)
        labels_end = log.labels_end
        # map start comps to end comps
        end_of = {}
        for c in start_comps:
            member = int(np.nonzero(log.labels_start == c)[0][0])
            end_of[c] = int(labels_end[member])
        groups = {}
        for c in start_comps:
            groups.setdefault(end_of[c], set()).add(c)

        # (reduction) every end component has >= s+1 start components or
        # consists only of start components of degree < s
        for end_c, members in groups.items():
            if len(members) <= s:
                assert all(log.comp_deg[c] < s for c in members), (
                    f"phase {log.phase}: component {end_c} groups {len(members)} "
                    f"start components but contains one of degree >= {s}"
                )
        # active count shrinks at least s-fold
        assert len(log.active_comps_end) * s <= len(start_comps)

        meta = phase_meta_graph(g, log)
        order = {c: (log.comp_deg[c], c) for c in start_comps}
        # acyclicity via strict ascent in the (deg, id) order
        for c1, c2 in meta:
            assert order[c1] < order[c2], "meta edge does not ascend"
        out_deg = {c: 0 for c in start_comps}
        in_deg = {c: 0 for c in start_comps}
        for c1, c2 in meta:
            out_deg[c1] += 1
            in_deg[c2] += 1
        # sink property: a sink of positive degree has in-degree >= deg(C)
        for c in start_comps:
            if out_deg[c] == 0 and log.comp_deg[c] >= 1:
                assert in_deg[c] >= log.comp_deg[c]
        # every merged end-component contains a sink
        for end_c, members in groups.items():
            assert any(out_deg[c] == 0 for c in members)


class TestBoruvka:
    def test_empty_graph(self):
        res = boruvka_msf_broadcast(Graph(4))
        assert res.edges == frozenset()
        assert res.merge_phases == 0
        assert res.metrics.rounds == 1  # the single silent detection round

    def test_star_single_phase(self):
        g = generate("star(16)", seed=1)
        res = boruvka_msf_broadcast(g)
        assert res.edges == oracle_msf(g)
        assert len(res.edges) == 15
        assert res.merge_phases == 1

    def test_path8(self):
        g = generate("path(8)", seed=3)
        res = boruvka_msf_broadcast(g)
        assert res.edges == oracle_msf(g)
        assert res.merge_phases <= 3

    def test_range_is_one(self):
        g = generate("gnp(64,0.1)", seed=5)
        res = boruvka_msf_broadcast(g)
        assert max(res.metrics.max_range) <= 1
        assert res.edges == oracle_msf(g)

    @pytest.mark.parametrize("seed", range(8))
    def test_oracle_sweep(self, seed):
        g = generate("gnp(48,0.08)", seed=seed)
        res = boruvka_msf_broadcast(g)
        assert res.edges == oracle_msf(g)
        assert res.merge_phases <= int(np.ceil(np.log2(g.n)))


class TestBroadcastCc:
    def test_star_one_phase(self):
        g = generate("star(16)", seed=0)
        res = broadcast_cc(g, s=2)
        assert res.partition == oracle_components(g)
        assert len(res.phases) == 1

    def test_empty_graph(self):
        g = Graph(5)
        res = broadcast_cc(g, s=2)
        assert res.partition == oracle_components(g)
        assert len(res.phases) == 1  # one phase deactivates everything

    def test_default_threshold(self):
        assert default_threshold(256) == 3
        assert default_threshold(2) == 2

    def test_gnp_with_invariants(self):
        g = generate("gnp(256,0.02)", seed=7)
        res = broadcast_cc(g, s=4)
        assert res.partition == oracle_components(g)
        check_phase_invariants(g, res)

    @pytest.mark.parametrize("seed", range(6))
    @pytest.mark.parametrize("gen", ["gnp(96,0.03)", "components(3,16,0.2)", "grid(6,8)"])
    def test_oracle_sweep(self, gen, seed):
        g = generate(gen, seed=seed)
        res = broadcast_cc(g)
        assert res.partition == oracle_components(g)
        assert max(res.metrics.max_range) <= 1
        check_phase_invariants(g, res)

    def test_round_bound(self):
        for exp in (6, 8, 10):
            n = 2**exp
            g = generate(f"gnp({n},{4/n})", seed=exp)
            s = default_threshold(n)
            res = broadcast_cc(g, s=s)
            assert res.partition == oracle_components(g)
            bound = 6 * (s + np.log(n) / np.log(s))
            assert res.metrics.rounds <= bound

    def test_bandwidth_variant(self):
        g = generate("gnp(128,0.05)", seed=2)
        for d in (2, 4):
            res = broadcast_cc(g, s=d, d=d)
            assert res.partition == oracle_components(g)
            # playoff batches d edges per round
            assert res.playoff_rounds == int(np.ceil((d - 1) / d))
            assert max(res.metrics.beta) <= d * 5 * 7

    def test_deterministic(self):
        g = generate("gnp(64,0.05)", seed=9)
        a = broadcast_cc(g, s=3, seed=1)
        b = broadcast_cc(g, s=3, seed=1)
        assert a.partition == b.partition
        assert a.metrics.beta == b.metrics.beta


def test_edge_payload_roundtrip():
    assert decode_edge_payload(edge_payload(5, 2, 77, 16), 16) == (2, 5, 77)
