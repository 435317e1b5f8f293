"""Engine enforcement, metrics, NodeProgram lockstep, unicast simulation."""
import numpy as np
import pytest

from rcastsim.bits import Bits, bit
from rcastsim.engine import (
    ALL,
    BandwidthViolation,
    ModelConfig,
    Network,
    NodeProgram,
    NonTermination,
    Outbox,
    OutputDisagreement,
    RangeViolation,
    run,
    simulate_unicast_round,
)
from rcastsim.graph import Graph


class OneBitBroadcast(NodeProgram):
    def __init__(self):
        self.done = False

    def init(self, view):
        self.view = view

    def on_round(self, inbox):
        if self.done:
            return Outbox.silent()
        self.done = True
        return Outbox.broadcast(bit(1))

    def finished(self):
        return "ok" if self.done else None


class TestRun:
    def test_two_node_broadcast_metrics(self):
        outputs, metrics = run(Graph(2), OneBitBroadcast, ModelConfig(2, 1, 1))
        assert outputs == ["ok", "ok"]
        assert metrics.rounds == 1
        assert metrics.beta == [1]
        assert metrics.total_capacity == 1
        assert metrics.max_range == [1]

    def test_determinism(self):
        a = run(Graph(4), OneBitBroadcast, ModelConfig(4, 1, 1), seed=3)
        b = run(Graph(4), OneBitBroadcast, ModelConfig(4, 1, 1), seed=3)
        assert a[0] == b[0]
        assert a[1].beta == b[1].beta
        assert np.array_equal(a[1].per_node_bits, b[1].per_node_bits)

    def test_output_disagreement(self):
        class Disagree(OneBitBroadcast):
            def finished(self):
                return self.view.node if self.done else None

        with pytest.raises(OutputDisagreement):
            run(Graph(2), Disagree, ModelConfig(2, 1, 1))

    def test_non_termination(self):
        class Babbler(OneBitBroadcast):
            def on_round(self, inbox):
                return Outbox.broadcast(bit(0))

            def finished(self):
                return None

        with pytest.raises(NonTermination):
            run(Graph(2), Babbler, ModelConfig(2, 1, 1), round_cap=10)


class TestValidation:
    def test_two_distinct_payloads_range2(self):
        net = Network(ModelConfig(4, 2, 2))
        ledger = net.post_sends({0: [(Bits.from01("01"), (2,)), (Bits.from01("10"), (3,))]})
        assert net.metrics.max_range == [2]
        assert ledger.payload(0, 2) == Bits.from01("01")
        assert ledger.payload(0, 3) == Bits.from01("10")

    def test_same_outbox_range1_violates(self):
        net = Network(ModelConfig(4, 1, 2))
        with pytest.raises(RangeViolation):
            net.post_sends({0: [(Bits.from01("01"), (2,)), (Bits.from01("10"), (3,))]})

    def test_duplicate_payload_counts_once(self):
        net = Network(ModelConfig(4, 1, 2))
        net.post_sends({0: [(Bits.from01("01"), (2,)), (Bits.from01("01"), (3,))]})
        assert net.metrics.max_range == [1]

    def test_bandwidth_violation(self):
        net = Network(ModelConfig(4, 1, 2))
        with pytest.raises(BandwidthViolation):
            net.post_broadcasts({1: Bits.from01("010")})

    def test_no_self_send(self):
        net = Network(ModelConfig(4, 2, 2))
        with pytest.raises(ValueError):
            net.post_sends({0: [(bit(1), (0,))]})

    def test_silence_is_free(self):
        net = Network(ModelConfig(4, 1, 2))
        net.post_broadcasts({})
        assert net.metrics.max_range == [0]
        assert net.metrics.beta == [0]

    def test_bit_sends_range(self):
        net = Network(ModelConfig(8, 2, 1))
        net.post_bit_sends(
            np.array([0, 0, 1]), np.array([1, 2, 3]), np.array([0, 1, 1])
        )
        assert net.metrics.max_range == [2]
        assert net.metrics.per_node_bits[0] == 2
        assert net.metrics.per_node_bits[1] == 1

    def test_bit_sends_range_violation(self):
        net = Network(ModelConfig(8, 1, 1))
        with pytest.raises(RangeViolation):
            net.post_bit_sends(np.array([0, 0]), np.array([1, 2]), np.array([0, 1]))

    def test_bit_blocks(self):
        net = Network(ModelConfig(8, 2, 1))
        blocks = [np.array([0, 1]), np.array([2, 3])]
        senders = np.arange(8)
        # node 4 has an edge into block 0 only
        net.post_bit_blocks(blocks, senders, np.array([4]), np.array([0]))
        assert net.metrics.max_range == [2]  # node 4 sends both a 1 and a 0
        assert net.metrics.beta == [1]

    def test_per_node_bits_counts_distinct_sizes(self):
        net = Network(ModelConfig(4, 2, 8))
        net.post_sends({0: [(Bits(8, 3), (1, 2)), (Bits(4, 1), (3,))]})
        assert net.metrics.per_node_bits[0] == 12

    def test_round_cap(self):
        net = Network(ModelConfig(2, 1, 1), round_cap=2)
        net.post_broadcasts({})
        net.post_broadcasts({})
        with pytest.raises(NonTermination):
            net.post_broadcasts({})

    def test_total_capacity_is_beta_sum(self):
        net = Network(ModelConfig(4, 2, 8))
        net.post_broadcasts({0: Bits(8, 1)})
        net.post_broadcasts({1: Bits(4, 1)})
        assert net.metrics.total_capacity == sum(net.metrics.beta) == 12


class TestUnicastSimulation:
    def test_log_n_rounds_at_r2(self):
        payloads = {0: {1: Bits(8, 0b10110011)}}
        delivered, metrics = simulate_unicast_round(payloads, ModelConfig(4, 2))
        assert metrics.rounds == 8
        assert all(b == 1 for b in metrics.beta)
        assert delivered == payloads

    def test_8_bits_r16_two_rounds(self):
        payloads = {0: {1: Bits(8, 0xA5)}}
        delivered, metrics = simulate_unicast_round(payloads, ModelConfig(16, 16))
        assert metrics.rounds == 2
        assert delivered == payloads

    def test_r1_unsupported(self):
        with pytest.raises(ValueError):
            simulate_unicast_round({0: {1: Bits(2, 1)}}, ModelConfig(4, 1))

    def test_reassembly_random(self):
        rng = np.random.default_rng(0)
        for trial in range(20):
            n = 16
            r = int(rng.choice([2, 4, 16]))
            payloads = {}
            for s in range(n):
                box = {}
                for d in range(n):
                    if s != d and rng.random() < 0.5:
                        length = int(rng.integers(1, 12))
                        box[d] = Bits(length, int(rng.integers(0, 1 << length)))
                if box:
                    payloads[s] = box
            delivered, metrics = simulate_unicast_round(payloads, ModelConfig(n, r))
            assert delivered == payloads
            assert max(metrics.max_range, default=0) <= r
