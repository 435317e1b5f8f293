"""Local and global broadcast round plans."""
import numpy as np
import pytest

from rcastsim.bits import Bits
from rcastsim.engine import ModelConfig, Network
from rcastsim.primitives import (
    GlobalBroadcastInstance,
    LocalBroadcastInstance,
    global_broadcast,
    global_broadcast_multi,
    local_broadcast,
    local_broadcast_multi,
)


def rcast2_net(n, b=1):
    return Network(ModelConfig(n, 2, b))


def make_instance(rng, n, transmitters, receivers, b):
    msgs = {
        t: Bits.from01("".join(rng.choice(["0", "1"], size=b))) for t in transmitters
    }
    return LocalBroadcastInstance.make(transmitters, receivers, b, msgs)


class TestLocalBroadcast:
    def test_single_transmitter(self):
        net = rcast2_net(8)
        inst = LocalBroadcastInstance.make([1], range(8), 3, {1: Bits.from01("101")})
        delivered = local_broadcast(net, inst)
        assert delivered == {1: Bits.from01("101")}
        assert net.metrics.rounds == 2
        assert net.metrics.beta == [1, 1]
        assert max(net.metrics.max_range) <= 2

    def test_two_repetitions(self):
        # |T| * b = 2n forces two batches -> 4 rounds
        n = 8
        rng = np.random.default_rng(1)
        inst = make_instance(rng, n, list(range(4)), range(n), 4)
        assert inst.batches(n) == 2
        net = rcast2_net(n)
        delivered = local_broadcast(net, inst)
        assert delivered == inst.messages
        assert net.metrics.rounds == 4

    def test_empty_transmitters(self):
        net = rcast2_net(8)
        inst = LocalBroadcastInstance.make([], range(8), 3, {})
        delivered = local_broadcast(net, inst)
        assert delivered == {}
        assert net.metrics.rounds == 2
        assert net.metrics.beta == [0, 0]

    def test_multi_disjoint_halves(self):
        n = 16
        rng = np.random.default_rng(2)
        a = make_instance(rng, n, [0, 1], range(0, 8), 2)
        b = make_instance(rng, n, [8, 9], range(8, 16), 2)
        net = rcast2_net(n)
        out = local_broadcast_multi(net, [a, b])
        assert out[0] == a.messages and out[1] == b.messages
        assert net.metrics.rounds == 2

    def test_multi_single_equals_single(self):
        n = 8
        rng = np.random.default_rng(3)
        inst = make_instance(rng, n, [2, 5], range(n), 3)
        net1, net2 = rcast2_net(n), rcast2_net(n)
        assert local_broadcast(net1, inst) == local_broadcast_multi(net2, [inst])[0]
        assert net1.metrics.beta == net2.metrics.beta

    def test_overlapping_receivers_rejected(self):
        n = 8
        rng = np.random.default_rng(4)
        a = make_instance(rng, n, [0], [4, 5], 2)
        b = make_instance(rng, n, [1], [5, 6], 2)
        with pytest.raises(ValueError):
            local_broadcast_multi(rcast2_net(n), [a, b])

    def test_overlapping_transmitters_rejected(self):
        n = 8
        rng = np.random.default_rng(5)
        a = make_instance(rng, n, [0], [4], 2)
        b = make_instance(rng, n, [0], [6], 2)
        with pytest.raises(ValueError):
            local_broadcast_multi(rcast2_net(n), [a, b])

    def test_batch_limit(self):
        n = 4
        rng = np.random.default_rng(6)
        inst = make_instance(rng, n, list(range(4)), range(n), 512)
        with pytest.raises(ValueError):
            local_broadcast(rcast2_net(n, b=1), inst)

    def test_randomized_delivery(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            n = int(rng.integers(4, 40))
            b = int(rng.integers(1, 8))
            max_t = max(1, n // b)
            t_count = int(rng.integers(0, max_t + 1))
            transmitters = rng.choice(n, size=t_count, replace=False).tolist()
            receivers = rng.choice(n, size=int(rng.integers(1, n + 1)), replace=False)
            inst = make_instance(rng, n, transmitters, receivers.tolist(), b)
            net = rcast2_net(n)
            assert local_broadcast(net, inst) == inst.messages
            assert all(bb <= 1 for bb in net.metrics.beta)
            assert all(r <= 2 for r in net.metrics.max_range)


class TestGlobalBroadcast:
    def test_one_bit_chunks(self):
        # |S| = b: every holder broadcasts one bit
        net = Network(ModelConfig(8, 1, 8))
        msg = Bits.from01("0110")
        inst = GlobalBroadcastInstance.make([0, 1, 2, 3], msg)
        got = global_broadcast(net, inst)
        assert got == msg
        assert net.metrics.rounds == 1
        assert net.metrics.beta == [1]

    def test_single_holder(self):
        net = Network(ModelConfig(8, 1, 8))
        msg = Bits(8, 0xA5)
        assert global_broadcast(net, GlobalBroadcastInstance.make([3], msg)) == msg
        assert net.metrics.beta == [8]

    def test_uneven_chunks(self):
        # b=10, |S|=3 -> chunks of 4,4,2 bits, beta=4
        net = Network(ModelConfig(8, 1, 8))
        msg = Bits(10, 0b1011001110)
        inst = GlobalBroadcastInstance.make([1, 4, 6], msg)
        assert inst.chunk_size == 4
        assert global_broadcast(net, inst) == msg
        assert net.metrics.beta == [4]

    def test_range_is_one(self):
        net = Network(ModelConfig(8, 1, 8))
        global_broadcast(net, GlobalBroadcastInstance.make([0, 1], Bits(6, 33)))
        assert net.metrics.max_range == [1]

    def test_multi_instances_one_round(self):
        net = Network(ModelConfig(8, 1, 8))
        a = GlobalBroadcastInstance.make([0, 1], Bits(6, 33))
        b = GlobalBroadcastInstance.make([4, 5, 6], Bits(6, 21))
        got = global_broadcast_multi(net, [a, b])
        assert got == [Bits(6, 33), Bits(6, 21)]
        assert net.metrics.rounds == 1

    def test_overlapping_holders_rejected(self):
        a = GlobalBroadcastInstance.make([0, 1], Bits(4, 3))
        b = GlobalBroadcastInstance.make([1, 2], Bits(4, 3))
        with pytest.raises(ValueError):
            global_broadcast_multi(Network(ModelConfig(8, 1, 8)), [a, b])
