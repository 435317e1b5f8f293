"""Reusable communication subroutines: local broadcast and global broadcast.

Local broadcast moves per-transmitter messages M^v (v in T, each b bits) to
every node of a receiver set R using only 1-bit payloads and range 2:
transmitter bits are spread over a segment of relay nodes (round 1), then each
relay repeats its bit to all of R (round 2).  With |T|*b <= c*n the plan runs
2c rounds (c repetition batches).  Several instances run simultaneously as
long as the T_i are pairwise disjoint and the R_i are pairwise disjoint.

Global broadcast moves one message known to every node of a holder set S to
the whole network in a single round: the i-th holder broadcasts the i-th chunk
of ceil(b/|S|) bits.

Both return what the receivers can reconstruct from the transmitted rounds,
which the callers (and tests) compare bit-exactly against the inputs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .bits import Bits, concat_all
from .engine import Network

# Max repetition batches per instance.  Asymptotically every caller keeps
# |T|*b = O(n), but at small n the edge-selection leader stage legitimately
# needs ~10*mu'^2*log^2(n)/n batches, which peaks near 140 around n=128.
BATCH_LIMIT = 256


@dataclass(frozen=True)
class LocalBroadcastInstance:
    transmitters: tuple[int, ...]
    receivers: tuple[int, ...]
    b: int
    messages: Mapping[int, Bits]

    def __post_init__(self):
        if self.b < 1:
            raise ValueError("message length must be >= 1")
        if set(self.messages) != set(self.transmitters):
            raise ValueError("messages must cover exactly the transmitter set")
        for v, msg in self.messages.items():
            if msg.length != self.b:
                raise ValueError(f"message of {v} has length {msg.length}, expected {self.b}")

    @staticmethod
    def make(transmitters, receivers, b, messages) -> "LocalBroadcastInstance":
        return LocalBroadcastInstance(
            tuple(sorted(int(t) for t in transmitters)),
            tuple(sorted(int(r) for r in receivers)),
            int(b),
            dict(messages),
        )

    def batches(self, n: int) -> int:
        return max(1, math.ceil(len(self.transmitters) * self.b / n))


def local_broadcast(net: Network, inst: LocalBroadcastInstance) -> dict[int, Bits]:
    """Deliver M^v for all v in T to every node of R; returns the delivery."""
    return local_broadcast_multi(net, [inst])[0]


def local_broadcast_multi(
    net: Network, instances: Sequence[LocalBroadcastInstance]
) -> list[dict[int, Bits]]:
    """Run several disjoint local-broadcast instances simultaneously.

    Runs 2*max_i(c_i) rounds where c_i = ceil(|T_i|*b_i / n); every round
    carries 1-bit payloads only.
    """
    n = net.cfg.n
    seen_t: set[int] = set()
    seen_r: set[int] = set()
    for inst in instances:
        if seen_t & set(inst.transmitters):
            raise ValueError("transmitter sets overlap")
        if seen_r & set(inst.receivers):
            raise ValueError("receiver sets overlap")
        seen_t |= set(inst.transmitters)
        seen_r |= set(inst.receivers)
        if inst.batches(n) > BATCH_LIMIT:
            raise ValueError(
                f"instance needs {inst.batches(n)} batches (limit {BATCH_LIMIT}): |T|*b too large"
            )

    total_batches = max((inst.batches(n) for inst in instances), default=1)
    # flattened bit streams: instance i, stream position k -> (transmitter, bit)
    streams = []
    for inst in instances:
        owners = np.repeat(np.asarray(inst.transmitters, dtype=np.int64), inst.b)
        bits = np.empty(len(inst.transmitters) * inst.b, dtype=np.uint8)
        for ti, t in enumerate(inst.transmitters):
            msg = inst.messages[t]
            raw = format(msg.value, f"0{inst.b}b").encode()
            bits[ti * inst.b : (ti + 1) * inst.b] = np.frombuffer(raw, dtype=np.uint8) - ord("0")
        streams.append((owners, bits))

    collected: list[list[np.ndarray]] = [[] for _ in instances]  # relay bits per batch
    for batch in range(total_batches):
        senders_parts, dests_parts, vals_parts = [], [], []
        slices = []
        for i, inst in enumerate(instances):
            owners, bits = streams[i]
            lo, hi = batch * n, min((batch + 1) * n, len(owners))
            slices.append((lo, hi))
            if lo >= hi:
                continue
            pos = np.arange(lo, hi, dtype=np.int64)
            relay = pos % n
            own = owners[lo:hi]
            keep = relay != own  # a transmitter already knows its own bit
            senders_parts.append(own[keep])
            dests_parts.append(relay[keep])
            vals_parts.append(bits[lo:hi][keep])
        if senders_parts:
            net.post_bit_sends(
                np.concatenate(senders_parts),
                np.concatenate(dests_parts),
                np.concatenate(vals_parts),
            )
        else:
            net.post_silent_round()

        # round 2 of the batch: each relay repeats its bit to all receivers
        entries = []
        for i, inst in enumerate(instances):
            owners, bits = streams[i]
            lo, hi = slices[i]
            batch_bits = bits[lo:hi]
            collected[i].append(batch_bits)
            if hi > lo and inst.receivers:
                relays = np.arange(lo, hi, dtype=np.int64) % n
                entries.append((relays, batch_bits, np.asarray(inst.receivers, dtype=np.int64)))
        if entries:
            net.post_block_multicasts(entries)
        else:
            net.post_silent_round()

    # reconstruct what every receiver now knows from the relayed bits
    out: list[dict[int, Bits]] = []
    for i, inst in enumerate(instances):
        bits = (
            np.concatenate(collected[i]) if collected[i] else np.empty(0, dtype=np.uint8)
        )
        delivered = {}
        for ti, t in enumerate(inst.transmitters):
            chunk = bits[ti * inst.b : (ti + 1) * inst.b]
            text = (chunk + ord("0")).tobytes().decode()
            delivered[t] = Bits(inst.b, int(text, 2) if text else 0)
        out.append(delivered)
    return out


@dataclass(frozen=True)
class GlobalBroadcastInstance:
    holders: tuple[int, ...]
    message: Bits

    @staticmethod
    def make(holders, message: Bits) -> "GlobalBroadcastInstance":
        hs = tuple(sorted(int(h) for h in holders))
        if not hs:
            raise ValueError("holder set must be nonempty")
        return GlobalBroadcastInstance(hs, message)

    @property
    def chunk_size(self) -> int:
        return max(1, math.ceil(self.message.length / len(self.holders)))


def global_broadcast(net: Network, inst: GlobalBroadcastInstance) -> Bits:
    return global_broadcast_multi(net, [inst])[0]


def global_broadcast_multi(
    net: Network, instances: Sequence[GlobalBroadcastInstance]
) -> list[Bits]:
    """One round; the i-th holder of each instance broadcasts chunk i.

    Instances must have pairwise disjoint holder sets (each node broadcasts at
    most one chunk).  Edge capacity of the round is the largest chunk.
    """
    seen: set[int] = set()
    payloads: dict[int, Bits] = {}
    plans = []
    for inst in instances:
        hset = set(inst.holders)
        if seen & hset:
            raise ValueError("holder sets overlap")
        seen |= hset
        if inst.message.length == 0:
            plans.append([])
            continue
        chunks = inst.message.chunks(inst.chunk_size)
        if len(chunks) > len(inst.holders):
            raise AssertionError("chunking produced more chunks than holders")
        plan = list(zip(inst.holders, chunks))
        for holder, chunk in plan:
            payloads[holder] = chunk
        plans.append(plan)
    ledger = net.post_broadcasts(payloads)
    out = []
    for inst, plan in zip(instances, plans):
        if not plan:
            out.append(Bits(0, 0))
            continue
        out.append(concat_all([ledger.get(h) for h, _ in plan]))
    return out
