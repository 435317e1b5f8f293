"""Synchronous round scheduler for the range-limited broadcast clique.

Model: n fully connected nodes; in each round a node may transmit at most
``r`` *distinct* non-silent messages of at most ``b`` bits each over its
outgoing links (r=1 is the broadcast clique, r=n unicast).  Silence is free:
the range of a node in a round counts distinct non-silent payloads, and an
all-silent node has range 0.

Complexity accounting per round i:
  * beta[i]      — maximum payload length in bits over all links (edge capacity),
  * max_range[i] — maximum over nodes of the distinct-payload count,
  * per_node_bits[v] — accumulated sizes of v's distinct payloads (the bits a
    node injects; copies across links are not multiplied).
Total capacity is sum(beta).

Algorithms drive the engine in one of two ways:
  * `run()` steps per-node `NodeProgram` objects in lockstep with real inbox
    delivery (used for unit-level protocols and the unicast-round simulation);
  * the `post_*` methods validate and meter one round of a message assignment
    produced by an algorithm orchestrator, returning a ledger of what was sent
    (used by the graph algorithms, whose rounds are built from shared state).
Both paths share the same validation and metering.
"""
from __future__ import annotations

import hashlib
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .bits import Bits, bits_for

ALL = "all"  # broadcast destination marker


class SimulationError(Exception):
    pass


class RangeViolation(SimulationError):
    def __init__(self, node: int, round_no: int, count: int, limit: int):
        self.node, self.round_no, self.count, self.limit = node, round_no, count, limit
        super().__init__(
            f"node {node} sent {count} distinct messages in round {round_no} (range limit {limit})"
        )


class BandwidthViolation(SimulationError):
    def __init__(self, node: int, round_no: int, bits: int, limit: int):
        self.node, self.round_no, self.bits, self.limit = node, round_no, bits, limit
        super().__init__(
            f"node {node} sent a {bits}-bit payload in round {round_no} (bandwidth limit {limit})"
        )


class NonTermination(SimulationError):
    def __init__(self, round_cap: int):
        self.round_cap = round_cap
        super().__init__(f"round cap {round_cap} exceeded")


class OutputDisagreement(SimulationError):
    pass


class InternalConsistencyError(SimulationError):
    pass


@dataclass(frozen=True)
class ModelConfig:
    """rcast(n, r, b): n nodes, range r, bandwidth b bits per message."""

    n: int
    r: int
    b: int = 0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not 1 <= self.r <= self.n:
            raise ValueError("range must satisfy 1 <= r <= n")
        if self.b == 0:
            object.__setattr__(self, "b", 5 * bits_for(self.n))
        if self.b < 1:
            raise ValueError("bandwidth must be >= 1")

    @staticmethod
    def broadcast(n: int, b: int = 0) -> "ModelConfig":
        return ModelConfig(n, 1, b)

    @staticmethod
    def rcast2(n: int, b: int = 0) -> "ModelConfig":
        return ModelConfig(n, min(2, n), b)


def default_round_cap(n: int) -> int:
    return 64 * bits_for(n)


@dataclass
class RunMetrics:
    """Measured complexity of one run."""

    n: int
    beta: list[int] = field(default_factory=list)
    max_range: list[int] = field(default_factory=list)
    per_node_bits: np.ndarray | None = None

    def __post_init__(self):
        if self.per_node_bits is None:
            self.per_node_bits = np.zeros(self.n, dtype=np.int64)

    @property
    def rounds(self) -> int:
        return len(self.beta)

    @property
    def total_capacity(self) -> int:
        return int(sum(self.beta))

    def to_record(self) -> dict:
        return {
            "rounds": self.rounds,
            "total_capacity": self.total_capacity,
            "max_range": max(self.max_range, default=0),
            "per_node_bits_max": int(self.per_node_bits.max(initial=0)),
            "beta_max": max(self.beta, default=0),
        }


def _mix_seed(*parts) -> int:
    h = hashlib.blake2b(repr(parts).encode(), digest_size=8)
    return int.from_bytes(h.digest(), "big")


# ------------------------------------------------------------- round ledgers

@dataclass(frozen=True)
class BroadcastLedger:
    """One round in which senders broadcast a single payload each."""

    round_no: int
    payloads: dict[int, Bits]

    def get(self, sender: int) -> Bits | None:
        return self.payloads.get(sender)


@dataclass(frozen=True)
class SendsLedger:
    """One round of explicit (payload, destinations) sends per sender."""

    round_no: int
    sends: dict[int, tuple[tuple[Bits, tuple[int, ...] | str], ...]]

    def payload(self, sender: int, dest: int) -> Bits | None:
        for payload, dests in self.sends.get(sender, ()):
            if dests == ALL or dest in dests:
                return payload
        return None

    def inboxes(self, n: int) -> list[dict[int, Bits]]:
        boxes: list[dict[int, Bits]] = [dict() for _ in range(n)]
        for sender, entries in self.sends.items():
            for payload, dests in entries:
                targets = range(n) if dests == ALL else dests
                for d in targets:
                    if d != sender:
                        boxes[d][sender] = payload
        return boxes


@dataclass(frozen=True)
class BitCooLedger:
    """One round of 1-bit unicasts in COO form (senders[i] -> dests[i])."""

    round_no: int
    senders: np.ndarray
    dests: np.ndarray
    values: np.ndarray


@dataclass(frozen=True)
class BlockMulticastLedger:
    """One round of 1-bit multicasts: senders[i] -> every node of the block."""

    round_no: int
    entries: tuple[tuple[np.ndarray, np.ndarray, np.ndarray], ...]


@dataclass(frozen=True)
class BitBlockLedger:
    """One round where senders address 1-bit values to whole node blocks.

    Sender s transmits bit 1 to every node of block k when (s, k) appears in
    one_bits, and bit 0 to every node of every other block (if send_zeros).
    Self-delivery is skipped implicitly.
    """

    round_no: int
    blocks: tuple[np.ndarray, ...]
    senders: np.ndarray
    one_senders: np.ndarray
    one_blocks: np.ndarray
    send_zeros: bool

    def ones_matrix(self, num_senders_hint: int | None = None) -> tuple[np.ndarray, np.ndarray]:
        return self.one_senders, self.one_blocks


class Network:
    """Validates and meters rounds of an rcast(n, r, b) execution."""

    def __init__(self, cfg: ModelConfig, seed: int = 0, round_cap: int | None = None):
        self.cfg = cfg
        self.seed = seed
        self.round_cap = default_round_cap(cfg.n) if round_cap is None else round_cap
        self.metrics = RunMetrics(cfg.n)

    @property
    def rounds(self) -> int:
        return self.metrics.rounds

    def public_seed(self) -> int:
        """Shared random seed known to every node (preprocessing randomness)."""
        return _mix_seed(self.seed, "public")

    def node_seed(self, node: int) -> int:
        """Private per-node seed slice."""
        return _mix_seed(self.seed, "node", node)

    def rng(self, *labels) -> np.random.Generator:
        return np.random.default_rng(_mix_seed(self.seed, *labels))

    # ---------------------------------------------------------- round intake

    def _begin_round(self) -> int:
        if self.metrics.rounds >= self.round_cap:
            raise NonTermination(self.round_cap)
        return self.metrics.rounds

    def _close_round(self, beta: int, rmax: int):
        self.metrics.beta.append(int(beta))
        self.metrics.max_range.append(int(rmax))
        if rmax > self.cfg.r:  # pragma: no cover - callers raise per node first
            raise RangeViolation(-1, self.metrics.rounds, rmax, self.cfg.r)

    def _check_node(self, node: int, round_no: int, payloads: Iterable[Bits]) -> tuple[int, int]:
        distinct = {(p.length, p.value) for p in payloads}
        count = len(distinct)
        if count > self.cfg.r:
            raise RangeViolation(node, round_no, count, self.cfg.r)
        bits = 0
        for length, _ in distinct:
            if length > self.cfg.b:
                raise BandwidthViolation(node, round_no, length, self.cfg.b)
            bits += length
        self.metrics.per_node_bits[node] += bits
        beta = max((length for length, _ in distinct), default=0)
        return count, beta

    def post_broadcasts(self, payloads: Mapping[int, Bits]) -> BroadcastLedger:
        """One round in which each listed sender broadcasts one payload."""
        round_no = self._begin_round()
        beta = 0
        rmax = 0
        for node, p in payloads.items():
            cnt, nb = self._check_node(node, round_no, (p,))
            beta = max(beta, nb)
            rmax = max(rmax, cnt)
        ledger = BroadcastLedger(round_no, dict(payloads))
        self._close_round(beta, rmax)
        return ledger

    def post_sends(
        self, sends: Mapping[int, Sequence[tuple[Bits, Sequence[int] | str]]]
    ) -> SendsLedger:
        """One round of per-sender (payload, destinations) assignments."""
        round_no = self._begin_round()
        beta = 0
        rmax = 0
        frozen: dict[int, tuple[tuple[Bits, tuple[int, ...] | str], ...]] = {}
        for node, entries in sends.items():
            seen: set[int] = set()
            kept = []
            for payload, dests in entries:
                if dests == ALL:
                    kept.append((payload, ALL))
                    continue
                dtuple = tuple(int(d) for d in dests)
                for d in dtuple:
                    if d == node:
                        raise ValueError(f"node {node} addressed a payload to itself")
                    if d in seen:
                        raise ValueError(f"node {node} sent two payloads to {d}")
                    seen.add(d)
                kept.append((payload, dtuple))
            cnt, nb = self._check_node(node, round_no, (p for p, _ in kept))
            beta = max(beta, nb)
            rmax = max(rmax, cnt)
            frozen[node] = tuple(kept)
        ledger = SendsLedger(round_no, frozen)
        self._close_round(beta, rmax)
        return ledger

    def post_bit_sends(
        self, senders: np.ndarray, dests: np.ndarray, values: np.ndarray
    ) -> BitCooLedger:
        """One round of 1-bit unicasts given as parallel arrays."""
        round_no = self._begin_round()
        senders = np.asarray(senders, dtype=np.int64)
        dests = np.asarray(dests, dtype=np.int64)
        values = np.asarray(values, dtype=np.uint8)
        if (senders == dests).any():
            node = int(senders[senders == dests][0])
            raise ValueError(f"node {node} addressed a payload to itself")
        pair = senders * self.cfg.n + dests
        if len(np.unique(pair)) != len(pair):
            raise ValueError("duplicate (sender, dest) pair in bit round")
        if len(senders):
            ones = np.zeros(self.cfg.n, dtype=np.int64)
            zeros = np.zeros(self.cfg.n, dtype=np.int64)
            np.add.at(ones, senders[values == 1], 1)
            np.add.at(zeros, senders[values == 0], 1)
            counts = (ones > 0).astype(np.int64) + (zeros > 0).astype(np.int64)
            rmax = int(counts.max())
            if rmax > self.cfg.r:
                node = int(np.argmax(counts))
                raise RangeViolation(node, round_no, rmax, self.cfg.r)
            self.metrics.per_node_bits += counts
            beta = 1
        else:
            rmax = 0
            beta = 0
        ledger = BitCooLedger(round_no, senders, dests, values)
        self._close_round(beta, rmax)
        return ledger

    def post_bit_blocks(
        self,
        blocks: Sequence[np.ndarray],
        senders: np.ndarray,
        one_senders: np.ndarray,
        one_blocks: np.ndarray,
        send_zeros: bool = True,
    ) -> BitBlockLedger:
        """One round where every sender addresses one bit to each block.

        Sender s sends 1 to the blocks listed against it in (one_senders,
        one_blocks) and 0 to all remaining blocks when send_zeros is set.
        """
        round_no = self._begin_round()
        senders = np.asarray(senders, dtype=np.int64)
        one_senders = np.asarray(one_senders, dtype=np.int64)
        one_blocks = np.asarray(one_blocks, dtype=np.int64)
        nblocks = len(blocks)
        if len(one_senders) and nblocks == 0:
            raise ValueError("one-bits without blocks")
        if nblocks and len(senders):
            is_sender = np.zeros(self.cfg.n, dtype=bool)
            is_sender[senders] = True
            if len(one_senders) and not is_sender[one_senders].all():
                raise ValueError("one-bit from a node outside the sender set")
            ones_count = np.zeros(self.cfg.n, dtype=np.int64)
            np.add.at(ones_count, one_senders, 1)
            sends_one = ones_count > 0
            if send_zeros:
                sends_zero = np.zeros(self.cfg.n, dtype=bool)
                sends_zero[senders] = True
                sends_zero &= ~(ones_count >= nblocks)
            else:
                sends_zero = np.zeros(self.cfg.n, dtype=bool)
            counts = sends_one.astype(np.int64) + sends_zero.astype(np.int64)
            rmax = int(counts.max())
            if rmax > self.cfg.r:
                node = int(np.argmax(counts))
                raise RangeViolation(node, round_no, rmax, self.cfg.r)
            self.metrics.per_node_bits += counts
            beta = 1 if counts.max() > 0 else 0
        else:
            rmax = 0
            beta = 0
        ledger = BitBlockLedger(
            round_no,
            tuple(np.asarray(b, dtype=np.int64) for b in blocks),
            senders,
            one_senders,
            one_blocks,
            send_zeros,
        )
        self._close_round(beta, rmax)
        return ledger

    def post_block_multicasts(
        self, entries: Sequence[tuple[np.ndarray, np.ndarray, np.ndarray]]
    ) -> BlockMulticastLedger:
        """One round of 1-bit multicasts.

        Each entry (senders, values, block) means: senders[i] transmits the
        1-bit payload values[i] to every node of `block`.  A sender may appear
        in several entries (serving several disjoint receiver sets); its range
        is the number of distinct bit values it transmits.
        """
        round_no = self._begin_round()
        has = np.zeros((self.cfg.n, 2), dtype=bool)
        any_send = False
        frozen = []
        for senders, values, block in entries:
            senders = np.asarray(senders, dtype=np.int64)
            values = np.asarray(values, dtype=np.uint8)
            block = np.asarray(block, dtype=np.int64)
            if len(senders) != len(values):
                raise ValueError("senders/values length mismatch")
            frozen.append((senders, values, block))
            if len(block) == 0 or len(senders) == 0:
                continue
            any_send = True
            has[senders[values == 0], 0] = True
            has[senders[values == 1], 1] = True
        counts = has.sum(axis=1).astype(np.int64)
        rmax = int(counts.max()) if any_send else 0
        if rmax > self.cfg.r:
            raise RangeViolation(int(np.argmax(counts)), round_no, rmax, self.cfg.r)
        self.metrics.per_node_bits += counts
        ledger = BlockMulticastLedger(round_no, tuple(frozen))
        self._close_round(1 if any_send else 0, rmax)
        return ledger

    def post_silent_round(self):
        """A scheduled round in which nobody transmits."""
        self._begin_round()
        self._close_round(0, 0)


# -------------------------------------------------------------- node programs

@dataclass(frozen=True)
class NodeView:
    """What a node knows at start: its ID, n, the model, its incident edges."""

    node: int
    n: int
    cfg: ModelConfig
    incident: tuple[tuple[int, int, int], ...]
    public_seed: int
    node_seed: int


class Outbox:
    """One node's message assignment for a round: payloads with destinations."""

    __slots__ = ("entries",)

    def __init__(self, entries: Sequence[tuple[Bits, Sequence[int] | str]] = ()):
        self.entries = tuple(
            (p, ALL if d == ALL else tuple(int(x) for x in d)) for p, d in entries
        )

    @staticmethod
    def silent() -> "Outbox":
        return Outbox()

    @staticmethod
    def broadcast(payload: Bits) -> "Outbox":
        return Outbox([(payload, ALL)])

    @staticmethod
    def send(dest: int, payload: Bits) -> "Outbox":
        return Outbox([(payload, (dest,))])

    @staticmethod
    def of(assignment: Mapping[int, Bits]) -> "Outbox":
        return Outbox([(p, (d,)) for d, p in assignment.items()])


class NodeProgram(ABC):
    """Deterministic per-node behavior stepped in lockstep by `run`."""

    @abstractmethod
    def init(self, view: NodeView) -> None: ...

    @abstractmethod
    def on_round(self, inbox: Mapping[int, Bits]) -> Outbox: ...

    @abstractmethod
    def finished(self):
        """Return the node's output when done, else None."""


def run(
    graph,
    factory: Callable[[], NodeProgram],
    cfg: ModelConfig,
    seed: int = 0,
    round_cap: int | None = None,
    require_agreement: bool = True,
) -> tuple[list, RunMetrics]:
    """Run one NodeProgram per node until every program reports finished.

    Nodes are stepped in ID order; outboxes are validated before delivery.
    With require_agreement, all outputs must compare equal (the shared-
    knowledge contract for partition-type outputs).
    """
    net = Network(cfg, seed=seed, round_cap=round_cap)
    n = cfg.n
    programs = [factory() for _ in range(n)]
    for v, prog in enumerate(programs):
        prog.init(
            NodeView(
                node=v,
                n=n,
                cfg=cfg,
                incident=tuple(graph.incident(v)) if graph is not None else (),
                public_seed=net.public_seed(),
                node_seed=net.node_seed(v),
            )
        )
    inboxes: list[dict[int, Bits]] = [dict() for _ in range(n)]
    outputs: list = [prog.finished() for prog in programs]
    steps = 0
    while any(o is None for o in outputs):
        steps += 1
        if steps > net.round_cap:
            raise NonTermination(net.round_cap)
        sends = {}
        for v, prog in enumerate(programs):
            if outputs[v] is not None:
                continue
            box = prog.on_round(inboxes[v])
            if box.entries:
                sends[v] = box.entries
        if sends:
            # a communication round: validate, meter, deliver
            ledger = net.post_sends(sends)
            inboxes = ledger.inboxes(n)
        else:
            # all-silent step (e.g. consuming final inboxes): not a round
            inboxes = [dict() for _ in range(n)]
        for v, prog in enumerate(programs):
            if outputs[v] is None:
                outputs[v] = prog.finished()
    if require_agreement:
        first = outputs[0]
        for v, out in enumerate(outputs):
            if out != first:
                raise OutputDisagreement(f"node {v} disagrees with node 0")
    return outputs, net.metrics


# ------------------------------------------------- unicast round simulation

class _SplitterProgram(NodeProgram):
    """Sends each payload of a unicast round in blocks of `block` bits."""

    def __init__(self, assignments: dict[int, dict[int, Bits]], block: int, nrounds: int):
        self.assignments = assignments
        self.block = block
        self.nrounds = nrounds
        self.round_no = 0
        self.received: dict[int, list[Bits]] = {}
        self.view: NodeView | None = None

    def init(self, view: NodeView) -> None:
        self.view = view
        mine = self.assignments.get(view.node, {})
        padded = self.block * self.nrounds
        self.padded = {d: p.padded(padded) for d, p in mine.items()}

    def on_round(self, inbox: Mapping[int, Bits]) -> Outbox:
        for sender, payload in inbox.items():
            self.received.setdefault(sender, []).append(payload)
        i = self.round_no
        self.round_no += 1
        if i >= self.nrounds:
            return Outbox.silent()
        return Outbox.of(
            {d: p.slice(i * self.block, (i + 1) * self.block) for d, p in self.padded.items()}
        )

    def finished(self):
        if self.round_no <= self.nrounds:
            return None
        out = {}
        for sender, parts in self.received.items():
            acc = parts[0]
            for p in parts[1:]:
                acc = acc.concat(p)
            out[sender] = acc
        return (self.view.node, out)


def simulate_unicast_round(
    assignments: Mapping[int, Mapping[int, Bits]], cfg: ModelConfig, seed: int = 0
) -> tuple[dict[int, dict[int, Bits]], RunMetrics]:
    """Simulate one unicast round in rcast(n, r) by block-splitting payloads.

    Each payload is split into blocks of floor(log2 r) bits sent over
    ceil(L / floor(log2 r)) consecutive rounds, where L is the longest payload;
    a round then uses at most 2^floor(log2 r) <= r distinct messages per node.
    Receivers reassemble payloads exactly.  r=1 is unsupported (a broadcast
    round cannot carry distinct unicast payloads this way).
    """
    if cfg.r < 2:
        raise ValueError("unicast simulation requires range r >= 2")
    block = int(math.floor(math.log2(cfg.r)))
    lengths = [p.length for box in assignments.values() for p in box.values()]
    max_len = max(lengths, default=0)
    nrounds = max(1, math.ceil(max_len / block)) if max_len else 0
    plain = {s: {d: p for d, p in box.items()} for s, box in assignments.items()}
    if nrounds == 0:
        return {s: dict(box) for s, box in plain.items()}, RunMetrics(cfg.n)

    sim_cfg = ModelConfig(cfg.n, cfg.r, max(block, 1))
    outputs, metrics = run(
        None,
        lambda: _SplitterProgram(plain, block, nrounds),
        sim_cfg,
        seed=seed,
        require_agreement=False,
    )
    delivered: dict[int, dict[int, Bits]] = {s: {} for s in plain}
    for node, received in outputs:
        for sender, payload in received.items():
            orig = plain[sender][node]
            delivered[sender][node] = payload.slice(0, orig.length)
    return delivered, metrics
