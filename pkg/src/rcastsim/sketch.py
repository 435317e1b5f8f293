"""XOR sketches of edge sets with geometric row sampling.

A sketch over an ID universe of size `n_ids` and scale `x` is a table of
10*ceil(log2 x) rows; row j holds the XOR of the IDs of the edges sampled into
it, each edge independently with probability 2^-j.  A multi-sketch stacks
ceil(log2 x) independent such sketches so that successive merge steps can each
consume a fresh one.

An edge ID is name||check: the name encodes the endpoint pair (u, v), u < v,
in 2w bits (w = bits needed for one ID), and the check is a 2w-bit keyed hash
of the name.  Decoding scans rows for a value whose check field verifies; a
row holding exactly one sampled edge yields that edge, a row holding an XOR of
several almost surely fails the check (false-positive probability 2^-2w per
row).  Rows are all-zero for empty edge sets and the zero row is never decoded.

Hashing: chained splitmix64 keyed by (seed, name, sketch index, row, word).
The membership bit for row j is 1 iff the first j bits of the keyed stream are
zero, which realizes probability 2^-j exactly for arbitrary j.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .bits import Bits, bits_for, concat_all

_MASK64 = (1 << 64) - 1
_U64 = np.uint64


def _sm64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x ^= x >> 30
    x = (x * 0xBF58476D1CE4E5B9) & _MASK64
    x ^= x >> 27
    x = (x * 0x94D049BB133111EB) & _MASK64
    x ^= x >> 31
    return x


def _sm64_vec(x: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        x = x + _U64(0x9E3779B97F4A7C15)
        x ^= x >> _U64(30)
        x = x * _U64(0xBF58476D1CE4E5B9)
        x ^= x >> _U64(27)
        x = x * _U64(0x94D049BB133111EB)
        x ^= x >> _U64(31)
    return x


def mix64(*parts: int) -> int:
    """Chained splitmix64 over integer parts; stable across runs."""
    h = 0x243F6A8885A308D3
    for p in parts:
        h = _sm64(h ^ (int(p) & _MASK64))
    return h


def _mix64_vec(prefix: int, names: np.ndarray, *tail: int) -> np.ndarray:
    """Continue the mix64 chain from a scalar prefix over an array of names."""
    with np.errstate(over="ignore"):
        h = _sm64_vec(_U64(prefix) ^ names.astype(_U64))
        for p in tail:
            h = _sm64_vec(h ^ _U64(int(p) & _MASK64))
    return h


def clamp_scale(x: int) -> int:
    """Scales below 4 are clamped to 4 so row counts stay positive."""
    return max(4, int(x))


def rows_per_sketch(x: int) -> int:
    return 10 * bits_for(clamp_scale(x))


def sketch_count(x: int) -> int:
    return bits_for(clamp_scale(x))


@dataclass(frozen=True)
class EdgeIdCode:
    """name||check encoding of an endpoint pair under a shared seed."""

    name: int
    check: int
    width: int  # bits per endpoint field

    @property
    def bit_length(self) -> int:
        return 4 * self.width

    def value(self) -> int:
        return (self.name << (2 * self.width)) | self.check

    def endpoints(self) -> tuple[int, int]:
        return self.name >> self.width, self.name & ((1 << self.width) - 1)


def edge_id(seed: int, u: int, v: int, n_ids: int) -> EdgeIdCode:
    """Deterministic ID of the pair {u, v} in a universe of n_ids endpoints."""
    if u == v:
        raise ValueError("self-loop has no edge ID")
    a, b = (u, v) if u < v else (v, u)
    if not 0 <= a < n_ids or not 0 <= b < n_ids:
        raise ValueError("endpoint out of range")
    w = bits_for(n_ids)
    name = (a << w) | b
    check = mix64(seed, 0xED6E, name) & ((1 << (2 * w)) - 1)
    return EdgeIdCode(name, check, w)


def _edge_names(u: np.ndarray, v: np.ndarray, w: int) -> np.ndarray:
    a = np.minimum(u, v).astype(np.int64)
    b = np.maximum(u, v).astype(np.int64)
    return (a << w) | b


def _checks_vec(seed: int, names: np.ndarray, w: int) -> np.ndarray:
    h = _mix64_vec(mix64(seed, 0xED6E), names)
    return (h & _U64((1 << (2 * w)) - 1)).astype(np.int64)


def row_membership(seed: int, name: int, sketch_index: int, row: int) -> int:
    """Pseudorandom membership bit with probability 2^-row; deterministic.

    `sketch_index` selects one of the independent sketches of a multi-sketch;
    `row` is the 1-based row within that sketch.  Probabilities below 2^-64
    are realized with additional hash words.
    """
    if row < 1:
        raise ValueError("row must be >= 1")
    remaining = row
    word = 0
    while remaining > 0:
        take = min(64, remaining)
        h = mix64(seed, 0x5A11, name, sketch_index, row, word)
        if h & ((1 << take) - 1):
            return 0
        remaining -= take
        word += 1
    return 1


def _membership_vec(
    seed: int, names: np.ndarray, sketch_index: int, row: int
) -> np.ndarray:
    """Vectorized row_membership; bit-identical to the scalar version."""
    if row < 1:
        raise ValueError("row must be >= 1")
    prefix = mix64(seed, 0x5A11)
    ok = np.ones(len(names), dtype=bool)
    remaining = row
    word = 0
    while remaining > 0:
        take = min(64, remaining)
        h = _mix64_vec(prefix, names, sketch_index, row, word)
        ok &= (h & _U64((1 << take) - 1)) == 0
        remaining -= take
        word += 1
        if not ok.any():
            break
    return ok


@dataclass(frozen=True)
class Sketch:
    """10*ceil(log2 x) XOR rows over the IDs of a sampled edge set."""

    x: int
    id_width: int  # bits per endpoint field of an edge ID
    rows: tuple[int, ...]

    @property
    def row_bits(self) -> int:
        return 4 * self.id_width

    def same_shape(self, other: "Sketch") -> bool:
        return (
            self.x == other.x
            and self.id_width == other.id_width
            and len(self.rows) == len(other.rows)
        )

    def to_bits(self) -> Bits:
        return concat_all([Bits(self.row_bits, r) for r in self.rows])

    @staticmethod
    def from_bits(payload: Bits, x: int, id_width: int) -> "Sketch":
        nrows = rows_per_sketch(x)
        if payload.length != nrows * 4 * id_width:
            raise ValueError("payload length does not match sketch shape")
        rows = tuple(c.value for c in payload.chunks(4 * id_width))
        return Sketch(x, id_width, rows)

    @staticmethod
    def zero(x: int, id_width: int) -> "Sketch":
        return Sketch(clamp_scale(x), id_width, (0,) * rows_per_sketch(x))


@dataclass(frozen=True)
class MultiSketch:
    """ceil(log2 x) independent sketches; table of 10*ceil(log2 x)^2 rows."""

    sketches: tuple[Sketch, ...]

    @property
    def x(self) -> int:
        return self.sketches[0].x

    def sketch(self, t: int) -> Sketch:
        """1-based index of the independent sketch used by merge step t."""
        return self.sketches[t - 1]

    def row_count(self) -> int:
        return sum(len(s.rows) for s in self.sketches)

    def flat_rows(self) -> list[int]:
        return [r for s in self.sketches for r in s.rows]

    def to_bits(self) -> Bits:
        return concat_all([s.to_bits() for s in self.sketches])

    @staticmethod
    def zero(x: int, id_width: int) -> "MultiSketch":
        x = clamp_scale(x)
        return MultiSketch(tuple(Sketch.zero(x, id_width) for _ in range(sketch_count(x))))


def multi_row_position(x: int, row: int) -> tuple[int, int]:
    """Map a 1-based multi-sketch row to (sketch index t, row-in-sketch j).

    The row-in-sketch period is 10*ceil(log2 x): membership probability for
    multi-sketch row r is 2^-(1 + (r-1) mod 10*ceil(log2 x)).
    """
    period = rows_per_sketch(x)
    if not 1 <= row <= period * sketch_count(x):
        raise ValueError("row out of range")
    return 1 + (row - 1) // period, 1 + (row - 1) % period


def build_sketch(
    seed: int,
    edges: Iterable[tuple[int, int]] | np.ndarray,
    x: int,
    n_ids: int,
    sketch_index: int = 1,
) -> Sketch:
    """Sketch of an edge set (pairs over the ID universe), built centrally."""
    x = clamp_scale(x)
    w = bits_for(n_ids)
    arr = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges, dtype=np.int64)
    if arr.size == 0:
        return Sketch.zero(x, w)
    names = _edge_names(arr[:, 0], arr[:, 1], w)
    checks = _checks_vec(seed, names, w)
    ids = (names << (2 * w)) | checks
    rows = []
    for j in range(1, rows_per_sketch(x) + 1):
        sel = _membership_vec(seed, names, sketch_index, j)
        rows.append(int(np.bitwise_xor.reduce(ids[sel], initial=0)))
    return Sketch(x, w, tuple(rows))


def build_multi_sketch(
    seed: int, edges, x: int, n_ids: int
) -> MultiSketch:
    x = clamp_scale(x)
    return MultiSketch(
        tuple(build_sketch(seed, edges, x, n_ids, t) for t in range(1, sketch_count(x) + 1))
    )


def sketch_xor(a, b):
    """Row-wise XOR of two sketches or multi-sketches of identical shape."""
    if isinstance(a, MultiSketch) and isinstance(b, MultiSketch):
        if len(a.sketches) != len(b.sketches):
            raise ValueError("shape mismatch")
        return MultiSketch(tuple(sketch_xor(s, t) for s, t in zip(a.sketches, b.sketches)))
    if isinstance(a, Sketch) and isinstance(b, Sketch):
        if not a.same_shape(b):
            raise ValueError("shape mismatch")
        return Sketch(a.x, a.id_width, tuple(x ^ y for x, y in zip(a.rows, b.rows)))
    raise ValueError("operands must both be Sketch or both MultiSketch")


def decode(s: Sketch, seed: int) -> tuple[int, int] | None:
    """First row whose value verifies as an edge ID, as an endpoint pair.

    Returns None when no row verifies (absence is a value).  The all-zero row
    is never decoded.  A returned pair is an actual sketched edge except with
    probability at most 2^-(2*id_width) per scanned row (check collision).
    """
    w = s.id_width
    mask = (1 << (2 * w)) - 1
    for value in s.rows:
        if value == 0:
            continue
        name = value >> (2 * w)
        check = value & mask
        if check != (mix64(seed, 0xED6E, name) & mask):
            continue
        a, b = name >> w, name & ((1 << w) - 1)
        if a >= b:
            continue
        return (a, b)
    return None
