"""Fixed-length bit strings used as message payloads.

A payload is an immutable (length, value) pair. Bit 0 is the most significant
bit, so ``Bits.from01("01")`` has bit(0) == 0 and bit(1) == 1.  Lengths are in
bits; the engine charges a payload's length against the bandwidth budget.
"""
from __future__ import annotations

import math
from typing import Iterable, Sequence


def bits_for(n: int) -> int:
    """Width in bits of a node ID in an n-node network (at least 1)."""
    if n < 1:
        raise ValueError("n must be positive")
    return max(1, math.ceil(math.log2(n))) if n > 1 else 1


class Bits:
    __slots__ = ("length", "value")

    def __init__(self, length: int, value: int = 0):
        if length < 0:
            raise ValueError("negative length")
        if value < 0 or (value >> length):
            raise ValueError(f"value {value} does not fit in {length} bits")
        object.__setattr__(self, "length", length)
        object.__setattr__(self, "value", value)

    def __setattr__(self, *a):  # pragma: no cover
        raise AttributeError("Bits is immutable")

    def __len__(self) -> int:
        return self.length

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Bits)
            and self.length == other.length
            and self.value == other.value
        )

    def __hash__(self) -> int:
        return hash((self.length, self.value))

    def __repr__(self) -> str:
        return f"Bits({self.to01()!r})" if self.length <= 64 else f"Bits(<{self.length} bits>)"

    def __xor__(self, other: "Bits") -> "Bits":
        if self.length != other.length:
            raise ValueError("xor of different lengths")
        return Bits(self.length, self.value ^ other.value)

    def bit(self, i: int) -> int:
        if not 0 <= i < self.length:
            raise IndexError(i)
        return (self.value >> (self.length - 1 - i)) & 1

    def concat(self, other: "Bits") -> "Bits":
        return Bits(self.length + other.length, (self.value << other.length) | other.value)

    def slice(self, start: int, stop: int) -> "Bits":
        """Bits in positions [start, stop), MSB-first indexing."""
        if not 0 <= start <= stop <= self.length:
            raise IndexError((start, stop))
        width = stop - start
        shifted = self.value >> (self.length - stop)
        return Bits(width, shifted & ((1 << width) - 1))

    def chunks(self, size: int) -> "list[Bits]":
        """Split into ceil(length/size) chunks of `size` bits; last may be short."""
        if size < 1:
            raise ValueError("chunk size must be >= 1")
        return [self.slice(i, min(i + size, self.length)) for i in range(0, self.length, size)]

    def padded(self, length: int) -> "Bits":
        """Zero-pad on the right (least significant end) up to `length` bits."""
        if length < self.length:
            raise ValueError("cannot pad shorter")
        return Bits(length, self.value << (length - self.length))

    def to01(self) -> str:
        return format(self.value, f"0{self.length}b") if self.length else ""

    @classmethod
    def from01(cls, s: str) -> "Bits":
        return cls(len(s), int(s, 2)) if s else cls(0, 0)

    @classmethod
    def zeros(cls, length: int) -> "Bits":
        return cls(length, 0)


BIT0 = Bits(1, 0)
BIT1 = Bits(1, 1)


def bit(b: int) -> Bits:
    return BIT1 if b else BIT0


def pack(fields: Iterable[tuple[int, int]]) -> Bits:
    """Pack (value, width) fields MSB-first into one payload."""
    length = 0
    value = 0
    for v, w in fields:
        if v < 0 or (v >> w):
            raise ValueError(f"field value {v} does not fit in {w} bits")
        value = (value << w) | v
        length += w
    return Bits(length, value)


def unpack(payload: Bits, widths: Sequence[int]) -> list[int]:
    """Inverse of pack for a known field layout."""
    if sum(widths) != payload.length:
        raise ValueError("layout does not match payload length")
    out = []
    pos = 0
    for w in widths:
        out.append(payload.slice(pos, pos + w).value)
        pos += w
    return out


def concat_all(parts: Sequence[Bits]) -> Bits:
    length = 0
    value = 0
    for p in parts:
        value = (value << p.length) | p.value
        length += p.length
    return Bits(length, value)
