"""Weighted undirected graphs, generators, file I/O, and sequential oracles.

The graph is the joint input of a simulated network: node v's local view is the
set of edges incident to v.  Oracles (connected components, minimum spanning
forest) are the ground truth every algorithm is checked against.

Edge weights are non-negative integers below n**3 (so one weighted edge fits in
5*ceil(log2 n) bits).  Ties everywhere are broken by the EdgeKey order
(w, u, v), which makes the minimum spanning forest unique.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

WEIGHT_EXP = 3  # weights are < n**WEIGHT_EXP


class GraphParseError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class EdgeKey(NamedTuple):
    """Total order (w, u, v) over edges; 'lightest' always means min EdgeKey."""

    w: int
    u: int
    v: int


class Graph:
    """Immutable weighted undirected graph with 0-based node IDs."""

    __slots__ = ("n", "_u", "_v", "_w", "_dir")

    def __init__(self, n: int, edges: Iterable[tuple[int, int, int]] = ()):
        if n < 0:
            raise ValueError("negative node count")
        e = sorted((min(u, v), max(u, v), w) for u, v, w in edges)
        u = np.fromiter((t[0] for t in e), dtype=np.int64, count=len(e))
        v = np.fromiter((t[1] for t in e), dtype=np.int64, count=len(e))
        w = np.fromiter((t[2] for t in e), dtype=np.int64, count=len(e))
        if len(e):
            if u.min(initial=0) < 0 or v.max(initial=0) >= n:
                raise ValueError("node ID out of range")
            if (u == v).any():
                raise ValueError("self-loop")
            pair = u * n + v
            if len(np.unique(pair)) != len(pair):
                raise ValueError("duplicate edge")
            cap = n**WEIGHT_EXP
            if w.min(initial=0) < 0 or w.max(initial=0) >= cap:
                raise ValueError(f"weight out of range [0, {cap})")
        self.n = n
        self._u, self._v, self._w = u, v, w
        self._dir: tuple[np.ndarray, np.ndarray, np.ndarray] | None = None

    @property
    def m(self) -> int:
        return len(self._u)

    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(u, v, w) with u < v, sorted by (u, v). Treat as read-only."""
        return self._u, self._v, self._w

    def directed(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Both orientations of every edge: (src, dst, w). Treat as read-only."""
        if self._dir is None:
            src = np.concatenate([self._u, self._v])
            dst = np.concatenate([self._v, self._u])
            w = np.concatenate([self._w, self._w])
            self._dir = (src, dst, w)
        return self._dir

    def edge_tuples(self) -> list[tuple[int, int, int]]:
        return list(zip(self._u.tolist(), self._v.tolist(), self._w.tolist()))

    def edge_keys(self) -> frozenset[EdgeKey]:
        return frozenset(EdgeKey(w, u, v) for u, v, w in self.edge_tuples())

    def incident(self, node: int) -> list[tuple[int, int, int]]:
        """Edges (u, v, w) touching `node` — one node's local view."""
        src, dst, w = self.directed()
        sel = src == node
        return [
            (min(node, d), max(node, d), wt)
            for d, wt in zip(dst[sel].tolist(), w[sel].tolist())
        ]

    def serialize(self) -> str:
        lines = [f"{self.n} {self.m}"]
        lines += [f"{u} {v} {w}" for u, v, w in self.edge_tuples()]
        return "\n".join(lines) + "\n"

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Graph)
            and self.n == other.n
            and self.m == other.m
            and bool(
                np.array_equal(self._u, other._u)
                and np.array_equal(self._v, other._v)
                and np.array_equal(self._w, other._w)
            )
        )

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, m={self.m})"


def parse_graph(text: str) -> Graph:
    """Parse the edge-list format: first line "n m", then m lines "u v w"."""
    lines = text.splitlines()
    if not lines or not lines[0].strip():
        raise GraphParseError("missing header line", 1)
    head = lines[0].split()
    if len(head) != 2:
        raise GraphParseError("header must be 'n m'", 1)
    try:
        n, m = int(head[0]), int(head[1])
    except ValueError:
        raise GraphParseError("header must contain two integers", 1) from None
    if n < 0 or m < 0:
        raise GraphParseError("negative count in header", 1)
    body = [(i + 2, ln) for i, ln in enumerate(lines[1:]) if ln.strip()]
    if len(body) != m:
        raise GraphParseError(f"expected {m} edge lines, found {len(body)}")
    edges: list[tuple[int, int, int]] = []
    seen: set[tuple[int, int]] = set()
    cap = n**WEIGHT_EXP
    for lineno, ln in body:
        parts = ln.split()
        if len(parts) != 3:
            raise GraphParseError("edge line must be 'u v w'", lineno)
        try:
            u, v, w = int(parts[0]), int(parts[1]), int(parts[2])
        except ValueError:
            raise GraphParseError("edge line must contain integers", lineno) from None
        if u == v:
            raise GraphParseError("self-loop", lineno)
        if not (0 <= u < n and 0 <= v < n):
            raise GraphParseError(f"node ID out of range [0, {n})", lineno)
        if not (0 <= w < cap):
            raise GraphParseError(f"weight out of range [0, {cap})", lineno)
        key = (min(u, v), max(u, v))
        if key in seen:
            raise GraphParseError("duplicate edge", lineno)
        seen.add(key)
        edges.append((u, v, w))
    return Graph(n, edges)


# ---------------------------------------------------------------- generators

@dataclass(frozen=True)
class GenSpec:
    kind: str
    params: tuple

    def __str__(self) -> str:
        return f"{self.kind}({','.join(str(p) for p in self.params)})"


_GEN_RE = re.compile(r"^\s*([a-z]+)\s*\(\s*([^)]*)\s*\)\s*$")


def parse_gen_spec(text: str) -> GenSpec:
    m = _GEN_RE.match(text)
    if not m:
        raise ValueError(f"bad generator descriptor: {text!r}")
    kind = m.group(1)
    raw = [p.strip() for p in m.group(2).split(",")] if m.group(2).strip() else []
    arity = {"gnp": 2, "path": 1, "star": 1, "grid": 2, "components": 3}
    if kind not in arity:
        raise ValueError(f"unknown generator {kind!r}")
    if len(raw) != arity[kind]:
        raise ValueError(f"{kind} takes {arity[kind]} parameters")
    params = tuple(float(p) if "." in p or "e" in p.lower() else int(p) for p in raw)
    return GenSpec(kind, params)


def _sample_pairs(npairs: int, p: float, rng: np.random.Generator) -> np.ndarray:
    """Indices of a Bernoulli(p) subset of [0, npairs), deterministic in rng."""
    if p <= 0 or npairs == 0:
        return np.empty(0, dtype=np.int64)
    if p >= 1:
        return np.arange(npairs, dtype=np.int64)
    if npairs <= 1 << 22:
        return np.nonzero(rng.random(npairs) < p)[0].astype(np.int64)
    count = int(rng.binomial(npairs, p))
    picked: np.ndarray = np.empty(0, dtype=np.int64)
    while len(picked) < count:
        need = count - len(picked)
        extra = rng.integers(0, npairs, size=int(need * 1.2) + 16)
        picked = np.unique(np.concatenate([picked, extra]))
        # unique() sorts; subsample deterministically back to `count` if over
        if len(picked) > count:
            picked = rng.permutation(picked)[:count]
    return np.sort(picked)


def _pair_decode(idx: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Map linear indices over {(u,v): u<v} to endpoints (row-major by u)."""
    # pairs with first node u occupy a block of size n-1-u
    u = np.empty(len(idx), dtype=np.int64)
    v = np.empty(len(idx), dtype=np.int64)
    # invert the cumulative block layout via the quadratic formula
    fidx = idx.astype(np.float64)
    a = 2 * n - 1
    uf = np.floor((a - np.sqrt(a * a - 8 * fidx)) / 2).astype(np.int64)
    # fix rounding at block boundaries
    for _ in range(2):
        start = uf * (2 * n - uf - 1) // 2
        uf = np.where(start > idx, uf - 1, uf)
        end = (uf + 1) * (2 * n - uf - 2) // 2
        uf = np.where(idx >= end, uf + 1, uf)
    start = uf * (2 * n - uf - 1) // 2
    u[:] = uf
    v[:] = uf + 1 + (idx - start)
    return u, v


def generate(spec: GenSpec | str, seed: int, weighted: bool = True) -> Graph:
    """Build a graph deterministically from (spec, seed).

    Weights are drawn uniformly from [1, n**3 - 1] unless weighted=False
    (then every weight is 1).
    """
    if isinstance(spec, str):
        spec = parse_gen_spec(spec)
    rng = np.random.default_rng(np.random.SeedSequence([seed & (2**63 - 1), 0xC11C]))

    if spec.kind == "gnp":
        n, p = int(spec.params[0]), float(spec.params[1])
        if n <= 0:
            raise ValueError("n must be positive")
        if not 0 <= p <= 1:
            raise ValueError("p must be in [0,1]")
        idx = _sample_pairs(n * (n - 1) // 2, p, rng)
        u, v = _pair_decode(idx, n)
    elif spec.kind == "path":
        n = int(spec.params[0])
        if n <= 0:
            raise ValueError("n must be positive")
        u = np.arange(n - 1, dtype=np.int64)
        v = u + 1
    elif spec.kind == "star":
        n = int(spec.params[0])
        if n <= 0:
            raise ValueError("n must be positive")
        u = np.zeros(n - 1, dtype=np.int64)
        v = np.arange(1, n, dtype=np.int64)
    elif spec.kind == "grid":
        a, b = int(spec.params[0]), int(spec.params[1])
        if a <= 0 or b <= 0:
            raise ValueError("grid sides must be positive")
        n = a * b
        ids = np.arange(n, dtype=np.int64).reshape(a, b)
        right = np.stack([ids[:, :-1].ravel(), ids[:, 1:].ravel()])
        down = np.stack([ids[:-1, :].ravel(), ids[1:, :].ravel()])
        uv = np.concatenate([right, down], axis=1)
        u, v = uv[0], uv[1]
    elif spec.kind == "components":
        k, size = int(spec.params[0]), int(spec.params[1])
        p = float(spec.params[2])
        if k <= 0 or size <= 0:
            raise ValueError("k and size must be positive")
        if not 0 <= p <= 1:
            raise ValueError("p must be in [0,1]")
        n = k * size
        us, vs = [], []
        for blk in range(k):
            idx = _sample_pairs(size * (size - 1) // 2, p, rng)
            bu, bv = _pair_decode(idx, size)
            us.append(bu + blk * size)
            vs.append(bv + blk * size)
        u = np.concatenate(us) if us else np.empty(0, dtype=np.int64)
        v = np.concatenate(vs) if vs else np.empty(0, dtype=np.int64)
    else:  # pragma: no cover
        raise ValueError(spec.kind)

    if weighted and n > 1:
        w = rng.integers(1, n**WEIGHT_EXP, size=len(u), dtype=np.int64)
    else:
        w = np.ones(len(u), dtype=np.int64)
    return Graph(n, zip(u.tolist(), v.tolist(), w.tolist()))


# ------------------------------------------------------------------ grouping

def group_min(keys: np.ndarray, *order: np.ndarray) -> np.ndarray:
    """Indices of the lexicographically-minimal row of `order` per key value.

    `order` columns are compared most-significant first. Returned indices are
    sorted by key value.
    """
    if len(keys) == 0:
        return np.empty(0, dtype=np.int64)
    perm = np.lexsort(tuple(reversed(order)) + (keys,))
    sk = keys[perm]
    first = np.ones(len(sk), dtype=bool)
    first[1:] = sk[1:] != sk[:-1]
    return perm[first]


class UnionFind:
    """Union-find with canonical minimum-ID roots (root = min member)."""

    __slots__ = ("parent",)

    def __init__(self, n: int):
        self.parent = np.arange(n, dtype=np.int64)

    def find(self, x: int) -> int:
        p = self.parent
        root = x
        while p[root] != root:
            root = p[root]
        while p[x] != root:
            p[x], x = root, p[x]
        return int(root)

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if ra < rb:
            self.parent[rb] = ra
        else:
            self.parent[ra] = rb
        return True

    def labels(self) -> np.ndarray:
        """Canonical component label per element (the minimum member ID)."""
        out = np.empty(len(self.parent), dtype=np.int64)
        for i in range(len(self.parent)):
            out[i] = self.find(i)
        return out


@dataclass(frozen=True)
class Partition:
    """Component assignment with canonical IDs (min member) and an active set."""

    labels: np.ndarray
    active: frozenset[int]

    @staticmethod
    def from_labels(raw: np.ndarray, active: Iterable[int] | None = None) -> "Partition":
        """Canonicalize arbitrary labels so each component's ID is its min member."""
        raw = np.asarray(raw, dtype=np.int64)
        order = np.argsort(raw, kind="stable")
        canon = np.empty_like(raw)
        sorted_labels = raw[order]
        first = np.ones(len(raw), dtype=bool)
        if len(raw):
            first[1:] = sorted_labels[1:] != sorted_labels[:-1]
            reps = np.minimum.reduceat(order, np.nonzero(first)[0])
            canon[order] = np.repeat(reps, np.diff(np.concatenate([np.nonzero(first)[0], [len(raw)]])))
        ids = frozenset(np.unique(canon).tolist()) if active is None else frozenset(active)
        return Partition(canon, ids)

    @staticmethod
    def singletons(n: int) -> "Partition":
        return Partition(np.arange(n, dtype=np.int64), frozenset(range(n)))

    @property
    def n(self) -> int:
        return len(self.labels)

    def ids(self) -> list[int]:
        return np.unique(self.labels).tolist()

    def members(self, comp: int) -> np.ndarray:
        return np.nonzero(self.labels == comp)[0]

    def component_sets(self) -> dict[int, frozenset[int]]:
        out: dict[int, list[int]] = {}
        for node, lab in enumerate(self.labels.tolist()):
            out.setdefault(lab, []).append(node)
        return {k: frozenset(v) for k, v in out.items()}

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Partition)
            and bool(np.array_equal(self.labels, other.labels))
            and self.active == other.active
        )

    def __hash__(self):  # pragma: no cover
        return hash((self.labels.tobytes(), self.active))


# ------------------------------------------------------------------- oracles

def oracle_components(g: Graph) -> Partition:
    """Connected components by union-find; every component is active."""
    uf = UnionFind(g.n)
    u, v, _ = g.arrays()
    for a, b in zip(u.tolist(), v.tolist()):
        uf.union(a, b)
    labels = uf.labels()
    return Partition(labels, frozenset(np.unique(labels).tolist()))


def oracle_msf(g: Graph) -> frozenset[EdgeKey]:
    """The unique minimum spanning forest under the EdgeKey order (Kruskal)."""
    u, v, w = g.arrays()
    order = np.lexsort((v, u, w))
    uf = UnionFind(g.n)
    out = []
    for i in order.tolist():
        a, b, wt = int(u[i]), int(v[i]), int(w[i])
        if uf.union(a, b):
            out.append(EdgeKey(wt, a, b))
    return frozenset(out)


def msf_weight(edges: Iterable[EdgeKey]) -> int:
    return sum(e.w for e in edges)
