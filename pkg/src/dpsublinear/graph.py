"""Graphs, the query-counting oracle facade, generators and edge-list I/O.

Vertices are ``0..n-1``. Adjacency is stored in CSR form (``indptr`` /
``indices``) with every neighbor list sorted ascending, so the i-th neighbor
of a vertex is well defined.
"""

from __future__ import annotations

import itertools
import os
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

FAMILIES = ("gnp", "d_regular", "star", "path", "complete", "perfect_matching", "empty")


class GraphError(ValueError):
    """Invalid graph construction or query input."""


class GraphFormatError(GraphError):
    """Malformed edge-list file."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class Graph:
    """Immutable simple undirected graph."""

    __slots__ = ("n", "m", "indptr", "indices", "_indptr_list")

    def __init__(self, n: int, indptr: np.ndarray, indices: np.ndarray):
        self.n = int(n)
        self.indptr = indptr
        self.indices = indices
        self.m = int(indices.shape[0]) // 2
        # python ints make the per-query hot path cheaper than numpy scalars
        self._indptr_list = indptr.tolist()
        indptr.flags.writeable = False
        indices.flags.writeable = False

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]] | np.ndarray, *, check: bool = True) -> "Graph":
        """Build a graph from undirected edges.

        With ``check`` set, self-loops, duplicate edges and out-of-range
        endpoints raise :class:`GraphError`.
        """
        if n < 0:
            raise GraphError(f"vertex count must be non-negative, got {n}")
        arr = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges, dtype=np.int64)
        arr = arr.reshape(-1, 2)
        u = np.minimum(arr[:, 0], arr[:, 1])
        v = np.maximum(arr[:, 0], arr[:, 1])
        if check and arr.shape[0]:
            if u.min() < 0 or v.max() >= n:
                raise GraphError(f"edge endpoint out of range for n={n}")
            if np.any(u == v):
                raise GraphError("self-loops are not allowed")
            key = u * n + v
            if np.unique(key).shape[0] != key.shape[0]:
                raise GraphError("duplicate edges are not allowed")
        src = np.concatenate([u, v])
        dst = np.concatenate([v, u])
        order = np.lexsort((dst, src))
        src, dst = src[order], dst[order]
        counts = np.bincount(src, minlength=n)
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(counts, out=indptr[1:])
        return cls(n, indptr, dst.astype(np.int64))

    def degree(self, v: int) -> int:
        p = self._indptr_list
        return p[v + 1] - p[v]

    def neighbors(self, v: int) -> np.ndarray:
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def has_edge(self, u: int, v: int) -> bool:
        nb = self.neighbors(u)
        k = int(np.searchsorted(nb, v))
        return k < nb.shape[0] and int(nb[k]) == v

    def edges(self) -> np.ndarray:
        """All edges as an ``(m, 2)`` array with ``u < v``, sorted."""
        src = np.repeat(np.arange(self.n, dtype=np.int64), self.degrees())
        mask = src < self.indices
        return np.stack([src[mask], self.indices[mask]], axis=1)

    def edge_set(self) -> frozenset[tuple[int, int]]:
        return frozenset((int(a), int(b)) for a, b in self.edges())

    def average_degree(self) -> float:
        return 2.0 * self.m / self.n if self.n else 0.0

    def with_edge_toggled(self, u: int, v: int) -> "Graph":
        a, b = min(u, v), max(u, v)
        es = set(self.edge_set())
        es.symmetric_difference_update({(a, b)})
        return Graph.from_edges(self.n, sorted(es), check=False)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return (self.n == other.n and np.array_equal(self.indptr, other.indptr)
                and np.array_equal(self.indices, other.indices))

    def __hash__(self) -> int:
        return hash((self.n, self.indices.tobytes(), self.indptr.tobytes()))

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, m={self.m})"


class OracleHandle:
    """Query-model access to a graph: degree and i-th neighbor queries, counted.

    Every estimator reads the graph only through one of these. A handle is
    owned by a single run; concurrent runs each get their own.
    """

    def __init__(self, graph: Graph):
        self.graph = graph
        self.n = graph.n
        self.degree_queries = 0
        self.neighbor_queries = 0

    def _check(self, v: int) -> None:
        if not 0 <= v < self.n:
            raise GraphError(f"vertex {v} out of range [0, {self.n})")

    def degree(self, v: int) -> int:
        self._check(v)
        self.degree_queries += 1
        return self.graph.degree(v)

    def neighbor(self, v: int, i: int) -> int | None:
        """Return the i-th neighbor of ``v`` (1-indexed), or None when ``i > deg(v)``."""
        self._check(v)
        if i < 1:
            raise GraphError(f"neighbor index is 1-based, got {i}")
        self.neighbor_queries += 1
        g = self.graph
        p = g._indptr_list
        if i > p[v + 1] - p[v]:
            return None
        return int(g.indices[p[v] + i - 1])

    def all_neighbors(self, v: int) -> list[int]:
        """One degree query followed by one neighbor query per neighbor."""
        d = self.degree(v)
        return [self.neighbor(v, i) for i in range(1, d + 1)]

    @property
    def total_queries(self) -> int:
        return self.degree_queries + self.neighbor_queries

    def reset(self) -> None:
        self.degree_queries = 0
        self.neighbor_queries = 0


def degree_query(h: OracleHandle, v: int) -> int:
    return h.degree(v)


def neighbor_query(h: OracleHandle, v: int, i: int) -> int | None:
    return h.neighbor(v, i)


# --------------------------------------------------------------------------
# generators
# --------------------------------------------------------------------------

def _pair_from_index(idx: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    # row-major enumeration of pairs u < v
    idx = idx.astype(np.float64)
    u = np.floor((2 * n - 1 - np.sqrt((2 * n - 1) ** 2 - 8 * idx)) / 2).astype(np.int64)
    idx = idx.astype(np.int64)
    start = u * (2 * n - u - 1) // 2
    # float rounding can put u off by one near row boundaries
    too_big = start > idx
    u[too_big] -= 1
    start = u * (2 * n - u - 1) // 2
    nxt = (u + 1) * (2 * n - u - 2) // 2
    too_small = nxt <= idx
    u[too_small] += 1
    start = u * (2 * n - u - 1) // 2
    v = idx - start + u + 1
    return u, v


def gnp(n: int, p: float, seed: int = 0) -> Graph:
    """Erdos-Renyi G(n, p): a Binomial edge count, then a uniform set of that many pairs."""
    if n < 0 or not 0.0 <= p <= 1.0:
        raise GraphError(f"invalid gnp parameters n={n}, p={p}")
    rng = np.random.Generator(np.random.Philox(key=seed & 0xFFFFFFFFFFFFFFFF))
    total = n * (n - 1) // 2
    m = int(rng.binomial(total, p)) if total else 0
    if m == 0:
        return Graph.from_edges(n, np.empty((0, 2), dtype=np.int64), check=False)
    if m > total // 2:
        chosen = rng.choice(total, size=m, replace=False)
    else:
        chosen = np.empty(0, dtype=np.int64)
        while chosen.shape[0] < m:
            extra = rng.integers(0, total, size=int((m - chosen.shape[0]) * 1.1) + 16)
            merged = np.concatenate([chosen, extra])
            _, first = np.unique(merged, return_index=True)
            chosen = merged[np.sort(first)]
        chosen = chosen[:m]
    u, v = _pair_from_index(chosen, n)
    return Graph.from_edges(n, np.stack([u, v], axis=1), check=False)


def d_regular(n: int, d: int, seed: int = 0) -> Graph:
    """A d-regular graph: a circulant graph under a random vertex relabelling."""
    if d < 0 or d >= n or (n * d) % 2:
        raise GraphError(f"no simple {d}-regular graph on {n} vertices")
    rng = np.random.Generator(np.random.Philox(key=seed & 0xFFFFFFFFFFFFFFFF))
    base = np.arange(n, dtype=np.int64)
    parts = [np.stack([base, (base + k) % n], axis=1) for k in range(1, d // 2 + 1)]
    if d % 2:
        half = base[: n // 2]
        parts.append(np.stack([half, half + n // 2], axis=1))
    edges = np.concatenate(parts) if parts else np.empty((0, 2), dtype=np.int64)
    perm = rng.permutation(n)
    return Graph.from_edges(n, perm[edges], check=False)


def star(n: int) -> Graph:
    if n < 1:
        raise GraphError("star needs at least one vertex")
    leaves = np.arange(1, n, dtype=np.int64)
    return Graph.from_edges(n, np.stack([np.zeros_like(leaves), leaves], axis=1), check=False)


def path(n: int) -> Graph:
    if n < 0:
        raise GraphError("negative vertex count")
    a = np.arange(max(n - 1, 0), dtype=np.int64)
    return Graph.from_edges(n, np.stack([a, a + 1], axis=1), check=False)


def complete(n: int) -> Graph:
    if n < 0:
        raise GraphError("negative vertex count")
    u, v = np.triu_indices(n, k=1)
    return Graph.from_edges(n, np.stack([u, v], axis=1), check=False)


def perfect_matching(n: int) -> Graph:
    if n < 0 or n % 2:
        raise GraphError(f"perfect matching needs an even vertex count, got {n}")
    a = np.arange(0, n, 2, dtype=np.int64)
    return Graph.from_edges(n, np.stack([a, a + 1], axis=1), check=False)


def empty(n: int) -> Graph:
    if n < 0:
        raise GraphError("negative vertex count")
    return Graph.from_edges(n, np.empty((0, 2), dtype=np.int64), check=False)


def generate(kind: str, n: int, *, p: float | None = None, d: int | None = None, seed: int = 0) -> Graph:
    if kind == "gnp":
        if p is None:
            raise GraphError("gnp requires p")
        return gnp(n, p, seed)
    if kind == "d_regular":
        if d is None:
            raise GraphError("d_regular requires d")
        return d_regular(n, d, seed)
    simple = {"star": star, "path": path, "complete": complete,
              "perfect_matching": perfect_matching, "empty": empty}
    if kind not in simple:
        raise GraphError(f"unknown graph family {kind!r}; choose from {', '.join(FAMILIES)}")
    return simple[kind](n)


# --------------------------------------------------------------------------
# neighboring graphs
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class NeighborPair:
    base: Graph
    variant: Graph
    kind: str  # "edge" | "node"
    witness: tuple[int, int] | int


def enumerate_neighbors(g: Graph, kind: str, *, exhaustive_max_n: int = 6,
                        samples_per_vertex: int = 100, seed: int = 0) -> Iterator[NeighborPair]:
    """Yield neighboring graphs of ``g``.

    ``edge``: one variant per vertex pair, toggling that pair.
    ``node``: for each vertex, variants rewiring only its incident edges;
    every subset of the other vertices when ``n <= exhaustive_max_n``,
    otherwise ``samples_per_vertex`` seeded random subsets.
    """
    n = g.n
    if kind == "edge":
        for u, v in itertools.combinations(range(n), 2):
            yield NeighborPair(g, g.with_edge_toggled(u, v), "edge", (u, v))
        return
    if kind != "node":
        raise GraphError(f"unknown neighbor kind {kind!r}")
    edges = g.edge_set()
    rng = np.random.Generator(np.random.Philox(key=seed & 0xFFFFFFFFFFFFFFFF))
    for v in range(n):
        others = [u for u in range(n) if u != v]
        kept = [e for e in edges if v not in e]
        current = frozenset(int(u) for u in g.neighbors(v))
        if n <= exhaustive_max_n:
            subsets: Iterable[Sequence[int]] = (
                [others[j] for j in range(len(others)) if mask >> j & 1]
                for mask in range(1 << len(others)))
        else:
            subsets = ([u for u, bit in zip(others, rng.integers(0, 2, size=len(others))) if bit]
                       for _ in range(samples_per_vertex))
        for sub in subsets:
            if frozenset(sub) == current:
                continue
            new_edges = kept + [(min(u, v), max(u, v)) for u in sub]
            yield NeighborPair(g, Graph.from_edges(n, new_edges, check=False), "node", v)


# --------------------------------------------------------------------------
# edge-list files
# --------------------------------------------------------------------------

def parse_edge_list(text: str) -> Graph:
    header: tuple[int, int] | None = None
    edges: list[tuple[int, int]] = []
    seen: set[tuple[int, int]] = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise GraphFormatError(f"expected two integers, got {raw!r}", lineno)
        try:
            a, b = int(parts[0]), int(parts[1])
        except ValueError:
            raise GraphFormatError(f"expected two integers, got {raw!r}", lineno) from None
        if header is None:
            if a < 0 or b < 0:
                raise GraphFormatError("header counts must be non-negative", lineno)
            header = (a, b)
            continue
        n = header[0]
        if not (0 <= a < n and 0 <= b < n):
            raise GraphFormatError(f"vertex out of range [0, {n})", lineno)
        if a == b:
            raise GraphFormatError(f"self-loop at vertex {a}", lineno)
        key = (min(a, b), max(a, b))
        if key in seen:
            raise GraphFormatError(f"duplicate edge {key[0]} {key[1]}", lineno)
        seen.add(key)
        edges.append(key)
    if header is None:
        raise GraphFormatError("missing 'n m' header")
    if len(edges) != header[1]:
        raise GraphFormatError(f"header declares {header[1]} edges, found {len(edges)}")
    return Graph.from_edges(header[0], edges, check=False)


def load_edge_list(path: str | os.PathLike) -> Graph:
    with open(path, encoding="ascii") as fh:
        return parse_edge_list(fh.read())


def format_edge_list(g: Graph) -> str:
    e = g.edges()
    lines = [f"{g.n} {g.m}"]
    lines.extend(f"{a} {b}" for a, b in e.tolist())
    return "\n".join(lines) + "\n"


def save_edge_list(g: Graph, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(format_edge_list(g))

