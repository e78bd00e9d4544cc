"""Mutable undirected weighted graph with conductance/volume bookkeeping.

Vertices are dense non-negative integers.  Edge insertion is the only
update the streaming model supports; weights accumulate when the same
pair is inserted twice.  Self-loops count twice toward the degree so
that contracted-graph volumes line up with cluster volumes.

Also home to the exhaustive small-instance oracles (cut scans, k-way
expansion by partition enumeration) that the test suite leans on.
"""

from __future__ import annotations

from collections.abc import Iterable, Iterator, Sequence


class DynamicGraph:
    """Undirected weighted graph under edge/vertex insertion."""

    __slots__ = ("adj", "deg", "total_volume")

    def __init__(self, n: int = 0):
        self.adj: list[dict[int, float]] = [dict() for _ in range(n)]
        self.deg: list[float] = [0.0] * n
        self.total_volume: float = 0.0

    @property
    def n(self) -> int:
        return len(self.adj)

    def ensure_vertex(self, u: int) -> None:
        """Grow the vertex set so that id ``u`` exists."""
        if u < 0:
            raise ValueError(f"vertex id must be non-negative, got {u}")
        while len(self.adj) <= u:
            self.adj.append(dict())
            self.deg.append(0.0)

    def add_edge(self, u: int, v: int, w: float = 1.0, allow_loop: bool = False) -> None:
        """Insert an edge, creating missing endpoints.

        Repeated insertion of the same pair accumulates weight.  A
        self-loop (u == v) must be opted into and adds 2*w to deg(u).
        """
        if w <= 0:
            raise ValueError(f"edge weight must be positive, got {w}")
        if u == v and not allow_loop:
            raise ValueError(f"self-loop at {u} not permitted by caller")
        self.ensure_vertex(max(u, v))
        if u == v:
            self.adj[u][u] = self.adj[u].get(u, 0.0) + w
            self.deg[u] += 2.0 * w
        else:
            self.adj[u][v] = self.adj[u].get(v, 0.0) + w
            self.adj[v][u] = self.adj[v].get(u, 0.0) + w
            self.deg[u] += w
            self.deg[v] += w
        self.total_volume += 2.0 * w

    def remove_edge(self, u: int, v: int) -> float:
        """Drop an edge entirely and return the weight it had.

        Internal maintenance hook (sparsifier resampling); the streaming
        model itself never deletes.  Missing edges are a no-op.
        """
        w = self.adj[u].pop(v, 0.0)
        if w == 0.0:
            return 0.0
        if u == v:
            self.deg[u] -= 2.0 * w
        else:
            del self.adj[v][u]
            self.deg[u] -= w
            self.deg[v] -= w
        self.total_volume -= 2.0 * w
        return w

    def set_edge_weight(self, u: int, v: int, w: float, allow_loop: bool = False) -> None:
        """Overwrite an edge weight (0 removes the edge)."""
        self.remove_edge(u, v)
        if w != 0.0:
            self.add_edge(u, v, w, allow_loop=allow_loop)

    def weight(self, u: int, v: int) -> float:
        if u >= len(self.adj):
            return 0.0
        return self.adj[u].get(v, 0.0)

    def degree(self, u: int) -> float:
        return self.deg[u]

    def neighbors(self, u: int) -> dict[int, float]:
        return self.adj[u]

    def edges(self) -> Iterator[tuple[int, int, float]]:
        """Yield each edge once as (u, v, w) with u <= v."""
        for u, nbrs in enumerate(self.adj):
            for v, w in nbrs.items():
                if u <= v:
                    yield u, v, w

    def edge_count(self) -> int:
        return sum(1 for _ in self.edges())

    def copy(self) -> "DynamicGraph":
        g = DynamicGraph()
        g.adj = [dict(nbrs) for nbrs in self.adj]
        g.deg = list(self.deg)
        g.total_volume = self.total_volume
        return g

    def __repr__(self) -> str:
        return f"DynamicGraph(n={self.n}, m={self.edge_count()}, vol={self.total_volume:g})"


def volume(g: DynamicGraph, S: Iterable[int]) -> float:
    """vol(S): sum of weighted degrees over S."""
    return sum(g.deg[u] for u in S)


def cut_weight(g: DynamicGraph, S: Iterable[int], T: Iterable[int]) -> float:
    """Total weight of edges with one endpoint in S and the other in T.

    S and T must be disjoint; self-loops never cross a cut.
    """
    S, T = set(S), set(T)
    if S & T:
        raise ValueError(f"cut sides overlap: {sorted(S & T)}")
    small, other = (S, T) if len(S) <= len(T) else (T, S)
    total = 0.0
    for u in small:
        for v, w in g.adj[u].items():
            if v in other:
                total += w
    return total


def conductance(g: DynamicGraph, S: Iterable[int]) -> float:
    """Phi(S) = w(S, V\\S) / min(vol(S), vol(V\\S)); 1 when the smaller side is empty."""
    S = set(S)
    vol_s = volume(g, S)
    vol_rest = g.total_volume - vol_s
    denom = min(vol_s, vol_rest)
    if denom <= 0.0:
        return 1.0
    cut = 0.0
    for u in S:
        for v, w in g.adj[u].items():
            if v not in S:
                cut += w
    return cut / denom


class Partition:
    """Disjoint vertex sets covering {0, ..., n-1}."""

    def __init__(self, clusters: Sequence[Iterable[int]], n: int | None = None):
        self.clusters: list[set[int]] = [set(c) for c in clusters]
        seen: set[int] = set()
        size = 0
        for c in self.clusters:
            if not c:
                raise ValueError("empty cluster in partition")
            size += len(c)
            seen |= c
        if len(seen) != size:
            raise ValueError("clusters are not disjoint")
        if n is None:
            n = max(seen) + 1 if seen else 0
        if seen != set(range(n)):
            raise ValueError(f"clusters do not cover 0..{n - 1}")
        self.n = n

    @classmethod
    def from_labels(cls, labels: Sequence[int]) -> "Partition":
        by_label: dict[int, set[int]] = {}
        for v, lab in enumerate(labels):
            by_label.setdefault(lab, set()).add(v)
        return cls([by_label[lab] for lab in sorted(by_label)], n=len(labels))

    @property
    def k(self) -> int:
        return len(self.clusters)

    def labels(self) -> list[int]:
        out = [0] * self.n
        for i, c in enumerate(self.clusters):
            for v in c:
                out[v] = i
        return out

    def order_by_volume(self, g: DynamicGraph) -> "Partition":
        """Return a copy with clusters sorted by nondecreasing volume."""
        ordered = sorted(self.clusters, key=lambda c: (volume(g, c), min(c)))
        return Partition(ordered, n=self.n)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Partition):
            return NotImplemented
        return sorted(map(frozenset, self.clusters)) == sorted(map(frozenset, other.clusters))

    def __repr__(self) -> str:
        return f"Partition(k={self.k}, n={self.n})"


def iter_k_partitions(n: int, k: int) -> Iterator[list[set[int]]]:
    """Enumerate all partitions of {0..n-1} into exactly k non-empty blocks.

    Restricted-growth-string enumeration; intended for n small enough to
    exhaust (the k-way expansion oracle guards at n <= 14).
    """
    if k < 1 or k > n:
        return
    rgs = [0] * n

    def rec(i: int, maxseen: int):
        if i == n:
            if maxseen + 1 == k:
                blocks: list[set[int]] = [set() for _ in range(k)]
                for v, b in enumerate(rgs):
                    blocks[b].add(v)
                yield blocks
            return
        # prune: remaining positions must still be able to reach k blocks
        if maxseen + 1 + (n - i) < k:
            return
        for b in range(min(maxseen + 1, k - 1) + 1):
            rgs[i] = b
            yield from rec(i + 1, max(maxseen, b))

    yield from rec(1, 0)


def k_way_expansion_bruteforce(g: DynamicGraph, k: int) -> tuple[float, Partition]:
    """min over k-way partitions of the max cluster conductance, with an argmin.

    Exhaustive oracle: refuses graphs above n = 14.
    """
    n = g.n
    if n > 14:
        raise ValueError(f"brute-force expansion limited to n <= 14, got n = {n}")
    if not 2 <= k <= n:
        raise ValueError(f"need 2 <= k <= n, got k = {k}")
    best = None
    best_blocks = None
    for blocks in iter_k_partitions(n, k):
        worst = max(conductance(g, b) for b in blocks)
        if best is None or worst < best:
            best = worst
            best_blocks = [set(b) for b in blocks]
    assert best is not None and best_blocks is not None
    return best, Partition(best_blocks, n=n).order_by_volume(g)
