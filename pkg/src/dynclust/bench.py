"""Benchmark generators and evaluation metrics.

Two dynamic stochastic block model variants: one grows fresh dense
clusters batch by batch on previously unused vertices, the other merges
pairs of small clusters.  Desk-scale defaults shrink the cluster sizes
roughly 40x while keeping the edge densities, which keeps the spectral
gaps detectable.  Also: replay ingestion for precomputed k-NN edge
files, the adjusted Rand index, and spectral-gap reporting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .contracted import ContractedGraph
from .graph import DynamicGraph
from .spectral import EIGEN_TOL, GAP_FLOOR, build_laplacian, smallest_eigenpairs

Edge = tuple[int, int]


@dataclass
class SbmIncreasingParams:
    """Blocks plus one fresh dense cluster of new vertices per batch.

    Desk defaults keep the eigenvalues of the planted structure well
    separated from the bulk at n ~ 1000 (the full-scale densities do
    not survive a 40x shrink unchanged; q is lowered accordingly).
    """

    k: int = 4
    n_k: int = 250
    p: float = 0.1
    q: float = 0.001
    n_new: int = 40
    r1: float = 0.95
    s: float = 1e-5
    batches: int = 10

    def validate(self) -> None:
        if not 0 <= self.q < self.p <= 1:
            raise ValueError("need 0 <= q < p <= 1")
        if not 0 < self.r1 <= 1:
            raise ValueError("need 0 < r1 <= 1")
        if not 0 <= self.s <= 1:
            raise ValueError("need 0 <= s <= 1")
        if self.k < 1 or self.n_k < 2 or self.n_new < 2 or self.batches < 0:
            raise ValueError("degenerate size parameters")


@dataclass
class SbmDecreasingParams:
    """Large and small blocks; each batch densely merges two small ones.

    The desk-scale q keeps all 25 planted clusters spectrally visible
    at n = 3500 (small blocks of 50 drown at the full-scale density).
    """

    large_count: int = 5
    large_size: int = 500
    small_count: int = 20
    small_size: int = 50
    p: float = 0.1
    q: float = 1e-4
    r2: float = 0.95
    s: float = 1e-5
    batches: int = 10

    @property
    def k(self) -> int:
        return self.large_count + self.small_count

    def validate(self) -> None:
        if not 0 <= self.q < self.p <= 1:
            raise ValueError("need 0 <= q < p <= 1")
        if not 0 < self.r2 <= 1:
            raise ValueError("need 0 < r2 <= 1")
        if not 0 <= self.s <= 1:
            raise ValueError("need 0 <= s <= 1")
        if self.batches > self.small_count // 2:
            raise ValueError(
                f"{self.batches} merges need {2 * self.batches} small clusters, have {self.small_count}"
            )


@dataclass
class LabeledStream:
    """An initial graph, edge batches, and planted labels per boundary.

    ground_truth[0] labels the initial graph; ground_truth[b] labels the
    graph after batch b.  Labels cover every vertex present at that
    boundary.
    """

    initial_graph: DynamicGraph
    batches: list[list[Edge]] = field(default_factory=list)
    ground_truth: list[list[int]] = field(default_factory=list)


def _sample_pairs_dense(pairs: list[Edge], prob: float, rng: np.random.Generator) -> list[Edge]:
    if prob >= 1.0:
        return list(pairs)
    mask = rng.random(len(pairs)) < prob
    return [e for e, hit in zip(pairs, mask) if hit]


def _sample_pairs_sparse(
    count_space: int, prob: float, rng: np.random.Generator, decode
) -> list[Edge]:
    """Binomial count, then that many distinct pairs by rejection."""
    count = int(rng.binomial(count_space, prob))
    chosen: set[int] = set()
    while len(chosen) < count:
        chosen.add(int(rng.integers(count_space)))
    return [decode(i) for i in sorted(chosen)]


def _within_pairs(vertices: np.ndarray, prob: float, rng: np.random.Generator) -> list[Edge]:
    m = len(vertices)
    space = m * (m - 1) // 2
    if space == 0:
        return []
    if prob * space <= space * 0.01 and space > 10_000:

        def decode(flat: int) -> Edge:
            # row-major upper triangle without diagonal
            a = m - 2 - int((math.isqrt(4 * m * (m - 1) - 8 * flat - 7) - 1) // 2)
            b = flat + a + 1 - a * (2 * m - a - 1) // 2
            return int(vertices[a]), int(vertices[b])

        return _sample_pairs_sparse(space, prob, rng, decode)
    iu, ju = np.triu_indices(m, k=1)
    pairs = [(int(vertices[a]), int(vertices[b])) for a, b in zip(iu, ju)]
    return _sample_pairs_dense(pairs, prob, rng)


def _between_pairs(
    left: np.ndarray, right: np.ndarray, prob: float, rng: np.random.Generator
) -> list[Edge]:
    nl, nr = len(left), len(right)
    space = nl * nr
    if space == 0:
        return []
    if prob * space <= space * 0.01 and space > 10_000:

        def decode(flat: int) -> Edge:
            return int(left[flat // nr]), int(right[flat % nr])

        return _sample_pairs_sparse(space, prob, rng, decode)
    mask = rng.random(space) < prob
    idx = np.nonzero(mask)[0]
    return [(int(left[i // nr]), int(right[i % nr])) for i in idx]


def _repair_isolated(g: DynamicGraph, block_of: list[int], rng: np.random.Generator) -> None:
    """Attach degree-0 vertices to a random same-block neighbor."""
    by_block: dict[int, list[int]] = {}
    for v, b in enumerate(block_of):
        by_block.setdefault(b, []).append(v)
    for v in range(g.n):
        if g.deg[v] == 0.0:
            mates = [u for u in by_block[block_of[v]] if u != v]
            u = mates[int(rng.integers(len(mates)))]
            g.add_edge(v, u, 1.0)


def _sbm_graph(
    sizes: list[int], p: float, q: float, rng: np.random.Generator
) -> tuple[DynamicGraph, list[int]]:
    n = sum(sizes)
    block_of: list[int] = []
    starts: list[int] = []
    at = 0
    for b, size in enumerate(sizes):
        starts.append(at)
        block_of.extend([b] * size)
        at += size
    g = DynamicGraph(n)
    blocks = [np.arange(starts[b], starts[b] + sizes[b]) for b in range(len(sizes))]
    for b, idx in enumerate(blocks):
        for u, v in _within_pairs(idx, p, rng):
            g.add_edge(u, v, 1.0)
    for a in range(len(sizes)):
        for b in range(a + 1, len(sizes)):
            for u, v in _between_pairs(blocks[a], blocks[b], q, rng):
                g.add_edge(u, v, 1.0)
    _repair_isolated(g, block_of, rng)
    return g, block_of


def gen_sbm_increasing(params: SbmIncreasingParams, seed: int = 0) -> LabeledStream:
    """Plant one fresh dense cluster of brand-new vertices per batch.

    Every new vertex arrives on an anchor edge to a uniformly random
    initial vertex (one new endpoint per insertion, graph stays
    connected), then the internal pairs land with probability r1 and
    noise pairs over the whole current graph with probability s.  The
    planted clusters never overlap: each batch uses fresh vertex ids.
    """
    params.validate()
    rng = np.random.default_rng(seed)
    g1, labels = _sbm_graph([params.n_k] * params.k, params.p, params.q, rng)
    n0 = g1.n
    stream = LabeledStream(initial_graph=g1, ground_truth=[list(labels)])
    next_id = n0
    for b in range(1, params.batches + 1):
        q_set = np.arange(next_id, next_id + params.n_new)
        next_id += params.n_new
        internal = _within_pairs(q_set, params.r1, rng)
        by_hi: dict[int, list[Edge]] = {}
        for u, v in internal:
            lo, hi = (u, v) if u < v else (v, u)
            by_hi.setdefault(hi, []).append((lo, hi))
        edges: list[Edge] = []
        for x in q_set:
            x = int(x)
            edges.append((x, int(rng.integers(n0))))  # arrival anchor
            edges.extend(sorted(by_hi.get(x, ())))
        edges += _within_pairs(np.arange(next_id), params.s, rng)
        stream.batches.append(edges)
        labels = list(labels) + [params.k + b - 1] * params.n_new
        stream.ground_truth.append(labels)
    return stream


def gen_sbm_decreasing(params: SbmDecreasingParams, seed: int = 0) -> LabeledStream:
    """Merge one fresh pair of small clusters per batch."""
    params.validate()
    rng = np.random.default_rng(seed)
    sizes = [params.large_size] * params.large_count + [params.small_size] * params.small_count
    g1, labels = _sbm_graph(sizes, params.p, params.q, rng)
    stream = LabeledStream(initial_graph=g1, ground_truth=[list(labels)])
    members: dict[int, np.ndarray] = {}
    at = 0
    for b, size in enumerate(sizes):
        members[b] = np.arange(at, at + size)
        at += size
    small_ids = list(range(params.large_count, params.k))
    order = rng.permutation(len(small_ids))
    all_vertices = np.arange(g1.n)
    for b in range(1, params.batches + 1):
        i = small_ids[order[2 * (b - 1)]]
        j = small_ids[order[2 * (b - 1) + 1]]
        edges = _between_pairs(members[i], members[j], params.r2, rng)
        edges += _within_pairs(all_vertices, params.s, rng)
        perm = rng.permutation(len(edges))
        stream.batches.append([edges[x] for x in perm])
        labels = list(labels)
        keep, absorb = min(i, j), max(i, j)
        for v in members[absorb]:
            labels[int(v)] = keep
        stream.ground_truth.append(labels)
    return stream


def _order_batch_for_model(batch: list[Edge], known: set[int]) -> list[Edge]:
    """Reorder so each insertion touches at most one unseen vertex when possible."""
    pending = list(batch)
    ordered: list[Edge] = []
    while pending:
        progressed = False
        still: list[Edge] = []
        for u, v in pending:
            if (u in known) or (v in known):
                ordered.append((u, v))
                known.add(u)
                known.add(v)
                progressed = True
            else:
                still.append((u, v))
        pending = still
        if not progressed:
            break
    ordered.extend(pending)  # unanchorable leftovers; rejected at replay
    for u, v in pending:
        known.add(u)
        known.add(v)
    return ordered


def read_edge_file(path: str | Path) -> list[tuple[int, int]]:
    """One edge per line: two non-negative integers; '#' starts a comment."""
    edges = []
    with open(path, encoding="ascii") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValueError(f"{path}:{lineno}: expected 'u v', got {raw.rstrip()!r}")
            try:
                u, v = int(parts[0]), int(parts[1])
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: non-integer vertex in {raw.rstrip()!r}") from exc
            if u < 0 or v < 0:
                raise ValueError(f"{path}:{lineno}: negative vertex id")
            edges.append((u, v))
    return edges


def read_class_file(path: str | Path) -> dict[int, int]:
    """Per line: vertex label."""
    classes: dict[int, int] = {}
    with open(path, encoding="ascii") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValueError(f"{path}:{lineno}: expected 'vertex label', got {raw.rstrip()!r}")
            classes[int(parts[0])] = int(parts[1])
    return classes


def read_schedule(path: str | Path) -> dict[str, str]:
    """key=value lines: initial_classes, batches, seed (held_out optional)."""
    out: dict[str, str] = {}
    with open(path, encoding="ascii") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {raw.rstrip()!r}")
            key, val = line.split("=", 1)
            out[key.strip()] = val.strip()
    return out


def ingest_knn_stream(
    edge_file: str | Path,
    class_file: str | Path,
    schedule: dict[str, str] | str | Path,
) -> LabeledStream:
    """Split a precomputed k-NN edge list into an initial graph and batches.

    Edges with both endpoints in the scheduled initial classes form the
    initial graph; the rest are shuffled into equal batches (sizes
    differing by at most one).  Vertex names are remapped to dense ids
    in arrival order.  Within a batch, edges are reordered so that each
    insertion introduces at most one unseen vertex whenever possible.
    """
    if not isinstance(schedule, dict):
        schedule = read_schedule(schedule)
    raw_edges = read_edge_file(edge_file)
    classes = read_class_file(class_file)
    initial_classes = {int(x) for x in schedule["initial_classes"].split(",") if x.strip() != ""}
    n_batches = int(schedule.get("batches", "10"))
    seed = int(schedule.get("seed", "0"))
    rng = np.random.default_rng(seed)

    missing = [u for e in raw_edges for u in e if u not in classes]
    if missing:
        raise ValueError(f"vertex {missing[0]} has no class label")

    remap: dict[int, int] = {}

    def dense(u: int) -> int:
        if u not in remap:
            remap[u] = len(remap)
        return remap[u]

    initial_raw = [e for e in raw_edges if classes[e[0]] in initial_classes and classes[e[1]] in initial_classes]
    held_raw = [e for e in raw_edges if not (classes[e[0]] in initial_classes and classes[e[1]] in initial_classes)]

    g1 = DynamicGraph()
    for u, v in initial_raw:
        g1.add_edge(dense(u), dense(v), 1.0)
    truth0 = [0] * len(remap)
    for u, idx in remap.items():
        truth0[idx] = classes[u]
    stream = LabeledStream(initial_graph=g1, ground_truth=[truth0])

    order = rng.permutation(len(held_raw))
    if n_batches > 0:
        sections = np.array_split(order, n_batches)
    else:
        sections = []
        if held_raw:
            raise ValueError("held-out edges present but batches=0")
    known = set(remap)
    for sec in sections:
        batch_raw = [held_raw[i] for i in sec]
        batch_raw = _order_batch_for_model(batch_raw, known)
        batch = [(dense(u), dense(v)) for u, v in batch_raw]
        stream.batches.append(batch)
        truth = [0] * len(remap)
        for u, idx in remap.items():
            truth[idx] = classes[u]
        stream.ground_truth.append(truth)
    return stream


def build_knn_edges(features: np.ndarray, k: int) -> list[Edge]:
    """Brute-force symmetrized k-NN edges; convenience for small feature sets."""
    m = len(features)
    if m > 5000:
        raise ValueError("brute-force k-NN is limited to 5000 points")
    if not 1 <= k < m:
        raise ValueError("need 1 <= k < number of points")
    x = np.asarray(features, dtype=float)
    sq = np.sum(x * x, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (x @ x.T)
    np.fill_diagonal(d2, np.inf)
    edges: set[Edge] = set()
    nn = np.argsort(d2, axis=1)[:, :k]
    for u in range(m):
        for v in nn[u]:
            edges.add((min(u, int(v)), max(u, int(v))))
    return sorted(edges)


def ari(labels_a, labels_b) -> float:
    """Hubert-Arabie adjusted Rand index between two labelings."""
    a = list(labels_a)
    b = list(labels_b)
    if len(a) != len(b):
        raise ValueError(f"label vectors differ in length: {len(a)} vs {len(b)}")
    n = len(a)
    if n == 0:
        return 1.0
    table: dict[tuple[int, int], int] = {}
    count_a: dict[int, int] = {}
    count_b: dict[int, int] = {}
    for x, y in zip(a, b):
        table[(x, y)] = table.get((x, y), 0) + 1
        count_a[x] = count_a.get(x, 0) + 1
        count_b[y] = count_b.get(y, 0) + 1

    def comb2(c: int) -> int:
        return c * (c - 1) // 2

    index = sum(comb2(c) for c in table.values())
    sum_a = sum(comb2(c) for c in count_a.values())
    sum_b = sum(comb2(c) for c in count_b.values())
    total = comb2(n)
    expected = sum_a * sum_b / total if total else 0.0
    max_index = 0.5 * (sum_a + sum_b)
    if max_index == expected:
        return 1.0
    return (index - expected) / (max_index - expected)


def gap_report(
    g: DynamicGraph,
    cg: ContractedGraph,
    ell: int,
    tol: float = EIGEN_TOL,
    seed: int = 0,
) -> tuple[float, float]:
    """lambda_{ell+1}/lambda_ell for the full graph and the contracted sketch."""
    sketch = cg.to_graph()
    if ell + 1 > g.n or ell + 1 > sketch.n:
        raise ValueError(f"need ell+1 eigenvalues; ell={ell} too large")
    ratios = []
    for graph in (g, sketch):
        pairs = smallest_eigenpairs(build_laplacian(graph), ell + 1, tol=tol, seed=seed)
        lam = pairs.values
        ratios.append(float(lam[ell] / max(lam[ell - 1], GAP_FLOOR)))
    return ratios[0], ratios[1]
