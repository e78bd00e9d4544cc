"""Contracted sketch graph: one super vertex per cluster plus singletons.

Construction collapses a sparsifier partition: the self-pair weight of a
super vertex is its cluster's total internal edge weight (counted twice
toward its degree), inter-pair weights are cluster cuts, so super-vertex
volumes equal cluster volumes exactly.  Under insertions the sketch is
patched in place: new vertices join as non-contracted singletons, a
vertex whose degree doubles since construction is pulled out of its
super vertex, and the arriving edge weight is routed by endpoint tags.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .graph import DynamicGraph, Partition
from .sparsifier import ModelViolationError

logger = logging.getLogger(__name__)

NON_CONTRACTED = -1


@dataclass
class ContractedGraph:
    k: int
    members: list[set[int]]
    tag: list[int]
    nc_order: list[int] = field(default_factory=list)
    nc_index: dict[int, int] = field(default_factory=dict)
    weights: dict[tuple[int, int], float] = field(default_factory=dict)
    degree_snapshot: list[float] = field(default_factory=list)
    h_snapshot: list[dict[int, float]] = field(default_factory=list)
    built_at: int = 1
    built_from_gap_at: int = 1

    @property
    def known_n(self) -> int:
        return len(self.tag)

    @property
    def node_count(self) -> int:
        return self.k + len(self.nc_order)

    def node_id(self, v: int) -> int:
        """Contracted-graph node representing original vertex v."""
        t = self.tag[v]
        return t if t != NON_CONTRACTED else self.k + self.nc_index[v]

    def pair_weight(self, a: int, b: int) -> float:
        return self.weights.get((a, b) if a <= b else (b, a), 0.0)

    def node_volume(self, a: int) -> float:
        vol = 0.0
        for (x, y), w in self.weights.items():
            if x == y:
                if x == a:
                    vol += 2.0 * w
            elif x == a or y == a:
                vol += w
        return vol

    def to_graph(self) -> DynamicGraph:
        """Materialize as a DynamicGraph over dense node ids."""
        g = DynamicGraph(self.node_count)
        for (a, b), w in self.weights.items():
            if w > 0.0:
                g.add_edge(a, b, w, allow_loop=a == b)
        return g

    def copy(self) -> "ContractedGraph":
        return ContractedGraph(
            k=self.k,
            members=[set(m) for m in self.members],
            tag=list(self.tag),
            nc_order=list(self.nc_order),
            nc_index=dict(self.nc_index),
            weights=dict(self.weights),
            degree_snapshot=list(self.degree_snapshot),
            h_snapshot=self.h_snapshot,  # frozen at construction, safe to share
            built_at=self.built_at,
            built_from_gap_at=self.built_from_gap_at,
        )


def _bump(weights: dict[tuple[int, int], float], a: int, b: int, delta: float) -> None:
    key = (a, b) if a <= b else (b, a)
    new = weights.get(key, 0.0) + delta
    if new < 0.0:
        logger.warning("contracted pair %s weight clamped to 0 (residual %.3g)", key, new)
        new = 0.0
    if new == 0.0:
        weights.pop(key, None)
    else:
        weights[key] = new


def contract_graph(
    h: DynamicGraph,
    partition: Partition,
    degree_graph: DynamicGraph | None = None,
    built_at: int = 1,
    built_from_gap_at: int | None = None,
) -> ContractedGraph:
    """Collapse each cluster of `partition` into a super vertex of h.

    `degree_graph` supplies the degree snapshots used by later pull-out
    tests (the full graph, when the sparsifier drives clustering);
    defaults to h itself.  Runs in O(|edges of h|).
    """
    if partition.n != h.n:
        raise ValueError(f"partition covers {partition.n} vertices, sparsifier has {h.n}")
    deg_src = degree_graph if degree_graph is not None else h
    if deg_src.n != h.n:
        raise ValueError("degree source and sparsifier disagree on vertex count")
    k = partition.k
    tag = partition.labels()
    cg = ContractedGraph(
        k=k,
        members=[set(c) for c in partition.clusters],
        tag=tag,
        degree_snapshot=list(deg_src.deg),
        h_snapshot=[dict(nbrs) for nbrs in h.adj],
        built_at=built_at,
        built_from_gap_at=built_from_gap_at if built_from_gap_at is not None else built_at,
    )
    for u, v, w in h.edges():
        i, j = tag[u], tag[v]
        _bump(cg.weights, i, j, w)
    return cg


def _pull_out(cg: ContractedGraph, g: DynamicGraph, w: int) -> None:
    """Move w out of its super vertex into the sketch as a singleton."""
    j = cg.tag[w]
    cg.members[j].discard(w)
    cg.tag[w] = NON_CONTRACTED
    cg.nc_index[w] = len(cg.nc_order)
    cg.nc_order.append(w)
    cg.degree_snapshot[w] = g.deg[w]
    w_node = cg.node_id(w)

    # materialize direct edges to the other singletons; each was carried
    # by the (super, singleton) pair until now, hence the unit decrement
    cut_to_super: dict[int, float] = {}
    for y, wt in g.adj[w].items():
        if y == w:
            continue
        ty = cg.tag[y]
        if ty == NON_CONTRACTED:
            _bump(cg.weights, w_node, cg.node_id(y), wt)
            _bump(cg.weights, j, cg.node_id(y), -1.0)
        else:
            cut_to_super[ty] = cut_to_super.get(ty, 0.0) + wt
    for i, cut in cut_to_super.items():
        _bump(cg.weights, w_node, i, cut)

    # the construction-time sparsifier carried w's weight inside the
    # super pairs; subtract that contribution
    h_sub: dict[int, float] = {}
    for y, wt in cg.h_snapshot[w].items():
        if y == w:
            continue
        ty = cg.tag[y]
        if ty != NON_CONTRACTED:
            h_sub[ty] = h_sub.get(ty, 0.0) + wt
    for i, sub in h_sub.items():
        _bump(cg.weights, j, i, -sub)


def update_contracted(g_next: DynamicGraph, cg: ContractedGraph, e: tuple[int, int]) -> None:
    """Fold one edge insertion (already applied to g_next) into the sketch."""
    u, v = e
    n_prev = cg.known_n
    new_vertices = [x for x in dict.fromkeys((u, v)) if x >= n_prev]
    if len(new_vertices) == 2:
        raise ModelViolationError(f"edge {e} introduces two new vertices")
    g = g_next
    for x in range(n_prev, g.n):
        cg.tag.append(NON_CONTRACTED)
        cg.nc_index[x] = len(cg.nc_order)
        cg.nc_order.append(x)
        cg.degree_snapshot.append(g.deg[x])
        cg.h_snapshot.append({})

    pulled = False
    for w in (u, v):
        if w < n_prev and cg.tag[w] != NON_CONTRACTED and g.deg[w] > 2.0 * cg.degree_snapshot[w]:
            _pull_out(cg, g, w)
            pulled = True

    if not pulled:
        # a pull-out already captured the fresh edge via the raw cuts
        _bump(cg.weights, cg.node_id(u), cg.node_id(v), 1.0)


def expand_partition(cg: ContractedGraph, contracted_partition: Partition) -> Partition:
    """Blow a partition of the sketch nodes back up to original vertices."""
    if contracted_partition.n != cg.node_count:
        raise ValueError(
            f"partition covers {contracted_partition.n} sketch nodes, expected {cg.node_count}"
        )
    full: list[set[int]] = []
    for cluster in contracted_partition.clusters:
        vertices: set[int] = set()
        for a in cluster:
            if a < cg.k:
                vertices |= cg.members[a]
            else:
                vertices.add(cg.nc_order[a - cg.k])
        if vertices:
            full.append(vertices)
        else:
            logger.debug("dropping empty expansion of sketch cluster %s", sorted(cluster))
    return Partition(full, n=cg.known_n)


def label_of(cg: ContractedGraph, v: int, contracted_labels) -> int:
    """Cluster index of v under a labeling of the sketch nodes; O(1)."""
    if not 0 <= v < cg.known_n:
        raise KeyError(f"unknown vertex {v}")
    return int(contracted_labels[cg.node_id(v)])
