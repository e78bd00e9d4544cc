"""Three-stage orchestration: preprocess, per-insertion update, query.

A query clusters the small contracted sketch when few insertions have
landed since its last rebuild (at most ceil(log(n_r)^gamma)), and falls
back to clustering the sparsifier and rebuilding the sketch otherwise.

Single-writer state: updates and queries must not run concurrently.  A
query that must outlive later updates should operate on a sketch copy
(`ContractedGraph.copy` is cheap) plus the current sparsifier snapshot.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

from .contracted import ContractedGraph, contract_graph, expand_partition, label_of, update_contracted
from .graph import DynamicGraph, Partition
from .sparsifier import ModelViolationError, SparsifierState, static_sparsifier, update_sparsifier
from .spectral import EIGEN_TOL, build_laplacian, eigen_gap_select, spectral_clustering

logger = logging.getLogger(__name__)

DEFAULT_GAMMA = 1.5
DEFAULT_K_MAX = 64


@dataclass
class QueryResult:
    partition: Partition
    branch: str  # "fast" or "slow"
    ell: int
    eigensolve_dim: int
    label_lookup: Callable[[int], int]
    """O(1) per-vertex cluster lookup; valid until the next update."""


@dataclass
class PipelineState:
    g: DynamicGraph
    sp: SparsifierState
    cg: ContractedGraph
    t: int
    r: int
    r_prime: int
    n_r: int
    gamma: float
    k_max: int
    seed: int
    tol: float = EIGEN_TOL
    event_log: list[tuple[int, int]] = field(default_factory=list)

    def fast_branch_limit(self) -> int:
        return math.ceil(math.log(self.n_r) ** self.gamma)


def preprocess(
    g1: DynamicGraph,
    k: int,
    tau: float,
    seed: int = 0,
    gamma: float = DEFAULT_GAMMA,
    k_max: int = DEFAULT_K_MAX,
    tol: float = EIGEN_TOL,
) -> PipelineState:
    """Sparsify the initial graph, cluster it, and contract the clusters."""
    if k < 1:
        raise ValueError("k must be >= 1")
    sp = static_sparsifier(g1, tau, seed)
    partition = spectral_clustering(sp.h, k, seed=seed, tol=tol)
    cg = contract_graph(sp.h, partition, degree_graph=g1, built_at=1)
    return PipelineState(
        g=g1,
        sp=sp,
        cg=cg,
        t=1,
        r=1,
        r_prime=1,
        n_r=g1.n,
        gamma=gamma,
        k_max=k_max,
        seed=seed,
        tol=tol,
    )


def handle_update(st: PipelineState, e: tuple[int, int]) -> None:
    """Apply one unit-weight edge insertion to all maintained structures."""
    u, v = e
    n = st.g.n
    if u >= n and v >= n:
        raise ModelViolationError(f"edge {e} introduces two new vertices")
    if max(u, v) > n:
        raise ModelViolationError(f"edge {e} skips vertex ids (next unused id is {n})")
    st.g.add_edge(u, v, 1.0)
    st.t += 1
    update_sparsifier(st.sp, st.g, e)
    update_contracted(st.g, st.cg, e)
    st.event_log.append(e)


def _auto_ell(st: PipelineState, sketch: DynamicGraph, seed: int) -> int:
    n = sketch.n
    if n <= 2:
        return n
    k_max = min(st.k_max, n - 1)
    return eigen_gap_select(build_laplacian(sketch), k_max, tol=st.tol, seed=seed)


def query(
    st: PipelineState,
    ell: int | str | None = None,
    seed: int | None = None,
    full_gap_scan: bool = False,
) -> QueryResult:
    """Cluster the current graph into ell clusters (auto-detected when unset).

    Fast path: spectral clustering of the contracted sketch, expanded
    back to full vertices.  Slow path: spectral clustering of the
    sparsifier, after which the sketch is rebuilt from that partition
    and the rebuild clock resets.
    """
    if seed is None:
        seed = st.seed
    auto = ell is None or ell == "auto"

    take_fast = (st.t - st.r) <= st.fast_branch_limit()
    if take_fast:
        sketch = st.cg.to_graph()
        if any(d <= 0.0 for d in sketch.deg):
            logger.warning("sketch has an isolated node; taking the slow branch")
            take_fast = False
        else:
            chosen = _auto_ell(st, sketch, seed) if auto else int(ell)
            if chosen > st.k_max:
                raise ValueError(f"ell={chosen} exceeds k_max={st.k_max}")
            if chosen > sketch.n:
                logger.warning(
                    "ell=%d exceeds the %d sketch nodes; taking the slow branch", chosen, sketch.n
                )
                take_fast = False
        if take_fast:
            sketch_partition = spectral_clustering(sketch, chosen, seed=seed, tol=st.tol)
            full = expand_partition(st.cg, sketch_partition).order_by_volume(st.g)
            labels = sketch_partition.labels()
            cg_ref = st.cg
            return QueryResult(
                partition=full,
                branch="fast",
                ell=chosen,
                eigensolve_dim=sketch.n,
                label_lookup=lambda v: label_of(cg_ref, v, labels),
            )

    # slow path: cluster the sparsifier, then rebuild the sketch
    if auto:
        if full_gap_scan:
            n = st.sp.h.n
            chosen = eigen_gap_select(
                build_laplacian(st.sp.h), min(st.k_max, n - 1), tol=st.tol, seed=seed
            )
        else:
            sketch = st.cg.to_graph()
            keep = [i for i, d in enumerate(sketch.deg) if d > 0.0]
            if len(keep) < sketch.n:
                remap = {a: i for i, a in enumerate(keep)}
                trimmed = DynamicGraph(len(keep))
                for a, b, w in sketch.edges():
                    if a in remap and b in remap:
                        trimmed.add_edge(remap[a], remap[b], w, allow_loop=a == b)
                sketch = trimmed
            chosen = _auto_ell(st, sketch, seed)
    else:
        chosen = int(ell)
    if chosen > st.k_max:
        raise ValueError(f"ell={chosen} exceeds k_max={st.k_max}")

    partition = spectral_clustering(st.sp.h, chosen, seed=seed, tol=st.tol)
    st.cg = contract_graph(st.sp.h, partition, degree_graph=st.g, built_at=st.t, built_from_gap_at=st.t)
    st.r = st.t
    st.r_prime = st.t
    st.n_r = st.g.n
    st.event_log.clear()
    final = partition.order_by_volume(st.g)
    labels = final.labels()
    return QueryResult(
        partition=final,
        branch="slow",
        ell=chosen,
        eigensolve_dim=st.sp.h.n,
        label_lookup=lambda v: labels[v],
    )
