"""Cluster-preserving sparsifier: static sampling build and streaming upkeep.

Each edge {u,v} is kept with probability q = p_u + p_v - p_u*p_v where
p_x = min(tau * log(n) / deg(x), 1), and a kept edge carries weight 1/q,
making cut weights unbiased.  The per-vertex value log(n)/deg in force
at the last sampling is stored (sp*); when an update pushes the live
ratio outside [sp*/2, 2*sp*] for some vertex, every edge at that vertex
is resampled with current parameters and sp* is reset.  The number of
(re)sampled edges stays O(1) amortized per insertion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .graph import DynamicGraph


class ModelViolationError(ValueError):
    """An insertion outside the streaming model (two brand-new endpoints)."""


def edge_probability(deg_u: float, deg_v: float, n: int, tau: float) -> tuple[float, float, float]:
    """Clamped per-endpoint probabilities and the inclusion-exclusion keep probability."""
    if deg_u <= 0 or deg_v <= 0:
        raise ValueError("endpoint degrees must be positive")
    if n < 2:
        raise ValueError("need n >= 2")
    if tau <= 0:
        raise ValueError("tau must be positive")
    logn = math.log(n)
    p_u = min(tau * logn / deg_u, 1.0)
    p_v = min(tau * logn / deg_v, 1.0)
    q = p_u + p_v - p_u * p_v
    return p_u, p_v, q


def sample_edge(
    e: tuple[int, int], g: DynamicGraph, tau: float, rng: np.random.Generator
) -> tuple[bool, float]:
    """Flip one coin for edge e at current degrees; weight 1/q when kept."""
    u, v = e
    _, _, q = edge_probability(g.deg[u], g.deg[v], g.n, tau)
    if q >= 1.0:
        return True, 1.0
    if rng.random() < q:
        return True, 1.0 / q
    return False, 0.0


@dataclass
class EdgeRecord:
    """Sampling parameters in force when an edge was last kept.

    param_a/param_b are the unclamped tau*log(n)/deg values for the
    lower/higher endpoint id; q is the clamped keep probability.
    """

    param_a: float
    param_b: float
    q: float
    forced: bool


@dataclass
class SparsifierState:
    h: DynamicGraph
    sp_star: list[float]
    tau: float
    rng: np.random.Generator
    resample_counter: int = 0
    edge_params: dict[tuple[int, int], EdgeRecord] = field(default_factory=dict)
    # log(n) level at which a full window sweep is due (log-drift can
    # push non-endpoint vertices out of window only once n squares)
    next_scan_logn: float = math.inf

    @property
    def n(self) -> int:
        return len(self.sp_star)


def _key(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u <= v else (v, u)


def _record_sample(
    state: SparsifierState,
    g: DynamicGraph,
    u: int,
    v: int,
    param_u: float,
    param_v: float,
) -> None:
    """One coin for {u,v} with the given unclamped parameters.

    Kept: H weight is set to w_G(u,v)/q (unbiased, also for accumulated
    parallel insertions).  Dropped: the edge leaves H.
    """
    p_u = min(param_u, 1.0)
    p_v = min(param_v, 1.0)
    q = p_u + p_v - p_u * p_v
    key = _key(u, v)
    state.resample_counter += 1
    kept = q >= 1.0 or state.rng.random() < q
    if kept:
        w = g.weight(u, v) / q
        state.h.set_edge_weight(u, v, w, allow_loop=u == v)
        a, b = (param_u, param_v) if u <= v else (param_v, param_u)
        state.edge_params[key] = EdgeRecord(a, b, q, forced=q >= 1.0)
    else:
        state.h.remove_edge(u, v)
        state.edge_params.pop(key, None)


def _current_param(state: SparsifierState, g: DynamicGraph, x: int, logn: float) -> float:
    return state.tau * logn / g.deg[x]


def _stored_param(state: SparsifierState, x: int) -> float:
    return state.tau * state.sp_star[x]


def _out_of_window(sp: float, logn: float, deg: float) -> bool:
    if deg <= 0:
        return False
    ratio = logn / deg
    return ratio > 2.0 * sp or ratio < sp / 2.0


def _rescan_threshold(state: SparsifierState, g: DynamicGraph) -> float:
    """Smallest log(n) at which pure log-growth could break some window."""
    out = math.inf
    for x, sp in enumerate(state.sp_star):
        if math.isfinite(sp) and g.deg[x] > 0:
            out = min(out, 2.0 * sp * g.deg[x])
    return out


def static_sparsifier(g: DynamicGraph, tau: float, seed: int = 0) -> SparsifierState:
    """Sample every edge of g once at current degrees; snapshot sp*."""
    if g.n < 2:
        raise ValueError("need at least two vertices")
    rng = np.random.default_rng(seed)
    h = DynamicGraph(g.n)
    logn = math.log(g.n)
    state = SparsifierState(h=h, sp_star=[0.0] * g.n, tau=tau, rng=rng)
    for x in range(g.n):
        state.sp_star[x] = logn / g.deg[x] if g.deg[x] > 0 else math.inf
    for u, v, _ in g.edges():
        _record_sample(state, g, u, v, _current_param(state, g, u, logn), _current_param(state, g, v, logn))
    state.next_scan_logn = _rescan_threshold(state, g)
    return state


def update_sparsifier(state: SparsifierState, g_next: DynamicGraph, e: tuple[int, int]) -> None:
    """Fold one edge insertion (already applied to g_next) into the sparsifier."""
    u, v = e
    n_prev = state.n
    new_vertices = [x for x in dict.fromkeys((u, v)) if x >= n_prev]
    if len(new_vertices) == 2:
        raise ModelViolationError(f"edge {e} introduces two new vertices")
    g = g_next
    n = g.n
    logn = math.log(n)
    state.h.ensure_vertex(n - 1)
    for x in range(n_prev, n):
        state.sp_star.append(logn / g.deg[x] if g.deg[x] > 0 else math.inf)

    doubled: set[int] = set()
    for x in (u, v):
        if x < n_prev and _out_of_window(state.sp_star[x], logn, g.deg[x]):
            doubled.add(x)
    if logn >= state.next_scan_logn:
        for x in range(n_prev):
            if x not in new_vertices and _out_of_window(state.sp_star[x], logn, g.deg[x]):
                doubled.add(x)

    sampled: set[tuple[int, int]] = set()
    if new_vertices:
        # fresh vertex: sample the arriving edge at current degrees
        _record_sample(state, g, u, v, _current_param(state, g, u, logn), _current_param(state, g, v, logn))
        sampled.add(_key(u, v))

    for x in sorted(doubled):
        for y in list(state.h.adj[x]):
            state.h.remove_edge(x, y)
            state.edge_params.pop(_key(x, y), None)
        for y in list(g.adj[x]):
            key = _key(x, y)
            if key in sampled:
                continue
            _record_sample(state, g, x, y, _current_param(state, g, x, logn), _current_param(state, g, y, logn))
            sampled.add(key)
        state.sp_star[x] = logn / g.deg[x]

    if _key(u, v) not in sampled:
        # steady-state path: one coin using the stored per-vertex parameters
        _record_sample(state, g, u, v, _stored_param(state, u), _stored_param(state, v))

    if logn >= state.next_scan_logn:
        state.next_scan_logn = _rescan_threshold(state, g)
    if doubled or new_vertices:
        # a freshly reset sp* breaks by pure log growth once log(n) doubles
        state.next_scan_logn = min(state.next_scan_logn, 2.0 * logn)
