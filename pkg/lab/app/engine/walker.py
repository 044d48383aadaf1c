"""
Simple random walks on revealed maps.

Walks start at the root vertex and pick a uniform incident edge at every step, so a
neighbour joined by a double edge is twice as likely. The frontier either absorbs the
walk (statistics are censored at the first hit) or is treated as ordinary vertices.
"""
import logging
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from app.engine.half_plane_map import ROOT, HalfPlaneMap
from app.engine.streams import RngStream
from app.errors import DomainError, MapConsistencyError
from app.models import BoundaryMode, FitMethod, FitResult, WalkRecord
from app.tools.fit_tools import slope_fit

logger = logging.getLogger(__name__)


class WalkGraph:
    """CSR adjacency of a revealed map with edge multiplicities as weights"""

    def __init__(self, hmap: HalfPlaneMap):
        edges = list(hmap.region_edges().values())
        if not edges:
            raise MapConsistencyError("the walk starts off-map: the root has no revealed edges")
        ids = sorted({v for e in edges for v in e})
        index = {v: j for j, v in enumerate(ids)}
        a = np.array([index[u] for u, _ in edges])
        b = np.array([index[v] for _, v in edges])
        n = len(ids)
        matrix = sparse.csr_matrix((np.ones(2 * a.size), (np.concatenate((a, b)), np.concatenate((b, a)))),
                                   shape=(n, n))
        matrix.sum_duplicates()
        self.ids = np.asarray(ids)
        self.index = index
        self.indptr = matrix.indptr
        self.indices = matrix.indices
        self.weights = matrix.data
        self.cumweights = np.cumsum(matrix.data)
        self.degree = np.asarray(matrix.sum(axis=1)).ravel()
        self.root = index[ROOT]
        self.frontier = np.zeros(n, dtype=bool)
        for v in hmap.frontier_segment():
            if v in index:
                self.frontier[index[v]] = True
        self.dist = csgraph.shortest_path(matrix, unweighted=True, indices=self.root).astype(np.int64)
        self.matrix = matrix

    @property
    def size(self) -> int:
        return self.ids.size

    def step(self, pos: np.ndarray, u: np.ndarray) -> np.ndarray:
        """One uniform-edge move for every walker in pos, driven by uniforms u"""
        start = self.indptr[pos]
        stop = self.indptr[pos + 1] - 1
        base = self.cumweights[start] - self.weights[start]
        k = np.searchsorted(self.cumweights, base + u * self.degree[pos], side="right")
        return self.indices[np.clip(k, start, stop)]


class WalkPaths(NamedTuple):
    positions: np.ndarray   # (steps + 1, walkers) compact vertex indices
    absorbed_at: np.ndarray  # first frontier visit at time >= 1, or steps + 1


def simulate(graph: WalkGraph, walkers: int, steps: int, rng: RngStream,
             mode: BoundaryMode = BoundaryMode.ABSORB) -> WalkPaths:
    """Run `walkers` independent walks from the root; absorbed walkers stay put"""
    if steps < 0 or walkers < 1:
        raise DomainError("need steps >= 0 and at least one walker")
    positions = np.empty((steps + 1, walkers), dtype=np.int64)
    positions[0] = graph.root
    absorbed_at = np.full(walkers, steps + 1, dtype=np.int64)
    pos = positions[0].copy()
    for t in range(1, steps + 1):
        moved = graph.step(pos, rng.random(walkers))
        if mode == BoundaryMode.ABSORB:
            alive = absorbed_at > t
            pos = np.where(alive, moved, pos)
            absorbed_at[alive & graph.frontier[pos]] = t
        else:
            hit = graph.frontier[moved] & (absorbed_at > steps)
            absorbed_at[hit] = t
            pos = moved
        positions[t] = pos
    return WalkPaths(positions, absorbed_at)


def dyadic_times(n: int) -> List[int]:
    out, t = [], 1
    while t <= n:
        out.append(t)
        t *= 2
    return out


def run_srw(hmap: HalfPlaneMap, steps: int, rng: RngStream,
            mode: BoundaryMode = BoundaryMode.ABSORB) -> WalkRecord:
    """
    One walk from the root.

    Args:
        hmap: revealed map with geometry
        steps: step cap
        rng: walk stream
        mode: ABSORB stops at the first frontier visit; REFLECT keeps walking

    Returns:
        WalkRecord with d(root, X_t) at dyadic times up to the steps actually taken
    """
    graph = WalkGraph(hmap)
    paths = simulate(graph, 1, steps, rng, mode)
    hit = int(paths.absorbed_at[0]) <= steps
    taken = int(paths.absorbed_at[0]) if hit and mode == BoundaryMode.ABSORB else steps
    track = paths.positions[:taken + 1, 0]
    times = dyadic_times(taken)
    return WalkRecord(
        seed=rng.seed,
        steps=taken,
        times=times,
        displacement=[int(graph.dist[track[t]]) for t in times],
        returns_to_root=int(np.count_nonzero(track[1:] == graph.root)),
        hit_frontier=hit,
    )


class ReturnSeries(NamedTuple):
    even_times: np.ndarray
    even: np.ndarray
    odd_times: np.ndarray
    odd: np.ndarray
    alive: np.ndarray  # walkers not yet absorbed at each time


def return_probability(hmap: HalfPlaneMap, n_max: int, walks: int, rng: RngStream,
                       mode: BoundaryMode = BoundaryMode.ABSORB) -> ReturnSeries:
    """
    Empirical P(X_t = root) for t <= n_max, even and odd times kept apart.
    Absorbed walks count as not at the root.
    """
    graph = WalkGraph(hmap)
    paths = simulate(graph, walks, n_max, rng, mode)
    t = np.arange(n_max + 1)
    alive = paths.absorbed_at[None, :] > t[:, None] if mode == BoundaryMode.ABSORB \
        else np.ones((n_max + 1, walks), dtype=bool)
    at_root = ((paths.positions == graph.root) & alive).mean(axis=1)
    return ReturnSeries(t[0::2], at_root[0::2], t[1::2], at_root[1::2], alive.sum(axis=1))


def return_slope(series: ReturnSeries, window: Optional[Tuple[int, int]] = None) -> FitResult:
    """Log-log slope of the even-time return probability p_2n against n"""
    n = series.even_times // 2
    p = series.even
    lo, hi = window or (1, int(n.max()))
    mask = (n >= lo) & (n <= hi) & (p > 0)
    return slope_fit(np.log(n[mask]), np.log(p[mask]), FitMethod.LOG_LOG, (float(lo), float(hi)))


def return_after_excursion(hmap: HalfPlaneMap, distance: int, walks: int, rng: RngStream,
                           max_steps: int = 100_000) -> Tuple[float, int]:
    """
    Among walks that reach graph distance `distance` before the frontier, the fraction
    that come back to the root before hitting the frontier.

    Returns:
        (fraction, number of walks that reached the distance)
    """
    if distance < 1:
        raise DomainError("distance must be >= 1")
    graph = WalkGraph(hmap)
    if graph.dist.max() < distance:
        raise DomainError(f"map has no vertex at distance {distance}")
    pos = np.full(walks, graph.root, dtype=np.int64)
    running = np.ones(walks, dtype=bool)
    reached = np.zeros(walks, dtype=bool)
    returned = np.zeros(walks, dtype=bool)
    for _ in range(max_steps):
        pos = np.where(running, graph.step(pos, rng.random(walks)), pos)
        running &= ~graph.frontier[pos]
        returned |= running & reached & (pos == graph.root)
        reached |= running & (graph.dist[pos] >= distance)
        running &= ~returned
        if not running.any():
            break
    count = int(reached.sum())
    if count == 0:
        logger.warning("no walk reached distance %d within %d steps", distance, max_steps)
        return 0.0, 0
    return float(returned.sum() / count), count


def displacement_profile(hmap: HalfPlaneMap, times: Sequence[int], walks: int, rng: RngStream,
                         mode: BoundaryMode = BoundaryMode.ABSORB) -> List[float]:
    """Median of d(root, X_n) n^{-2/3} over the walks still running at each time (nan if none)"""
    graph = WalkGraph(hmap)
    times = sorted(int(t) for t in times)
    paths = simulate(graph, walks, times[-1], rng, mode)
    out = []
    for n in times:
        if mode == BoundaryMode.ABSORB:
            keep = paths.absorbed_at > n
        else:
            keep = np.ones(walks, dtype=bool)
        if not keep.any():
            out.append(float("nan"))
            continue
        d = graph.dist[paths.positions[n, keep]]
        out.append(float(np.median(d) * n ** (-2.0 / 3.0)))
    return out
