"""
Site percolation on supercritical maps through boundary-only explorations.

The root-cluster walk peels at the white/black edge next to the black root segment;
the interface walk peels at the junction of a white and a black segment and refills
a segment with revealed colours once it is swallowed whole.
"""
import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np
from networkx.utils import UnionFind

from app.engine.half_plane_map import HalfPlaneMap
from app.engine.hull_explorer import explore, hull_at
from app.engine.step_sampler import sample_steps
from app.engine.streams import COLORS, RngStream
from app.errors import DomainError
from app.models import (
    ExploreMode,
    InterfaceDensity,
    ModelParams,
    PercFrontier,
    PercOutcome,
    PercolationComparison,
    SurvivalEstimate,
    ThresholdEstimate,
)

logger = logging.getLogger(__name__)

BLOCK = 256
_OUTCOMES = [PercOutcome.BLACK_DIED, PercOutcome.WHITE_DIED,
             PercOutcome.BOTH_EXCEEDED_CAP, PercOutcome.CAP_STEPS]
_UNDECIDED = -1


def _check_perc(params: ModelParams, p: Optional[float] = None) -> None:
    if not params.is_supercritical:
        raise DomainError(
            f"percolation is studied for supercritical alpha only (p_c = 1 below 2/3), got {params.alpha}")
    if p is not None and not (0.0 <= p <= 1.0):
        raise DomainError(f"p must be a probability, got {p}")


def increment_sample(params: ModelParams, p: float, rng: RngStream, size: int,
                     i_max: Optional[int] = None) -> np.ndarray:
    """
    i.i.d. copies of the black increment: +1 on an alpha step revealing black,
    -i on (R, i), 0 otherwise.
    """
    _check_perc(params, p)
    batch = sample_steps(params, rng, size, i_max=i_max, holes=False)
    black = rng.random(size) < p
    return np.where(batch.i == 0, black.astype(np.int64), np.where(batch.right, -batch.i, 0))


def root_cluster_walks(params: ModelParams, p: float, rng: RngStream, trials: int, cap: int,
                       max_blocks: int = 10_000, i_max: Optional[int] = None) -> np.ndarray:
    """
    Survival flags of `trials` independent root-cluster walks started at B_0 = 1.

    Draws are made in blocks of BLOCK steps for every trial whether or not it is
    still running, so two calls with the same stream see the same steps and colour
    uniforms and survival is monotone in p path by path.
    """
    _check_perc(params, p)
    if cap < 1 or trials < 1:
        raise DomainError("cap and trials must be positive")
    level = np.ones(trials, dtype=np.int64)
    state = np.full(trials, _UNDECIDED, dtype=np.int64)  # 0 died, 1 survived
    for _ in range(max_blocks):
        batch = sample_steps(params, rng, trials * BLOCK, i_max=i_max, holes=False)
        black = rng.random(trials * BLOCK) < p
        inc = np.where(batch.i == 0, black.astype(np.int64), np.where(batch.right, -batch.i, 0))
        path = level[:, None] + np.cumsum(inc.reshape(trials, BLOCK), axis=1)
        open_ = state == _UNDECIDED
        died = path <= 0
        hit = path >= cap
        first_die = np.where(died.any(axis=1), died.argmax(axis=1), BLOCK)
        first_hit = np.where(hit.any(axis=1), hit.argmax(axis=1), BLOCK)
        state[open_ & (first_die < first_hit)] = 0
        state[open_ & (first_hit < first_die)] = 1
        level = np.where(open_, path[:, -1], level)
        if not (state == _UNDECIDED).any():
            break
    else:
        logger.warning("%d of %d root-cluster walks undecided after %d blocks; counted as died",
                       int((state == _UNDECIDED).sum()), trials, max_blocks)
    return state == 1


def root_cluster_walk(params: ModelParams, p: float, rng: RngStream, cap: int,
                      i_max: Optional[int] = None) -> Tuple[bool, int]:
    """
    One root-cluster walk.

    Returns:
        (survived, steps) where survived means the black segment reached cap
    """
    _check_perc(params, p)
    level, steps = 1, 0
    while 0 < level < cap:
        batch = sample_steps(params, rng, BLOCK, i_max=i_max, holes=False)
        black = rng.random(BLOCK) < p
        for i, right, b in zip(batch.i.tolist(), batch.right.tolist(), black.tolist()):
            level += int(b) if i == 0 else (-i if right else 0)
            steps += 1
            if level <= 0 or level >= cap:
                break
    return level >= cap, steps


def survival_curve(params: ModelParams, ps: Sequence[float], rng: RngStream,
                   trials: int, cap: int, i_max: Optional[int] = None) -> List[SurvivalEstimate]:
    """Root-cluster survival over a grid of p with common random numbers"""
    out = []
    for p in ps:
        survived = root_cluster_walks(params, p, rng.child(0), trials, cap, i_max=i_max)
        out.append(SurvivalEstimate(p=p, trials=trials, survived=int(survived.sum()), cap=cap))
    return out


def _bisect(survival, lo: float, hi: float, threshold: float, tol: float,
            increasing: bool) -> Tuple[float, float, List[SurvivalEstimate]]:
    history = []
    while hi - lo > 2.0 * tol:
        mid = 0.5 * (lo + hi)
        est = survival(mid)
        history.append(est)
        above = est.frequency > threshold
        if above == increasing:
            hi = mid
        else:
            lo = mid
    return lo, hi, history


def estimate_pc(params: ModelParams, rng: RngStream, trials: int, cap: int,
                threshold: float = 0.02, tol: float = 0.005,
                i_max: Optional[int] = None) -> ThresholdEstimate:
    """
    Bisection on p for the point where root-cluster survival crosses `threshold`.

    Args:
        params: supercritical parameters
        rng: stream; every bisection step reuses the same child so survival is monotone in p
        trials: walks per evaluation
        cap: survival level
        threshold: survival frequency defining the crossing
        tol: half-width of the final bracket
    """
    _check_perc(params)

    def survival(p: float) -> SurvivalEstimate:
        ok = root_cluster_walks(params, p, rng.child(0), trials, cap, i_max=i_max)
        return SurvivalEstimate(p=p, trials=trials, survived=int(ok.sum()), cap=cap)

    lo, hi, history = _bisect(survival, 0.0, 1.0, threshold, tol, increasing=True)
    return _threshold(lo, hi, threshold, trials, history)


def estimate_pu(params: ModelParams, rng: RngStream, trials: int, cap: int,
                threshold: float = 0.02, tol: float = 0.005,
                i_max: Optional[int] = None) -> ThresholdEstimate:
    """Uniqueness threshold from the white root-cluster walk (colour swap p -> 1 - p)"""
    _check_perc(params)

    def white_survival(p: float) -> SurvivalEstimate:
        ok = root_cluster_walks(params, 1.0 - p, rng.child(1), trials, cap, i_max=i_max)
        return SurvivalEstimate(p=p, trials=trials, survived=int(ok.sum()), cap=cap)

    lo, hi, history = _bisect(white_survival, 0.0, 1.0, threshold, tol, increasing=False)
    return _threshold(lo, hi, threshold, trials, history)


def _threshold(lo: float, hi: float, threshold: float, trials: int,
               history: List[SurvivalEstimate]) -> ThresholdEstimate:
    # binomial error on the threshold frequency, read through the local slope of the curve
    spread = np.sqrt(threshold * (1.0 - threshold) / trials)
    slopes = [abs(b.frequency - a.frequency) / abs(b.p - a.p)
              for a, b in zip(history, history[1:]) if b.p != a.p and b.frequency != a.frequency]
    mc = spread / max(slopes) if slopes else 0.0
    return ThresholdEstimate(estimate=0.5 * (lo + hi), stderr=max(0.5 * (hi - lo), mc),
                             bracket=(lo, hi), threshold_frequency=threshold, history=history)


def interface_walks(params: ModelParams, p: float, rng: RngStream, trials: int, cap: int,
                    max_steps: Optional[int] = None, i_max: Optional[int] = None) -> List[PercFrontier]:
    """
    Independent interface explorations from a white root vertex with a black right neighbour.

    Every step peels the white/black junction. A free apex has its colour revealed. A
    swallow that covers the whole black (white) segment with a white (black) apex closes
    the interface; the segment is then refilled with a geometric number of revealed
    vertices and the state is reported. An interface whose two segments both exceed
    cap is declared infinite.
    """
    _check_perc(params, p)
    max_steps = max_steps if max_steps is not None else 1000 * cap
    white = np.ones(trials, dtype=np.int64)
    black = np.ones(trials, dtype=np.int64)
    steps = np.zeros(trials, dtype=np.int64)
    outcome = np.full(trials, _UNDECIDED, dtype=np.int64)
    while True:
        act = np.flatnonzero(outcome == _UNDECIDED)
        if act.size == 0:
            break
        n = act.size
        batch = sample_steps(params, rng, n, i_max=i_max, holes=False)
        colour_black = rng.random(n) < p
        w, b = white[act], black[act]
        i, right = batch.i, batch.right
        alpha = i == 0
        b = b + (alpha & colour_black)
        w = w + (alpha & ~colour_black)

        r_swallow = ~alpha & right
        inside = r_swallow & (i < b)
        b = np.where(inside, b - i, b)
        across = r_swallow & ~inside
        b = np.where(across, 1, b)
        close_black = across & ~colour_black

        l_swallow = ~alpha & ~right
        inside = l_swallow & (i < w)
        w = np.where(inside, w - i, w)
        across = l_swallow & ~inside
        w = np.where(across, 1, w)
        close_white = across & colour_black

        if close_black.any():
            # whites revealed right of the apex before the first black
            w = w + close_black * (1 + (rng.geometric(p, n) - 1 if p > 0 else 0))
        if close_white.any():
            b = b + close_white * (1 + (rng.geometric(1.0 - p, n) - 1 if p < 1 else 0))

        white[act], black[act] = w, b
        steps[act] += 1
        res = np.full(n, _UNDECIDED, dtype=np.int64)
        res[(np.minimum(w, b) > cap)] = 2
        res[steps[act] >= max_steps] = 3
        res[close_white] = 1
        res[close_black] = 0
        outcome[act] = res

    return [PercFrontier(black_len=int(black[t]), white_len=int(white[t]), p=p,
                         step_count=int(steps[t]), outcome=_OUTCOMES[outcome[t]])
            for t in range(trials)]


def interface_walk(params: ModelParams, p: float, rng: RngStream, cap: int,
                   max_steps: Optional[int] = None, i_max: Optional[int] = None) -> PercFrontier:
    """One interface exploration; `infinite` on the result means both segments exceeded cap"""
    return interface_walks(params, p, rng, 1, cap, max_steps=max_steps, i_max=i_max)[0]


def _infinite_frequency(params: ModelParams, p: float, rng: RngStream, trials: int, cap: int,
                        i_max: Optional[int]) -> np.ndarray:
    """
    Root-edge interface indicator under i.i.d. boundary colours: 1 when the root edge is
    bichromatic and its interface is infinite. A black-left edge is the colour swap.
    """
    u = rng.random((trials, 2)) < p  # (left black, right black)
    wb = ~u[:, 0] & u[:, 1]
    bw = u[:, 0] & ~u[:, 1]
    hits = np.zeros(trials, dtype=bool)
    if wb.any():
        runs = interface_walks(params, p, rng.child(0), int(wb.sum()), cap, i_max=i_max)
        hits[wb] = [f.infinite for f in runs]
    if bw.any():
        runs = interface_walks(params, 1.0 - p, rng.child(1), int(bw.sum()), cap, i_max=i_max)
        hits[bw] = [f.infinite for f in runs]
    return hits


def _infinite_clusters(left_black: List[bool], first_black: bool) -> Tuple[int, int]:
    """
    (W, B) infinite clusters of a stretch whose infinite interfaces, in boundary order,
    have the given left colours. Clusters alternate starting from the left colour of the
    first interface; with no infinite interface the stretch sits in one cluster.
    """
    black = left_black[0] if left_black else first_black
    n = len(left_black) + 1
    first = (n + 1) // 2
    return (n - first, first) if black else (first, n - first)


def interface_density(params: ModelParams, p: float, rng: RngStream, k: int, replicas: int,
                      cap: int = 1000, i_max: Optional[int] = None) -> InterfaceDensity:
    """
    Two estimators of the density rho of infinite clusters along the boundary.

    (a) rho_hat = P(root-edge interface infinite) / 2 over `replicas * k` root edges.
    (b) E_k / (2k): along `replicas` boundary stretches of k edges with i.i.d. colours an
        interface walk is launched at every bichromatic edge and the E_k interfaces
        declared infinite are counted. They cut the stretch into E_k + 1 infinite clusters
        of alternating colour, so W_k + B_k = E_k + 1 and |W_k - B_k| <= 1.
        Neighbouring infinite interfaces with the same orientation cannot both be
        infinite; they are counted as orientation conflicts (the cap is too small).
    """
    _check_perc(params, p)
    if k < 1 or replicas < 1:
        raise DomainError("k and replicas must be positive")
    if not (params.p_c < p < params.p_u):
        logger.warning("p=%.4g outside the coexistence window (%.4g, %.4g): densities are near 0",
                       p, params.p_c, params.p_u)

    hits = _infinite_frequency(params, p, rng.child(0), replicas * k, cap, i_max)
    freq = float(hits.mean())
    rho_hat = freq / 2.0
    rho_se = max(np.sqrt(freq * (1.0 - freq) / hits.size), 1.0 / hits.size) / 2.0

    stretch = rng.child(1)
    ek, wk, bk, gap, conflicts = [], [], [], 0, 0
    for rep in range(replicas):
        s = stretch.child(rep)
        colours = s.random(k + 1) < p
        left, right_ = colours[:-1], colours[1:]
        wb = np.flatnonzero(~left & right_)
        bw = np.flatnonzero(left & ~right_)
        # edge -> whether the interface has black on its left
        infinite = {}
        if wb.size:
            for e, f in zip(wb, interface_walks(params, p, s.child(0), wb.size, cap, i_max=i_max)):
                if f.infinite:
                    infinite[int(e)] = False
        if bw.size:
            for e, f in zip(bw, interface_walks(params, 1.0 - p, s.child(1), bw.size, cap, i_max=i_max)):
                if f.infinite:
                    infinite[int(e)] = True
        left_black = [infinite[e] for e in sorted(infinite)]
        conflicts += sum(a == b for a, b in zip(left_black, left_black[1:]))
        w_inf, b_inf = _infinite_clusters(left_black, bool(colours[0]))
        ek.append(len(left_black))
        wk.append(w_inf)
        bk.append(b_inf)
        gap = max(gap, abs(w_inf - b_inf))
    if conflicts:
        logger.warning("%d neighbouring infinite interfaces share an orientation at cap=%d", conflicts, cap)

    ek = np.asarray(ek, dtype=float) / k
    ek_se = float(ek.std(ddof=1) / np.sqrt(replicas)) if replicas > 1 else float(np.sqrt(ek.mean() / k))
    return InterfaceDensity(
        rho_hat=rho_hat,
        rho_stderr=float(rho_se),
        ek_over_k=float(ek.mean()),
        ek_stderr=ek_se,
        rho_from_ek=float(ek.mean()) / 2.0,
        rho_ek_stderr=ek_se / 2.0,
        wk_inf_over_k=float(np.mean(wk)) / k,
        bk_inf_over_k=float(np.mean(bk)) / k,
        max_wb_gap=gap,
        orientation_conflicts=conflicts,
    )


def root_cluster_reaches(hmap: HalfPlaneMap, vertices, boundary, ps: Sequence[float],
                         uniforms: dict) -> List[bool]:
    """
    For each p, whether the black cluster of the (black) root vertex inside `vertices`
    meets `boundary`. Vertex v is black when uniforms[v] < p.
    """
    adjacency = hmap.adjacency()
    out = []
    for p in ps:
        black = {v for v in vertices if v == 0 or uniforms[v] < p}
        clusters = UnionFind(black)
        for v in black:
            for w in adjacency.get(v, ()):
                if w in black:
                    clusters.union(v, w)
        root = clusters[0]
        out.append(any(clusters[v] == root for v in boundary if v in black))
    return out


def _crossing(ps: Sequence[float], values: Sequence[float], level: float = 0.5) -> Optional[float]:
    for (p0, v0), (p1, v1) in zip(zip(ps, values), zip(ps[1:], values[1:])):
        if v0 < level <= v1:
            return p0 + (level - v0) * (p1 - p0) / (v1 - v0)
    return None


def full_map_percolation_check(params: ModelParams, ps: Sequence[float], rng: RngStream, R: int,
                               replicas: int, trials: int = 2000, i_max: Optional[int] = None,
                               max_steps: Optional[int] = None,
                               max_vertices: Optional[int] = None) -> PercolationComparison:
    """
    Colour the vertices of built hulls of radius R and compare the frequency with which
    the black root cluster reaches the hull boundary against root-cluster walk survival.
    The walk cap is the median hull boundary length.
    """
    _check_perc(params)
    ps = sorted(float(p) for p in ps)
    reach_counts = np.zeros(len(ps))
    lengths, used, truncated = [], 0, 0
    for rep in range(replicas):
        stream = rng.child(rep)
        trace, hmap = explore(params, R, stream, ExploreMode.WITH_GEOMETRY, i_max=i_max,
                              max_steps=max_steps, max_vertices=max_vertices)
        if trace.truncated:
            truncated += 1
            continue
        hull = hull_at(trace, hmap, R)
        boundary = hmap.frontier_segment()
        colours = stream.child(COLORS)
        order = sorted(hull.vertices)
        uniforms = dict(zip(order, colours.random(len(order)).tolist()))
        reach_counts += root_cluster_reaches(hmap, hull.vertices, boundary, ps, uniforms)
        lengths.append(trace.boundary_len[R])
        used += 1
    if truncated:
        logger.warning("%d of %d replicas hit a resource cap at R=%d and were skipped",
                       truncated, replicas, R)
    if used == 0:
        return PercolationComparison(ps=ps, reach=[], walk_survival=[], truncated_replicas=truncated)
    reach = (reach_counts / used).tolist()
    cap = max(2, int(np.median(lengths)))
    walk = [s.frequency for s in survival_curve(params, ps, rng.child(replicas), trials, cap, i_max=i_max)]
    return PercolationComparison(ps=ps, reach=reach, walk_survival=walk,
                                 reach_crossing=_crossing(ps, reach), walk_crossing=_crossing(ps, walk),
                                 truncated_replicas=truncated)
