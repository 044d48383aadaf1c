"""
Radius-by-radius hull exploration.

At every step the explorer peels the frontier edge immediately right of the leftmost
vertex of the previous hull boundary still on the frontier; once none is left, the hull
of the next radius has been revealed. Stats mode only tracks counts; geometry mode also
builds the map, driven by the same event stream.
"""
import logging
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np

from app.config import get_settings
from app.engine.half_plane_map import ROOT, HalfPlaneMap, HullSets
from app.engine.step_sampler import sample_steps
from app.engine.streams import EVENTS, GEOMETRY, RngStream
from app.errors import DomainError, MapConsistencyError, ResourceCapExceeded
from app.models import (
    ExploreMode,
    FitMethod,
    FitResult,
    HullTrace,
    ModelParams,
    PeelEvent,
    Regime,
    Side,
)
from app.tools.analytic_tools import stable_normalizers
from app.tools.fit_tools import slope_fit

logger = logging.getLogger(__name__)

BATCH = 4096


class HullExplorer:
    """
    One exploration. The frontier part of the region is tracked as counts:
    A (left of the peel vertex v), v itself, B (non-markers right of v) and C
    (the block of remaining boundary markers at the right end).
    """

    def __init__(self, params: ModelParams, rng: RngStream,
                 mode: ExploreMode = ExploreMode.STATS_ONLY,
                 i_max: Optional[int] = None,
                 max_steps: Optional[int] = None,
                 max_vertices: Optional[int] = None,
                 record_series: bool = False):
        settings = get_settings()
        self.params = params
        self.seed = rng.seed
        self.events = rng.child(EVENTS)
        self.geometry_rng = rng.child(GEOMETRY)
        self.i_max = i_max
        self.max_steps = max_steps if max_steps is not None else settings.max_steps
        self.max_vertices = max_vertices if max_vertices is not None else settings.max_vertices
        self.record_series = record_series

        self.n = 0
        self.x = 1
        self.volume = 1
        self.swallowed = 0
        self.a = self.b = self.c = 0
        self.cuts = 0
        self.truncated_steps = 0

        self.tau = [0]
        self.boundary_len = [1]
        self.volumes = [1]
        self.cut_edges = [0]
        self.x_series = [1] if record_series else None
        self.v_series = [1] if record_series else None
        self.s_series = [0] if record_series else None

        self.hmap: Optional[HalfPlaneMap] = None
        if mode == ExploreMode.WITH_GEOMETRY:
            self.hmap = HalfPlaneMap(params.theta)
            self.peel_at = ROOT
            self.markers = {ROOT}
            self.c_first: Optional[int] = None

    def _draws(self) -> Iterator[Tuple[int, bool, int, bool]]:
        while True:
            batch = sample_steps(self.params, self.events, BATCH, i_max=self.i_max)
            yield from zip(batch.i.tolist(), batch.right.tolist(),
                           batch.holes.tolist(), batch.truncated.tolist())

    def _advance(self, i: int, right: bool, k: int) -> bool:
        """Update the counts for one event; True when the current phase ends"""
        t = self.b + self.c
        if i == 0:
            # on the segment's right end the peeled edge's far vertex joins too
            grow = 2 if t == 0 else 1
            self.b += grow
            self.x += grow
            self.volume += grow
            return False

        self.volume += k
        self.swallowed += i + k
        if right:
            if i < t:
                taken = min(i, self.b)
                self.b -= taken
                self.c -= i - taken
                self.x -= i
            else:
                self.b, self.c = 1, 0
                self.x += 1 - t
                self.volume += i - t + 1
            return False

        if t == 0:
            self.x += 1
            self.volume += 1
        if i <= self.a:
            self.a -= i - 1
            self.x -= i
        else:
            self.volume += i - self.a
            self.x -= self.a
            self.a = 1
        self.a += self.b
        self.b = 0
        if self.c > 0:
            self.c -= 1
            return False
        return True

    def _advance_map(self, i: int, right: bool, k: int, truncated: bool) -> None:
        hmap = self.hmap
        at = self.peel_at
        if i == 0:
            hmap.apply_step(at, PeelEvent.alpha_step(), self.geometry_rng)
            return
        side = Side.RIGHT if right else Side.LEFT
        hmap.apply_step(at, PeelEvent.swallow(side, i, k, truncated), self.geometry_rng)
        if right:
            if self.c_first is not None and not hmap.on_frontier(self.c_first):
                apex = hmap.right[at]
                self.c_first = apex if apex in self.markers else None
            return
        if self.c_first is not None:
            self.peel_at = self.c_first
            nxt = hmap.right.get(self.peel_at)
            self.c_first = nxt if nxt in self.markers else None

    def _new_phase(self) -> None:
        self.a = self.b = 0
        self.c = self.x - 1
        self.tau.append(self.n)
        self.boundary_len.append(self.x)
        self.volumes.append(self.volume)
        self.cut_edges.append(self.cuts)
        if self.hmap is not None:
            segment = self.hmap.frontier_segment()
            if len(segment) != self.x or self.hmap.volume != self.volume:
                raise MapConsistencyError(
                    f"step {self.n}: map has {len(segment)} frontier / {self.hmap.volume} vertices, "
                    f"counts say {self.x} / {self.volume}")
            self.markers = set(segment)
            self.peel_at = segment[0]
            self.c_first = segment[1] if len(segment) > 1 else None

    def step(self, i: int, right: bool, k: int, truncated: bool) -> bool:
        if self.hmap is not None:
            self._advance_map(i, right, k, truncated)
        done = self._advance(i, right, k)
        self.n += 1
        if truncated:
            self.truncated_steps += 1
        if self.volume != self.swallowed + self.x:
            raise MapConsistencyError(
                f"step {self.n}: V={self.volume} != S={self.swallowed} + X={self.x}")
        if self.x > self.n + 2:
            raise MapConsistencyError(f"step {self.n}: X={self.x} exceeds n + 2")
        if self.x == 2:
            self.cuts += 1
            if self.hmap is not None:
                seg_left = self.hmap.seg_left
                edge = self.hmap.edges.find(self.hmap.edge_right[seg_left])
                self.hmap.cuts.append((self.n, self.hmap.edge_ends[edge]))
        if self.record_series:
            self.x_series.append(self.x)
            self.v_series.append(self.volume)
            self.s_series.append(self.swallowed)
        if done:
            self._new_phase()
        if self.n >= self.max_steps or self.volume >= self.max_vertices:
            raise ResourceCapExceeded(
                f"cap hit after {self.n} steps with {self.volume} vertices",
                steps=self.n, vertices=self.volume)
        return done

    def run(self, radius: int) -> HullTrace:
        """Explore until the hull of the given radius is revealed or a cap is hit"""
        if radius < 1:
            raise DomainError(f"radius must be >= 1, got {radius}")
        truncated = False
        try:
            draws = self._draws()
            while len(self.tau) <= radius:
                self.step(*next(draws))
        except ResourceCapExceeded as exc:
            truncated = len(self.tau) <= radius
            if truncated:
                logger.warning("exploration (alpha=%.4g, seed=%d) stopped at radius %d: %s",
                               self.params.alpha, self.seed, len(self.tau) - 1, exc)
        return HullTrace(
            alpha=self.params.alpha,
            seed=self.seed,
            tau=self.tau,
            boundary_len=self.boundary_len,
            volume=self.volumes,
            cut_edges=self.cut_edges,
            truncated=truncated,
            truncated_steps=self.truncated_steps,
            x_series=self.x_series,
            v_series=self.v_series,
            s_series=self.s_series,
        )


def explore(params: ModelParams, R: int, rng: RngStream,
            mode: ExploreMode = ExploreMode.STATS_ONLY,
            i_max: Optional[int] = None,
            max_steps: Optional[int] = None,
            max_vertices: Optional[int] = None,
            record_series: bool = False) -> Tuple[HullTrace, Optional[HalfPlaneMap]]:
    """
    Reveal the hulls of radius 1..R around the root vertex.

    Args:
        params: model parameters
        R: final radius
        rng: replica stream; events and hole geometry use separate children
        mode: stats_only (counts) or with_geometry (also builds the map)
        i_max: swallow-length cap for the step sampler
        max_steps / max_vertices: resource caps (settings defaults)
        record_series: keep X_n, V_n and S_n for every step

    Returns:
        (trace, map) where map is None in stats_only mode. A trace cut short by a
        cap has truncated=True and fewer than R + 1 radii.
    """
    explorer = HullExplorer(params, rng, mode, i_max=i_max, max_steps=max_steps,
                            max_vertices=max_vertices, record_series=record_series)
    trace = explorer.run(R)
    return trace, explorer.hmap


def hull_at(trace: HullTrace, hmap: HalfPlaneMap, r: int) -> HullSets:
    """Vertices and faces of the hull of radius r from a geometry-mode exploration"""
    if not 0 <= r <= trace.radius:
        raise DomainError(f"radius {r} not explored (trace reaches {trace.radius})")
    return hmap.snapshot(trace.tau[r])


def resistance_lower_bound(trace: HullTrace) -> List[float]:
    """
    Nash-Williams partial sums over the annuli between consecutive hulls.

    Entry j (j = 0..R-1) is sum_{r=0}^{j} 1 / (2 delta_tau_r), the bound for radius j + 1;
    radius 0 has no annulus, so a per-radius table starts with 0.0.
    """
    return np.cumsum([0.5 / d for d in trace.delta_tau]).tolist()


def stationary_gamma(params: ModelParams, replicas: int, R: int, rng: RngStream,
                     i_max: Optional[int] = None) -> float:
    """
    Estimate gamma = lim tau_R / R by averaging (tau_R - tau_{R/2}) / (R - R/2) over replicas.
    """
    if params.regime != Regime.SUBCRITICAL:
        raise DomainError(f"gamma is estimated for subcritical alpha only, got {params.alpha}")
    if R < 2 or replicas < 1:
        raise DomainError("need R >= 2 and at least one replica")
    traces = [explore(params, R, rng.child(j), i_max=i_max)[0] for j in range(replicas)]
    return gamma_from_traces(traces, R)


def gamma_from_traces(traces: Sequence[HullTrace], R: int) -> float:
    """Mean of (tau_R - tau_{R/2}) / (R - R/2) over the traces that reached radius R"""
    if R < 2:
        raise DomainError(f"need R >= 2, got {R}")
    burn = R // 2
    rates = [(t.tau[R] - t.tau[burn]) / (R - burn) for t in traces if t.radius >= R]
    if not rates:
        raise ResourceCapExceeded("every replica hit a resource cap")
    return float(np.mean(rates))


def boundary_growth_rate(trace: HullTrace) -> FitResult:
    """Least-squares slope of X_n against n"""
    if trace.x_series is None:
        raise DomainError("trace has no per-step series; explore with record_series=True")
    x = np.asarray(trace.x_series, dtype=float)
    return slope_fit(np.arange(x.size), x, FitMethod.LINEAR)


def volume_growth_rate(traces: Sequence[HullTrace],
                       window: Optional[Tuple[int, int]] = None) -> FitResult:
    """Slope of the mean of log|B_r| against r over the radii every trace reached"""
    if not traces:
        raise DomainError("no traces")
    reach = min(t.radius for t in traces)
    lo, hi = window or (1, reach)
    hi = min(hi, reach)
    radii = np.arange(lo, hi + 1)
    logs = np.log([[t.volume[r] for r in radii] for t in traces]).mean(axis=0)
    return slope_fit(radii, logs, FitMethod.LOG_LINEAR, (float(lo), float(hi)))


def cut_edge_steps(trace: HullTrace) -> List[int]:
    """Steps n >= 1 at which the revealed region had a single frontier edge"""
    if trace.x_series is None:
        raise DomainError("trace has no per-step series; explore with record_series=True")
    return [n for n, x in enumerate(trace.x_series) if n >= 1 and x == 2]


def volume_scaling_samples(traces: Sequence[HullTrace], r: int) -> np.ndarray:
    """|B_r| / r^2 over the traces that reached radius r"""
    return np.array([t.volume[r] / r ** 2 for t in traces if t.radius >= r], dtype=float)


def swallowed_volume_samples(traces: Sequence[HullTrace], n: int) -> np.ndarray:
    """S_n / (c_alpha^2 n^2) over the traces whose per-step series reaches step n"""
    if n < 1:
        raise DomainError(f"n must be positive, got {n}")
    reached = [t for t in traces if t.s_series is not None and len(t.s_series) > n]
    if not reached:
        raise DomainError(f"no trace has a per-step series reaching step {n}")
    _, a_n, _ = stable_normalizers(reached[0].alpha, n)
    return np.array([t.s_series[n] for t in reached], dtype=float) / a_n
