"""
Exact samplers for peeling events, free-triangulation internal counts and W = Y + I_{Y+1}.
"""
import bisect
import logging
import math
from functools import lru_cache
from typing import Dict, List, NamedTuple, Optional, Tuple

import numpy as np

from app.config import get_settings
from app.engine.streams import RngStream
from app.errors import DomainError
from app.models import ModelParams, PeelEvent, Regime, Side
from app.tools.analytic_tools import (
    THETA_MAX,
    free_moments,
    log_free_pmf,
    log_partition_Z,
    log_step_probs,
    q_of_theta,
    tail_residual,
)

logger = logging.getLogger(__name__)

TABLE_MAX_M = 256       # polygon sizes whose count CDF is cached
PEEL_MAX_M = 64         # scalar draws up to this size use polygon peeling
_LOG_PMF_FLOOR = math.log(1e-20)
_CHUNK = 4096
CRITICAL_MAX_N = 1 << 22  # count-table length cap at theta = 1/6


class StepBatch(NamedTuple):
    """Parallel arrays of peeling outcomes; i == 0 marks an alpha step"""
    i: np.ndarray
    right: np.ndarray
    holes: np.ndarray
    truncated: np.ndarray

    @property
    def delta_tilde(self) -> np.ndarray:
        return np.where(self.i == 0, 1, -self.i)


def _is_critical_theta(theta: float) -> bool:
    return math.isclose(theta, THETA_MAX, rel_tol=0.0, abs_tol=1e-15)


def _check_hole_theta(theta: float) -> float:
    theta = float(theta)
    if not (0.0 <= theta <= THETA_MAX + 1e-15):
        raise DomainError(f"free counts are sampled only for theta in [0, 1/6], got {theta}")
    return min(theta, THETA_MAX)


def _check_peel_theta(theta: float) -> float:
    theta = _check_hole_theta(theta)
    if _is_critical_theta(theta):
        raise DomainError(
            "polygon peeling needs theta < 1/6: the recursion is not guaranteed to terminate; "
            "use method='direct'"
        )
    return theta


class PolygonPeeler:
    """
    Recursive polygon peeling for one theta.

    From an m-gon the root edge sees an internal apex with probability q Z_{m+1} / Z_m
    or splits the polygon into a (d+1)-gon and an (m-d)-gon with probability
    Z_{d+1} Z_{m-d} / Z_m; a 2-gon closes empty with probability 1 / Z_2.
    """

    def __init__(self, theta: float):
        self.theta = _check_peel_theta(theta)
        self.q = q_of_theta(self.theta)
        self._tables: Dict[int, List[float]] = {}

    def choices(self, m: int) -> List[float]:
        """Cumulative choice probabilities: [internal, split d=1..m-2] (m=2: [empty, internal])"""
        table = self._tables.get(m)
        if table is None:
            log_zm = log_partition_Z(m, self.theta)
            internal = self.q * math.exp(log_partition_Z(m + 1, self.theta) - log_zm)
            if m == 2:
                probs = np.array([math.exp(-log_zm), internal])
            else:
                d = np.arange(1, m - 1)
                splits = np.exp(log_partition_Z(d + 1, self.theta)
                                + log_partition_Z(m - d, self.theta) - log_zm)
                probs = np.concatenate(([internal], splits))
            cum = np.cumsum(probs)
            table = (cum / cum[-1]).tolist()
            self._tables[m] = table
        return table

    def count(self, m: int, rng: RngStream) -> int:
        """Internal vertices of one free triangulation of an m-gon"""
        stack = [m]
        count = 0
        uniform = rng.generator.random
        while stack:
            s = stack.pop()
            c = bisect.bisect_right(self.choices(s), uniform())
            if s == 2:
                if c == 0:
                    continue
                count += 1
                stack.append(3)
            elif c == 0:
                count += 1
                stack.append(s + 1)
            else:
                stack.append(c + 1)
                stack.append(s - c)
        return count


class FreeCountSampler:
    """Inverse-CDF draws from the exact law P(n) = phi_{n,m} q^n / Z_m"""

    def __init__(self, theta: float):
        self.theta = _check_hole_theta(theta)
        self.critical = _is_critical_theta(self.theta)
        self.q = q_of_theta(self.theta)
        self._tables: Dict[int, Tuple[int, np.ndarray]] = {}

    def window(self, m: int, u_max: float = 0.0) -> Tuple[int, np.ndarray]:
        """(lo, cdf) with cdf[j] = P(I_m <= lo + j), extended until the pmf is negligible"""
        if self.critical:
            return self._critical_window(m, u_max)
        cached = self._tables.get(m)
        if cached is not None:
            return cached
        mean, var = free_moments(m, self.theta)
        sd = math.sqrt(var)
        lo = 0 if m <= TABLE_MAX_M else max(0, int(mean - 40.0 * sd))
        hi = int(mean + 10.0 * sd) + 64
        logp = np.asarray(log_free_pmf(np.arange(lo, hi + 1), m, self.theta), dtype=float)
        while logp[-1] - logp.max() > _LOG_PMF_FLOOR:
            start = lo + logp.size
            more = np.asarray(log_free_pmf(np.arange(start, start + _CHUNK), m, self.theta), dtype=float)
            logp = np.concatenate((logp, more))
        cdf = np.cumsum(np.exp(logp - logp.max()))
        cdf /= cdf[-1]
        if m <= TABLE_MAX_M:
            self._tables[m] = (lo, cdf)
        return lo, cdf

    def _critical_window(self, m: int, u_max: float) -> Tuple[int, np.ndarray]:
        """
        At theta = 1/6 the count law keeps an n^{-5/2} tail and no fixed window is negligible.
        The exact CDF (absolute, from n = 0) is grown by doubling until it passes u_max.
        """
        cached = self._tables.get(m)
        cdf = cached[1] if cached is not None else np.empty(0)
        while (cdf.size == 0 or cdf[-1] <= u_max) and cdf.size < CRITICAL_MAX_N:
            start = cdf.size
            stop = min(max(2 * start, _CHUNK), CRITICAL_MAX_N)
            p = np.exp(np.asarray(log_free_pmf(np.arange(start, stop), m, self.theta), dtype=float))
            cdf = np.concatenate((cdf, (cdf[-1] if cdf.size else 0.0) + np.cumsum(p)))
        if m <= TABLE_MAX_M:
            self._tables[m] = (0, cdf)
        return 0, cdf

    def draw(self, m: np.ndarray, rng: RngStream) -> np.ndarray:
        """One count per entry of m (polygon sizes >= 2), grouped by size"""
        m = np.asarray(m, dtype=np.int64)
        out = np.zeros(m.shape, dtype=np.int64)
        if m.size == 0 or self.q == 0.0:
            return out
        if m.min() < 2:
            raise DomainError("polygon size must be >= 2")
        u = rng.random(m.shape)
        sizes, inverse = np.unique(m, return_inverse=True)
        inverse = inverse.reshape(m.shape)
        for j, size in enumerate(sizes):
            sel = inverse == j
            lo, cdf = self.window(int(size), float(u[sel].max()))
            idx = np.searchsorted(cdf, u[sel], side="right")
            if self.critical and idx.max() >= cdf.size:
                logger.warning("%d count draws for a %d-gon capped at %d internal vertices",
                               int((idx >= cdf.size).sum()), int(size), cdf.size - 1)
            out[sel] = lo + np.minimum(idx, cdf.size - 1)
        return out


@lru_cache(maxsize=64)
def polygon_peeler(theta: float) -> PolygonPeeler:
    return PolygonPeeler(theta)


@lru_cache(maxsize=64)
def free_count_sampler(theta: float) -> FreeCountSampler:
    return FreeCountSampler(theta)


def sample_free_internal_count(m: int, theta: float, rng: RngStream, method: str = "auto") -> int:
    """
    Internal-vertex count of a free triangulation of an m-gon.

    Args:
        m: polygon size (>= 2)
        theta: in [0, 1/6]; 'peel' needs theta < 1/6
        rng: stream owned by the caller
        method: 'peel' (recursive polygon peeling), 'direct' (exact inverse CDF) or 'auto'

    Returns:
        n with P(n) = phi_{n,m} q^n / Z_m(q)
    """
    if m < 2:
        raise DomainError(f"polygon size must be >= 2, got {m}")
    theta = _check_hole_theta(theta)
    if theta == 0.0:
        return 0
    if method == "auto":
        method = "peel" if m <= PEEL_MAX_M and not _is_critical_theta(theta) else "direct"
    if method == "peel":
        return polygon_peeler(theta).count(m, rng)
    if method == "direct":
        return int(free_count_sampler(theta).draw(np.array([m]), rng)[0])
    raise DomainError(f"unknown method {method!r}")


def sample_free_internal_counts(m: np.ndarray, theta: float, rng: RngStream) -> np.ndarray:
    """Vectorized exact counts for an array of polygon sizes"""
    return free_count_sampler(_check_hole_theta(theta)).draw(m, rng)


class StepSampler:
    """
    Lazy inverse CDF over swallow lengths for one parameter set.

    The cumulative table c[j] = alpha + p_1 + ... + p_j is extended by doubling on
    demand and never beyond i_max; uniforms falling past c[i_max] are truncated draws.
    """

    def __init__(self, params: ModelParams, i_max: int):
        if i_max < 1:
            raise DomainError("i_max must be >= 1")
        self.params = params
        self.i_max = int(i_max)
        self._cdf = np.array([params.alpha])
        self._exhausted = False
        self._residual: Optional[float] = None

    @property
    def extent(self) -> int:
        return self._cdf.size - 1

    def _extend_to(self, u_max: float) -> None:
        while not self._exhausted and self._cdf[-1] <= u_max and self.extent < self.i_max:
            start = self.extent + 1
            stop = min(max(2 * self.extent, 64), self.i_max)
            p = np.exp(log_step_probs(self.params, np.arange(start, stop + 1)))
            self._cdf = np.concatenate((self._cdf, self._cdf[-1] + np.cumsum(p)))
            if p.sum() < 1e-18:
                self._exhausted = True

    def residual_mass(self) -> float:
        """Probability that a step swallows more than i_max vertices"""
        if self._residual is None:
            self._residual = tail_residual(self.params, self.i_max)
        return self._residual

    def lengths(self, u: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Map uniforms to swallow lengths (0 = alpha step) and truncation flags"""
        u = np.asarray(u, dtype=float)
        if u.size == 0:
            return np.zeros(u.shape, dtype=np.int64), np.zeros(u.shape, dtype=bool)
        self._extend_to(float(u.max()))
        idx = np.searchsorted(self._cdf, u, side="right")
        over = idx > self.extent
        truncated = over & (not self._exhausted)
        return np.minimum(idx, self.extent).astype(np.int64), truncated


@lru_cache(maxsize=64)
def step_sampler(params: ModelParams, i_max: int) -> StepSampler:
    return StepSampler(params, i_max)


def _resolve_i_max(i_max: Optional[int]) -> int:
    return int(i_max) if i_max is not None else get_settings().i_max


def residual_mass(params: ModelParams, i_max: Optional[int] = None) -> float:
    return step_sampler(params, _resolve_i_max(i_max)).residual_mass()


def sample_steps(params: ModelParams, rng: RngStream, size: int,
                 i_max: Optional[int] = None, holes: bool = True) -> StepBatch:
    """
    Draw a batch of peeling outcomes.

    Args:
        params: model parameters
        rng: stream owned by the caller
        size: number of steps
        i_max: swallow-length cap (settings default)
        holes: also draw the internal count of each swallowed (i+1)-gon

    Returns:
        StepBatch with i (0 for alpha steps), right (side flag), holes, truncated
    """
    sampler = step_sampler(params, _resolve_i_max(i_max))
    i, truncated = sampler.lengths(rng.random(size))
    right = rng.random(size) >= 0.5
    counts = np.zeros(size, dtype=np.int64)
    swallow = i > 0
    if holes and swallow.any() and params.q > 0.0:
        counts[swallow] = sample_free_internal_counts(i[swallow] + 1, params.theta, rng)
    n_trunc = int(truncated.sum())
    if n_trunc:
        logger.warning("%d of %d steps hit i_max=%d (residual mass %.3g per step)",
                       n_trunc, size, sampler.i_max, sampler.residual_mass())
    return StepBatch(i=i, right=right, holes=counts, truncated=truncated)


def sample_step(params: ModelParams, rng: RngStream, i_max: Optional[int] = None) -> PeelEvent:
    """
    One peeling event: alpha step with probability alpha, else (side, i) with p_i / 2 per side.
    """
    sampler = step_sampler(params, _resolve_i_max(i_max))
    i, truncated = sampler.lengths(rng.random(1))
    i, truncated = int(i[0]), bool(truncated[0])
    side = Side.RIGHT if rng.random() >= 0.5 else Side.LEFT
    if i == 0:
        return PeelEvent.alpha_step()
    if truncated:
        logger.warning("swallow length capped at i_max=%d (residual mass %.3g)",
                       sampler.i_max, sampler.residual_mass())
    count = sample_free_internal_count(i + 1, params.theta, rng) if params.q > 0.0 else 0
    return PeelEvent.swallow(side, i, count, truncated)


def _check_subcritical(params: ModelParams) -> None:
    if params.regime != Regime.SUBCRITICAL:
        raise DomainError(f"W is studied for subcritical alpha only, got alpha={params.alpha}")


def sample_W_batch(params: ModelParams, rng: RngStream, size: int,
                   i_max: Optional[int] = None) -> np.ndarray:
    """size independent copies of W = Y + I_{Y+1} (W = 0 when Y = 0)"""
    _check_subcritical(params)
    batch = sample_steps(params, rng, size, i_max=i_max, holes=True)
    return batch.i + batch.holes


def sample_W(params: ModelParams, rng: RngStream, i_max: Optional[int] = None) -> int:
    """One draw of W = Y + I_{Y+1}"""
    _check_subcritical(params)
    sampler = step_sampler(params, _resolve_i_max(i_max))
    y = int(sampler.lengths(rng.random(1))[0][0])
    if y == 0:
        return 0
    return y + sample_free_internal_count(y + 1, params.theta, rng)
