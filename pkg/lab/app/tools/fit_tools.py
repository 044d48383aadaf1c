"""
Statistical fitters used by the experiments: tail slopes, tail ratios, KS distances.
"""
import logging
import math
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from app.errors import DomainError, FitError
from app.models import FitMethod, FitResult

logger = logging.getLogger(__name__)

MIN_TAIL_SAMPLES = 1000
_MIN_STDERR = 1e-12
LEVY_SCALE = math.pi / 2.0


def empirical_survival(samples: Sequence[float]) -> Tuple[np.ndarray, np.ndarray]:
    """
    Distinct sample values and the fraction of samples >= each value.

    Returns:
        (values, survival) both sorted by value
    """
    x = np.sort(np.asarray(samples, dtype=float))
    values, first = np.unique(x, return_index=True)
    survival = (x.size - first) / x.size
    return values, survival


def slope_fit(x: Sequence[float], y: Sequence[float], method: FitMethod,
              window: Optional[Tuple[float, float]] = None) -> FitResult:
    """Least-squares slope of y against x with the slope's standard error"""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 3 or np.ptp(x) == 0.0:
        raise FitError(f"need at least 3 distinct abscissae, got {x.size}")
    res = stats.linregress(x, y)
    return FitResult(
        estimate=float(res.slope),
        stderr=max(float(res.stderr), _MIN_STDERR),
        window=window or (float(x.min()), float(x.max())),
        method=method,
        intercept=float(res.intercept),
        n_points=int(x.size),
    )


def fit_tail(samples: Sequence[float], kind: str = "power",
             window: Optional[Tuple[float, float]] = None) -> FitResult:
    """
    Fit the decay of the empirical survival function.

    Args:
        samples: at least 1000 observations
        kind: 'power' (log S against log x) or 'exponential' (log S against x)
        window: survival-probability window; defaults to [max(20/N, 1e-3), 0.3]

    Returns:
        FitResult whose estimate is the fitted slope (e.g. -0.5 for a Pareto(1/2) tail)
    """
    if kind not in ("power", "exponential"):
        raise DomainError(f"kind must be 'power' or 'exponential', got {kind!r}")
    x = np.asarray(samples, dtype=float)
    if x.size < MIN_TAIL_SAMPLES:
        raise DomainError(f"fit_tail needs at least {MIN_TAIL_SAMPLES} samples, got {x.size}")
    if np.all(x == x[0]):
        raise FitError("all samples are equal")

    lo, hi = window or (max(20.0 / x.size, 1e-3), 0.3)
    values, survival = empirical_survival(x)
    mask = (survival >= lo) & (survival <= hi)
    if kind == "power":
        mask &= values > 0
    if mask.sum() < 3:
        raise FitError(f"only {int(mask.sum())} distinct values inside the survival window {lo:g}..{hi:g}")

    log_s = np.log(survival[mask])
    if kind == "power":
        result = slope_fit(np.log(values[mask]), log_s, FitMethod.LOG_LOG, (lo, hi))
    else:
        result = slope_fit(values[mask], log_s, FitMethod.LOG_LINEAR, (lo, hi))
    logger.debug("fit_tail %s: slope %.4f +- %.4f over %d points",
                 kind, result.estimate, result.stderr, result.n_points)
    return result


def tail_ratio(samples: Sequence[float], x: float) -> FitResult:
    """sqrt(x) * P(sample > x), the estimator of c in P(W > x) ~ c / sqrt(x)"""
    w = np.asarray(samples, dtype=float)
    if w.size == 0:
        raise FitError("no samples")
    frac = float(np.mean(w > x))
    stderr = np.sqrt(max(frac * (1.0 - frac), 1.0 / w.size) / w.size)
    return FitResult(estimate=np.sqrt(x) * frac, stderr=max(np.sqrt(x) * stderr, _MIN_STDERR),
                     window=(x, np.inf), method=FitMethod.TAIL_RATIO, n_points=int(w.size))


def truncated_mean_ratio(samples: Sequence[float], x: float) -> FitResult:
    """E[W 1{W < x}] / sqrt(x), which tends to c for a c / sqrt(x) tail"""
    w = np.asarray(samples, dtype=float)
    if w.size == 0:
        raise FitError("no samples")
    clipped = np.where(w < x, w, 0.0)
    return FitResult(estimate=float(clipped.mean() / np.sqrt(x)),
                     stderr=max(float(clipped.std(ddof=1) / np.sqrt(w.size * x)), _MIN_STDERR),
                     window=(0.0, x), method=FitMethod.TAIL_RATIO, n_points=int(w.size))


def ks_distance(samples: Sequence[float], cdf: Callable) -> FitResult:
    """Kolmogorov-Smirnov distance to a reference CDF; stderr is the 1/sqrt(N) scale"""
    w = np.asarray(samples, dtype=float)
    if w.size < 2:
        raise FitError("need at least 2 samples")
    res = stats.kstest(w, cdf)
    return FitResult(estimate=float(res.statistic), stderr=1.0 / np.sqrt(w.size),
                     window=(float(w.min()), float(w.max())), method=FitMethod.KS,
                     intercept=float(res.pvalue), n_points=int(w.size))


def levy_distance(samples: Sequence[float], scale: float = LEVY_SCALE) -> FitResult:
    """KS distance of scaled stable-1/2 sums to the one-sided Levy law; S_n / (c^2 n^2) has scale pi/2"""
    return ks_distance(samples, stats.levy(scale=scale).cdf)
