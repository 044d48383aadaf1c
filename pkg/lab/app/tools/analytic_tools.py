"""
Exact and closed-form quantities of domain-Markov half-planar triangulations.
Pure functions: enumeration, partition functions, step probabilities, drifts, thresholds.
"""
import math
from functools import lru_cache
from typing import Optional, Tuple, Union

import numpy as np
from scipy import optimize, special

from app.errors import DomainError, SingularityError
from app.models import DriftConstants, ModelParams, Regime

ArrayLike = Union[int, float, np.ndarray]

ALPHA_CRITICAL = 2.0 / 3.0
THETA_MAX = 1.0 / 6.0
Q_MAX = THETA_MAX * (1.0 - 2.0 * THETA_MAX) ** 2  # 2/27
_LOG2 = math.log(2.0)


# ---------------------------------------------------------------------------
# Enumeration
# ---------------------------------------------------------------------------

def phi(n: int, m: int) -> int:
    """
    Number of rooted triangulations of an m-gon with n internal vertices, no self-loops.

    Args:
        n: internal vertices (>= 0)
        m: boundary vertices (>= 2); phi(0, 2) = 1 by convention

    Returns:
        Exact integer count
    """
    if isinstance(n, bool) or isinstance(m, bool) or int(n) != n or int(m) != m:
        raise DomainError(f"phi needs integers, got n={n!r}, m={m!r}")
    n, m = int(n), int(m)
    if n < 0 or m < 2:
        raise DomainError(f"phi is defined for n >= 0 and m >= 2, got n={n}, m={m}")
    if n == 0 and m == 2:
        return 1
    k = m - 2
    f = math.factorial
    num = 2 ** (n + 1) * f(2 * k + 1) * f(2 * k + 3 * n)
    den = f(k) ** 2 * f(n) * f(2 * k + 2 * n + 2)
    count, rest = divmod(num, den)
    assert rest == 0
    return count


def log_phi(n: ArrayLike, m: ArrayLike) -> ArrayLike:
    """log phi_{n,m} in floating point; broadcasts over numpy arrays"""
    n = np.asarray(n, dtype=float)
    k = np.asarray(m, dtype=float) - 2.0
    out = ((n + 1.0) * _LOG2
           + special.gammaln(2.0 * k + 2.0)
           + special.gammaln(2.0 * k + 3.0 * n + 1.0)
           - 2.0 * special.gammaln(k + 1.0)
           - special.gammaln(n + 1.0)
           - special.gammaln(2.0 * k + 2.0 * n + 3.0))
    return out if out.ndim else float(out)


def catalan(n: int) -> int:
    if n < 0:
        raise DomainError("catalan index must be >= 0")
    return math.comb(2 * n, n) // (n + 1)


# ---------------------------------------------------------------------------
# Model parameters
# ---------------------------------------------------------------------------

def _check_alpha(alpha: float) -> float:
    try:
        alpha = float(alpha)
    except (TypeError, ValueError):
        raise DomainError(f"alpha must be a real number, got {alpha!r}")
    if not (0.0 <= alpha < 1.0):
        raise DomainError(f"alpha must lie in [0, 1), got {alpha}")
    return alpha


def _is_critical(alpha: float) -> bool:
    return math.isclose(alpha, ALPHA_CRITICAL, rel_tol=0.0, abs_tol=1e-12)


def regime_of(alpha: float) -> Regime:
    alpha = _check_alpha(alpha)
    if _is_critical(alpha):
        return Regime.CRITICAL
    return Regime.SUBCRITICAL if alpha < ALPHA_CRITICAL else Regime.SUPERCRITICAL


def beta_of(alpha: float) -> float:
    """Probability of a (R,1) step with an empty hole"""
    alpha = _check_alpha(alpha)
    if alpha <= ALPHA_CRITICAL or _is_critical(alpha):
        return (2.0 - alpha) ** 2 / 16.0
    return alpha * (1.0 - alpha) / 2.0


def theta_from_q(q: float) -> float:
    """Root of theta (1 - 2 theta)^2 = q on [0, 1/6] by bisection"""
    if not (0.0 <= q <= Q_MAX + 1e-12):
        raise DomainError(f"q must lie in [0, 2/27], got {q}")
    if q == 0.0:
        return 0.0
    if q >= Q_MAX:
        return THETA_MAX
    return optimize.bisect(lambda t: t * (1.0 - 2.0 * t) ** 2 - q, 0.0, THETA_MAX,
                           xtol=1e-15, maxiter=200)


def theta_closed_form(alpha: float) -> float:
    alpha = _check_alpha(alpha)
    return alpha / 4.0 if alpha <= ALPHA_CRITICAL else (1.0 - alpha) / 2.0


@lru_cache(maxsize=512)
def model_params(alpha: float) -> ModelParams:
    """
    Derive every model constant from alpha.

    Args:
        alpha: probability of an alpha step, in [0, 1)

    Returns:
        ModelParams with regime, beta, q = alpha*beta, theta and (supercritical) thresholds
    """
    alpha = _check_alpha(alpha)
    regime = regime_of(alpha)
    beta = beta_of(alpha)
    q = alpha * beta
    # the bisection is ill-conditioned at the double root q = 2/27
    theta = THETA_MAX if regime == Regime.CRITICAL else theta_from_q(min(q, Q_MAX))
    p_c = p_u = None
    if regime == Regime.SUPERCRITICAL:
        root = math.sqrt(3.0 - 2.0 / alpha)
        p_c, p_u = 0.5 * (1.0 - root), 0.5 * (1.0 + root)
    return ModelParams(alpha=alpha, regime=regime, beta=beta, q=q, theta=theta, p_c=p_c, p_u=p_u)


def as_params(alpha_or_params: Union[float, ModelParams]) -> ModelParams:
    if isinstance(alpha_or_params, ModelParams):
        return alpha_or_params
    return model_params(alpha_or_params)


# ---------------------------------------------------------------------------
# Partition functions and free triangulations
# ---------------------------------------------------------------------------

def _check_theta(theta: float, strict: bool = False) -> float:
    theta = float(theta)
    upper_ok = theta < THETA_MAX if strict else theta <= THETA_MAX + 1e-15
    if not (theta >= 0.0 and upper_ok):
        raise DomainError(f"theta must lie in [0, 1/6{')' if strict else ']'}, got {theta}")
    return min(theta, THETA_MAX)


def q_of_theta(theta: float) -> float:
    return theta * (1.0 - 2.0 * theta) ** 2


def log_partition_Z(m: ArrayLike, theta: float) -> ArrayLike:
    """log Z_m(q) for an m-gon, q = theta (1 - 2 theta)^2; broadcasts over m"""
    theta = _check_theta(theta)
    k = np.asarray(m, dtype=float) - 2.0
    if np.any(k < 0):
        raise DomainError("Z_m needs m >= 2")
    out = (np.log((1.0 - 6.0 * theta) * k + 2.0 - 6.0 * theta)
           + special.gammaln(2.0 * k + 1.0)
           - special.gammaln(k + 1.0)
           - special.gammaln(k + 3.0)
           - (2.0 * k + 2.0) * math.log1p(-2.0 * theta))
    return out if out.ndim else float(out)


def partition_Z(m: int, theta: float) -> float:
    """
    Partition function Z_m(q) of free triangulations of an m-gon.

    Args:
        m: polygon size (>= 2)
        theta: parametrization of q = theta (1 - 2 theta)^2, in [0, 1/6]

    Returns:
        Z_m(q); Z_2 = (1 - 3 theta) / (1 - 2 theta)^2
    """
    if m < 2:
        raise DomainError(f"Z_m needs m >= 2, got {m}")
    return math.exp(log_partition_Z(m, theta))


def free_moments(m: int, theta: float) -> Tuple[float, float]:
    """
    Mean and variance of the internal-vertex count of a free m-gon triangulation.

    Returns:
        (mean, variance)
    """
    if m < 2:
        raise DomainError(f"free_moments needs m >= 2, got {m}")
    theta = float(theta)
    if math.isclose(theta, THETA_MAX, rel_tol=0.0, abs_tol=1e-15):
        raise SingularityError("the variance of I_m diverges at theta = 1/6")
    theta = _check_theta(theta, strict=True)
    d = (1.0 - 6.0 * theta) * m + 6.0 * theta
    top = (m - 1) * (2 * m - 3)
    mean = top * 2.0 * theta / d
    # q d/dq of the mean; vanishes at theta = 0
    variance = 2.0 * theta * top * m * (1.0 - 2.0 * theta) / (d * d * (1.0 - 6.0 * theta))
    return mean, variance


def log_free_pmf(n: ArrayLike, m: int, theta: float) -> ArrayLike:
    """log P(I_m = n) = log(phi_{n,m} q^n / Z_m)"""
    theta = _check_theta(theta)
    n = np.asarray(n, dtype=float)
    q = q_of_theta(theta)
    if q == 0.0:
        out = np.where(n == 0, 0.0, -np.inf)
    else:
        out = log_phi(n, m) + n * math.log(q) - log_partition_Z(m, theta)
    out = np.asarray(out, dtype=float)
    return out if out.ndim else float(out)


def free_distribution(m: int, theta: float, n_max: int) -> np.ndarray:
    """Probabilities P(I_m = n) for n = 0..n_max"""
    return np.exp(log_free_pmf(np.arange(n_max + 1), m, theta))


# ---------------------------------------------------------------------------
# Step probabilities
# ---------------------------------------------------------------------------

def log_step_probs(params: ModelParams, i: ArrayLike) -> ArrayLike:
    """
    log p_i for an array of swallow lengths.

    p_i = 2 rho^i (2i-2)! / ((i-1)! (i+1)!) ((1 - 6 theta) i + 1), rho = beta / (1 - 2 theta)^2
    """
    i = np.asarray(i, dtype=float)
    theta = params.theta
    out = (_LOG2
           + i * math.log(params.decay)
           + special.gammaln(2.0 * i - 1.0)
           - special.gammaln(i)
           - special.gammaln(i + 2.0)
           + np.log((1.0 - 6.0 * theta) * i + 1.0))
    return out if out.ndim else float(out)


def step_prob(params: ModelParams, i: int, k: Optional[int] = None) -> float:
    """
    Probability of a swallow of length i (both sides combined).

    Args:
        params: model parameters
        i: swallowed boundary vertices (>= 1)
        k: if given, additionally require exactly k internal vertices in the hole

    Returns:
        p_i, or p_{i,k} = 2 beta^i phi_{k,i+1} q^k
    """
    if i < 1:
        raise DomainError(f"swallow length must be >= 1, got {i}")
    if k is None:
        return math.exp(log_step_probs(params, i))
    if k < 0:
        raise DomainError(f"hole size must be >= 0, got {k}")
    if params.q == 0.0:
        return 2.0 * params.beta ** i if k == 0 else 0.0
    return math.exp(_LOG2 + i * math.log(params.beta) + log_phi(k, i + 1) + k * math.log(params.q))


def step_probs(params: ModelParams, n: int) -> np.ndarray:
    """Array of p_1..p_n"""
    return np.exp(log_step_probs(params, np.arange(1, n + 1)))


def tail_residual(params: ModelParams, n: int) -> float:
    """Exact mass of swallows longer than n: 1 - alpha - sum_{i<=n} p_i"""
    return max(1.0 - params.alpha - math.fsum(step_probs(params, n)), 0.0)


def tail_constant(alpha: float) -> float:
    """Limit of p_i i^{3/2} for subcritical alpha"""
    alpha = _check_alpha(alpha)
    if alpha >= ALPHA_CRITICAL:
        raise DomainError("the power-law tail constant is defined for alpha < 2/3")
    return (1.0 - 1.5 * alpha) / (2.0 * math.sqrt(math.pi))


def tail_asymptote(alpha: float, n: int) -> float:
    """Asymptotic mass of swallows longer than n (subcritical)"""
    return 2.0 * tail_constant(alpha) / math.sqrt(n)


def supercritical_decay(alpha: float) -> float:
    """Geometric rate rho = (1 - alpha) / (2 alpha) of p_i for supercritical alpha"""
    params = model_params(alpha)
    if not params.is_supercritical:
        raise DomainError("exponential decay of p_i needs alpha > 2/3")
    return params.decay


# ---------------------------------------------------------------------------
# Drifts, thresholds and stable-law constants
# ---------------------------------------------------------------------------

def boundary_drift(alpha: float) -> float:
    alpha = _check_alpha(alpha)
    if alpha <= ALPHA_CRITICAL or _is_critical(alpha):
        raise DomainError(f"boundary drift is defined for alpha > 2/3, got {alpha}")
    return math.sqrt(alpha * (3.0 * alpha - 2.0))


def analytic_drifts(alpha: float, p: Optional[float] = None) -> DriftConstants:
    """
    Supercritical drift constants.

    Args:
        alpha: must exceed 2/3
        p: optional site-percolation parameter

    Returns:
        DriftConstants with boundary_drift, perc_drift (if p given), p_c, p_u
    """
    drift = boundary_drift(alpha)
    params = model_params(alpha)
    perc = None
    if p is not None:
        if not (0.0 <= p <= 1.0):
            raise DomainError(f"p must be a probability, got {p}")
        perc = alpha * p - 0.5 * (alpha - drift)
    return DriftConstants(boundary_drift=drift, perc_drift=perc, p_c=params.p_c, p_u=params.p_u)


def mean_swallow(alpha: float) -> float:
    """E[Y] = sum_i i p_i (finite only for supercritical alpha)"""
    return alpha - boundary_drift(alpha)


def mean_swallowed_volume(alpha: float, tol: float = 1e-18) -> float:
    """E[Y + I_{Y+1}]: linear rate of S_n / n for supercritical alpha"""
    params = model_params(alpha)
    if not params.is_supercritical:
        raise DomainError("S_n has finite mean increments only for alpha > 2/3")
    total, i = 0.0, 1
    while True:
        p = step_prob(params, i)
        mean_hole, _ = free_moments(i + 1, params.theta)
        total += p * (i + mean_hole)
        if p * (i + mean_hole) < tol and i > 10:
            return total
        i += 1


def c_alpha(alpha: float) -> float:
    """Tail constant of W = Y + I_{Y+1}: P(W > x) ~ c_alpha / sqrt(x)"""
    alpha = _check_alpha(alpha)
    if alpha >= ALPHA_CRITICAL or _is_critical(alpha):
        raise DomainError(f"stable normalizers need alpha < 2/3, got {alpha}")
    theta = model_params(alpha).theta
    return (1.0 - 1.5 * alpha) * math.sqrt(1.0 - 2.0 * theta) / math.sqrt(math.pi * (1.0 - 6.0 * theta))


def stable_normalizers(alpha: float, n: int) -> Tuple[float, float, float]:
    """
    Normalizers of S_n in the subcritical regime.

    Returns:
        (c_alpha, a_n, b_n) with a_n = b_n = c_alpha^2 n^2
    """
    if n < 1:
        raise DomainError(f"n must be positive, got {n}")
    c = c_alpha(alpha)
    a = c * c * float(n) ** 2
    return c, a, a


def submap_probability(i: int, j: int, k: int, params: ModelParams) -> float:
    """
    Probability that a given simply connected sub-map sits at the root.

    Args:
        i: boundary edges of the sub-map on the half-plane boundary, plus one
        j: internal-boundary vertices that are internal to the half-plane
        k: internal vertices of the sub-map
    """
    if i < 2 or j < 0 or k < 0:
        raise DomainError(f"submap_probability needs i >= 2, j >= 0, k >= 0; got {(i, j, k)}")
    return params.alpha ** (k + j) * params.beta ** (i + k - 2)


def levy_density(x: ArrayLike) -> ArrayLike:
    """Density (2 pi x^3)^{-1/2} exp(-1/(2x)) on x > 0, zero elsewhere"""
    x = np.asarray(x, dtype=float)
    safe = np.where(x > 0, x, 1.0)
    out = np.where(x > 0, np.exp(-0.5 / safe) / np.sqrt(2.0 * np.pi * safe ** 3), 0.0)
    return out if out.ndim else float(out)
