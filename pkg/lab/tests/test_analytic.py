import math

import numpy as np
import pytest
from scipy import integrate, stats

from app.errors import DomainError, SingularityError
from app.models import Regime
from app.tools.analytic_tools import (
    analytic_drifts,
    c_alpha,
    catalan,
    free_distribution,
    free_moments,
    levy_density,
    log_phi,
    mean_swallow,
    mean_swallowed_volume,
    model_params,
    partition_Z,
    phi,
    stable_normalizers,
    step_prob,
    step_probs,
    submap_probability,
    supercritical_decay,
    tail_asymptote,
    tail_residual,
    theta_closed_form,
)

ALPHAS = [0.0, 0.2, 0.4, 0.6, 0.7, 0.8, 0.9, 0.95]


def test_phi_small_values():
    assert phi(1, 3) == 4
    assert phi(0, 2) == 1
    assert phi(0, 3) == 1


@pytest.mark.parametrize("m", range(3, 10))
def test_phi_without_internal_vertices_is_catalan(m):
    assert phi(0, m) == catalan(m - 2)


@pytest.mark.parametrize("n,m", [(-1, 3), (0, 1), (2, 0)])
def test_phi_domain(n, m):
    with pytest.raises(DomainError):
        phi(n, m)


def test_log_phi_matches_exact_counts():
    ns, ms = np.meshgrid(np.arange(0, 12), np.arange(3, 9))
    exact = np.array([[math.log(phi(int(n), int(m))) for n, m in zip(rn, rm)] for rn, rm in zip(ns, ms)])
    assert np.allclose(log_phi(ns, ms), exact, rtol=1e-10)


def test_model_params_at_0_8():
    params = model_params(0.8)
    assert params.regime == Regime.SUPERCRITICAL
    assert params.theta == pytest.approx(0.1, abs=1e-12)
    assert params.p_c == pytest.approx(0.146447, abs=1e-6)
    assert params.p_u == pytest.approx(0.853553, abs=1e-6)


@pytest.mark.parametrize("alpha", ALPHAS)
def test_theta_bisection_matches_closed_form(alpha):
    assert model_params(alpha).theta == pytest.approx(theta_closed_form(alpha), abs=1e-12)


def test_critical_alpha():
    params = model_params(2.0 / 3.0)
    assert params.regime == Regime.CRITICAL
    assert params.theta == pytest.approx(1.0 / 6.0)
    assert params.p_c is None


@pytest.mark.parametrize("alpha", [-0.1, 1.0, 1.5])
def test_alpha_domain(alpha):
    with pytest.raises(DomainError):
        model_params(alpha)


def test_partition_Z_two_gon():
    theta = 0.1
    assert partition_Z(2, theta) == pytest.approx((1 - 3 * theta) / (1 - 2 * theta) ** 2)


def test_free_moments():
    assert free_moments(2, 0.0) == (0.0, 0.0)
    mean, var = free_moments(10, 0.1)
    assert mean == pytest.approx(9 * 17 * 0.2 / 4.6)
    assert var == pytest.approx(28.9225, rel=1e-4)


def test_free_moments_singular_at_one_sixth():
    with pytest.raises(SingularityError):
        free_moments(5, 1.0 / 6.0)


def test_free_distribution_agrees_with_moments():
    probs = free_distribution(10, 0.1, 600)
    n = np.arange(probs.size)
    mean, var = free_moments(10, 0.1)
    assert probs.sum() == pytest.approx(1.0, abs=1e-10)
    assert (probs * n).sum() == pytest.approx(mean, rel=1e-8)
    assert (probs * (n - mean) ** 2).sum() == pytest.approx(var, rel=1e-6)


def test_empty_triangle_probability():
    assert free_distribution(3, 0.1, 0)[0] == pytest.approx(0.68267, abs=1e-5)


@pytest.mark.parametrize("alpha", [0.7, 0.8, 0.9])
def test_step_law_normalized_supercritical(alpha):
    params = model_params(alpha)
    assert alpha + math.fsum(step_probs(params, 2000)) == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize("alpha", [0.0, 0.4])
def test_subcritical_tail_matches_asymptote(alpha):
    params = model_params(alpha)
    assert tail_residual(params, 10_000) == pytest.approx(tail_asymptote(alpha, 10_000), rel=1e-2)


def test_hole_refined_step_probabilities_sum_to_p_i():
    params = model_params(0.8)
    total = math.fsum(step_prob(params, 2, k) for k in range(400))
    assert total == pytest.approx(step_prob(params, 2), rel=1e-8)


def test_supercritical_drifts():
    drifts = analytic_drifts(0.8, 0.5)
    assert drifts.perc_drift == pytest.approx(0.28284, abs=1e-5)
    assert drifts.p_c + drifts.p_u == pytest.approx(1.0)
    params = model_params(0.8)
    i = np.arange(1, 500)
    assert (i * step_probs(params, 499)).sum() == pytest.approx(mean_swallow(0.8), rel=1e-9)
    assert supercritical_decay(0.8) == pytest.approx(0.2 / 1.6)


def test_drift_needs_supercritical_alpha():
    with pytest.raises(DomainError):
        analytic_drifts(0.5)


def test_c_alpha():
    assert c_alpha(0.0) == pytest.approx(0.564190, abs=1e-6)
    assert c_alpha(0.4) == pytest.approx(math.sqrt((1 - 0.6) * (1 - 0.2) / math.pi))
    with pytest.raises(DomainError):
        c_alpha(0.8)


def test_stable_normalizers():
    c, a, b = stable_normalizers(0.0, 100)
    assert c == pytest.approx(1.0 / math.sqrt(math.pi))
    assert a == pytest.approx(3183.1, abs=0.1)
    assert a == b
    assert stable_normalizers(0.66, 1)[0] < 0.05
    with pytest.raises(DomainError):
        stable_normalizers(0.0, 0)


def test_submap_probability():
    params = model_params(0.8)
    assert submap_probability(2, 1, 0, params) == pytest.approx(0.8)
    assert submap_probability(3, 0, 0, params) == pytest.approx(params.beta)
    assert submap_probability(3, 0, 1, params) == pytest.approx(0.00512)
    with pytest.raises(DomainError):
        submap_probability(1, 0, 0, params)


def test_levy_density():
    assert levy_density(-1.0) == 0.0
    assert levy_density(0.0) == 0.0
    assert levy_density(1.0) == pytest.approx(0.241971, abs=1e-6)
    xs = np.linspace(0.1, 20.0, 50)
    assert np.allclose(levy_density(xs), stats.levy.pdf(xs))
    total, _ = integrate.quad(levy_density, 0.0, np.inf, limit=200)
    assert total == pytest.approx(1.0, abs=1e-6)


def test_mean_swallowed_volume_exceeds_mean_swallow():
    assert mean_swallowed_volume(0.8) > mean_swallow(0.8) > 0
    with pytest.raises(DomainError):
        mean_swallowed_volume(0.4)


def test_phi_exact_values():
    assert phi(0, 4) == 2
    assert phi(2, 3) == 24


@pytest.mark.parametrize("theta", [0.0, 0.05, 0.1, 0.15])
def test_partition_Z_root_face_recursion(theta):
    q = theta * (1 - 2 * theta) ** 2
    Z = {m: partition_Z(m, theta) for m in range(2, 32)}
    assert Z[2] == pytest.approx(1 + q * Z[3], rel=1e-12)
    for m in range(3, 31):
        rhs = q * Z[m + 1] + math.fsum(Z[d + 1] * Z[m - d] for d in range(1, m - 1))
        assert Z[m] == pytest.approx(rhs, rel=1e-10)
    if theta == 0.1:
        assert Z[3] == pytest.approx(1.46484375, rel=1e-12)
