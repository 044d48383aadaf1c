import numpy as np
import pytest
from scipy import stats

from app.errors import DomainError, FitError
from app.models import FitMethod
from app.tools.fit_tools import (
    LEVY_SCALE,
    fit_tail,
    ks_distance,
    levy_distance,
    slope_fit,
    tail_ratio,
    truncated_mean_ratio,
)


def test_exponential_tail_slope():
    samples = np.random.default_rng(0).exponential(1.0, 20_000)
    fit = fit_tail(samples, kind="exponential")
    assert fit.method == FitMethod.LOG_LINEAR
    assert fit.estimate == pytest.approx(-1.0, abs=0.05)
    assert fit.stderr > 0


def test_pareto_tail_slope():
    u = np.random.default_rng(1).random(20_000)
    fit = fit_tail(u ** -2.0, kind="power")
    assert fit.method == FitMethod.LOG_LOG
    assert fit.estimate == pytest.approx(-0.5, abs=0.05)
    assert fit.window[0] < fit.window[1]


def test_degenerate_samples():
    with pytest.raises(FitError):
        fit_tail(np.ones(2000))
    with pytest.raises(DomainError):
        fit_tail(np.arange(10))
    with pytest.raises(DomainError):
        fit_tail(np.arange(2000), kind="gaussian")


def test_slope_fit_on_a_line():
    x = np.arange(10)
    fit = slope_fit(x, 2.0 * x + 1.0, FitMethod.LINEAR)
    assert fit.estimate == pytest.approx(2.0)
    assert fit.intercept == pytest.approx(1.0)
    assert fit.n_points == 10
    with pytest.raises(FitError):
        slope_fit([1.0, 1.0, 1.0], [0.0, 1.0, 2.0], FitMethod.LINEAR)


def test_tail_ratio_and_truncated_mean():
    w = np.array([0, 0, 0, 200])
    assert tail_ratio(w, 100).estimate == pytest.approx(2.5)
    assert truncated_mean_ratio(np.array([4, 4, 400]), 100).estimate == pytest.approx(8 / 3 / 10)


def test_ks_distance_small_for_matching_law():
    samples = np.random.default_rng(2).random(5000)
    fit = ks_distance(samples, "uniform")
    assert fit.estimate < 0.04
    assert fit.method == FitMethod.KS


def test_levy_distance():
    samples = stats.levy(scale=LEVY_SCALE).rvs(size=5000, random_state=3)
    assert levy_distance(samples).estimate < 0.03
    assert levy_distance(samples * 4.0).estimate > 0.1
