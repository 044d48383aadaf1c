import logging

import numpy as np
import pytest

from app.engine.percolation import (
    _infinite_clusters,
    estimate_pc,
    estimate_pu,
    full_map_percolation_check,
    increment_sample,
    interface_density,
    interface_walk,
    interface_walks,
    root_cluster_walk,
    root_cluster_walks,
    survival_curve,
)
from app.engine.streams import RngStream
from app.errors import DomainError
from app.models import PercOutcome
from app.tools.analytic_tools import analytic_drifts, model_params

SUPER = model_params(0.8)


def test_subcritical_alpha_rejected():
    with pytest.raises(DomainError):
        root_cluster_walk(model_params(0.4), 0.5, RngStream(0), 10)
    with pytest.raises(DomainError):
        interface_walk(model_params(2.0 / 3.0), 0.5, RngStream(0), 10)
    with pytest.raises(DomainError):
        root_cluster_walks(SUPER, 1.5, RngStream(0), 10, 10)


def test_increment_mean_is_percolation_drift():
    inc = increment_sample(SUPER, 0.5, RngStream(1), 200_000)
    assert inc.mean() == pytest.approx(analytic_drifts(0.8, 0.5).perc_drift, abs=0.015)


def test_survival_is_monotone_in_p():
    ps = [0.0, 0.05, 0.3, 0.6, 0.9, 1.0]
    curve = survival_curve(SUPER, ps, RngStream(2), trials=400, cap=40)
    freqs = [est.frequency for est in curve]
    assert freqs[0] == 0.0
    assert all(a <= b for a, b in zip(freqs, freqs[1:]))
    assert freqs[-1] > 0.3


def test_single_walk():
    survived, steps = root_cluster_walk(SUPER, 1.0, RngStream(3), 5)
    assert steps >= 1
    survived, _ = root_cluster_walk(SUPER, 0.0, RngStream(3), 5)
    assert not survived


def test_estimate_pc_quick():
    est = estimate_pc(SUPER, RngStream(4), trials=200, cap=20, tol=0.05)
    lo, hi = est.bracket
    assert lo <= est.estimate <= hi
    assert hi - lo <= 0.1
    assert est.history


@pytest.mark.slow
def test_thresholds_full_size():
    est = estimate_pc(SUPER, RngStream(5), trials=2000, cap=200)
    assert est.estimate == pytest.approx(SUPER.p_c, abs=0.05)
    pu = estimate_pu(SUPER, RngStream(6), trials=2000, cap=200)
    assert pu.estimate == pytest.approx(SUPER.p_u, abs=0.05)


@pytest.mark.slow
@pytest.mark.parametrize("alpha", [0.8, 0.75])
def test_pc_within_two_hundredths(alpha):
    params = model_params(alpha)
    est = estimate_pc(params, RngStream(23), trials=4000, cap=2000)
    assert est.estimate == pytest.approx(params.p_c, abs=0.02)


@pytest.mark.slow
def test_survival_either_side_of_pc():
    below, above = survival_curve(SUPER, [SUPER.p_c - 0.05, SUPER.p_c + 0.05], RngStream(24),
                                  trials=4000, cap=2000)
    assert below.frequency < 0.02
    assert above.frequency > 0.05


def test_interface_walk_all_black():
    runs = interface_walks(SUPER, 1.0, RngStream(7), 200, cap=20)
    assert all(f.outcome == PercOutcome.WHITE_DIED for f in runs)


def test_interface_walk_outcomes():
    runs = interface_walks(SUPER, 0.5, RngStream(8), 300, cap=15)
    for f in runs:
        assert f.outcome is not None
        assert f.step_count >= 1
        if f.infinite:
            assert min(f.black_len, f.white_len) > 15
    assert any(f.infinite for f in runs)


def test_interface_density():
    dens = interface_density(SUPER, 0.5, RngStream(9), k=60, replicas=10, cap=20)
    assert 0.0 < dens.rho_hat <= 0.5
    assert dens.max_wb_gap <= 1
    assert dens.ek_over_k >= 0.0
    assert dens.rho_from_ek == pytest.approx(dens.ek_over_k / 2.0)
    # W + B = E + 1 in every replica
    assert dens.wk_inf_over_k + dens.bk_inf_over_k == pytest.approx(dens.ek_over_k + 1.0 / 60)


@pytest.mark.parametrize("left_black, first_black, expected", [
    ([], True, (0, 1)),
    ([], False, (1, 0)),
    ([False], True, (1, 1)),
    ([True, False], False, (1, 2)),
    ([False, True, False], True, (2, 2)),
])
def test_infinite_clusters_alternate(left_black, first_black, expected):
    w, b = _infinite_clusters(left_black, first_black)
    assert (w, b) == expected
    assert w + b == len(left_black) + 1


def test_interface_density_estimators_agree():
    dens = interface_density(SUPER, 0.5, RngStream(21), k=200, replicas=20, cap=200)
    assert dens.rho_from_ek == pytest.approx(dens.rho_hat, rel=0.25)
    assert dens.wk_inf_over_k - dens.rho_from_ek == pytest.approx(0.0, abs=1.0 / 200)
    assert dens.max_wb_gap <= 1


@pytest.mark.slow
def test_interface_density_full_size():
    dens = interface_density(SUPER, 0.5, RngStream(22), k=1000, replicas=20, cap=1000)
    assert dens.rho_from_ek == pytest.approx(dens.rho_hat, rel=0.15)
    assert dens.max_wb_gap <= 1


def test_interface_density_warns_outside_window(caplog):
    with caplog.at_level(logging.WARNING):
        interface_density(SUPER, 0.05, RngStream(10), k=10, replicas=2, cap=10)
    assert "coexistence window" in caplog.text


def test_full_map_check_extremes():
    report = full_map_percolation_check(SUPER, [0.0, 1.0], RngStream(11), R=2, replicas=3, trials=100,
                                        max_steps=20_000, max_vertices=20_000)
    assert report.truncated_replicas == 0
    assert report.reach == [0.0, 1.0]
    assert report.walk_survival[0] == 0.0
    assert np.all(np.diff(report.walk_survival) >= 0)
