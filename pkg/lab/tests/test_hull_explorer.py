import numpy as np
import pytest
from scipy import stats

from app.commands.maps import hull_replica
from app.engine.half_plane_map import find_root_cutedges
from app.engine.hull_explorer import (
    HullExplorer,
    boundary_growth_rate,
    cut_edge_steps,
    explore,
    gamma_from_traces,
    hull_at,
    resistance_lower_bound,
    stationary_gamma,
    swallowed_volume_samples,
    volume_growth_rate,
    volume_scaling_samples,
)
from app.engine.replicas import run_replicas
from app.engine.streams import RngStream, split_stream
from app.errors import DomainError, ResourceCapExceeded
from app.models import ExploreMode, FitMethod, HullTrace
from app.tools.analytic_tools import boundary_drift, model_params, stable_normalizers
from app.tools.fit_tools import LEVY_SCALE, fit_tail, levy_distance, slope_fit

CAPS = {"max_steps": 50_000, "max_vertices": 50_000}
# stats mode only counts vertices
STATS_CAPS = {"max_steps": 10 ** 7, "max_vertices": 10 ** 12}


def test_hand_built_cut_edge():
    explorer = HullExplorer(model_params(0.4), RngStream(0), ExploreMode.WITH_GEOMETRY, record_series=True)
    explorer.step(1, True, 0, False)   # (R, 1): the region is bounded by a single edge
    explorer.step(0, False, 0, False)  # alpha step on top of it
    assert explorer.x_series == [1, 2, 3]
    assert explorer.cuts == 1
    assert explorer.hmap.cuts == [(1, (0, 2))]
    assert find_root_cutedges(explorer.hmap) == [(0, 2)]
    explorer.hmap.check_invariants()


def test_stats_and_geometry_modes_agree():
    params = model_params(0.8)
    stats, none = explore(params, 3, split_stream(7, 0), **CAPS)
    geo, hmap = explore(params, 3, split_stream(7, 0), ExploreMode.WITH_GEOMETRY, **CAPS)
    assert none is None
    assert stats.tau == geo.tau
    assert stats.boundary_len == geo.boundary_len
    assert stats.volume == geo.volume
    hmap.check_invariants()


@pytest.mark.parametrize("alpha", [0.0, 0.4, 0.8])
def test_count_identities(alpha):
    trace, _ = explore(model_params(alpha), 3, split_stream(3, 1), record_series=True, **CAPS)
    x = np.asarray(trace.x_series)
    v = np.asarray(trace.v_series)
    s = np.asarray(trace.s_series)
    n = np.arange(x.size)
    assert (v == s + x).all()
    assert (x <= n + 2).all()
    assert np.all(np.diff(trace.tau) > 0)
    for r, t in enumerate(trace.tau):
        assert trace.boundary_len[r] == x[t]
        assert trace.volume[r] == v[t]
    for r, d in enumerate(trace.delta_tau):
        assert trace.boundary_len[r + 1] <= d + 2


def test_first_hull_holds_every_root_face():
    trace, hmap = explore(model_params(0.8), 1, split_stream(4, 0), ExploreMode.WITH_GEOMETRY, **CAPS)
    hull = hull_at(trace, hmap, 1)
    assert 0 not in hmap.frontier_segment()
    assert len(hull.vertices) == trace.volume[1]


@pytest.mark.parametrize("seed", range(5))
def test_explorer_cuts_are_map_cuts(seed):
    trace, hmap = explore(model_params(0.8), 3, split_stream(seed, 0), ExploreMode.WITH_GEOMETRY, **CAPS)
    seen = {frozenset(e) for _, e in hmap.cuts}
    found = {frozenset(e) for e in find_root_cutedges(hmap)}
    assert seen <= found
    assert len(hmap.cuts) == trace.cut_edges[-1] or trace.truncated


def test_same_seed_same_trace():
    params = model_params(0.4)
    a, _ = explore(params, 4, split_stream(9, 2), **CAPS)
    b, _ = explore(params, 4, split_stream(9, 2), **CAPS)
    assert a == b


def test_cap_truncates_without_raising():
    trace, _ = explore(model_params(0.8), 10, RngStream(5), max_steps=50)
    assert trace.truncated
    assert trace.radius < 10


def test_domain():
    with pytest.raises(DomainError):
        explore(model_params(0.4), 0, RngStream(0))
    with pytest.raises(DomainError):
        stationary_gamma(model_params(0.8), 2, 4, RngStream(0))


def test_critical_alpha_explores():
    trace, _ = explore(model_params(2.0 / 3.0), 3, split_stream(2, 0), record_series=True, i_max=10_000, **CAPS)
    assert trace.radius == 3 or trace.truncated
    x = np.asarray(trace.x_series)
    assert (np.asarray(trace.v_series) == np.asarray(trace.s_series) + x).all()
    assert (x <= np.arange(x.size) + 2).all()


def test_resistance_lower_bound():
    trace = HullTrace(alpha=0.4, tau=[0, 1, 2, 3], boundary_len=[1, 2, 3, 4],
                      volume=[1, 2, 3, 4], cut_edges=[0, 0, 0, 0])
    assert resistance_lower_bound(trace) == pytest.approx([0.5, 1.0, 1.5])
    assert trace.delta_tau == [1, 1, 1]


def test_cut_edge_steps():
    trace = HullTrace(alpha=0.4, x_series=[1, 2, 3, 2, 4])
    assert cut_edge_steps(trace) == [1, 3]
    with pytest.raises(DomainError):
        cut_edge_steps(HullTrace(alpha=0.4))


def test_supercritical_boundary_grows_linearly():
    trace, _ = explore(model_params(0.8), 5, split_stream(6, 0), record_series=True, **CAPS)
    fit = boundary_growth_rate(trace)
    assert fit.estimate == pytest.approx(boundary_drift(0.8), abs=0.15)


def test_supercritical_volume_grows_exponentially():
    params = model_params(0.8)
    traces = [explore(params, 4, split_stream(8, j), **CAPS)[0] for j in range(5)]
    fit = volume_growth_rate(traces)
    assert fit.estimate > 0.5
    assert volume_scaling_samples(traces, 2).size == 5


def test_stationary_gamma_subcritical():
    gamma = stationary_gamma(model_params(0.4), 5, 6, RngStream(10), i_max=10 ** 5)
    assert gamma > 0


def test_replicas_do_not_depend_on_worker_count():
    payload = dict(params=model_params(0.8), R=2, seed=13, i_max=10_000, **CAPS)
    serial = run_replicas(hull_replica, 3, workers=1, **payload)
    pooled = run_replicas(hull_replica, 3, workers=2, **payload)
    assert serial == pooled


def _traces(alpha, R, replicas, seed):
    params = model_params(alpha)
    traces = [explore(params, R, split_stream(seed, j), **STATS_CAPS)[0] for j in range(replicas)]
    return [t for t in traces if not t.truncated]


def test_gamma_from_traces():
    done = HullTrace(alpha=0.4, tau=[0, 2, 5, 9, 14], boundary_len=[1] * 5, volume=[1] * 5, cut_edges=[0] * 5)
    short = HullTrace(alpha=0.4, tau=[0, 3], boundary_len=[1, 1], volume=[1, 1], cut_edges=[0, 0], truncated=True)
    assert gamma_from_traces([done, short], 4) == pytest.approx(4.5)
    with pytest.raises(ResourceCapExceeded):
        gamma_from_traces([short], 4)
    with pytest.raises(DomainError):
        gamma_from_traces([done], 1)


def test_swallowed_volume_samples():
    params = model_params(0.3)
    traces = [explore(params, 10 ** 6, split_stream(30, j), record_series=True, max_steps=60,
                      max_vertices=10 ** 12)[0]
              for j in range(4)]
    assert all(t.truncated and len(t.s_series) == 61 for t in traces)
    _, a_n, _ = stable_normalizers(0.3, 50)
    expected = np.array([t.s_series[50] / a_n for t in traces])
    assert swallowed_volume_samples(traces, 50) == pytest.approx(expected)
    with pytest.raises(DomainError):
        swallowed_volume_samples(traces, 61)
    with pytest.raises(DomainError):
        swallowed_volume_samples([HullTrace(alpha=0.3)], 1)


def test_subcritical_boundary_is_tight():
    traces = _traces(0.3, 16, 150, 31)
    assert len(traces) >= 140
    radii = np.arange(6, 17)
    medians = [np.median([t.boundary_len[r] for t in traces]) for r in radii]
    fit = slope_fit(radii, medians, FitMethod.LINEAR)
    assert abs(fit.estimate) < 0.15


def test_cut_edges_by_regime():
    sub = _traces(0.3, 8, 100, 32)
    sup = _traces(0.8, 8, 100, 33)
    assert np.mean([t.cut_edges[8] > 0 for t in sub]) >= 0.95
    assert 5 * np.median([t.cut_edges[8] for t in sup]) <= np.median([t.cut_edges[8] for t in sub])


def test_resistance_bound_slopes():
    def window_slopes(traces, R):
        bounds = np.mean([resistance_lower_bound(t)[:R] for t in traces], axis=0)
        radii = np.arange(1, R + 1)
        half = R // 2
        return (slope_fit(radii[:half], bounds[:half], FitMethod.LINEAR).estimate,
                slope_fit(radii[half:], bounds[half:], FitMethod.LINEAR).estimate)

    early, late = window_slopes(_traces(0.3, 12, 60, 34), 12)
    assert early > 0 and late > 0
    early, late = window_slopes(_traces(0.8, 8, 30, 35), 8)
    assert 0 < late < 0.5 * early


@pytest.mark.slow
def test_subcritical_hull_laws_full_size():
    traces = _traces(0.3, 100, 1200, 36)
    assert np.mean([t.cut_edges[100] > 0 for t in traces]) >= 0.99
    radii = np.arange(10, 101, 5)
    fit = slope_fit(radii, [np.median([t.boundary_len[r] for t in traces]) for r in radii], FitMethod.LINEAR)
    assert abs(fit.estimate) < 3 * fit.stderr + 0.01
    tail = fit_tail([t.boundary_len[100] for t in traces], kind="exponential")
    assert tail.estimate < 0


@pytest.mark.slow
def test_volume_over_r_squared_tail():
    traces = [explore(model_params(0.3), 200, split_stream(37, j), **STATS_CAPS)[0] for j in range(1000)]
    fit = fit_tail(volume_scaling_samples(traces, 200), kind="power")
    assert fit.estimate == pytest.approx(-0.5, abs=0.1)


@pytest.mark.slow
def test_swallowed_volume_levy_median():
    params = model_params(0.3)
    traces = [explore(params, 10 ** 6, split_stream(38, j), record_series=True, max_steps=200,
                      max_vertices=10 ** 12)[0]
              for j in range(2000)]
    scaled = swallowed_volume_samples(traces, 200)
    assert np.median(scaled) == pytest.approx(stats.levy(scale=LEVY_SCALE).median(), rel=0.1)
    assert levy_distance(scaled).estimate < 0.05
