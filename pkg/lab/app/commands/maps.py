"""
Commands that build maps: sample-map, hull-stats, walk.
"""
import logging
import time
from typing import List, Optional, Tuple

import numpy as np

from app.commands.common import CommandResult, data_path, emit, require, summary_path, versions
from app.engine.half_plane_map import HalfPlaneMap, export_edge_list
from app.engine.hull_explorer import (
    boundary_growth_rate,
    explore,
    gamma_from_traces,
    resistance_lower_bound,
    volume_growth_rate,
    volume_scaling_samples,
)
from app.engine.replicas import run_replicas
from app.engine.streams import WALKS, split_stream
from app.engine.walker import (
    displacement_profile,
    return_after_excursion,
    return_probability,
    return_slope,
    run_srw,
)
from app.errors import DomainError, FitError
from app.models import BoundaryMode, ExperimentConfig, ExploreMode, HullTrace, ModelParams, Regime
from app.storage import open_sink, write_summary
from app.tools.analytic_tools import boundary_drift, model_params
from app.tools.fit_tools import MIN_TAIL_SAMPLES, fit_tail

logger = logging.getLogger(__name__)

HULL_COLUMNS = ["replica", "seed", "r", "tau_r", "boundary_len", "volume", "delta_tau",
                "resistance_bound", "iso_ratio", "cut_edges", "truncated"]
WALK_COLUMNS = ["replica", "seed", "walk", "n", "displacement", "returns", "hit_frontier"]
RETURN_MAX_N = 4096  # return-probability series length per map
RETURN_WALKS = 1000
RETURN_TIMES = {2 ** e for e in range(1, 13)}


def add_parsers(subparsers, common) -> None:
    p = subparsers.add_parser("sample-map", parents=[common], help="Build hulls and export the edge list")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--radius", type=int, required=True)

    p = subparsers.add_parser("hull-stats", parents=[common], help="Hull boundary and volume per radius")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--radius", type=int, required=True)

    p = subparsers.add_parser("walk", parents=[common], help="Simple random walks on built hulls")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--radius", type=int, required=True)
    p.add_argument("--n", type=int, required=True, help="Steps per walk")
    p.add_argument("--samples", type=int, help="Walks per map")
    p.add_argument("--boundary", choices=["absorb", "reflect"])


def hull_replica(replica: int, params: ModelParams, R: int, seed: int, i_max: int,
                 max_steps: int, max_vertices: int) -> HullTrace:
    trace, _ = explore(params, R, split_stream(seed, replica), i_max=i_max,
                       max_steps=max_steps, max_vertices=max_vertices)
    return trace


def hull_rows(replica: int, seed: int, trace: HullTrace) -> List[dict]:
    deltas = trace.delta_tau
    bound = [0.0] + resistance_lower_bound(trace)  # indexed by radius; radius 0 has no annulus
    iso = trace.iso_ratio
    rows = []
    for r in range(trace.radius + 1):
        rows.append({
            "replica": replica, "seed": seed, "r": r, "tau_r": trace.tau[r],
            "boundary_len": trace.boundary_len[r], "volume": trace.volume[r],
            "delta_tau": deltas[r] if r < len(deltas) else "",
            "resistance_bound": bound[r], "iso_ratio": iso[r],
            "cut_edges": trace.cut_edges[r], "truncated": int(trace.truncated),
        })
    return rows


def hull_stats(config: ExperimentConfig) -> CommandResult:
    started = time.perf_counter()
    require(config, "alpha", "radius")
    params = model_params(config.alpha)
    R = config.radius
    traces = run_replicas(hull_replica, config.replicas, config.workers, params=params, R=R,
                          seed=config.seed, i_max=config.i_max, max_steps=config.max_steps,
                          max_vertices=config.max_vertices)
    rows = [row for j, t in enumerate(traces) for row in hull_rows(j, config.seed, t)]
    complete = [t for t in traces if not t.truncated]
    results = {
        "replicas": len(traces),
        "truncated_replicas": len(traces) - len(complete),
        "truncated_steps": int(sum(t.truncated_steps for t in traces)),
    }
    if complete:
        results["median_boundary_len"] = float(np.median([t.boundary_len[R] for t in complete]))
        results["median_volume"] = float(np.median([t.volume[R] for t in complete]))
        results["cut_edge_fraction"] = float(np.mean([t.cut_edges[R] > 0 for t in complete]))
        results["median_cut_edges"] = float(np.median([t.cut_edges[R] for t in complete]))
        scaled = volume_scaling_samples(complete, R)
        results["median_volume_over_r2"] = float(np.median(scaled))
        if params.regime == Regime.SUBCRITICAL and R >= 2:
            results["gamma"] = gamma_from_traces(complete, R)
            if scaled.size >= MIN_TAIL_SAMPLES:
                try:
                    results["volume_over_r2_tail_slope"] = fit_tail(scaled, kind="power").estimate
                except FitError as exc:
                    logger.warning("volume tail fit skipped: %s", exc)
        if R >= 3:
            try:
                fit = volume_growth_rate(complete, (max(1, R // 2), R))
                results["log_volume_slope"] = fit.estimate
                results["log_volume_slope_stderr"] = fit.stderr
            except FitError as exc:
                logger.warning("volume growth fit skipped: %s", exc)
    if params.regime == Regime.SUPERCRITICAL:
        # replica 0 again with its per-step series; same stream, same trace
        first, _ = explore(params, R, split_stream(config.seed, 0), i_max=config.i_max, record_series=True,
                           max_steps=config.max_steps, max_vertices=config.max_vertices)
        if not first.truncated and len(first.x_series) >= 3:
            results["boundary_growth_rate"] = boundary_growth_rate(first).estimate
            results["boundary_drift"] = boundary_drift(params.alpha)
    partial = results["truncated_replicas"] > 0
    return emit(config, "hull-stats", HULL_COLUMNS, rows, results, started, partial)


def _build_map(config: ExperimentConfig, params: ModelParams, replica: int) -> Tuple[HullTrace, HalfPlaneMap]:
    return explore(params, config.radius, split_stream(config.seed, replica), ExploreMode.WITH_GEOMETRY,
                   i_max=config.i_max, max_steps=config.max_steps, max_vertices=config.max_vertices)


def sample_map(config: ExperimentConfig) -> CommandResult:
    started = time.perf_counter()
    require(config, "alpha", "radius")
    params = model_params(config.alpha)
    trace, hmap = _build_map(config, params, 0)
    path = data_path(config, ".txt")
    with open_sink(path, "sample-map", config.echo()) as sink:
        export_edge_list(hmap, sink)
    results = {
        "radius_reached": trace.radius,
        "truncated": trace.truncated,
        "vertices": hmap.n_vertices,
        "faces": len(hmap.faces),
        "steps": hmap.steps,
        "tau": trace.tau,
        "boundary_len": trace.boundary_len,
        "volume": trace.volume,
    }
    write_summary(summary_path(path), {
        "schema": "sample-map/v1",
        "config": config.echo(),
        "seed": config.seed,
        "versions": versions(),
        "timing_seconds": round(time.perf_counter() - started, 3),
        "partial": trace.truncated,
        "results": results,
    })
    return CommandResult(results=results, partial=trace.truncated, data_path=path)


def walk_replica(replica: int, config: ExperimentConfig, params: ModelParams) -> Tuple[Optional[dict], List[dict]]:
    trace, hmap = _build_map(config, params, replica)
    if trace.truncated:
        return None, []
    mode = BoundaryMode(config.boundary)
    walks = split_stream(config.seed, replica, WALKS)
    rows = []
    for j in range(config.samples):
        rec = run_srw(hmap, config.n, walks.child(j), mode)
        for t, d in zip(rec.times, rec.displacement):
            rows.append({"replica": replica, "seed": config.seed, "walk": j, "n": t, "displacement": d,
                         "returns": rec.returns_to_root, "hit_frontier": int(rec.hit_frontier)})
    times = [t for t in (2 ** e for e in range(4, 20)) if t <= config.n]
    profile = displacement_profile(hmap, times, config.samples, walks.child(config.samples), mode) if times else []
    summary = {"times": times, "profile": profile, "vertices": hmap.n_vertices}

    walkers = min(config.samples, RETURN_WALKS)
    series = return_probability(hmap, min(config.n, RETURN_MAX_N), walkers, walks.child(config.samples + 1), mode)
    even = {int(t): float(p) for t, p in zip(series.even_times, series.even) if t in RETURN_TIMES}
    summary["return_probability"] = even
    try:
        summary["return_slope"] = return_slope(series).estimate
    except FitError as exc:
        logger.warning("return slope skipped on replica %d: %s", replica, exc)
    try:
        fraction, reached = return_after_excursion(hmap, max(1, config.radius // 2), walkers,
                                                   walks.child(config.samples + 2))
        summary["return_after_excursion"] = fraction
        summary["excursion_walks"] = reached
    except DomainError as exc:
        logger.warning("excursion check skipped on replica %d: %s", replica, exc)
    return summary, rows


def walk(config: ExperimentConfig) -> CommandResult:
    started = time.perf_counter()
    require(config, "alpha", "radius", "n")
    params = model_params(config.alpha)
    out = run_replicas(walk_replica, config.replicas, config.workers, config=config, params=params)
    rows = [row for _, rs in out for row in rs]
    built = [s for s, _ in out if s is not None]
    results = {"maps": len(built), "truncated_maps": len(out) - len(built), "profiles": built}
    if rows:
        hits = {(r["replica"], r["walk"]): r["hit_frontier"] for r in rows}
        results["frontier_hit_fraction"] = float(np.mean(list(hits.values())))
    excursions = [s["return_after_excursion"] for s in built if s.get("excursion_walks")]
    if excursions:
        results["return_after_excursion"] = float(np.mean(excursions))
    return emit(config, "walk", WALK_COLUMNS, rows, results, started, partial=len(built) < len(out))


HANDLERS = {
    "sample-map": sample_map,
    "hull-stats": hull_stats,
    "walk": walk,
}
