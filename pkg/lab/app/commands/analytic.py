"""
Commands backed by exact formulas: constants, enumerate, tails.
"""
import json
import logging
import math
import time

import numpy as np
from scipy import stats

from app.commands.common import CommandResult, emit, require, summary_only
from app.engine.replicas import run_replicas
from app.engine.step_sampler import residual_mass, sample_W_batch
from app.engine.streams import EVENTS, split_stream
from app.errors import DomainError, FitError
from app.models import ExperimentConfig, Regime
from app.tools.analytic_tools import (
    boundary_drift,
    c_alpha,
    log_phi,
    model_params,
    phi,
    stable_normalizers,
    tail_constant,
)
from app.tools.fit_tools import LEVY_SCALE, fit_tail, levy_distance, tail_ratio, truncated_mean_ratio

logger = logging.getLogger(__name__)

TAIL_POINTS = (10, 100, 1_000, 10_000)
LEVY_STEPS = 100  # W draws per scaled sum S_n


def add_parsers(subparsers, common) -> None:
    p = subparsers.add_parser("constants", parents=[common], help="Derived constants for one alpha")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--p", type=float, help="Also report the percolation drift at this p")

    p = subparsers.add_parser("enumerate", parents=[common], help="Exact triangulation counts phi(n, m)")
    p.add_argument("--m", type=int, required=True)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--n", type=int)
    group.add_argument("--n-max", type=int, dest="n_max")

    p = subparsers.add_parser("tails", parents=[common], help="Tail of W = Y + I_{Y+1} (subcritical)")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--samples", type=int)


def constants(config: ExperimentConfig) -> CommandResult:
    started = time.perf_counter()
    require(config, "alpha")
    params = model_params(config.alpha)
    out = {
        "alpha": params.alpha,
        "regime": params.regime.value,
        "beta": params.beta,
        "q": params.q,
        "theta": params.theta,
        "p_c": params.p_c,
        "p_u": params.p_u,
        "decay": params.decay,
    }
    if params.regime == Regime.SUPERCRITICAL:
        out["boundary_drift"] = boundary_drift(params.alpha)
        if config.p is not None:
            out["perc_drift"] = params.alpha * config.p - 0.5 * (params.alpha - out["boundary_drift"])
    elif config.p is not None:
        raise DomainError("the percolation drift is defined for supercritical alpha only")
    if params.regime == Regime.SUBCRITICAL:
        out["c_alpha"] = c_alpha(params.alpha)
        out["tail_constant"] = tail_constant(params.alpha)
    summary_only(config, "constants", out, started)
    return CommandResult(results=out, stdout=json.dumps(out, indent=2, sort_keys=True))


def enumerate_counts(config: ExperimentConfig) -> CommandResult:
    started = time.perf_counter()
    require(config, "m")
    if config.n is not None:
        value = phi(config.n, config.m)
        out = {"n": config.n, "m": config.m, "phi": str(value)}
        summary_only(config, "enumerate", out, started)
        return CommandResult(results=out, stdout=str(value))
    require(config, "n_max")
    rows = [{"n": n, "m": config.m, "phi": str(phi(n, config.m)), "log_phi": float(log_phi(n, config.m))}
            for n in range(config.n_max + 1)]
    return emit(config, "enumerate", ["n", "m", "phi", "log_phi"], rows,
                {"m": config.m, "n_max": config.n_max}, started)


def tails_replica(replica: int, params, seed: int, size: int, i_max: int) -> np.ndarray:
    return sample_W_batch(params, split_stream(seed, replica, EVENTS), size, i_max=i_max)


def tails(config: ExperimentConfig) -> CommandResult:
    started = time.perf_counter()
    require(config, "alpha")
    params = model_params(config.alpha)
    if params.regime != Regime.SUBCRITICAL:
        raise DomainError("tails is defined for subcritical alpha only")
    per = -(-config.samples // config.replicas)
    chunks = run_replicas(tails_replica, config.replicas, config.workers,
                          params=params, seed=config.seed, size=per, i_max=config.i_max)
    w = np.concatenate(chunks)[:config.samples]
    c = c_alpha(params.alpha)
    rows = []
    for x in TAIL_POINTS:
        ratio = tail_ratio(w, x)
        trunc = truncated_mean_ratio(w, x)
        rows.append({"x": x, "tail_ratio": ratio.estimate, "tail_stderr": ratio.stderr,
                     "truncated_mean_ratio": trunc.estimate, "c_alpha": c})
    results = {
        "c_alpha": c,
        "samples": int(w.size),
        "zero_fraction": float(np.mean(w == 0)),
        "residual_mass": residual_mass(params, config.i_max),
        "tail_ratio": {str(r["x"]): r["tail_ratio"] for r in rows},
    }
    try:
        fit = fit_tail(w[w > 0], kind="power")
        results["power_slope"] = fit.estimate
        results["power_slope_stderr"] = fit.stderr
    except (FitError, DomainError) as exc:
        logger.warning("tail fit skipped: %s", exc)
    results["relative_error_at_max_x"] = abs(rows[-1]["tail_ratio"] - c) / c if not math.isnan(c) else None
    sums = w[: w.size // LEVY_STEPS * LEVY_STEPS].reshape(-1, LEVY_STEPS).sum(axis=1)
    if sums.size >= 2:
        _, a_n, _ = stable_normalizers(params.alpha, LEVY_STEPS)
        levy = levy_distance(sums / a_n)
        results["levy"] = {
            "n": LEVY_STEPS,
            "sums": int(sums.size),
            "median": float(np.median(sums / a_n)),
            "reference_median": float(stats.levy(scale=LEVY_SCALE).median()),
            "ks_distance": levy.estimate,
            "ks_pvalue": levy.intercept,
        }
    return emit(config, "tails", ["x", "tail_ratio", "tail_stderr", "truncated_mean_ratio", "c_alpha"],
                rows, results, started)


HANDLERS = {
    "constants": constants,
    "enumerate": enumerate_counts,
    "tails": tails,
}
