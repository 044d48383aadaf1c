"""
Percolation command: survival curves, threshold estimates, interface densities
and the full-map cross-check.
"""
import logging
import time

from app.commands.common import CommandResult, emit, require
from app.engine.percolation import (
    estimate_pc,
    estimate_pu,
    full_map_percolation_check,
    interface_density,
    survival_curve,
)
from app.engine.streams import COLORS, EVENTS, split_stream
from app.errors import DomainError
from app.models import ExperimentConfig
from app.tools.analytic_tools import model_params

logger = logging.getLogger(__name__)

COLUMNS = ["alpha", "p", "cap", "trials", "survival", "rho_hat", "Ek_over_k", "rho_from_ek", "stderr"]
TASKS = ("survival", "pc", "density", "full-map")
FULL_MAP_COLUMNS = ["alpha", "p", "radius", "reach", "walk_survival"]
GRID = [round(0.05 * j, 2) for j in range(21)]


def add_parsers(subparsers, common) -> None:
    p = subparsers.add_parser("percolation", parents=[common], help="Boundary-walk site percolation")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--p", type=float, help="Single p (default: a grid over [0, 1])")
    p.add_argument("--task", choices=TASKS, default="pc")
    p.add_argument("--cap", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--k", type=int, help="Boundary stretch for the density estimator")
    p.add_argument("--radius", type=int, help="Hull radius for the full-map check")


def _row(config, p, survival=None, rho=None, ek=None, stderr=None):
    rho_ek = "" if ek is None else ek / 2.0
    return {"alpha": config.alpha, "p": p, "cap": config.cap, "trials": config.trials,
            "survival": "" if survival is None else survival, "rho_hat": "" if rho is None else rho,
            "Ek_over_k": "" if ek is None else ek, "rho_from_ek": rho_ek,
            "stderr": "" if stderr is None else stderr}


def percolation(config: ExperimentConfig) -> CommandResult:
    started = time.perf_counter()
    require(config, "alpha")
    params = model_params(config.alpha)
    if not params.is_supercritical:
        raise DomainError(f"percolation needs supercritical alpha (> 2/3), got {config.alpha}")
    task = config.task or "pc"
    rng = split_stream(config.seed, 0, EVENTS)
    rows, results = [], {"task": task, "p_c": params.p_c, "p_u": params.p_u}

    if task == "survival":
        ps = [config.p] if config.p is not None else GRID
        for est in survival_curve(params, ps, rng, config.trials, config.cap, i_max=config.i_max):
            rows.append(_row(config, est.p, survival=est.frequency, stderr=est.stderr))
        results["survival"] = {str(r["p"]): r["survival"] for r in rows}
    elif task == "pc":
        pc = estimate_pc(params, rng, config.trials, config.cap, i_max=config.i_max)
        pu = estimate_pu(params, rng, config.trials, config.cap, i_max=config.i_max)
        for est in pc.history:
            rows.append(_row(config, est.p, survival=est.frequency, stderr=est.stderr))
        results.update({"pc_estimate": pc.estimate, "pc_stderr": pc.stderr,
                        "pu_estimate": pu.estimate, "pu_stderr": pu.stderr})
    elif task == "density":
        require(config, "p", "k")
        dens = interface_density(params, config.p, rng, config.k, config.replicas,
                                 cap=config.cap, i_max=config.i_max)
        rows.append(_row(config, config.p, rho=dens.rho_hat, ek=dens.ek_over_k, stderr=dens.rho_stderr))
        results.update(dens.model_dump())
    else:
        require(config, "radius")
        ps = [config.p] if config.p is not None else GRID
        report = full_map_percolation_check(params, ps, split_stream(config.seed, 0, COLORS), config.radius,
                                            config.replicas, trials=config.trials, i_max=config.i_max,
                                            max_steps=config.max_steps, max_vertices=config.max_vertices)
        rows = [{"alpha": config.alpha, "p": p, "radius": config.radius, "reach": reach, "walk_survival": surv}
                for p, reach, surv in zip(report.ps, report.reach, report.walk_survival)]
        results.update(report.model_dump())
        return emit(config, "percolation", FULL_MAP_COLUMNS, rows, results, started,
                    partial=report.truncated_replicas > 0)

    return emit(config, "percolation", COLUMNS, rows, results, started)


HANDLERS = {"percolation": percolation}
