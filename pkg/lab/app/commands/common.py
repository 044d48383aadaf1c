"""
Pieces shared by the command routers: results, output paths and run summaries.
"""
import time
from pathlib import Path
from typing import Any, Dict, List, Mapping, NamedTuple, Optional

import networkx
import numpy
import pydantic
import scipy

from app import __version__
from app.config import get_settings
from app.errors import DomainError
from app.models import ExperimentConfig
from app.storage import open_sink, write_summary


class CommandResult(NamedTuple):
    """What a command hands back to main: summary aggregates and whether output is partial"""
    results: Dict[str, Any]
    partial: bool = False
    stdout: Optional[str] = None
    data_path: Optional[Path] = None


SCHEMA_VERSION = 1


def versions() -> Dict[str, str]:
    return {
        "lab": __version__,
        "numpy": numpy.__version__,
        "scipy": scipy.__version__,
        "networkx": networkx.__version__,
        "pydantic": pydantic.VERSION,
    }


def data_path(config: ExperimentConfig, suffix: str = ".csv") -> Path:
    """Explicit --output, else <output_dir>/<subcommand>-s<seed><suffix>"""
    if config.output is not None:
        return Path(config.output)
    return get_settings().output_dir / f"{config.subcommand}-s{config.seed}{suffix}"


def summary_path(path: Path) -> Path:
    return path.with_suffix(".json")


def emit(config: ExperimentConfig, schema: str, columns: List[str], rows: List[Mapping[str, Any]],
         results: Dict[str, Any], started: float, partial: bool = False) -> CommandResult:
    """
    Write the data file (CSV, or rows inside the summary for --format json)
    and the JSON summary next to it.
    """
    path = data_path(config, ".csv" if config.format == "csv" else ".json")
    summary = {
        "schema": f"{schema}/v{SCHEMA_VERSION}",
        "config": config.echo(),
        "seed": config.seed,
        "versions": versions(),
        "timing_seconds": round(time.perf_counter() - started, 3),
        "partial": partial,
        "results": results,
    }
    if config.format == "csv":
        with open_sink(path, schema, config.echo(), columns, SCHEMA_VERSION) as sink:
            sink.write_rows(rows)
        write_summary(summary_path(path), summary)
    else:
        summary["columns"] = columns
        summary["rows"] = [dict(r) for r in rows]
        write_summary(path, summary)
    return CommandResult(results=results, partial=partial, data_path=path)


def summary_only(config: ExperimentConfig, schema: str, results: Dict[str, Any],
                 started: float) -> None:
    """JSON summary for commands whose primary result goes to stdout (only with --output)"""
    if config.output is None:
        return
    write_summary(Path(config.output), {
        "schema": f"{schema}/v{SCHEMA_VERSION}",
        "config": config.echo(),
        "seed": config.seed,
        "versions": versions(),
        "timing_seconds": round(time.perf_counter() - started, 3),
        "results": results,
    })


def require(config: ExperimentConfig, *fields: str) -> None:
    missing = [f"--{f.replace('_', '-')}" for f in fields if getattr(config, f) is None]
    if missing:
        raise DomainError(f"{config.subcommand} needs {', '.join(missing)}")
