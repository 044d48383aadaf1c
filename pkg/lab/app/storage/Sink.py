"""
Output files for experiment runs.
Data is written to a temporary file and moved into place only when the run succeeds.
"""
import csv
import json
import logging
import os
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Dict, Iterable, Iterator, List, Mapping, Optional

logger = logging.getLogger(__name__)


class Sink:
    """Row writer bound to an open data file"""

    def __init__(self, handle, columns: Optional[List[str]] = None):
        self.handle = handle
        self.columns = columns
        self.rows = 0
        self._writer = None
        if columns:
            self._writer = csv.DictWriter(handle, fieldnames=columns, extrasaction="raise")
            self._writer.writeheader()

    def write_row(self, row: Mapping[str, Any]) -> None:
        if self._writer is None:
            raise ValueError("this sink has no CSV columns")
        self._writer.writerow(row)
        self.rows += 1

    def write_rows(self, rows: Iterable[Mapping[str, Any]]) -> None:
        for row in rows:
            self.write_row(row)

    def write(self, text: str) -> None:
        """Raw text (edge lists)"""
        self.handle.write(text)


def header_lines(schema: str, version: int, config: Mapping[str, Any]) -> str:
    return f"# schema={schema}/v{version}\n# config={json.dumps(config, sort_keys=True)}\n"


@contextmanager
def open_sink(path: Path, schema: str, config: Mapping[str, Any],
              columns: Optional[List[str]] = None, version: int = 1) -> Iterator[Sink]:
    """
    Context manager for a versioned data file.
    Commits (renames into place) on success and removes the partial file on error.

    Usage:
        with open_sink(path, "hull-stats", config.echo(), columns) as sink:
            sink.write_row({...})
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    handle = open(tmp, "w", newline="", encoding="utf-8")
    try:
        handle.write(header_lines(schema, version, config))
        yield Sink(handle, columns)
        handle.close()
        os.replace(tmp, path)
        logger.info("committed %s", path)
    except BaseException:
        handle.close()
        tmp.unlink(missing_ok=True)
        logger.info("rolled back %s", path)
        raise


def write_summary(path: Path, summary: Dict[str, Any]) -> None:
    """Write a JSON summary atomically"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    try:
        tmp.write_text(json.dumps(summary, indent=2, sort_keys=True, default=str), encoding="utf-8")
        os.replace(tmp, path)
    except BaseException:
        tmp.unlink(missing_ok=True)
        raise
    logger.info("committed %s", path)


def read_data_file(path: Path) -> Dict[str, Any]:
    """
    Parse a CSV data file written through open_sink.

    Returns:
        {'schema': ..., 'config': {...}, 'rows': [dict, ...]}
    """
    with open(path, newline="", encoding="utf-8") as handle:
        schema = handle.readline().strip().split("=", 1)[1]
        config = json.loads(handle.readline().strip().split("=", 1)[1])
        rows = list(csv.DictReader(handle))
    return {"schema": schema, "config": config, "rows": rows}
