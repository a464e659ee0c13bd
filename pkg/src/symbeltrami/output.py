"""Versioned, deterministic output files.

Every file written by the command line embeds its schema version and the
full run configuration: JSON files as top-level keys, CSV and gnuplot files
as ``#`` comment lines. JSON uses sorted keys and fixed indentation so
identical configurations give byte-identical files.
"""

from __future__ import annotations

import csv
import io
import json
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

OUT_ENV = "SYMBELTRAMI_OUT"
DEFAULT_OUT = "symbeltrami_out"


@dataclass(frozen=True)
class RunConfig:
    """Parameters of one command-line run."""

    command: str
    symmetry: str | None = None
    route: str | None = None
    N: int | None = None
    h: float = 1e-3
    tol: float = 1e-10
    grid: int | None = None
    thresholds: dict = field(default_factory=dict)
    out_dir: str = DEFAULT_OUT
    seed: int = 0
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("h", "tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        for name in ("N", "grid"):
            v = getattr(self, name)
            if v is not None and v <= 0:
                raise ValueError(f"{name} must be positive")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")

    def to_dict(self) -> dict:
        return _plain(asdict(self))


def resolve_out_dir(cli_value: str | None) -> str:
    if cli_value:
        return cli_value
    return os.environ.get(OUT_ENV, DEFAULT_OUT)


def _plain(obj):
    """Convert numpy scalars/arrays and tuples to JSON-native types."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, float) and not np.isfinite(obj):
        return str(obj)
    return obj


def dumps(payload: dict) -> str:
    return json.dumps(_plain(payload), sort_keys=True, indent=2) + "\n"


def write_json(path, schema: str, config: RunConfig, payload: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    doc = {"schema": schema, "run_config": config.to_dict(), **payload}
    path.write_text(dumps(doc))
    return path


def _header_lines(schema: str, config: RunConfig, notes: Sequence[str] = ()) -> list[str]:
    lines = [f"# schema: {schema}", "# run_config: " + json.dumps(config.to_dict(), sort_keys=True)]
    lines += [f"# {n}" for n in notes]
    return lines


def write_csv(path, schema: str, config: RunConfig, header: Sequence[str], rows, notes: Sequence[str] = ()) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    buf = io.StringIO()
    for line in _header_lines(schema, config, notes):
        buf.write(line + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(x) for x in row])
    path.write_text(buf.getvalue())
    return path


def _fmt(x: Any) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def read_csv(path):
    """Rows of a CSV written by :func:`write_csv` (comment lines skipped)."""
    with open(path) as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.reader(lines)
    header = next(reader)
    return header, [row for row in reader]


def write_gnuplot(path, schema: str, config: RunConfig, data_file: str, columns: tuple[int, int], title: str, group_col: int | None = None) -> Path:
    """Plot script for a CSV data file (comma separated, ``#`` comments)."""
    path = Path(path)
    lines = _header_lines(schema, config)
    lines += [
        "set datafile separator ','",
        "set key off",
        f"set title {json.dumps(title)}",
        "set size square",
        f"set xlabel 'column {columns[0]}'",
        f"set ylabel 'column {columns[1]}'",
    ]
    color = f":{group_col}" if group_col else ""
    style = "points pt 7 ps 0.3" + (" lc variable" if group_col else "")
    lines.append(f"plot {json.dumps(data_file)} every ::1 using {columns[0]}:{columns[1]}{color} with {style}")
    path.write_text("\n".join(lines) + "\n")
    return path
