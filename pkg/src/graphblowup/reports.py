"""Deterministic CSV/JSON report files.

Every CSV starts with a header row naming its columns. Floats are written
with ``repr`` so re-running an identical config gives byte-identical files.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


@dataclass
class Table:
    columns: list
    rows: list


@dataclass
class Results:
    """What one command produced. ``name`` is the stem of the summary file."""

    name: str
    summary: dict
    tables: dict = field(default_factory=dict)
    texts: dict = field(default_factory=dict)


def _plain(x):
    """Convert numpy scalars, tuples and non-finite floats for JSON."""
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, np.ndarray)):
        return [_plain(v) for v in x]
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer, int)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else None
    return x


def _cell(x):
    if x is None:
        return ""
    if isinstance(x, (np.floating, float)):
        return repr(float(x))
    if isinstance(x, (np.integer,)):
        return str(int(x))
    return str(x)


def write_csv(path: Path, table: Table) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(table.columns)
        for row in table.rows:
            w.writerow([_cell(x) for x in row])


def emit_reports(results: Results, outdir) -> list[Path]:
    """Write tables as ``<table>.csv``, texts verbatim and ``<name>_summary.json``."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []
    for name, table in results.tables.items():
        path = outdir / f"{name}.csv"
        write_csv(path, table)
        written.append(path)
    for name, text in results.texts.items():
        path = outdir / name
        path.write_text(text)
        written.append(path)
    summary = outdir / f"{results.name}_summary.json"
    summary.write_text(json.dumps(_plain(results.summary), indent=2, sort_keys=True) + "\n")
    written.append(summary)
    return written
