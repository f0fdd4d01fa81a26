"""
CSV emission for reports, diagnostics and density grids

Floats are written in shortest round-trip form so identical results give
byte-identical files.
"""

import csv
import logging
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from db.models import ConvergenceReport
from density.models import DensityGrid

logger = logging.getLogger(__name__)

REPORT_COLUMNS = ('tau', 'kl', 'kl_stderr', 'w1', 'w1_stderr')


def format_value(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def write_rows(path: str, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    """Write a header plus rows of numbers"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', newline='') as fh:
        writer = csv.writer(fh, lineterminator='\n')
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_value(v) for v in row])
    logger.info(f"Wrote {path}")
    return path


def write_report_csv(path: str, report: ConvergenceReport) -> Path:
    """tau,kl,kl_stderr,w1,w1_stderr; one row per step size"""
    return write_rows(path, REPORT_COLUMNS, ([getattr(r, c) for c in REPORT_COLUMNS] for r in report.rows))


def write_grid_csv(path: str, grid: DensityGrid) -> Path:
    """Node coordinates and value per row"""
    axes = ['x'] if grid.dim == 1 else [f'x{i + 1}' for i in range(grid.dim)]
    nodes = grid.nodes()
    values = grid.values.ravel()
    return write_rows(path, axes + ['value'], (list(node) + [v] for node, v in zip(nodes, values)))
