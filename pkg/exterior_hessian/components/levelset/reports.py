"""
CSV tables. Each file starts with one comment line naming the table and its
version, followed by a fixed header row:

    # exterior-hessian <table> v<version>
"""
import csv
import logging
import os
from typing import Any, Dict, Iterable, List, Optional, Sequence

from .types import AreaBound, InequalityReport, MonotoneSeries

logger = logging.getLogger(__name__)

TABLE_VERSION = 1

SERIES_COLUMNS = ["t", "I", "I_shifted", "area", "area_ratio"]
INEQUALITY_COLUMNS = ["b", "lhs", "rhs", "slack", "passed"]
DIAGNOSTICS_COLUMNS = ["radius", "value_scaled", "green_gap", "gradient_scaled", "hessian_scaled", "P",
                       "radial_derivative_scaled", "gamma_min", "subsolution_gap", "barrier_gap"]
DECAY_COLUMNS = ["quantity", "fitted_slope", "expected_slope", "relative_error", "within_tolerance"]
ORDERING_COLUMNS = ["eps_lower", "eps_upper", "worst_violation", "holds"]


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_table(path: str, table: str, columns: Sequence[str], rows: Iterable[Sequence[Any]],
                force: bool = False) -> str:
    """
    Write one versioned CSV table.

    Raises:
        FileExistsError: `path` exists and force is False
    """
    if os.path.exists(path) and not force:
        raise FileExistsError(f"{path} exists; pass --force to overwrite")
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as handle:
        handle.write(f"# exterior-hessian {table} v{TABLE_VERSION}\n")
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(v) for v in row])
    logger.info(f"[+] Wrote {table} table: {path}")
    return path


def write_series_csv(path: str, series: MonotoneSeries, area_rows: Optional[List[AreaBound]] = None,
                     force: bool = False) -> str:
    ratios = [row.ratio for row in area_rows] if area_rows else [None] * len(series.ts)
    rows = zip(series.ts, series.values, series.shifted_values, series.areas, ratios)
    return write_table(path, "series", SERIES_COLUMNS, rows, force)


def write_inequality_csv(path: str, reports: Sequence[InequalityReport], force: bool = False) -> str:
    rows = ([r.b, r.lhs, r.rhs, r.slack, r.passed] for r in reports)
    return write_table(path, "inequality", INEQUALITY_COLUMNS, rows, force)


def write_diagnostics_csv(path: str, report, force: bool = False) -> str:
    rows = ([getattr(row, column) for column in DIAGNOSTICS_COLUMNS] for row in report.rows)
    return write_table(path, "diagnostics", DIAGNOSTICS_COLUMNS, rows, force)


def write_decay_csv(path: str, fits: Sequence[Dict[str, Any]], force: bool = False) -> str:
    rows = ([fit[column] for column in DECAY_COLUMNS] for fit in fits)
    return write_table(path, "decay", DECAY_COLUMNS, rows, force)


def write_ordering_csv(path: str, rows: Sequence[Dict[str, Any]], force: bool = False) -> str:
    return write_table(path, "ordering", ORDERING_COLUMNS, ([r[c] for c in ORDERING_COLUMNS] for r in rows), force)
