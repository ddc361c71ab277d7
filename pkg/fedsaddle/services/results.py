"""CSV, summary and constraint-report writers."""

import csv
import logging
from pathlib import Path
from typing import List, Mapping, Optional, Sequence

from fedsaddle.models import ConstraintReport, RoundRecord, RunSummary, SpeedupCell
from fedsaddle.services.metrics import smooth

logger = logging.getLogger(__name__)

CSV_HEADER = [
    "round",
    "samples_per_client",
    "comm_sessions",
    "grad_norm_phi_sq",
    "grad_norm_x_sq",
    "grad_norm_y_sq",
    "f_value",
    "smoothed_grad_norm_phi_sq",
]


def _cell(value: Optional[float]) -> str:
    return "" if value is None else repr(float(value))


def _preamble(handle, echo: Optional[Mapping[str, str]]) -> None:
    for key, value in (echo or {}).items():
        handle.write(f"# {key}={value}\n")


def write_csv(
    records: Sequence[RoundRecord],
    path: Path,
    smooth_window: int = 5,
    echo: Optional[Mapping[str, str]] = None,
) -> Path:
    """
    Write per-round metrics as CSV.

    The resolved configuration goes first as ``# key=value`` lines. Floats are
    written with repr so they round-trip exactly; missing metrics are empty.

    Args:
        records: Evaluated round records (may be empty)
        path: Destination file
        smooth_window: Trailing window for the smoothed Phi column
        echo: Configuration to embed

    Returns:
        The written path
    """
    phi = [r.grad_norm_phi_sq for r in records]
    smoothed: List[Optional[float]] = [None] * len(records)
    if records and all(value is not None for value in phi):
        smoothed = smooth(phi, smooth_window)

    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        _preamble(f, echo)
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for record, smoothed_phi in zip(records, smoothed):
            writer.writerow(
                [
                    record.t,
                    _cell(record.samples_per_client),
                    record.comm_sessions,
                    _cell(record.grad_norm_phi_sq),
                    _cell(record.grad_norm_x_sq),
                    _cell(record.grad_norm_y_sq),
                    _cell(record.f_value),
                    _cell(smoothed_phi),
                ]
            )
    logger.info(f"Wrote {len(records)} rows to {path}")
    return path


def write_summary(summary: RunSummary, path: Path, echo: Optional[Mapping[str, str]] = None) -> Path:
    """Plain-text run summary; wall time is the last line."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fields = summary.model_dump(mode="json", exclude={"wall_seconds"})
    with open(path, "w", encoding="utf-8", newline="") as f:
        _preamble(f, echo)
        for key, value in fields.items():
            f.write(f"{key}: {'' if value is None else value}\n")
        f.write(f"wall_seconds: {summary.wall_seconds:.3f}\n")
    return path


def write_constraint_report(report: ConstraintReport, path: Path) -> Path:
    """Machine-readable JSON constraint report."""
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(report.model_dump_json(indent=2) + "\n", encoding="utf-8")
    return path


def write_speedup_csv(
    cells: Sequence[SpeedupCell],
    m_values: Sequence[int],
    K_values: Sequence[int],
    path: Path,
    echo: Optional[Mapping[str, str]] = None,
) -> Path:
    """Rounds-to-threshold matrix: one row per m, one column per K."""
    lookup = {(cell.m, cell.K): cell for cell in cells}
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        _preamble(f, echo)
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["m"] + [f"K={K}" for K in K_values])
        for m in m_values:
            row = [str(m)]
            for K in K_values:
                cell = lookup.get((m, K))
                if cell is None or cell.status == "failed":
                    row.append("failed")
                elif cell.rounds_to_threshold is None:
                    row.append("none")
                else:
                    row.append(str(cell.rounds_to_threshold))
            writer.writerow(row)
    return path
