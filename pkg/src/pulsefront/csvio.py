"""Plot-ready CSV output.

Field values are written in positional notation with 9 significant digits.
Retarded times use the shortest exact decimal so that nodes 1e-10 apart stay
distinct and strictly increasing.
"""
from __future__ import annotations

import csv
import math
from decimal import Decimal
from pathlib import Path

import numpy as np

from .diagnostics import CausalityReport
from .model import DelayReport, PropagationResult

PULSE_COLUMNS = ("tau", "field_in", "field_vacuum", "field_medium",
                 "intensity_medium_normalized", "rho_gg")
FRONT_COLUMNS = ("tau", "lab_time_out", "intensity_vacuum_normalized",
                 "intensity_medium_normalized")
DELAY_COLUMNS = ("scenario", "model", "pulse_peak", "front_tau_in", "front_tau_out",
                 "front_lab_traversal_s", "front_lab_traversal_norm", "peak_tau_out",
                 "peak_tau_ref", "peak_delay_norm", "peak_delay_s", "energy_transmission",
                 "causality", "note")
CAUSALITY_COLUMNS = ("z_cm", "front_tau", "nonzero_past_cutoff", "jump_at_cutoff", "passed")
SCAN_COLUMNS = ("amplitude", "peak_delay_norm", "peak_delay_s", "energy_transmission")


def fmt_value(x) -> str:
    x = float(x)
    if not math.isfinite(x):
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    return format(Decimal(f"{x:.8e}"), "f")


def fmt_tau(x) -> str:
    return np.format_float_positional(float(x), unique=True, trim="-")


def slice_name(z: float) -> str:
    return f"pulse_{float(z):g}.csv"


def _normalized_intensity(line) -> np.ndarray:
    inten = np.abs(np.asarray(line, dtype=float)) ** 2
    peak = inten.max()
    return inten / peak if peak > 0 else inten


def _write(path: Path, header, rows) -> Path:
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    return path


def write_pulse_slices(result: PropagationResult, out_dir: Path,
                       reference: PropagationResult | None = None) -> list[Path]:
    tau = result.grid.tau_nodes
    field_in = result.input_field
    # free propagation is the identity in the retarded frame, at every z
    vac = field_in if reference is None else reference.output_field
    paths = []
    for i, z in enumerate(result.z_slices):
        medium = result.field[i]
        inten = _normalized_intensity(medium)
        rho = result.population[i]
        rows = (
            (fmt_tau(tau[j]), fmt_value(field_in[j]), fmt_value(vac[j]), fmt_value(medium[j]),
             fmt_value(inten[j]), fmt_value(rho[j]))
            for j in range(tau.size)
        )
        paths.append(_write(out_dir / slice_name(z), PULSE_COLUMNS, rows))
    return paths


def front_rows(result: PropagationResult, reference: PropagationResult | None = None,
               row_dtau: float | None = None, before: int = 4, after: int = 1):
    """Rows around the cutoff spaced ``row_dtau`` apart (default: the fine step).

    Each row holds the retarded time, the lab-frame arrival time at the exit
    face (tau plus the transit time at c) and both normalized output intensities.
    """
    grid = result.grid
    tau = grid.tau_nodes
    T = grid.cutoff_tau
    row_dtau = grid.fine_dtau if row_dtau is None else row_dtau
    vac = result.input_field if reference is None else reference.output_field
    i_vac = _normalized_intensity(vac)
    i_med = _normalized_intensity(result.output_field)
    shift = result.medium.front_traversal_norm
    rows = []
    for k in range(-before, after + 1):
        target = T + k * row_dtau
        j = int(np.argmin(np.abs(tau - target)))
        if abs(tau[j] - target) > 1e-3 * row_dtau:
            raise ValueError(
                f"no grid node near tau={target!r}; refine the grid around the cutoff "
                f"or pick a row spacing that is a multiple of fine_dtau"
            )
        rows.append((float(tau[j]), float(tau[j]) + shift, float(i_vac[j]), float(i_med[j])))
    return rows


def write_front_report(result, out_dir: Path, reference=None, row_dtau=None) -> Path:
    rows = [(fmt_tau(t), fmt_tau(t_lab), fmt_value(v), fmt_value(m))
            for t, t_lab, v, m in front_rows(result, reference, row_dtau)]
    return _write(out_dir / "front_report.csv", FRONT_COLUMNS, rows)


def write_delay_report(report: DelayReport, out_dir: Path, *, scenario: str, model: str,
                       pulse_peak: float, causality_passed: bool) -> Path:
    row = (
        scenario, model, fmt_value(pulse_peak), fmt_tau(report.front_tau_in),
        fmt_tau(report.front_tau_out), fmt_value(report.front_lab_traversal_s),
        fmt_value(report.front_lab_traversal_norm), fmt_value(report.peak_tau_out),
        fmt_value(report.peak_tau_ref), fmt_value(report.peak_delay_norm),
        fmt_value(report.peak_delay_s), fmt_value(report.energy_transmission),
        "pass" if causality_passed else "fail", report.note,
    )
    return _write(out_dir / "delay_report.csv", DELAY_COLUMNS, [row])


def write_causality(report: CausalityReport, out_dir: Path) -> Path:
    rows = []
    for z, front in report.fronts.items():
        rows.append((
            fmt_value(z), "" if front is None else fmt_tau(front), report.leaks[z],
            fmt_value(report.jumps[z]) if z in report.jumps else "",
            "pass" if report.passed else "fail",
        ))
    return _write(out_dir / "causality.csv", CAUSALITY_COLUMNS, rows)


def write_scan(rows, out_dir: Path) -> Path:
    return _write(out_dir / "scan.csv", SCAN_COLUMNS,
                  [tuple(fmt_value(v) for v in r) for r in rows])


def emit_csv(result: PropagationResult, delay_report: DelayReport | None, out_dir,
             *, reference: PropagationResult | None = None, scenario: str = "",
             causality: CausalityReport | None = None,
             table_row_dtau: float | None = None) -> list[Path]:
    """Write every per-run CSV file into ``out_dir`` and return their paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = write_pulse_slices(result, out_dir, reference)
    paths.append(write_front_report(result, out_dir, reference, table_row_dtau))
    if causality is not None:
        paths.append(write_causality(causality, out_dir))
    if delay_report is not None:
        paths.append(write_delay_report(
            delay_report, out_dir, scenario=scenario, model=result.medium.model.value,
            pulse_peak=result.pulse.peak_amplitude,
            causality_passed=True if causality is None else causality.passed,
        ))
    return paths


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]
