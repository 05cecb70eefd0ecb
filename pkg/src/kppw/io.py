"""File formats: snapshot CSVs, flat key-value reports, sweep summaries.

Snapshot files are `snap_<index>.csv` with header `t,x,u1,...,uN` and one
row per node; all numbers carry 17 significant digits, so reruns are
byte-identical. The frozen back cells dropped by a moving window are stored
once, at their final extent, in `frozen_back.csv`.
"""

import os
import re

import numpy as np

from .diagnostics import DiagnosticsReport
from .pde import Field, Grid1D


def fmt(x) -> str:
    return f"{float(x):.17g}"


def fmt_vec(v) -> str:
    return ", ".join(fmt(x) for x in np.atleast_1d(v))


# --- snapshots ----------------------------------------------------------------

def write_snapshot_csv(path: str, fld: Field):
    n = fld.n
    x = fld.grid.x()
    with open(path, "w") as fh:
        fh.write("t,x," + ",".join(f"u{i + 1}" for i in range(n)) + "\n")
        for j in range(fld.grid.nx):
            cols = [fmt(fld.t), fmt(x[j])] + [fmt(fld.values[i, j]) for i in range(n)]
            fh.write(",".join(cols) + "\n")


def write_run(outdir: str, snapshots: list[Field], report: DiagnosticsReport | None = None,
              config_text: str | None = None):
    """Write snap_<i>.csv files plus report.txt / config.txt / frozen_back.csv."""
    os.makedirs(outdir, exist_ok=True)
    for k, fld in enumerate(snapshots):
        write_snapshot_csv(os.path.join(outdir, f"snap_{k}.csv"), fld)
    final = snapshots[-1]
    if final.frozen_back.size:
        x0 = final.grid.x_left - final.grid.dx * final.window_offset
        xs = x0 + final.grid.dx * np.arange(final.frozen_back.shape[1])
        with open(os.path.join(outdir, "frozen_back.csv"), "w") as fh:
            fh.write("x," + ",".join(f"u{i + 1}" for i in range(final.n)) + "\n")
            for j in range(final.frozen_back.shape[1]):
                cols = [fmt(xs[j])] + [fmt(final.frozen_back[i, j]) for i in range(final.n)]
                fh.write(",".join(cols) + "\n")
    if report is not None:
        with open(os.path.join(outdir, "report.txt"), "w") as fh:
            fh.write(format_report(report))
    if config_text is not None:
        with open(os.path.join(outdir, "config.txt"), "w") as fh:
            fh.write(config_text)


def read_run(outdir: str) -> list[Field]:
    """Rebuild Field snapshots from a run directory.

    The frozen back cells (final extent) are attached to every snapshot, so
    back-state diagnostics of earlier snapshots use the final frozen record.
    """
    paths = []
    for name in os.listdir(outdir):
        m = re.fullmatch(r"snap_(\d+)\.csv", name)
        if m:
            paths.append((int(m.group(1)), os.path.join(outdir, name)))
    if not paths:
        raise FileNotFoundError(f"no snap_<index>.csv files in {outdir!r}")
    paths.sort()
    frozen = np.empty((0, 0))
    frozen_path = os.path.join(outdir, "frozen_back.csv")
    if os.path.exists(frozen_path):
        raw = np.loadtxt(frozen_path, delimiter=",", skiprows=1, ndmin=2)
        frozen = raw[:, 1:].T.copy()
    fields = []
    for _, path in paths:
        raw = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        t = float(raw[0, 0])
        x = raw[:, 1]
        grid = Grid1D(x_left=float(x[0]), dx=float(x[1] - x[0]), nx=x.size)
        values = np.ascontiguousarray(raw[:, 2:].T)
        f_attach = frozen if frozen.size and frozen.shape[0] == values.shape[0] else np.empty((values.shape[0], 0))
        fields.append(Field(t=t, grid=grid, values=values, frozen_back=f_attach))
    return fields


# --- reports ------------------------------------------------------------------

def format_report(report: DiagnosticsReport) -> str:
    """Flat `key = value` text; vector values are comma-separated."""
    lines = []
    if report.measured_speed is not None:
        lines.append(f"measured_speed = {fmt(report.measured_speed)}")
    if report.edge is not None:
        lines.append(f"mu_hat = {fmt(report.edge.mu_hat)}")
        lines.append(f"edge_direction = {fmt_vec(report.edge.direction_hat)}")
        lines.append(f"edge_r_squared = {fmt(report.edge.r_squared)}")
        lines.append(f"edge_window = {fmt_vec(report.edge.window)}")
    if report.back is not None:
        lines.append(f"back_state = {fmt_vec(report.back)}")
    if report.collinearity is not None:
        lines.append(f"collinearity = {fmt(report.collinearity)}")
    lines.append(f"plateau_count = {len(report.plateaus)}")
    for k, p in enumerate(report.plateaus):
        lines.append(f"plateau_{k + 1}_interval = {fmt_vec(p.interval)}")
        lines.append(f"plateau_{k + 1}_level = {fmt_vec(p.level)}")
        lines.append(f"plateau_{k + 1}_deviation = {fmt(p.deviation)}")
    if report.bump_amplitude is not None:
        lines.append(f"bump_amplitude = {fmt(report.bump_amplitude)}")
        lines.append(f"bump_length = {fmt(report.bump_length)}")
    if report.front is not None:
        lines.append(f"front_component = {report.front.component}")
        lines.append(f"front_times = {fmt_vec(report.front.times)}")
        lines.append(f"front_positions = {fmt_vec(report.front.positions)}")
    return "\n".join(lines) + "\n"


# --- sweep summaries -------------------------------------------------------------

def format_sweep_csv(records, n_components: int = 2) -> str:
    back_cols = ",".join(f"back_u{i + 1}" for i in range(n_components))
    lines = [f"eta,c_star_eta,measured_speed,bump_amplitude,bump_length,{back_cols},tag"]
    for rec in records:
        speed = fmt(rec.measured_speed) if rec.measured_speed is not None else "nan"
        cols = [
            fmt(rec.eta),
            fmt(rec.c_star_eta),
            speed,
            fmt(rec.bump_amplitude),
            fmt(rec.bump_length),
        ]
        cols += [fmt(v) for v in rec.back_state]
        cols.append(rec.tag.value)
        lines.append(",".join(cols))
    return "\n".join(lines) + "\n"


def write_sweep_csv(path: str, records, n_components: int = 2):
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w") as fh:
        fh.write(format_sweep_csv(records, n_components))
