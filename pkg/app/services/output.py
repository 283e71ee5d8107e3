"""CSV and VTK artifacts written by the CLI commands."""

import csv
import logging
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from app.services.dg_core import State
from app.services.mesh import Mesh, write_vtk

logger = logging.getLogger(__name__)

ENERGY_COLUMNS = ("step", "time", "energy")
SPECTRA_COLUMNS = ("re", "im")
CONVERGENCE_COLUMNS = ("N", "h", "p", "u1", "u2", "v1", "v2", "sigma1", "sigma2", "sigma3", "total")
SLOPE_COLUMNS = ("N", "slope")
PAT_COLUMNS = ("iteration", "relative_error", "kappa_est")
CONSISTENCY_COLUMNS = ("N", "h", "residual")
SNAPSHOT_FIELDS = ("p", "vx", "vy", "sigma1", "sigma2", "sigma3")


def _cell(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path: str | Path, columns: Sequence[str], rows: Iterable, comment: str | None = None) -> Path:
    """
    Header row plus one line per row; floats are written with repr so they read back exactly.

    Rows may be mappings keyed by column or plain sequences in column order.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            values = [row[c] for c in columns] if isinstance(row, dict) else list(row)
            writer.writerow([_cell(v) for v in values])
            count += 1
        if comment:
            fh.write(f"# {comment}\n")
    logger.info(f"Wrote {count} rows to {path}")
    return path


def write_energy_csv(path: str | Path, rows: Iterable[tuple[int, float, float]]) -> Path:
    return write_csv(path, ENERGY_COLUMNS, rows)


def write_spectra_csv(path: str | Path, eigenvalues: np.ndarray, max_real: float, spectral_radius: float, tau: float) -> Path:
    """Eigenvalues sorted by (re, im) with a trailing summary comment."""
    eig = np.asarray(eigenvalues)
    order = np.lexsort((eig.imag, eig.real))
    rows = ((float(e.real), float(e.imag)) for e in eig[order])
    summary = f"max_re={float(max_real)!r} spectral_radius={float(spectral_radius)!r} tau={float(tau)!r}"
    return write_csv(path, SPECTRA_COLUMNS, rows, comment=summary)


def write_convergence_csv(path: str | Path, rows: list[dict], slopes: dict[int, float]) -> tuple[Path, Path]:
    """convergence.csv plus slopes.csv next to it."""
    path = Path(path)
    table = write_csv(path, CONVERGENCE_COLUMNS, rows)
    slope_file = write_csv(path.with_name("slopes.csv"), SLOPE_COLUMNS, sorted(slopes.items()))
    return table, slope_file


def write_consistency_csv(path: str | Path, rows: list[dict]) -> Path:
    return write_csv(path, CONSISTENCY_COLUMNS, rows)


def write_pat_errors_csv(path: str | Path, rows: list[dict]) -> Path:
    return write_csv(path, PAT_COLUMNS, rows)


def write_snapshot(mesh: Mesh, state: State, path: str | Path, fields: Sequence[str] = SNAPSHOT_FIELDS) -> Path:
    """VTK snapshot with velocities merged across regions; absent fields are zero."""
    data = {name: state.nodal_field(mesh, name) for name in fields}
    return write_vtk(mesh, path, data, title=f"t={float(state.time)!r}")


def write_pressure_field(mesh: Mesh, pressure: np.ndarray, path: str | Path, name: str = "pressure") -> Path:
    return write_vtk(mesh, path, {name: pressure}, title=name)
