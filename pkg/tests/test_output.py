"""Tests for the CSV and VTK writers."""

import numpy as np

from app.services.dg_core import State
from app.services.output import (
    CONVERGENCE_COLUMNS,
    write_convergence_csv,
    write_csv,
    write_energy_csv,
    write_snapshot,
    write_spectra_csv,
)


def read_lines(path):
    return path.read_text().splitlines()


class TestCsv:

    def test_header_rows_and_comment(self, tmp_path):
        path = write_csv(tmp_path / "out" / "t.csv", ("a", "b"), [(1, 0.5), {"a": 2, "b": True}], comment="done")
        assert read_lines(path) == ["a,b", "1,0.5", "2,1", "# done"]

    def test_floats_read_back_exactly(self, tmp_path):
        value = 0.1 + 0.2
        path = write_energy_csv(tmp_path / "energy.csv", [(np.int64(3), np.float64(value), 1.0 / 3.0)])
        step, time, energy = read_lines(path)[1].split(",")
        assert int(step) == 3
        assert float(time) == value
        assert float(energy) == 1.0 / 3.0

    def test_spectra_sorted_with_summary(self, tmp_path):
        eig = np.array([0.0 + 1.0j, -1.0 + 0.0j, 0.0 - 1.0j])
        path = write_spectra_csv(tmp_path / "spectra.csv", eig, 0.0, 1.0, 0.5)
        lines = read_lines(path)
        assert lines[0] == "re,im"
        assert lines[1:4] == ["-1.0,0.0", "0.0,-1.0", "0.0,1.0"]
        assert lines[4] == "# max_re=0.0 spectral_radius=1.0 tau=0.5"

    def test_convergence_writes_slopes(self, tmp_path):
        row = {name: 1.0 for name in CONVERGENCE_COLUMNS}
        row["N"] = 2
        table, slopes = write_convergence_csv(tmp_path / "convergence.csv", [row], {3: 3.9, 2: 2.95})
        assert read_lines(table)[0] == ",".join(CONVERGENCE_COLUMNS)
        assert read_lines(table)[1].startswith("2,1.0,")
        assert slopes.name == "slopes.csv"
        assert read_lines(slopes) == ["N,slope", "2,2.95", "3,3.9"]


class TestSnapshot:

    def test_snapshot_fields(self, coupled_mesh, tmp_path):
        state = State.zeros(coupled_mesh, time=0.25)
        state.elastic[0] = 2.0
        path = write_snapshot(coupled_mesh, state, tmp_path / "snap.vtk")
        text = path.read_text()
        assert "t=0.25" in text
        for name in ("p", "vx", "vy", "sigma1", "sigma2", "sigma3"):
            assert f"SCALARS {name}" in text
