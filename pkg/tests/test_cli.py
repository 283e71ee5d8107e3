"""End-to-end runs of the wadg-wave subcommands on tiny problems."""

import json

import pytest

from app.main import build_parser, main


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestParser:

    def test_command_required(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args([])

    def test_unknown_preset(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args(["simulate", "--preset", "lamb"])


class TestSimulate:

    def test_random_media_run(self, tmp_path, capsys):
        code, out, _ = run(
            capsys, "simulate", "--preset", "random", "--N", "1", "--n", "2",
            "--t-final", "0.05", "--no-vtk", "--output-dir", str(tmp_path),
        )
        assert code == 0
        summary = json.loads(out)
        assert summary["preset"] == "random"
        assert summary["t_final"] == pytest.approx(0.05)
        assert summary["final_energy"] <= summary["initial_energy"]
        assert (tmp_path / "energy.csv").exists()
        assert not list(tmp_path.glob("*.vtk"))

    def test_snapshot_written_at_final_time(self, tmp_path, capsys):
        code, out, _ = run(
            capsys, "simulate", "--preset", "scholte", "--N", "1", "--n", "2",
            "--t-final", "0.02", "--output-dir", str(tmp_path),
        )
        assert code == 0
        assert len(list(tmp_path.glob("snapshot_*.vtk"))) == 1

    def test_config_file_with_flag_override(self, tmp_path, capsys):
        config = tmp_path / "run.json"
        config.write_text(json.dumps({"simulate": {"N": 2, "mesh": {"n": 2}, "material": {"preset": "random"}}}))
        code, out, _ = run(
            capsys, "--config", str(config), "simulate", "--N", "1",
            "--t-final", "0.01", "--no-vtk", "--output-dir", str(tmp_path),
        )
        assert code == 0
        summary = json.loads(out)
        assert summary["N"] == 1
        assert summary["num_elements"] == 8

    def test_missing_config(self, tmp_path, capsys):
        code, _, err = run(capsys, "--config", str(tmp_path / "absent.json"), "simulate")
        assert code == 2
        assert "wadg-wave simulate: FileNotFoundError" in err

    def test_unknown_config_key(self, tmp_path, capsys):
        config = tmp_path / "run.json"
        config.write_text(json.dumps({"simulate": {"order": 3}}))
        code, _, err = run(capsys, "--config", str(config), "simulate")
        assert code == 2
        assert "ValidationError" in err

    def test_mesh_file_with_exact_preset(self, fixture_path, capsys):
        code, _, err = run(
            capsys, "simulate", "--preset", "scholte", "--N", "1", "--mesh", str(fixture_path("unit_square.mesh")),
        )
        assert code == 2
        assert "ScenarioError" in err


class TestConvergence:

    def test_small_study(self, tmp_path, capsys):
        code, out, _ = run(
            capsys, "convergence", "--scenario", "scholte", "--N", "1", "--n", "2", "4",
            "--t-final", "0.05", "--output-dir", str(tmp_path),
        )
        assert code == 0
        summary = json.loads(out)
        assert len(summary["rows"]) == 2
        assert "1" in summary["slopes"]
        assert (tmp_path / "convergence.csv").exists()
        assert (tmp_path / "slopes.csv").exists()

    def test_needs_two_levels(self, tmp_path, capsys):
        code, _, err = run(capsys, "convergence", "--n", "4", "--output-dir", str(tmp_path))
        assert code == 2
        assert "divisions" in err


class TestSpectra:

    def test_two_penalties(self, tmp_path, capsys):
        code, out, _ = run(
            capsys, "spectra", "--preset", "random", "--N", "1", "--n", "2",
            "--tau", "0", "1", "--output-dir", str(tmp_path),
        )
        assert code == 0
        summary = json.loads(out)
        assert [s["tau"] for s in summary["spectra"]] == [0.0, 1.0]
        assert summary["spectra"][0]["antisymmetry_defect"] < 1e-10
        assert summary["spectra"][1]["antisymmetry_defect"] is None
        assert summary["radius_ratio"] > 0
        assert (tmp_path / "spectra_tau0.csv").exists()
        assert (tmp_path / "spectra_tau1.csv").exists()

    def test_dof_cap(self, tmp_path, capsys, monkeypatch):
        monkeypatch.setenv("WADG_DOF_CAP", "10")
        code, _, err = run(capsys, "spectra", "--N", "1", "--n", "2", "--output-dir", str(tmp_path))
        assert code == 2
        assert "OperatorSizeError" in err


class TestPat:

    def test_small_reconstruction(self, tmp_path, capsys):
        code, out, _ = run(
            capsys, "pat", "--N", "1", "--n", "8", "--t-final", "0.5", "--max-iter", "2",
            "--no-vtk", "--output-dir", str(tmp_path),
        )
        assert code == 0
        summary = json.loads(out)
        assert summary["mode"] == "coupled"
        assert [it["iteration"] for it in summary["iterations"]] == [0, 1]
        assert (tmp_path / "record_coupled.bin").exists()
        assert (tmp_path / "pat_errors_coupled.csv").exists()
