"""Tests for the skull phantom, boundary records and the time-reversal reconstructions."""

import math

import numpy as np
import pytest

from app.services.dg_core import BCKind, BoundaryCondition, FluxParams, State, WaveOperator
from app.services.materials import isotropic_field
from app.services.mesh import Region, uniform_square_mesh
from app.services.pat import (
    SHEPP_LOGAN,
    BoundaryRecorder,
    MeasurementRecord,
    PhantomSpec,
    ReconstructionError,
    build_pat_problem,
    forward_measure,
    neumann_reconstruct,
    phantom_pressure,
    read_record,
    relative_error,
    skull_region,
    smoothed_indicator,
    time_reverse,
    write_record,
)
from app.services.scenarios import gaussian_pulse
from app.services.timeint import TimeConfig, estimate_dt, integrate
from tests.conftest import all_acoustic


def constant_coefficients(ref, value: float) -> np.ndarray:
    return np.full(ref.num_quad, value) @ ref.project.T


@pytest.fixture(scope="module")
def open_acoustic(ref2):
    """8 x 8 unit-speed fluid with a smooth central pulse as the unknown pressure."""
    mesh = uniform_square_mesh(8, all_acoustic, ref2)
    materials = isotropic_field(mesh, 1.0, 1.0, 1.0, 1.0)
    truth = gaussian_pulse(mesh, center=(0.0, 0.0), width=0.25).nodal_field(mesh, "p")
    return mesh, materials, truth


class TestPhantom:

    def test_indicator_profile(self):
        disk = SHEPP_LOGAN[5]
        assert smoothed_indicator(disk, 0.0, 0.1, band=0.02) == pytest.approx(1.0)
        on_boundary = smoothed_indicator(disk, 0.0, 0.1 + disk.semi_y, band=0.02)
        assert on_boundary == pytest.approx((1.0 - 0.5**4) ** 4)
        assert smoothed_indicator(disk, 0.0, 0.5, band=0.02) == pytest.approx(0.0)

    def test_sharp_indicator(self):
        disk = SHEPP_LOGAN[5]
        assert smoothed_indicator(disk, 0.0, 0.1, band=0.0) == 1.0
        assert smoothed_indicator(disk, 0.0, 0.2, band=0.0) == 0.0

    def test_phantom_values(self):
        spec = PhantomSpec()
        assert phantom_pressure(spec, 0.0, 0.0) == pytest.approx(0.0)
        assert phantom_pressure(spec, 0.0, 0.35) == pytest.approx(0.01)
        assert phantom_pressure(spec, 0.22, 0.0) == pytest.approx(0.02)

    def test_skull_region(self):
        region = skull_region(PhantomSpec())
        assert region(0.0, 0.9) == Region.ELASTIC
        assert region(0.0, 0.0) == Region.ACOUSTIC
        assert region(0.0, 0.99) == Region.ACOUSTIC


class TestBuildProblem:

    def test_coupled_problem(self, ref1):
        problem = build_pat_problem(ref1, 32)
        assert problem.skull.any()
        assert not problem.skull.all()
        np.testing.assert_array_equal(problem.truth[problem.skull], 0.0)
        assert np.abs(problem.truth).max() > 0.0
        assert len(problem.mesh.elastic_ids) == int(problem.skull.sum())

    def test_acoustic_comparison(self, ref1):
        problem = build_pat_problem(ref1, 32, mode="acoustic")
        assert len(problem.mesh.elastic_ids) == 0
        np.testing.assert_allclose(problem.materials.c2[problem.skull], 4.0)
        np.testing.assert_allclose(problem.materials.c2[~problem.skull], 1.0)

    def test_unknown_mode(self, ref1):
        with pytest.raises(ReconstructionError, match="Unknown PAT mode"):
            build_pat_problem(ref1, 4, mode="optical")


class TestMeasurementRecord:

    @pytest.fixture
    def record(self):
        return MeasurementRecord(
            points=np.zeros((2, 2)),
            times=np.array([0.0, 1.0, 2.0]),
            pressure=np.array([[0.0, 0.0], [1.0, 2.0], [3.0, 4.0]]),
            dt=1.0,
            t_final=2.0,
        )

    def test_linear_interpolation(self, record):
        np.testing.assert_allclose(record.at(0.5), [0.5, 1.0])
        np.testing.assert_allclose(record.at(1.5), [2.0, 3.0])
        np.testing.assert_allclose(record.at(1.0), [1.0, 2.0])

    def test_clamped_outside_interval(self, record):
        np.testing.assert_array_equal(record.at(-1.0), [0.0, 0.0])
        np.testing.assert_array_equal(record.at(5.0), [3.0, 4.0])

    def test_file_round_trip(self, record, tmp_path):
        loaded = read_record(write_record(record, tmp_path / "record.bin"))
        np.testing.assert_array_equal(loaded.pressure, record.pressure)
        np.testing.assert_array_equal(loaded.times, record.times)
        assert loaded.t_final == record.t_final
        assert loaded.num_points == 2

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "junk.bin"
        path.write_bytes(b"JUNK" + bytes(64))
        with pytest.raises(ReconstructionError, match="not a measurement record"):
            read_record(path)

    def test_truncated(self, record, tmp_path):
        path = write_record(record, tmp_path / "record.bin")
        path.write_bytes(path.read_bytes()[:-8])
        with pytest.raises(ReconstructionError, match="float64 values"):
            read_record(path)


class TestBoundaryRecorder:

    def test_constant_pressure(self, acoustic_mesh):
        state = State.zeros(acoustic_mesh)
        state.acoustic[0] = constant_coefficients(acoustic_mesh.ref, 1.0)
        recorder = BoundaryRecorder(acoustic_mesh)
        sample = recorder.sample(state)
        assert sample.shape == (recorder.points.shape[0],)
        np.testing.assert_allclose(sample, 1.0, atol=1e-12)

    def test_elastic_faces_record_normal_traction(self, elastic_mesh):
        state = State.zeros(elastic_mesh)
        state.elastic[2] = constant_coefficients(elastic_mesh.ref, 3.0)
        state.elastic[3] = constant_coefficients(elastic_mesh.ref, 3.0)
        np.testing.assert_allclose(BoundaryRecorder(elastic_mesh).sample(state), 3.0, atol=1e-12)

    def test_samples_every_step(self, acoustic_mesh):
        recorder = BoundaryRecorder(acoustic_mesh)
        state = State.zeros(acoustic_mesh)
        for step, t in enumerate((0.0, 0.1, 0.2)):
            state.time = t
            recorder(step, state)
        record = recorder.record()
        assert record.dt == pytest.approx(0.1)
        assert record.t_final == pytest.approx(0.2)
        assert record.pressure.shape == (3, recorder.points.shape[0])


class TestTimeReversal:

    def test_reverses_closed_central_flux_problem(self, ref2):
        """Without dissipation the backward solve retraces the forward one up to time-stepping error."""
        mesh = uniform_square_mesh(4, all_acoustic, ref2)
        materials = isotropic_field(mesh, 1.0, 1.0, 1.0, 1.0)
        flux = FluxParams(0.0, 0.0)
        start = gaussian_pulse(mesh, center=(0.1, -0.1), width=0.5)
        operator = WaveOperator(mesh, materials, flux, boundary=BoundaryCondition(BCKind.DIRICHLET_PRESSURE))
        dt = estimate_dt(mesh, materials, 2, 0.1)
        final = integrate(start, operator, TimeConfig(t_final=0.5, cfl=0.1), mesh, dt=dt)

        back = time_reverse(None, mesh, materials, 0.5, final_state=final, flux=flux, cfl=0.1)
        p0 = start.nodal_field(mesh, "p")
        assert back.time == 0.0
        assert relative_error(mesh, back.nodal_field(mesh, "p"), p0) < 1e-3
        np.testing.assert_allclose(back.acoustic[1:], start.acoustic[1:], atol=1e-3 * np.abs(p0).max())

    def test_final_state_time_mismatch(self, acoustic_mesh):
        materials = isotropic_field(acoustic_mesh, 1.0, 1.0, 1.0, 1.0)
        state = State.zeros(acoustic_mesh, time=0.3)
        with pytest.raises(ReconstructionError, match="expected T"):
            time_reverse(None, acoustic_mesh, materials, 0.5, final_state=state)


class TestNeumannReconstruction:

    @pytest.fixture(scope="class")
    def measured(self, open_acoustic):
        mesh, materials, truth = open_acoustic
        record, _ = forward_measure(truth, mesh, materials, 2.0)
        return record

    def test_record_covers_time_axis(self, measured, open_acoustic):
        mesh = open_acoustic[0]
        assert measured.times[0] == 0.0
        assert measured.t_final == 2.0
        assert measured.num_points == BoundaryRecorder(mesh).points.shape[0]
        assert np.abs(measured.pressure).max() > 0.0

    def test_series_improves_on_time_reversal(self, measured, open_acoustic):
        mesh, materials, truth = open_acoustic
        result = neumann_reconstruct(measured, mesh, materials, 2.0, max_iter=2, truth=truth)
        assert len(result.errors) == 2
        assert result.errors[0] < 0.6
        assert result.errors[1] < result.errors[0]
        assert math.isnan(result.kappa[0])
        assert 0.0 < result.kappa[1] < 1.0
        rows = result.rows()
        assert [r["iteration"] for r in rows] == [0, 1]
        assert rows[1]["relative_error"] == result.errors[1]

    def test_single_iterate_is_time_reversal(self, measured, open_acoustic):
        mesh, materials, truth = open_acoustic
        result = neumann_reconstruct(measured, mesh, materials, 2.0, max_iter=1)
        direct = time_reverse(measured, mesh, materials, 2.0).nodal_field(mesh, "p")
        np.testing.assert_array_equal(result.pressure, direct)
        assert result.errors == []

    def test_rejects_zero_iterations(self, measured, open_acoustic):
        mesh, materials, _ = open_acoustic
        with pytest.raises(ReconstructionError, match="max_iter"):
            neumann_reconstruct(measured, mesh, materials, 2.0, max_iter=0)

    def test_record_horizon_must_match(self, measured, open_acoustic):
        mesh, materials, _ = open_acoustic
        with pytest.raises(ReconstructionError, match="Record ends"):
            time_reverse(measured, mesh, materials, 1.0)

    def test_record_must_match_mesh(self, measured, ref2):
        mesh = uniform_square_mesh(4, all_acoustic, ref2)
        materials = isotropic_field(mesh, 1.0, 1.0, 1.0, 1.0)
        with pytest.raises(ReconstructionError, match="points"):
            time_reverse(measured, mesh, materials, 2.0)
