"""Tests for operator assembly, spectra, discrete energy and convergence helpers."""

import math

import numpy as np
import pytest

from app.services.analysis import (
    CONSISTENCY_TOL,
    EnergyNorm,
    EnergyTrace,
    OperatorSizeError,
    SpectrumError,
    antisymmetry_defect,
    assemble_operator,
    consistency_residual,
    convergence_study,
    discrete_energy,
    dof_index,
    energy_weight_matrix,
    fit_rate,
    operator_matrix,
    spectrum,
)
from app.services.dg_core import (
    BCKind,
    BoundaryCondition,
    FluxParams,
    GeometryMode,
    State,
    WaveOperator,
    num_dofs,
)
from app.services.materials import isotropic_field, random_media_field
from app.services.mesh import uniform_square_mesh, warp_mesh
from app.services.scenarios import build_setup, gaussian_pulse, initial_state
from app.services.timeint import TimeConfig, estimate_dt, integrate
from tests.conftest import all_acoustic


@pytest.fixture(scope="module")
def two_triangles(ref1):
    mesh = uniform_square_mesh(1, all_acoustic, ref1)
    return mesh, isotropic_field(mesh, 1.0, 1.0, 1.0, 1.0)


@pytest.fixture(scope="module")
def small_coupled(ref2):
    mesh = uniform_square_mesh(2, lambda x, y: 0 if y > 0 else 1, ref2)
    return mesh, random_media_field(mesh, seed=9)


def random_state(mesh, seed: int = 0) -> State:
    return State.from_vector(mesh, np.random.default_rng(seed).standard_normal(num_dofs(mesh)))


class TestOperatorMatrix:

    def test_two_element_acoustic_size(self, two_triangles):
        """Two acoustic triangles at N = 1 give an 18 x 18 operator."""
        mesh, field = two_triangles
        L = operator_matrix(WaveOperator(mesh, field))
        assert L.matrix.shape == (18, 18)
        assert L.size == 18
        assert L.consistency < CONSISTENCY_TOL

    def test_thread_count_does_not_change_result(self, small_coupled):
        mesh, field = small_coupled
        op = WaveOperator(mesh, field)
        serial = operator_matrix(op, num_threads=1)
        threaded = operator_matrix(op, num_threads=3)
        np.testing.assert_array_equal(serial.matrix, threaded.matrix)

    def test_dof_cap(self, small_coupled):
        mesh, field = small_coupled
        with pytest.raises(OperatorSizeError):
            operator_matrix(WaveOperator(mesh, field), dof_cap=10)

    def test_dof_cap_from_environment(self, small_coupled, monkeypatch):
        monkeypatch.setenv("WADG_DOF_CAP", "10")
        mesh, field = small_coupled
        with pytest.raises(OperatorSizeError, match="cap of 10"):
            assemble_operator(mesh, field)

    def test_dof_index_labels(self, small_coupled):
        mesh, _ = small_coupled
        index = dof_index(mesh)
        assert len(index.field) == num_dofs(mesh)
        assert index.field[0] == "p"
        assert index.field[-1] == "sigma3"
        assert set(index.element[index.field == "v1"]) == set(mesh.elastic_ids.tolist())


class TestSpectrum:

    def test_rotation_generator(self):
        result = spectrum(np.array([[0.0, 1.0], [-1.0, 0.0]]))
        assert result.max_real == pytest.approx(0.0, abs=1e-15)
        assert result.spectral_radius == pytest.approx(1.0)

    def test_rejects_non_finite(self):
        with pytest.raises(SpectrumError):
            spectrum(np.array([[np.nan, 0.0], [0.0, 1.0]]))

    @pytest.mark.parametrize("tau", [0.5, 1.0])
    @pytest.mark.parametrize("warped", [False, True])
    def test_penalty_operator_is_stable(self, small_coupled, tau, warped):
        """No eigenvalue of the penalized operator on random coupled media has a positive real part beyond roundoff."""
        mesh, _ = small_coupled
        mode = GeometryMode.AFFINE
        if warped:
            mesh, mode = warp_mesh(mesh), GeometryMode.STRONG_WEAK
        field = random_media_field(mesh, seed=9)
        result = spectrum(assemble_operator(mesh, field, FluxParams(tau, tau), mode))
        assert result.max_real <= 1e-6 * result.spectral_radius


class TestEnergyStructure:

    @pytest.mark.parametrize("warped", [False, True])
    def test_central_flux_is_skew_in_energy_norm(self, small_coupled, warped):
        """With tau = 0 the weighted operator W L is antisymmetric."""
        mesh, _ = small_coupled
        mode = GeometryMode.AFFINE
        if warped:
            mesh, mode = warp_mesh(mesh), GeometryMode.STRONG_WEAK
        field = random_media_field(mesh, seed=9)
        L = assemble_operator(mesh, field, FluxParams(0.0, 0.0), mode)
        assert antisymmetry_defect(L, energy_weight_matrix(mesh, field)) < 1e-10

    def test_penalty_flux_dissipates(self, small_coupled):
        """The symmetric part of W L is negative semidefinite for tau > 0."""
        mesh, field = small_coupled
        L = assemble_operator(mesh, field, FluxParams(1.0, 1.0)).matrix
        B = energy_weight_matrix(mesh, field) @ L
        eig = np.linalg.eigvalsh(0.5 * (B + B.T))
        assert eig.max() <= 1e-10 * np.abs(B).max()
        assert eig.min() < -1e-8 * np.abs(B).max()

    def test_weight_matrix_is_spd(self, small_coupled):
        mesh, field = small_coupled
        W = energy_weight_matrix(mesh, field)
        np.testing.assert_allclose(W, W.T, atol=1e-12 * np.abs(W).max())
        assert np.linalg.eigvalsh(0.5 * (W + W.T)).min() > 0

    def test_dense_matches_blockwise_energy(self, small_coupled):
        mesh, field = small_coupled
        state = random_state(mesh)
        y = state.to_vector()
        norm = EnergyNorm(mesh, field)
        assert y @ norm.dense() @ y == pytest.approx(norm.energy(state), rel=1e-12)

    def test_forms_agree_for_constant_media(self, coupled_mesh):
        """On affine elements with constant media the adjusted and quadrature energies coincide."""
        field = isotropic_field(coupled_mesh, 1.3, 2.0, 1.0, 1.7)
        state = random_state(coupled_mesh, seed=3)
        wadg = discrete_energy(state, coupled_mesh, field)
        quadrature = discrete_energy(state, coupled_mesh, field, form="quadrature")
        assert wadg == pytest.approx(quadrature, rel=1e-10)

    def test_unknown_energy_form(self, coupled_mesh):
        field = isotropic_field(coupled_mesh, 1.0, 1.0, 1.0, 1.0)
        with pytest.raises(ValueError):
            discrete_energy(State.zeros(coupled_mesh), coupled_mesh, field, form="kinetic")


class TestEnergyTrace:

    def test_energy_does_not_grow(self, ref2):
        """A pulse in random media with zero boundary pressure loses energy every step."""
        setup = build_setup("random", ref2, 4, seed=1)
        op = WaveOperator(setup.mesh, setup.materials, FluxParams(1.0, 1.0), setup.mode, setup.boundary)
        trace = EnergyTrace(setup.mesh, setup.materials)
        dt = estimate_dt(setup.mesh, setup.materials, 2, 0.5)
        integrate(initial_state(setup), op, TimeConfig(t_final=0.5), setup.mesh, dt=dt, on_step=trace)
        assert trace.rows[0][0] == 0
        assert trace.max_relative_increase() < 1e-8
        assert trace.rows[-1][2] < trace.rows[0][2]

    def test_absorbing_boundary_drains_energy(self, ref2):
        """A centered pulse leaves through absorbing walls with under 5% of its energy remaining."""
        mesh = uniform_square_mesh(8, all_acoustic, ref2)
        field = isotropic_field(mesh, 1.0, 1.0, 1.0, 1.0)
        op = WaveOperator(mesh, field, FluxParams(1.0, 1.0), boundary=BoundaryCondition(BCKind.ABSORBING))
        start = gaussian_pulse(mesh, center=(0.0, 0.0), width=0.25)
        dt = estimate_dt(mesh, field, 2, 0.5)
        final = integrate(start, op, TimeConfig(t_final=4.0), mesh, dt=dt)
        ratio = discrete_energy(final, mesh, field) / discrete_energy(start, mesh, field)
        assert ratio < 0.05


class TestRates:

    def test_exact_power_law(self):
        h = [0.5, 0.25, 0.125]
        assert fit_rate(h, [x**3 for x in h]) == pytest.approx(3.0)

    def test_uses_finest_levels(self):
        h = [1.0, 0.5, 0.25, 0.125]
        errors = [10.0, 0.25, 0.0625, 0.015625]
        assert fit_rate(h, errors) == pytest.approx(2.0)

    def test_single_level(self):
        assert math.isnan(fit_rate([0.5], [0.1]))

    def test_convergence_study_rows(self):
        rows, slopes = convergence_study("scholte", [1], [2, 4], FluxParams(), t_final=0.05)
        assert [r["h"] for r in rows] == [1.0, 0.5]
        assert {"N", "h", "p", "sigma3", "total"} <= set(rows[0])
        assert math.isfinite(slopes[1])

    @pytest.mark.parametrize("scenario, degrees", [("scholte", [1, 2]), ("snell", [1])])
    def test_exact_solution_errors_converge_at_order_n_plus_1(self, scenario, degrees):
        """Errors against the exact interface solutions fall at rate N+1."""
        _, slopes = convergence_study(scenario, degrees, [16, 32], FluxParams(), t_final=0.1)
        for N in degrees:
            assert slopes[N] > N + 0.5, (N, slopes[N])

    def test_consistency_residual_decreases(self):
        rows, rate = consistency_residual("scholte", 2, [8, 16], FluxParams())
        assert rows[1]["residual"] < rows[0]["residual"] / 2.0
        assert rate > 1.0
