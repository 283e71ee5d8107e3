"""Tests for LSERK time stepping, step size estimation and the point source."""

import math

import numpy as np
import pytest

from app.services.dg_core import ACOUSTIC_FIELDS, State, WaveOperator, num_dofs
from app.services.materials import isotropic_field
from app.services.timeint import (
    IntegrationError,
    RickerSource,
    TimeConfig,
    estimate_dt,
    integrate,
    ricker,
    ricker_source,
    with_sources,
)


def decay(t, y):
    return -y


def ones_state(mesh) -> State:
    return State.from_vector(mesh, np.ones(num_dofs(mesh)))


class TestRicker:

    def test_peak_at_delay(self):
        assert ricker(2.0, 0.5, 2.0) == pytest.approx(1.0)

    def test_symmetric_about_delay(self):
        assert ricker(1.3, 0.8, 2.0) == pytest.approx(ricker(2.7, 0.8, 2.0))

    def test_vectorized(self):
        values = RickerSource((0.0, 0.0), 1.0, 1.0, amplitude=2.0)(np.array([1.0, 5.0]))
        assert values[0] == pytest.approx(2.0)
        assert abs(values[1]) < 1e-12


class TestTimeConfig:

    @pytest.mark.parametrize("kwargs", [{"t_final": 0.0}, {"t_final": 1.0, "cfl": 1.5}, {"t_final": 1.0, "dt_override": -1.0}])
    def test_rejects_invalid(self, kwargs):
        with pytest.raises(IntegrationError):
            TimeConfig(**kwargs)


class TestIntegrate:

    def test_fourth_order_accuracy(self, acoustic_mesh):
        """Halving the step on y' = -y cuts the error at least ~2^4 times."""
        errors = []
        for dt in (0.1, 0.05):
            final = integrate(ones_state(acoustic_mesh), decay, TimeConfig(t_final=1.0), acoustic_mesh, dt=dt)
            errors.append(np.abs(final.to_vector() - math.exp(-1.0)).max())
        assert errors[1] < 1e-6
        assert math.log2(errors[0] / errors[1]) > 3.5

    def test_hits_snapshots_and_final_time(self, acoustic_mesh):
        snapshots = []
        config = TimeConfig(t_final=1.0, snapshot_times=(0.25, 0.6))
        final = integrate(
            ones_state(acoustic_mesh), decay, config, acoustic_mesh, dt=0.07,
            on_snapshot=lambda step, state: snapshots.append(state.time),
        )
        assert snapshots == [0.25, 0.6, 1.0]
        assert final.time == 1.0

    def test_step_callback_sees_every_step(self, acoustic_mesh):
        steps = []
        integrate(ones_state(acoustic_mesh), decay, TimeConfig(t_final=1.0), acoustic_mesh, dt=0.3,
                  on_step=lambda step, state: steps.append((step, state.time)))
        assert [s for s, _ in steps] == [0, 1, 2, 3, 4]
        assert steps[0][1] == 0.0
        assert steps[-1][1] == 1.0
        assert steps[1][1] == pytest.approx(0.25)

    def test_dt_override_wins(self, acoustic_mesh):
        steps = []
        config = TimeConfig(t_final=1.0, dt_override=0.5)
        integrate(ones_state(acoustic_mesh), decay, config, acoustic_mesh, dt=0.01, on_step=lambda s, st: steps.append(s))
        assert steps[-1] == 2

    def test_requires_a_step(self, acoustic_mesh):
        with pytest.raises(IntegrationError):
            integrate(ones_state(acoustic_mesh), decay, TimeConfig(t_final=1.0), acoustic_mesh)

    def test_non_finite_state_reports_step(self, acoustic_mesh):
        def blow_up(t, y):
            return np.full_like(y, np.inf)

        with pytest.raises(IntegrationError) as exc:
            integrate(ones_state(acoustic_mesh), blow_up, TimeConfig(t_final=1.0), acoustic_mesh, dt=0.1)
        assert exc.value.step == 1

    def test_state_already_at_final_time(self, acoustic_mesh):
        """No steps are taken and the state comes back unchanged."""
        state = State.from_vector(acoustic_mesh, np.ones(num_dofs(acoustic_mesh)), time=1.0)
        steps = []
        final = integrate(state, decay, TimeConfig(t_final=1.0), acoustic_mesh, dt=0.1,
                          on_step=lambda s, st: steps.append(s))
        assert steps == []
        assert final is not state
        assert final.time == 1.0
        np.testing.assert_array_equal(final.to_vector(), state.to_vector())

    def test_rejects_final_time_before_state(self, acoustic_mesh):
        state = State.zeros(acoustic_mesh, time=1.0)
        with pytest.raises(IntegrationError, match="before the initial time"):
            integrate(state, decay, TimeConfig(t_final=0.5), acoustic_mesh, dt=0.1)


class TestEstimateDt:

    def test_matches_formula(self, acoustic_mesh):
        """cfl * 2 r / (c (N+1)^2) on right triangles with unit legs."""
        field = isotropic_field(acoustic_mesh, 2.0, 1.0, 1.0, 1.0)
        dt = estimate_dt(acoustic_mesh, field, 2, 0.5)
        r = 1.0 / (2.0 + math.sqrt(2.0))
        assert dt == pytest.approx(0.5 * 2.0 * r / (2.0 * 9.0))

    def test_elastic_elements_use_pressure_speed(self, elastic_mesh):
        field = isotropic_field(elastic_mesh, 1.0, 1.0, 1.0, 1.0)
        dt = estimate_dt(elastic_mesh, field, 2, 1.0)
        r = 1.0 / (2.0 + math.sqrt(2.0))
        assert dt == pytest.approx(2.0 * r / (math.sqrt(3.0) * 9.0), rel=1e-10)


class TestPointSource:

    def test_load_lands_on_vertical_velocity(self, acoustic_mesh):
        field = isotropic_field(acoustic_mesh, 1.0, 1.0, 1.0, 1.0)
        op = WaveOperator(acoustic_mesh, field)
        term = ricker_source(op, (0.3, 0.2), f0=1.0)
        dy = term.add_to(1.0, np.zeros(num_dofs(acoustic_mesh)))
        state = State.from_vector(acoustic_mesh, dy)
        u2 = ACOUSTIC_FIELDS.index("u2")
        assert np.abs(state.acoustic[u2]).max() > 0
        assert np.count_nonzero(np.delete(state.acoustic, u2, axis=0)) == 0
        assert np.count_nonzero(np.abs(state.acoustic[u2]).sum(axis=1)) == 1

    def test_source_in_solid(self, elastic_mesh):
        field = isotropic_field(elastic_mesh, 1.0, 1.0, 1.0, 1.0)
        op = WaveOperator(elastic_mesh, field)
        term = ricker_source(op, (-0.02, 0.0), f0=0.5)
        dy = term.add_to(2.0, np.zeros(num_dofs(elastic_mesh)))
        state = State.from_vector(elastic_mesh, dy)
        assert np.abs(state.elastic[1]).max() > 0
        assert np.count_nonzero(state.elastic[[0, 2, 3, 4]]) == 0

    def test_consistent_load(self, acoustic_mesh):
        """Constant test function: M J times the profile integrates to the delta, so sums to 1."""
        field = isotropic_field(acoustic_mesh, 1.0, 1.0, 1.0, 1.0)
        op = WaveOperator(acoustic_mesh, field)
        term = ricker_source(op, (0.3, 0.2), f0=1.0, t0=0.0)
        J = acoustic_mesh.J[0, 0]
        ones = np.ones(acoustic_mesh.ref.num_basis)
        assert ones @ acoustic_mesh.ref.mass @ term.profile * J == pytest.approx(1.0, rel=1e-10)

    def test_with_no_sources_returns_rhs(self):
        assert with_sources(decay, []) is decay
