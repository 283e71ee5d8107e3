"""Tests for the Snell and Scholte interface solutions."""

import math

import numpy as np
import pytest

from app.services.exact import (
    ExactSolutionError,
    ScholteConfig,
    SnellConfig,
    evaluate_fields,
    l2_error,
    project_exact,
    scholte_amplitude_matrix,
    scholte_amplitudes,
    scholte_characteristic,
    scholte_solution,
    scholte_speed,
    snell_amplitudes,
    snell_solution,
)
from app.services.mesh import uniform_square_mesh
from app.services.refelem import build_reference_element
from app.services.scenarios import half_plane_regions

SCHOLTE_SPEED = 0.7110017230197

X_LINE = np.linspace(-1.0, 1.0, 9)


def interface_values(solution, t: float):
    """Acoustic and elastic fields evaluated on y = 0."""
    y = np.zeros_like(X_LINE)
    p, _, u2 = solution.acoustic(X_LINE, y, t)
    _, v2, s1, s2, s3 = solution.elastic(X_LINE, y, t)
    return p, u2, v2, s2, s3


class TestScholteSpeed:

    def test_unit_media_speed(self):
        assert scholte_speed(1.0, 1.0, 1.0, 1.0, 1.0) == pytest.approx(SCHOLTE_SPEED, abs=1e-9)

    def test_root_of_characteristic(self):
        c = scholte_speed(1.0, 1.0, 1.0, 1.0, 1.0)
        assert abs(scholte_characteristic(c, 1.0, 1.0, 1.0, 1.0, 1.0)) < 1e-12

    def test_amplitudes(self):
        B1, B2, B3 = scholte_amplitudes(ScholteConfig(), SCHOLTE_SPEED)
        assert B3 == 1.0
        assert B1 == pytest.approx(-0.3594499773037j, abs=1e-9)
        assert B2 == pytest.approx(-0.8194642725978j, abs=1e-9)

    def test_amplitudes_span_null_space(self):
        cfg = ScholteConfig()
        c = scholte_speed(cfg.lam1, cfg.rho1, cfg.lam2, cfg.mu2, cfg.rho2)
        B = np.array(scholte_amplitudes(cfg, c))
        assert np.abs(scholte_amplitude_matrix(cfg, c) @ B).max() < 1e-9

    def test_stiff_solid_slows_below_fluid_speed(self):
        c = scholte_speed(2.25, 1.0, 11.25, 5.625, 2.5)
        assert 0.0 < c < 1.5


class TestScholteSolution:

    def test_interface_conditions(self):
        """Pressure equals normal stress, normal velocities agree and shear stress vanishes."""
        sol = scholte_solution()
        for t in (0.0, 0.37):
            p, u2, v2, s2, s3 = interface_values(sol, t)
            np.testing.assert_allclose(p, s2, atol=1e-9)
            np.testing.assert_allclose(u2, v2, atol=1e-9)
            np.testing.assert_allclose(s3, 0.0, atol=1e-9)

    def test_decays_away_from_interface(self):
        sol = scholte_solution()
        near = np.abs(sol.acoustic(0.1, 0.05, 0.0)[0])
        far = np.abs(sol.acoustic(0.1, 0.95, 0.0)[0])
        assert far < near

    def test_time_periodic(self):
        sol = scholte_solution()
        a = sol.elastic(0.3, -0.4, 0.2)
        b = sol.elastic(0.3, -0.4, 0.2 + 2.0 * math.pi / sol.omega)
        np.testing.assert_allclose(a, b, atol=1e-12)

    def test_rejects_non_unit_fluid_density(self):
        with pytest.raises(ExactSolutionError):
            scholte_solution(ScholteConfig(rho1=2.0))


class TestSnell:

    def test_normal_incidence_coefficients(self):
        amp = snell_amplitudes(SnellConfig(alpha_ip=0.0))
        assert amp.c_rp == pytest.approx(0.5)
        assert amp.c_tp == pytest.approx(0.5)
        assert amp.c_ts == pytest.approx(0.0)

    def test_snell_law_angles(self):
        cfg = SnellConfig()
        amp = snell_amplitudes(cfg)
        s = math.sin(cfg.alpha_ip) / cfg.cp1
        assert math.sin(amp.alpha_tp) / cfg.cp2 == pytest.approx(s)
        assert math.sin(amp.alpha_ts) / cfg.cs2 == pytest.approx(s)

    def test_interface_conditions(self):
        sol = snell_solution()
        for t in (0.0, 0.21):
            p, u2, v2, s2, s3 = interface_values(sol, t)
            np.testing.assert_allclose(p, s2, atol=1e-10)
            np.testing.assert_allclose(u2, v2, atol=1e-10)
            np.testing.assert_allclose(s3, 0.0, atol=1e-10)

    def test_post_critical_incidence(self):
        with pytest.raises(ExactSolutionError, match="Post-critical"):
            snell_amplitudes(SnellConfig(alpha_ip=0.6))

    def test_traction_on_fluid_side_is_pressure_times_normal(self):
        sol = snell_solution()
        x, y = np.array([0.2]), np.array([-1.0])
        t1, t2 = sol.traction_data(0.4, x, y, 0.0, -1.0)
        p = sol.acoustic(x, y, 0.4)[0]
        assert t1[0] == pytest.approx(0.0)
        assert t2[0] == pytest.approx(-p[0])


class TestProjection:

    def test_fields_split_by_side(self):
        fields = evaluate_fields(scholte_solution(), np.array([0.0, 0.0]), np.array([0.5, -0.5]), 0.0)
        assert np.isnan(fields["p"][1]) and not np.isnan(fields["p"][0])
        assert np.isnan(fields["v1"][0]) and not np.isnan(fields["v1"][1])

    def test_projection_error_converges(self):
        """Projection error of a smooth solution drops at least fourfold per halving at N = 2."""
        ref = build_reference_element(2)
        sol = scholte_solution()
        errors = []
        for n in (16, 32):
            mesh = uniform_square_mesh(n, half_plane_regions(acoustic_below=False), ref)
            errors.append(l2_error(project_exact(sol, mesh, 0.0), sol, mesh, 0.0, quad_degree=8)["total"])
        assert errors[1] < errors[0] / 4.0

    def test_error_keys(self, coupled_mesh):
        sol = scholte_solution()
        errors = l2_error(project_exact(sol, coupled_mesh, 0.0), sol, coupled_mesh, 0.0)
        assert set(errors) == {"p", "u1", "u2", "v1", "v2", "sigma1", "sigma2", "sigma3", "total"}
        assert errors["total"] == pytest.approx(math.sqrt(sum(v**2 for k, v in errors.items() if k != "total")))
