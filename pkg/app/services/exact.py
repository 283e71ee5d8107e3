"""
Closed-form interface solutions in the solver's variables.

Both solutions are sums of complex plane waves w = Re(a exp(i(kx x + ky y - omega t)))
for the displacement. Velocity is dw/dt, acoustic pressure is lambda div w and
elastic stress is C (dw1/dx, dw2/dy, dw1/dy + dw2/dx), which makes the traction
A_n^T sigma equal p n on the interface.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from app.core.errors import WaveSolverError
from app.services.dg_core import ACOUSTIC_FIELDS, ELASTIC_FIELDS, State
from app.services.materials import isotropic_stiffness, isotropic_wavespeeds, lame_from_wavespeeds
from app.services.mesh import Mesh
from app.services.refelem import quadrature_rule

logger = logging.getLogger(__name__)

SCAN_POINTS = 4000
BISECTION_STEPS = 20
SPEED_RESIDUAL_TOL = 1e-12


class ExactSolutionError(WaveSolverError):
    """Post-critical incidence, missing Scholte root or unsupported media."""


@dataclass(frozen=True)
class PlaneWave:
    """Displacement term a exp(i(kx x + ky y - omega t)) with complex a and k."""

    amplitude: tuple[complex, complex]
    kx: complex
    ky: complex


@dataclass(frozen=True)
class SnellConfig:
    cp1: float = 1.0
    rho1: float = 1.0
    cp2: float = 3.0
    cs2: float = 2.0
    rho2: float = 1.0
    omega: float = 2.0 * math.pi
    alpha_ip: float = 0.2
    c_ip: float = 1.0


@dataclass(frozen=True)
class SnellAmplitudes:
    c_rp: float
    c_tp: float
    c_ts: float
    alpha_rp: float
    alpha_tp: float
    alpha_ts: float


@dataclass(frozen=True)
class ScholteConfig:
    lam1: float = 1.0
    rho1: float = 1.0
    lam2: float = 1.0
    mu2: float = 1.0
    rho2: float = 1.0
    omega: float = 2.0 * math.pi


def snell_amplitudes(cfg: SnellConfig) -> SnellAmplitudes:
    """Reflected and transmitted amplitudes and angles for a pressure wave hitting the interface."""
    s = math.sin(cfg.alpha_ip) / cfg.cp1
    if s * cfg.cp2 > 1.0 or s * cfg.cs2 > 1.0:
        raise ExactSolutionError(
            f"Post-critical incidence alpha_ip={cfg.alpha_ip}: sin(alpha_tp)={s * cfg.cp2:.4f}, sin(alpha_ts)={s * cfg.cs2:.4f}"
        )
    alpha_rp = cfg.alpha_ip
    alpha_tp = math.asin(s * cfg.cp2)
    alpha_ts = math.asin(s * cfg.cs2)
    if max(s * cfg.cp2, s * cfg.cs2) > 0.99:
        logger.warning(f"Incidence angle {cfg.alpha_ip} is within 1% of critical")

    zp1 = cfg.rho1 * cfg.cp1 / math.cos(cfg.alpha_ip)
    zp2 = cfg.rho2 * cfg.cp2 / math.cos(alpha_tp)
    zs2 = cfg.rho2 * cfg.cs2 / math.cos(alpha_ts)
    cos2, sin2 = math.cos(2 * alpha_ts), math.sin(2 * alpha_ts)
    denom = zp2 * cos2**2 + zs2 * sin2**2 + zp1
    return SnellAmplitudes(
        c_rp=cfg.c_ip * (zp2 * cos2**2 + zs2 * sin2**2 - zp1) / denom,
        c_tp=cfg.c_ip * (cfg.cp1 * cfg.rho1) / (cfg.cp2 * cfg.rho2) * 2 * zp2 * cos2 / denom,
        c_ts=cfg.c_ip * (cfg.cp1 * cfg.rho1) / (cfg.cs2 * cfg.rho2) * 2 * zs2 * sin2 / denom,
        alpha_rp=alpha_rp,
        alpha_tp=alpha_tp,
        alpha_ts=alpha_ts,
    )


def _decay(c: float, speed: float) -> float:
    return math.sqrt(max(0.0, 1.0 - c**2 / speed**2))


def scholte_characteristic(r: float, lam1: float, rho1: float, lam2: float, mu2: float, rho2: float) -> float:
    """Characteristic function of the Scholte speed in r = c / c_2s."""
    c1p = math.sqrt(lam1 / rho1)
    c2p, c2s = isotropic_wavespeeds(lam2, mu2, rho2)
    c = r * c2s
    b1p, b2p, b2s = _decay(c, c1p), _decay(c, c2p), _decay(c, c2s)
    return (rho1 / rho2 * b2p + b1p) * r**4 - 4 * b1p * r**2 - 4 * b1p * (b2p * b2s - 1)


def scholte_speed(lam1: float, rho1: float, lam2: float, mu2: float, rho2: float) -> float:
    """
    Scholte wavespeed below min(c_1p, c_2s).

    Scans for the first sign change away from the trivial root r = 0,
    bisects, then polishes with Brent's method.
    """
    c1p = math.sqrt(lam1 / rho1)
    c2p, c2s = isotropic_wavespeeds(lam2, mu2, rho2)
    r_max = min(c1p, c2s) / c2s * (1.0 - 1e-14)

    def f(r: float) -> float:
        return scholte_characteristic(r, lam1, rho1, lam2, mu2, rho2)

    grid = np.linspace(r_max * 1e-3, r_max, SCAN_POINTS)
    values = np.array([f(r) for r in grid])
    change = np.flatnonzero(np.sign(values[:-1]) * np.sign(values[1:]) < 0)
    if change.size == 0:
        raise ExactSolutionError(
            f"No sign change of the Scholte characteristic in (0, {r_max:.6f}] for "
            f"lam1={lam1}, rho1={rho1}, lam2={lam2}, mu2={mu2}, rho2={rho2}"
        )
    lo, hi = grid[change[0]], grid[change[0] + 1]
    f_lo = f(lo)
    for _ in range(BISECTION_STEPS):
        mid = 0.5 * (lo + hi)
        f_mid = f(mid)
        if np.sign(f_mid) == np.sign(f_lo):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    r = brentq(f, lo, hi, xtol=1e-16, rtol=4 * np.finfo(float).eps, maxiter=200)
    if abs(f(r)) > SPEED_RESIDUAL_TOL:
        raise ExactSolutionError(f"Scholte root residual {abs(f(r)):.3e} exceeds {SPEED_RESIDUAL_TOL}")
    c = r * c2s
    logger.info(f"Scholte speed c={c:.13f} (c_1p={c1p}, c_2p={c2p:.6f}, c_2s={c2s})")
    return c


def scholte_amplitude_matrix(cfg: ScholteConfig, c: float) -> np.ndarray:
    """3x3 complex system relating (B1, B2, B3) through the interface conditions."""
    c1p = math.sqrt(cfg.lam1 / cfg.rho1)
    c2p, c2s = isotropic_wavespeeds(cfg.lam2, cfg.mu2, cfg.rho2)
    b1p, b2p, b2s = _decay(c, c1p), _decay(c, c2p), _decay(c, c2s)
    q = c**2 / c2s**2
    ratio = cfg.rho2 / cfg.rho1
    return np.array([
        [0.0, 2j * b2p, -(2 - q)],
        [q, ratio * (2 - q), 2j * ratio * b2s],
        [b1p, b2p, 1j],
    ], dtype=complex)


def scholte_amplitudes(cfg: ScholteConfig, c: float) -> tuple[complex, complex, complex]:
    """Null vector of the amplitude system normalized to B3 = 1."""
    c1p = math.sqrt(cfg.lam1 / cfg.rho1)
    c2p, c2s = isotropic_wavespeeds(cfg.lam2, cfg.mu2, cfg.rho2)
    b1p, b2p = _decay(c, c1p), _decay(c, c2p)
    b3 = 1.0 + 0j
    b2 = (2 - c**2 / c2s**2) * b3 / (2j * b2p)
    b1 = -(b2p * b2 + 1j * b3) / b1p
    return b1, b2, b3


@dataclass(frozen=True)
class InterfaceSolution:
    """Piecewise plane-wave solution with a flat interface at y = 0."""

    name: str
    acoustic_below: bool
    lam1: float
    C: np.ndarray
    omega: float
    acoustic_waves: tuple[PlaneWave, ...]
    elastic_waves: tuple[PlaneWave, ...]
    details: dict = field(default_factory=dict)

    def is_acoustic(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        y = np.asarray(y)
        return y < 0 if self.acoustic_below else y > 0

    def _sum(self, waves, x, y, t, time_derivative: bool):
        """Complex displacement and its x/y derivatives, each a pair (w1, w2)."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        w = [np.zeros(np.broadcast(x, y).shape, dtype=complex) for _ in range(2)]
        wx = [np.zeros_like(w[0]) for _ in range(2)]
        wy = [np.zeros_like(w[0]) for _ in range(2)]
        factor = -1j * self.omega if time_derivative else 1.0
        for wave in waves:
            phase = factor * np.exp(1j * (wave.kx * x + wave.ky * y - self.omega * t))
            for i in range(2):
                term = wave.amplitude[i] * phase
                w[i] += term
                wx[i] += 1j * wave.kx * term
                wy[i] += 1j * wave.ky * term
        return w, wx, wy

    def acoustic(self, x, y, t: float, time_derivative: bool = False) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(p, u1, u2) from the acoustic-side formula, or their time derivatives."""
        w, wx, wy = self._sum(self.acoustic_waves, x, y, t, time_derivative)
        p = self.lam1 * (wx[0] + wy[1])
        vel = [-1j * self.omega * wi for wi in w]
        return np.real(p), np.real(vel[0]), np.real(vel[1])

    def elastic(self, x, y, t: float, time_derivative: bool = False) -> tuple[np.ndarray, ...]:
        """(v1, v2, sigma1, sigma2, sigma3) from the elastic-side formula."""
        w, wx, wy = self._sum(self.elastic_waves, x, y, t, time_derivative)
        strain = np.stack([wx[0], wy[1], wy[0] + wx[1]])
        stress = np.einsum("ij,j...->i...", self.C, strain)
        v1, v2 = (-1j * self.omega * wi for wi in w)
        return np.real(v1), np.real(v2), np.real(stress[0]), np.real(stress[1]), np.real(stress[2])

    def traction_data(self, t: float, x, y, nx, ny) -> tuple[np.ndarray, np.ndarray]:
        """Boundary traction from whichever side contains each point (p n on the acoustic side)."""
        acoustic = self.is_acoustic(x, y)
        p, _, _ = self.acoustic(x, y, t)
        _, _, s1, s2, s3 = self.elastic(x, y, t)
        t1 = np.where(acoustic, p * nx, s1 * nx + s3 * ny)
        t2 = np.where(acoustic, p * ny, s3 * nx + s2 * ny)
        return t1, t2


def snell_solution(cfg: SnellConfig = SnellConfig()) -> InterfaceSolution:
    """Acoustic medium for y < 0 with incident and reflected P waves; elastic y > 0 with transmitted P and S."""
    amp = snell_amplitudes(cfg)
    lam2, mu2 = lame_from_wavespeeds(cfg.cp2, cfg.cs2, cfg.rho2)
    if cfg.rho1 != 1.0:
        raise ExactSolutionError(f"The acoustic solver assumes unit density, got rho1={cfg.rho1}")
    kp1, kp2, ks2 = cfg.omega / cfg.cp1, cfg.omega / cfg.cp2, cfg.omega / cfg.cs2

    def wave(c, d, k, sx, sy) -> PlaneWave:
        return PlaneWave((c * d[0], c * d[1]), k * sx, k * sy)

    a_ip, a_rp, a_tp, a_ts = cfg.alpha_ip, amp.alpha_rp, amp.alpha_tp, amp.alpha_ts
    acoustic_waves = (
        wave(cfg.c_ip, (math.sin(a_ip), math.cos(a_ip)), kp1, math.sin(a_ip), math.cos(a_ip)),
        wave(amp.c_rp, (math.sin(a_rp), -math.cos(a_rp)), kp1, math.sin(a_rp), -math.cos(a_rp)),
    )
    elastic_waves = (
        wave(amp.c_tp, (math.sin(a_tp), math.cos(a_tp)), kp2, math.sin(a_tp), math.cos(a_tp)),
        wave(amp.c_ts, (-math.cos(a_ts), math.sin(a_ts)), ks2, math.sin(a_ts), math.cos(a_ts)),
    )
    return InterfaceSolution(
        name="snell",
        acoustic_below=True,
        lam1=cfg.rho1 * cfg.cp1**2,
        C=isotropic_stiffness(lam2, mu2),
        omega=cfg.omega,
        acoustic_waves=acoustic_waves,
        elastic_waves=elastic_waves,
        details={"amplitudes": amp, "lam2": lam2, "mu2": mu2},
    )


def scholte_solution(cfg: ScholteConfig = ScholteConfig(), speed: float | None = None) -> InterfaceSolution:
    """Acoustic half-space y > 0 over an elastic half-space y < 0, waves decaying away from y = 0."""
    if cfg.rho1 != 1.0:
        raise ExactSolutionError(f"The acoustic solver assumes unit density, got rho1={cfg.rho1}")
    c = speed if speed is not None else scholte_speed(cfg.lam1, cfg.rho1, cfg.lam2, cfg.mu2, cfg.rho2)
    c1p = math.sqrt(cfg.lam1 / cfg.rho1)
    c2p, c2s = isotropic_wavespeeds(cfg.lam2, cfg.mu2, cfg.rho2)
    b1p, b2p, b2s = _decay(c, c1p), _decay(c, c2p), _decay(c, c2s)
    B1, B2, B3 = scholte_amplitudes(cfg, c)
    k = cfg.omega / c

    # exp(kappa b y) written as exp(i ky y) with ky = -i kappa b
    acoustic_waves = (PlaneWave((1j * k * B1, -k * b1p * B1), k, 1j * k * b1p),)
    elastic_waves = (
        PlaneWave((1j * k * B2, k * b2p * B2), k, -1j * k * b2p),
        PlaneWave((-k * b2s * B3, 1j * k * B3), k, -1j * k * b2s),
    )
    return InterfaceSolution(
        name="scholte",
        acoustic_below=False,
        lam1=cfg.lam1,
        C=isotropic_stiffness(cfg.lam2, cfg.mu2),
        omega=cfg.omega,
        acoustic_waves=acoustic_waves,
        elastic_waves=elastic_waves,
        details={"speed": c, "B": (B1, B2, B3), "decay": (b1p, b2p, b2s)},
    )


def evaluate_fields(solution: InterfaceSolution, x, y, t: float, time_derivative: bool = False) -> dict[str, np.ndarray]:
    """Solver variables at points; acoustic fields where the point is acoustic, elastic fields elsewhere (NaN otherwise)."""
    acoustic = solution.is_acoustic(x, y)
    out = {}
    for name, values in zip(ACOUSTIC_FIELDS, solution.acoustic(x, y, t, time_derivative)):
        out[name] = np.where(acoustic, values, np.nan)
    for name, values in zip(ELASTIC_FIELDS, solution.elastic(x, y, t, time_derivative)):
        out[name] = np.where(acoustic, np.nan, values)
    return out


def project_exact(solution: InterfaceSolution, mesh: Mesh, t: float, time_derivative: bool = False) -> State:
    """Element-wise L2 projection P_q of the exact fields onto the DG space."""
    ia, ie = mesh.acoustic_ids, mesh.elastic_ids
    pq = mesh.ref.project
    state = State.zeros(mesh, t)
    if len(ia):
        fields = solution.acoustic(mesh.xq[ia], mesh.yq[ia], t, time_derivative)
        state.acoustic[:] = np.einsum("nq,ckq->ckn", pq, np.stack(fields))
    if len(ie):
        fields = solution.elastic(mesh.xq[ie], mesh.yq[ie], t, time_derivative)
        state.elastic[:] = np.einsum("nq,ckq->ckn", pq, np.stack(fields))
    return state


def l2_error(state: State, solution: InterfaceSolution, mesh: Mesh, t: float, quad_degree: int | None = None) -> dict[str, float]:
    """
    Per-field L2 errors sqrt(sum_k sum_q w_q J_q |u_h - u|^2) and their root-sum-square `total`.

    quad_degree defaults to the solver's volume rule; a higher degree evaluates
    the geometry at the new points from the nodal map.
    """
    ref = mesh.ref
    if quad_degree is None:
        vq, wq = ref.interp_vol, ref.quad_weights
        xq, yq, J = mesh.xq, mesh.yq, mesh.J
    else:
        rq, wq = quadrature_rule(quad_degree)
        vq, vr, vs = ref.interpolation_matrices(rq)
        xq, yq = mesh.x @ vq.T, mesh.y @ vq.T
        J = (mesh.x @ vr.T) * (mesh.y @ vs.T) - (mesh.x @ vs.T) * (mesh.y @ vr.T)

    errors = {}
    ia, ie = mesh.acoustic_ids, mesh.elastic_ids
    blocks = (
        (ACOUSTIC_FIELDS, state.acoustic, ia, solution.acoustic),
        (ELASTIC_FIELDS, state.elastic, ie, solution.elastic),
    )
    for names, coeffs, ids, exact_fn in blocks:
        if not len(ids):
            errors.update({n: 0.0 for n in names})
            continue
        exact = exact_fn(xq[ids], yq[ids], t)
        for i, name in enumerate(names):
            diff = np.einsum("qn,kn->kq", vq, coeffs[i]) - exact[i]
            errors[name] = float(np.sqrt(np.sum(wq * J[ids] * diff**2)))
    errors["total"] = float(np.sqrt(sum(v**2 for v in errors.values())))
    return errors
