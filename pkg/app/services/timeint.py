"""Low-storage explicit Runge-Kutta time stepping and the Ricker point source."""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from app.core.errors import WaveSolverError
from app.services.dg_core import ACOUSTIC_FIELDS, ELASTIC_FIELDS, State, WaveOperator
from app.services.materials import MaterialField
from app.services.mesh import Mesh, Region, locate_point

logger = logging.getLogger(__name__)

# Carpenter-Kennedy five-stage fourth-order 2N-storage coefficients
RK4A = (
    0.0,
    -567301805773.0 / 1357537059087.0,
    -2404267990393.0 / 2016746695238.0,
    -3550918686646.0 / 2091501179385.0,
    -1275806237668.0 / 842570457699.0,
)
RK4B = (
    1432997174477.0 / 9575080441755.0,
    5161836677717.0 / 13612068292357.0,
    1720146321549.0 / 2090206949498.0,
    3134564353537.0 / 4481467310338.0,
    2277821191437.0 / 14882151754819.0,
)
RK4C = (
    0.0,
    1432997174477.0 / 9575080441755.0,
    2526269341429.0 / 6820363962896.0,
    2006345519317.0 / 3224310063776.0,
    2802321613138.0 / 2924317926251.0,
)

Rhs = Callable[[float, np.ndarray], np.ndarray]
StepCallback = Callable[[int, State], None]


class IntegrationError(WaveSolverError):
    """Non-finite values during time stepping, or an invalid time configuration."""

    def __init__(self, message: str, step: int | None = None):
        super().__init__(message)
        self.step = step


@dataclass(frozen=True)
class RickerSource:
    """Ricker wavelet in time, multiplied by a delta at x0."""

    x0: tuple[float, float]
    f0: float
    t0: float
    amplitude: float = 1.0

    def __call__(self, t: float | np.ndarray) -> float | np.ndarray:
        return self.amplitude * ricker(t, self.f0, self.t0)


@dataclass(frozen=True)
class TimeConfig:
    t_final: float
    cfl: float = 0.5
    dt_override: float | None = None
    source: RickerSource | None = None
    snapshot_times: tuple[float, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if not self.t_final > 0:
            raise IntegrationError(f"t_final must be positive, got {self.t_final}")
        if not 0 < self.cfl <= 1:
            raise IntegrationError(f"cfl must lie in (0, 1], got {self.cfl}")
        if self.dt_override is not None and not self.dt_override > 0:
            raise IntegrationError(f"dt_override must be positive, got {self.dt_override}")


def ricker(t, f0: float, t0: float):
    """(1 - 2 a^2) exp(-a^2) with a = pi f0 (t - t0)."""
    a2 = (np.pi * f0 * (np.asarray(t, dtype=float) - t0)) ** 2
    out = (1.0 - 2.0 * a2) * np.exp(-a2)
    return float(out) if np.ndim(out) == 0 else out


def estimate_dt(mesh: Mesh, materials: MaterialField, N: int, cfl: float) -> float:
    """cfl * min_k h_k / (c_max,k (N + 1)^2) with h_k twice the element inradius."""
    h = 2.0 * mesh.inradius()
    c = materials.element_max_wavespeed(mesh)
    dt = cfl * float(np.min(h / (c * (N + 1) ** 2)))
    logger.info(f"Estimated dt={dt:.6e} (N={N}, cfl={cfl}, h_min={h.min():.4e}, c_max={c.max():.4e})")
    return dt


class PointSourceTerm:
    """
    Consistent delta load on the y-velocity of the element containing x0.

    The load M^{-1} phi(x0) is passed through the velocity weight of the
    weight-adjusted mass, so adding it to dU/dt matches the right-hand side
    of rho v_t = div sigma + f.
    """

    def __init__(self, operator: WaveOperator, source: RickerSource):
        mesh = operator.mesh
        ref = mesh.ref
        k, r, s = locate_point(mesh, *source.x0)
        phi = ref.interpolation_matrices(np.array([[r], [s]]))[0][0]
        load = ref.inv_mass @ phi
        np_ = ref.num_basis
        if mesh.region[k] == Region.ELASTIC:
            local = int(np.searchsorted(mesh.elastic_ids, k))
            profile = operator.wadg.elastic_velocity(load[None, :] * (np.arange(len(mesh.elastic_ids)) == local)[:, None])
            offset = len(ACOUSTIC_FIELDS) * len(mesh.acoustic_ids) * np_
            field_index = ELASTIC_FIELDS.index("v2")
            block = len(mesh.elastic_ids)
        else:
            local = int(np.searchsorted(mesh.acoustic_ids, k))
            profile = operator.wadg.acoustic_velocity(load[None, :] * (np.arange(len(mesh.acoustic_ids)) == local)[:, None])
            offset = 0
            field_index = ACOUSTIC_FIELDS.index("u2")
            block = len(mesh.acoustic_ids)
        start = offset + (field_index * block + local) * np_
        self.index = np.arange(start, start + np_)
        self.profile = profile[local]
        self.source = source
        logger.info(f"Ricker source at {source.x0} in element {k} ({Region(mesh.region[k]).name.lower()}), f0={source.f0}")

    def add_to(self, t: float, dy: np.ndarray) -> np.ndarray:
        dy[self.index] += self.source(t) * self.profile
        return dy


def ricker_source(operator: WaveOperator, x0: tuple[float, float], f0: float, t0: float | None = None) -> PointSourceTerm:
    """Point source with time factor ricker(t, f0, t0); t0 defaults to 1/f0."""
    return PointSourceTerm(operator, RickerSource(tuple(x0), f0, 1.0 / f0 if t0 is None else t0))


def with_sources(rhs: Rhs, sources: list[PointSourceTerm]) -> Rhs:
    if not sources:
        return rhs

    def forced(t: float, y: np.ndarray) -> np.ndarray:
        dy = rhs(t, y)
        for s in sources:
            s.add_to(t, dy)
        return dy

    return forced


def _segments(t_start: float, config: TimeConfig) -> list[float]:
    stops = sorted({float(t) for t in config.snapshot_times if t_start < t < config.t_final} | {float(config.t_final)})
    return stops


def integrate(
    state: State,
    rhs: Rhs,
    config: TimeConfig,
    mesh: Mesh,
    dt: float | None = None,
    on_step: StepCallback | None = None,
    on_snapshot: StepCallback | None = None,
) -> State:
    """
    Advance state to config.t_final with LSERK(5,4).

    The step is dt_override if set, else dt. Each interval between snapshot
    times is split into equal steps no longer than that, so every snapshot
    time and the final time are hit exactly.

    Args:
        rhs: f(t, y) on flat state vectors
        on_step: called as on_step(step, state) after the initial state and every step
        on_snapshot: called at each snapshot time and at t_final

    Raises:
        IntegrationError: t_final before the state time, or non-finite stage
            values (carrying the step index)
    """
    step_size = config.dt_override if config.dt_override is not None else dt
    if step_size is None or not step_size > 0:
        raise IntegrationError("No time step: pass dt or set dt_override")

    t = float(state.time)
    if math.isclose(config.t_final, t, rel_tol=1e-12, abs_tol=1e-15):
        logger.info(f"State already at t_final={config.t_final}; nothing to integrate")
        return state.copy()
    if config.t_final < t:
        raise IntegrationError(f"t_final={config.t_final} lies before the initial time {t}")

    y = state.to_vector().copy()
    res = np.zeros_like(y)
    step = 0
    if on_step is not None:
        on_step(step, State.from_vector(mesh, y, t))

    for stop in _segments(t, config):
        length = stop - t
        n_steps = max(1, math.ceil(length / step_size - 1e-12))
        h = length / n_steps
        t_begin = t
        logger.debug(f"Segment to t={stop}: {n_steps} steps of {h:.6e}")
        for i in range(n_steps):
            for a, b, c in zip(RK4A, RK4B, RK4C):
                res = a * res + h * rhs(t + c * h, y)
                y = y + b * res
                if not np.isfinite(y).all():
                    raise IntegrationError(f"Non-finite state at step {step + 1} (t={t:.6e})", step=step + 1)
            step += 1
            t = stop if i == n_steps - 1 else t_begin + (i + 1) * h
            if on_step is not None:
                on_step(step, State.from_vector(mesh, y, t))
        if on_snapshot is not None:
            on_snapshot(step, State.from_vector(mesh, y, t))

    logger.info(f"Integrated to t={t} in {step} steps")
    return State.from_vector(mesh, y, t)
