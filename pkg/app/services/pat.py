"""
Photoacoustic tomography by time reversal.

The initial pressure is a smoothed Shepp-Logan phantom inside a skull ring.
Boundary pressure is recorded on every boundary face quadrature point during
a forward run with absorbing boundaries; reconstruction runs the solver
backwards with that record as Dirichlet data and refines the result with a
Neumann series of forward/backward correction solves.
"""

import logging
import math
import struct
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from app.core.errors import WaveSolverError
from app.services.dg_core import BCKind, BoundaryCondition, FluxParams, State, WaveOperator
from app.services.materials import MaterialField, isotropic_field, lame_from_wavespeeds, validate_material
from app.services.mesh import Mesh, Region, retag_regions, uniform_square_mesh
from app.services.refelem import ReferenceElement
from app.services.timeint import TimeConfig, estimate_dt, integrate

logger = logging.getLogger(__name__)

RECORD_MAGIC = b"WREC"
RECORD_VERSION = 1
PAT_TAU = 1.0
PAT_T_FINAL = 2.0
TISSUE_C = 1.0
SKULL_CP = 2.0
SKULL_CS = 1.0
SKULL_RHO = 1.0


class ReconstructionError(WaveSolverError):
    """Measurement record inconsistent with the mesh or with the final state."""


@dataclass(frozen=True)
class Ellipse:
    name: str
    center: tuple[float, float]
    semi_x: float
    semi_y: float
    theta_deg: float
    value: float

    def radius(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Normalized radius: below 1 inside, above 1 outside."""
        t = math.radians(self.theta_deg)
        dx, dy = np.asarray(x) - self.center[0], np.asarray(y) - self.center[1]
        xr = math.cos(t) * dx + math.sin(t) * dy
        yr = -math.sin(t) * dx + math.cos(t) * dy
        return np.sqrt((xr / self.semi_x) ** 2 + (yr / self.semi_y) ** 2)

    def contains(self, x, y) -> np.ndarray:
        return self.radius(x, y) < 1.0


SHEPP_LOGAN = (
    Ellipse("a", (0.0, 0.0), 0.69, 0.92, 0.0, 0.0),
    Ellipse("b", (0.0, -0.0184), 0.6624, 0.874, 0.0, 0.0),
    Ellipse("c", (0.22, 0.0), 0.11, 0.31, -0.18, 0.02),
    Ellipse("d", (-0.22, 0.0), 0.16, 0.41, 0.18, 0.02),
    Ellipse("e", (0.0, 0.35), 0.21, 0.25, 0.0, 0.01),
    Ellipse("f", (0.0, 0.1), 0.046, 0.046, 0.0, 0.01),
    Ellipse("g", (0.0, -0.1), 0.046, 0.046, 0.0, 0.01),
    Ellipse("h", (-0.08, -0.605), 0.046, 0.023, 0.0, 0.01),
    Ellipse("i", (0.0, -0.605), 0.023, 0.023, 0.0, 0.01),
    Ellipse("j", (0.06, -0.605), 0.023, 0.046, 0.0, 0.01),
)


@dataclass(frozen=True)
class PhantomSpec:
    """
    Sum of smoothed ellipse indicators.

    Each indicator falls from 1 to 0 across a band of width `band` centered on
    the ellipse boundary as (1 - s^(2m))^n, with s the position in the band.
    """

    ellipses: tuple[Ellipse, ...] = SHEPP_LOGAN
    smoothing_m: int = 2
    smoothing_n: int = 4
    band: float = 0.0

    @property
    def outer(self) -> Ellipse:
        return self.ellipses[0]

    @property
    def inner(self) -> Ellipse:
        return self.ellipses[1]


def smoothed_indicator(ellipse: Ellipse, x, y, band: float, m: int = 2, n: int = 4) -> np.ndarray:
    if band <= 0:
        return ellipse.contains(x, y).astype(float)
    d = (ellipse.radius(x, y) - 1.0) * min(ellipse.semi_x, ellipse.semi_y)
    s = np.clip((d + 0.5 * band) / band, 0.0, 1.0)
    return (1.0 - s ** (2 * m)) ** n


def phantom_pressure(spec: PhantomSpec, x, y) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    out = np.zeros(np.broadcast(x, y).shape)
    for e in spec.ellipses:
        if e.value:
            out += e.value * smoothed_indicator(e, x, y, spec.band, spec.smoothing_m, spec.smoothing_n)
    return out


def skull_region(spec: PhantomSpec):
    """Region function: elastic inside the outer ellipse and outside the inner one."""

    def region(x: float, y: float) -> int:
        skull = spec.outer.contains(x, y) and not spec.inner.contains(x, y)
        return Region.ELASTIC if skull else Region.ACOUSTIC

    return region


# -- problem setup ----------------------------------------------------------------


@dataclass
class PatProblem:
    mesh: Mesh
    materials: MaterialField
    truth: np.ndarray              # (K, Np) phantom pressure, zero in the skull
    skull: np.ndarray              # (K,) elements of the skull ring
    mode: str = "coupled"


def acoustic_comparison(mesh: Mesh, skull: np.ndarray, c_tissue: float = TISSUE_C, cp_skull: float = SKULL_CP) -> tuple[Mesh, MaterialField]:
    """Every element acoustic; the skull keeps its pressure wavespeed."""
    acoustic = retag_regions(mesh, np.full(mesh.num_elements, Region.ACOUSTIC, dtype=np.int8))
    c = np.where(skull, cp_skull, c_tissue)
    nq = mesh.ref.num_quad
    empty = np.zeros((0, nq))
    materials = MaterialField(
        c2=np.repeat((c**2)[:, None], nq, axis=1),
        rho=empty,
        C=np.zeros((0, nq, 3, 3)),
        Cinv=np.zeros((0, nq, 3, 3)),
    )
    return acoustic, validate_material(materials, acoustic)


def build_pat_problem(
    ref: ReferenceElement,
    n: int,
    mode: str = "coupled",
    spec: PhantomSpec | None = None,
    mesh: Mesh | None = None,
) -> PatProblem:
    """
    Skull phantom on [-1, 1]^2.

    Args:
        n: uniform mesh divisions, ignored when a mesh is given
        mode: "coupled" (elastic skull) or "acoustic" (skull replaced by fluid at c_p)
        spec: phantom; its band defaults to two mesh widths when left at 0
    """
    if mode not in ("coupled", "acoustic"):
        raise ReconstructionError(f"Unknown PAT mode '{mode}'; expected coupled or acoustic")
    spec = spec or PhantomSpec(band=0.0)
    if mesh is None:
        mesh = uniform_square_mesh(n, skull_region(spec), ref)
        width = 2.0 / n
    else:
        # leg of a right isosceles triangle with the largest inradius
        width = float(mesh.inradius().max() * (2.0 + math.sqrt(2.0)))
    if spec.band <= 0:
        spec = replace(spec, band=2.0 * width)
    logger.info(f"Phantom smoothing band {spec.band:.4f}")

    skull = mesh.region == Region.ELASTIC
    lam, mu = lame_from_wavespeeds(SKULL_CP, SKULL_CS, SKULL_RHO)
    if mode == "coupled":
        materials = isotropic_field(mesh, TISSUE_C, lam, mu, SKULL_RHO)
    else:
        mesh, materials = acoustic_comparison(mesh, skull)

    pq = ref.project
    truth = np.einsum("nq,kq->kn", pq, phantom_pressure(spec, mesh.xq, mesh.yq))
    truth[skull] = 0.0
    return PatProblem(mesh, materials, truth, skull, mode)


def initial_state(mesh: Mesh, pressure: np.ndarray) -> State:
    """Pressure (K, Np) on acoustic elements, every other field zero."""
    state = State.zeros(mesh)
    state.acoustic[0] = pressure[mesh.acoustic_ids]
    return state


def relative_error(mesh: Mesh, pressure: np.ndarray, truth: np.ndarray) -> float:
    """||p - truth|| / ||truth|| in L2 over the whole domain."""
    vq, wq = mesh.ref.interp_vol, mesh.ref.quad_weights
    diff = (pressure - truth) @ vq.T
    ref_q = truth @ vq.T
    num = np.sum(wq * mesh.J * diff**2)
    den = np.sum(wq * mesh.J * ref_q**2)
    return float(np.sqrt(num / den)) if den > 0 else float(np.sqrt(num))


def pressure_norm(mesh: Mesh, pressure: np.ndarray) -> float:
    vq, wq = mesh.ref.interp_vol, mesh.ref.quad_weights
    return float(np.sqrt(np.sum(wq * mesh.J * (pressure @ vq.T) ** 2)))


# -- measurements -----------------------------------------------------------------


@dataclass
class MeasurementRecord:
    """Boundary pressure at every face quadrature point, sampled on a uniform time axis."""

    points: np.ndarray      # (n_points, 2)
    times: np.ndarray       # (n_times,)
    pressure: np.ndarray    # (n_times, n_points)
    dt: float
    t_final: float

    @property
    def num_points(self) -> int:
        return self.points.shape[0]

    def at(self, t: float) -> np.ndarray:
        """Linear interpolation in time, clamped to the recorded interval."""
        times = self.times
        if t <= times[0]:
            return self.pressure[0]
        if t >= times[-1]:
            return self.pressure[-1]
        i = int(np.searchsorted(times, t, side="right")) - 1
        w = (t - times[i]) / (times[i + 1] - times[i])
        return (1.0 - w) * self.pressure[i] + w * self.pressure[i + 1]


def boundary_faces(mesh: Mesh) -> list[tuple[str, np.ndarray, np.ndarray]]:
    """(tag, k, f) per boundary tag, in the order the operator evaluates boundary data."""
    out = []
    for index, tag in enumerate(mesh.boundary_tags):
        kk, ff = np.nonzero(mesh.boundary_tag_index == index)
        if kk.size:
            out.append((tag, kk, ff))
    return out


class BoundaryRecorder:
    """
    Step callback sampling boundary pressure.

    On elastic boundary faces the normal traction n . A_n^T sigma stands in
    for the pressure.
    """

    def __init__(self, mesh: Mesh):
        self.mesh = mesh
        self.faces = boundary_faces(mesh)
        kk = np.concatenate([f[1] for f in self.faces])
        ff = np.concatenate([f[2] for f in self.faces])
        self._k, self._f = kk, ff
        self.points = np.column_stack([mesh.xf[kk, ff].ravel(), mesh.yf[kk, ff].ravel()])
        self._acoustic = mesh.region[kk] == Region.ACOUSTIC
        self._local_a = np.searchsorted(mesh.acoustic_ids, kk[self._acoustic])
        self._local_e = np.searchsorted(mesh.elastic_ids, kk[~self._acoustic])
        self.times: list[float] = []
        self.samples: list[np.ndarray] = []

    def sample(self, state: State) -> np.ndarray:
        mesh = self.mesh
        vf = mesh.ref.interp_face
        out = np.empty((len(self._k), mesh.ref.num_face_quad))
        a = self._acoustic
        if a.any():
            out[a] = np.einsum("kqn,kn->kq", vf[self._f[a]], state.acoustic[0][self._local_a])
        if (~a).any():
            f = self._f[~a]
            s1, s2, s3 = (np.einsum("kqn,kn->kq", vf[f], state.elastic[i][self._local_e]) for i in (2, 3, 4))
            nx, ny = mesh.nx[self._k[~a], f], mesh.ny[self._k[~a], f]
            out[~a] = nx * (s1 * nx + s3 * ny) + ny * (s3 * nx + s2 * ny)
        return out.ravel()

    def __call__(self, step: int, state: State) -> None:
        self.times.append(float(state.time))
        self.samples.append(self.sample(state))

    def record(self) -> MeasurementRecord:
        times = np.array(self.times)
        dt = float(times[1] - times[0]) if len(times) > 1 else 0.0
        return MeasurementRecord(self.points, times, np.array(self.samples), dt, float(times[-1]))


def write_record(record: MeasurementRecord, path: str | Path) -> Path:
    """Little-endian binary: magic, version, counts, dt, T, points, times, samples."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("wb") as fh:
        fh.write(RECORD_MAGIC)
        fh.write(struct.pack("<IQQdd", RECORD_VERSION, len(record.times), record.num_points, record.dt, record.t_final))
        fh.write(np.ascontiguousarray(record.points, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(record.times, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(record.pressure, dtype="<f8").tobytes())
    logger.info(f"Wrote measurement record {path} ({len(record.times)} times x {record.num_points} points)")
    return path


def read_record(path: str | Path) -> MeasurementRecord:
    path = Path(path)
    data = path.read_bytes()
    header = struct.calcsize("<IQQdd")
    if data[:4] != RECORD_MAGIC:
        raise ReconstructionError(f"{path} is not a measurement record (magic {data[:4]!r})")
    version, n_times, n_points, dt, t_final = struct.unpack_from("<IQQdd", data, 4)
    if version != RECORD_VERSION:
        raise ReconstructionError(f"{path}: unsupported record version {version}")
    body = np.frombuffer(data, dtype="<f8", offset=4 + header)
    expected = 2 * n_points + n_times + n_times * n_points
    if body.size != expected:
        raise ReconstructionError(f"{path}: expected {expected} float64 values after the header, found {body.size}")
    points = body[: 2 * n_points].reshape(n_points, 2)
    times = body[2 * n_points: 2 * n_points + n_times]
    pressure = body[2 * n_points + n_times:].reshape(n_times, n_points)
    return MeasurementRecord(points.copy(), times.copy(), pressure.copy(), dt, t_final)


# -- solves -------------------------------------------------------------------------


def forward_measure(
    pressure: np.ndarray,
    mesh: Mesh,
    materials: MaterialField,
    t_final: float,
    flux: FluxParams = FluxParams(PAT_TAU, PAT_TAU),
    cfl: float = 0.5,
) -> tuple[MeasurementRecord, State]:
    """
    Propagate an initial pressure (K, Np) with absorbing boundaries.

    Returns the boundary record, sampled after every step, and the state at t_final.
    """
    operator = WaveOperator(mesh, materials, flux, boundary=BoundaryCondition(BCKind.ABSORBING))
    recorder = BoundaryRecorder(mesh)
    dt = estimate_dt(mesh, materials, mesh.ref.degree, cfl)
    final = integrate(initial_state(mesh, pressure), operator, TimeConfig(t_final=t_final, cfl=cfl), mesh, dt=dt, on_step=recorder)
    record = recorder.record()
    logger.info(f"Forward measurement: {len(record.times)} samples at {record.num_points} points, max |p|={np.abs(record.pressure).max():.4e}")
    return record, final


def _flip_velocities(state: State) -> State:
    out = state.copy()
    out.acoustic[1:] *= -1.0
    out.elastic[:2] *= -1.0
    return out


def _record_boundary(mesh: Mesh, record: MeasurementRecord) -> dict[str, BoundaryCondition]:
    faces = boundary_faces(mesh)
    nfq = mesh.ref.num_face_quad
    total = sum(len(k) for _, k, _ in faces) * nfq
    if total != record.num_points:
        raise ReconstructionError(f"Record has {record.num_points} points, mesh boundary has {total}")
    boundary = {}
    start = 0
    for tag, kk, _ in faces:
        stop = start + len(kk) * nfq

        def data(s, x, y, nx, ny, lo=start, hi=stop):
            return record.at(record.t_final - s)[lo:hi].reshape(np.shape(x))

        boundary[tag] = BoundaryCondition(BCKind.DIRICHLET_PRESSURE, data)
        start = stop
    return boundary


def time_reverse(
    record: MeasurementRecord | None,
    mesh: Mesh,
    materials: MaterialField,
    t_final: float,
    final_state: State | None = None,
    flux: FluxParams = FluxParams(PAT_TAU, PAT_TAU),
    cfl: float = 0.5,
) -> State:
    """
    Solve backwards from t_final to 0.

    The backward clock s = t_final - t turns the problem into a forward one
    with velocities negated. Boundary pressure comes from the record, or is
    zero when record is None; the state at t_final defaults to zero.

    Returns:
        State at physical time 0, velocities restored to their physical sign
    """
    if record is not None and not math.isclose(record.t_final, t_final, rel_tol=1e-12, abs_tol=1e-12):
        raise ReconstructionError(f"Record ends at T={record.t_final}, reconstruction asked for T={t_final}")
    if final_state is not None and not math.isclose(final_state.time, t_final, rel_tol=1e-12, abs_tol=1e-12):
        raise ReconstructionError(f"Final state is at t={final_state.time}, expected T={t_final}")
    boundary = _record_boundary(mesh, record) if record is not None else BoundaryCondition(BCKind.DIRICHLET_PRESSURE)
    operator = WaveOperator(mesh, materials, flux, boundary=boundary)
    start = _flip_velocities(final_state) if final_state is not None else State.zeros(mesh)
    start.time = 0.0
    dt = estimate_dt(mesh, materials, mesh.ref.degree, cfl)
    end = integrate(start, operator, TimeConfig(t_final=t_final, cfl=cfl), mesh, dt=dt)
    result = _flip_velocities(end)
    result.time = 0.0
    return result


@dataclass
class NeumannResult:
    pressure: np.ndarray                                # (K, Np)
    errors: list[float] = field(default_factory=list)   # relative error per iterate, when truth is known
    kappa: list[float] = field(default_factory=list)    # ||term_n|| / ||term_{n-1}||, NaN for the first

    def rows(self) -> list[dict]:
        n = max(len(self.errors), len(self.kappa))
        return [
            {
                "iteration": i,
                "relative_error": self.errors[i] if i < len(self.errors) else float("nan"),
                "kappa_est": self.kappa[i] if i < len(self.kappa) else float("nan"),
            }
            for i in range(n)
        ]


def neumann_reconstruct(
    record: MeasurementRecord,
    mesh: Mesh,
    materials: MaterialField,
    t_final: float,
    max_iter: int,
    truth: np.ndarray | None = None,
    flux: FluxParams = FluxParams(PAT_TAU, PAT_TAU),
    cfl: float = 0.5,
) -> NeumannResult:
    """
    Time reversal refined by a truncated Neumann series.

    P_0 is the time reversal of the record. Each further iterate adds
    term_n = B(F(term_{n-1})): F runs forward with absorbing boundaries to
    t_final and B runs backward from that state with zero boundary pressure.
    max_iter counts iterates including P_0, so max_iter=1 returns P_0.
    """
    if max_iter < 1:
        raise ReconstructionError(f"max_iter must be at least 1, got {max_iter}")
    p0 = time_reverse(record, mesh, materials, t_final, flux=flux, cfl=cfl).nodal_field(mesh, "p")
    result = NeumannResult(p0.copy(), kappa=[float("nan")])
    if truth is not None:
        result.errors.append(relative_error(mesh, p0, truth))
        logger.info(f"PAT iterate 0: relative error {result.errors[-1]:.6f}")

    term = p0
    rises = 0
    for it in range(1, max_iter):
        _, at_final = forward_measure(term, mesh, materials, t_final, flux, cfl)
        new_term = time_reverse(None, mesh, materials, t_final, final_state=at_final, flux=flux, cfl=cfl).nodal_field(mesh, "p")
        prev_norm = pressure_norm(mesh, term)
        result.kappa.append(pressure_norm(mesh, new_term) / prev_norm if prev_norm > 0 else float("nan"))
        result.pressure = result.pressure + new_term
        term = new_term
        if truth is not None:
            result.errors.append(relative_error(mesh, result.pressure, truth))
            rises = rises + 1 if result.errors[-1] > result.errors[-2] else 0
            logger.info(f"PAT iterate {it}: relative error {result.errors[-1]:.6f}, kappa_est {result.kappa[-1]:.4f}")
            if rises >= 2:
                logger.warning(f"Neumann series diverging: error rose on {rises} consecutive iterations (kappa_est {result.kappa[-1]:.3f})")
        else:
            logger.info(f"PAT iterate {it}: kappa_est {result.kappa[-1]:.4f}")
    return result
