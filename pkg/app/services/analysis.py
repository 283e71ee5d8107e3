"""Operator assembly, spectra, discrete energy and convergence studies."""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy import stats

from app.core.config import get_settings
from app.core.errors import WaveSolverError
from app.services.dg_core import (
    ACOUSTIC_FIELDS,
    ELASTIC_FIELDS,
    FluxParams,
    GeometryMode,
    State,
    WaveOperator,
    num_dofs,
)
from app.services.exact import l2_error, project_exact
from app.services.materials import MaterialField
from app.services.mesh import Mesh
from app.services.refelem import build_reference_element
from app.services.scenarios import build_setup, mesh_size
from app.services.timeint import TimeConfig, estimate_dt, integrate
from app.services.wadg import WadgOperator

logger = logging.getLogger(__name__)

CONSISTENCY_TOL = 1e-11
CONSISTENCY_SAMPLES = 5
RATE_POINTS = 3


class OperatorSizeError(WaveSolverError):
    """Dense assembly requested above the DoF cap."""


class SpectrumError(WaveSolverError):
    """Eigensolver failure or a non-finite operator."""


@dataclass(frozen=True)
class DofIndex:
    """Element id, field name and local mode of every global DoF."""

    element: np.ndarray
    field: np.ndarray
    mode: np.ndarray


@dataclass(frozen=True)
class OperatorMatrix:
    matrix: np.ndarray
    index: DofIndex
    consistency: float

    @property
    def size(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class SpectrumResult:
    eigenvalues: np.ndarray
    max_real: float
    spectral_radius: float


def dof_index(mesh: Mesh) -> DofIndex:
    np_ = mesh.ref.num_basis
    elements, fields, modes = [], [], []
    for names, ids in ((ACOUSTIC_FIELDS, mesh.acoustic_ids), (ELASTIC_FIELDS, mesh.elastic_ids)):
        for name in names:
            elements.append(np.repeat(ids, np_))
            fields.append(np.full(len(ids) * np_, name, dtype=object))
            modes.append(np.tile(np.arange(np_), len(ids)))
    return DofIndex(
        element=np.concatenate(elements).astype(np.int64),
        field=np.concatenate(fields),
        mode=np.concatenate(modes).astype(np.int64),
    )


def _apply_to_columns(operator: WaveOperator, columns: np.ndarray, n: int) -> np.ndarray:
    out = np.empty((n, len(columns)))
    e = np.zeros(n)
    for i, j in enumerate(columns):
        e[j] = 1.0
        out[:, i] = operator.apply_linear(e)
        e[j] = 0.0
    return out


def verify_operator(operator: WaveOperator, L: np.ndarray, samples: int = CONSISTENCY_SAMPLES, seed: int = 0) -> float:
    """Largest relative mismatch between L x and the operator on random vectors."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        x = rng.standard_normal(L.shape[0])
        direct = operator.apply_linear(x)
        scale = max(np.linalg.norm(direct), np.finfo(float).tiny)
        worst = max(worst, float(np.linalg.norm(L @ x - direct) / scale))
    return worst


def operator_matrix(operator: WaveOperator, num_threads: int | None = None, dof_cap: int | None = None) -> OperatorMatrix:
    """
    Dense matrix of the homogeneous operator by applying it to unit vectors.

    Columns are split into contiguous chunks applied in a thread pool; each
    column is computed independently, so the result does not depend on the
    thread count.

    Raises:
        OperatorSizeError: more DoFs than dof_cap (Settings.dof_cap by default)
    """
    settings = get_settings()
    cap = dof_cap if dof_cap is not None else settings.dof_cap
    threads = max(1, num_threads if num_threads is not None else settings.num_threads)
    n = num_dofs(operator.mesh)
    if n > cap:
        raise OperatorSizeError(
            f"Dense operator would have {n} DoFs, above the cap of {cap}; use a coarser mesh or lower N"
        )
    logger.info(f"Applying the operator to {n} unit vectors with {threads} thread(s)")

    chunks = [c for c in np.array_split(np.arange(n), threads) if len(c)]
    L = np.empty((n, n))
    if threads == 1:
        L[:] = _apply_to_columns(operator, np.arange(n), n)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            blocks = pool.map(lambda cols: _apply_to_columns(operator, cols, n), chunks)
            for cols, block in zip(chunks, blocks):
                L[:, cols] = block

    consistency = verify_operator(operator, L)
    if consistency > CONSISTENCY_TOL:
        logger.warning(f"Assembled operator deviates from the RHS by {consistency:.3e} (relative)")
    return OperatorMatrix(L, dof_index(operator.mesh), consistency)


def assemble_operator(
    mesh: Mesh,
    materials: MaterialField,
    flux: FluxParams | None = None,
    mode: GeometryMode = GeometryMode.AFFINE,
    boundary=None,
    num_threads: int | None = None,
) -> OperatorMatrix:
    return operator_matrix(WaveOperator(mesh, materials, flux, mode, boundary), num_threads)


def spectrum(L: OperatorMatrix | np.ndarray) -> SpectrumResult:
    """All eigenvalues of the dense operator with the largest real part and spectral radius."""
    matrix = L.matrix if isinstance(L, OperatorMatrix) else np.atleast_2d(np.asarray(L, dtype=float))
    if not np.isfinite(matrix).all():
        raise SpectrumError("Operator contains non-finite entries")
    try:
        eig = scipy.linalg.eigvals(matrix, check_finite=False)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as e:
        raise SpectrumError(f"Eigensolver failed on a {matrix.shape[0]}x{matrix.shape[0]} operator: {e}") from e
    result = SpectrumResult(eig, float(eig.real.max()), float(np.abs(eig).max()))
    logger.info(f"Spectrum: {len(eig)} eigenvalues, max Re={result.max_real:.3e}, radius={result.spectral_radius:.4e}")
    return result


# -- energy -------------------------------------------------------------------


def _weighted_mass(vq: np.ndarray, wq: np.ndarray, weight: np.ndarray) -> np.ndarray:
    return np.einsum("qn,kq,qm->knm", vq, wq * weight, vq)


def _adjusted_inverse(mass: np.ndarray, weighted: np.ndarray) -> np.ndarray:
    """M M_w^{-1} M for a stack of weighted masses."""
    if not weighted.shape[0]:
        return weighted
    rhs = np.broadcast_to(mass, weighted.shape)
    return mass @ np.linalg.solve(weighted, rhs)


class EnergyNorm:
    """
    Block energy weight consistent with the weight-adjusted mass inversion.

    Each block is M M_w^{-1} M, where w is the factor the time derivative is
    multiplied by (c^2/J, 1/J, 1/(rho J), C/J), so W L is the assembled
    bilinear form.
    """

    def __init__(self, mesh: Mesh, materials: MaterialField):
        self.mesh = mesh
        ref = mesh.ref
        wadg = WadgOperator(mesh, materials)
        vq, wq, M = ref.interp_vol, ref.quad_weights, ref.mass
        np_ = ref.num_basis
        self.pressure = _adjusted_inverse(M, _weighted_mass(vq, wq, wadg.pressure_weight))
        self.acoustic_velocity = _adjusted_inverse(M, _weighted_mass(vq, wq, wadg.acoustic_velocity_weight))
        self.elastic_velocity = _adjusted_inverse(M, _weighted_mass(vq, wq, wadg.elastic_velocity_weight))

        ke = len(mesh.elastic_ids)
        stress_mass = np.zeros((ke, 3 * np_, 3 * np_))
        for i in range(3):
            for j in range(3):
                stress_mass[:, i * np_:(i + 1) * np_, j * np_:(j + 1) * np_] = _weighted_mass(
                    vq, wq, wadg.stress_weight[:, :, i, j]
                )
        block_mass = np.kron(np.eye(3), M)
        self.stress = _adjusted_inverse(block_mass, stress_mass)

    def energy(self, state: State) -> float:
        """(p/c^2, p) + (u, u) + (rho v, v) + (C^{-1} sigma, sigma) in the weight-adjusted inner product."""
        total = 0.0
        if state.acoustic.shape[1]:
            p, u1, u2 = state.acoustic
            total += np.einsum("kn,knm,km->", p, self.pressure, p)
            total += np.einsum("kn,knm,km->", u1, self.acoustic_velocity, u1)
            total += np.einsum("kn,knm,km->", u2, self.acoustic_velocity, u2)
        if state.elastic.shape[1]:
            v1, v2 = state.elastic[:2]
            total += np.einsum("kn,knm,km->", v1, self.elastic_velocity, v1)
            total += np.einsum("kn,knm,km->", v2, self.elastic_velocity, v2)
            s = np.transpose(state.elastic[2:], (1, 0, 2)).reshape(state.elastic.shape[1], -1)
            total += np.einsum("kn,knm,km->", s, self.stress, s)
        return float(total)

    def dense(self) -> np.ndarray:
        """Global symmetric positive definite W in the flat state layout."""
        mesh = self.mesh
        np_ = mesh.ref.num_basis
        ka, ke = len(mesh.acoustic_ids), len(mesh.elastic_ids)
        W = np.zeros((num_dofs(mesh), num_dofs(mesh)))
        local = np.arange(np_)

        def put(rows, block):
            W[np.ix_(rows, rows)] = block

        for a in range(ka):
            put((0 * ka + a) * np_ + local, self.pressure[a])
            put((1 * ka + a) * np_ + local, self.acoustic_velocity[a])
            put((2 * ka + a) * np_ + local, self.acoustic_velocity[a])
        offset = len(ACOUSTIC_FIELDS) * ka * np_
        for e in range(ke):
            put(offset + (0 * ke + e) * np_ + local, self.elastic_velocity[e])
            put(offset + (1 * ke + e) * np_ + local, self.elastic_velocity[e])
            rows = np.concatenate([offset + ((2 + i) * ke + e) * np_ + local for i in range(3)])
            put(rows, self.stress[e])
        return W


def energy_weight_matrix(mesh: Mesh, materials: MaterialField) -> np.ndarray:
    return EnergyNorm(mesh, materials).dense()


def discrete_energy(state: State, mesh: Mesh, materials: MaterialField, form: str = "wadg") -> float:
    """
    Discrete energy of a state.

    form="wadg" uses the weight-adjusted inner product the scheme dissipates;
    form="quadrature" evaluates the weighted L2 form directly at quadrature points.
    """
    if form == "wadg":
        return EnergyNorm(mesh, materials).energy(state)
    if form != "quadrature":
        raise ValueError(f"Unknown energy form '{form}'")
    ref = mesh.ref
    vq, wq = ref.interp_vol, ref.quad_weights
    ia, ie = mesh.acoustic_ids, mesh.elastic_ids
    total = 0.0
    if len(ia):
        p, u1, u2 = np.einsum("qn,ckn->ckq", vq, state.acoustic)
        total += np.sum(wq * mesh.J[ia] * (p**2 / materials.c2 + u1**2 + u2**2))
    if len(ie):
        fq = np.einsum("qn,ckn->ckq", vq, state.elastic)
        v1, v2, s = fq[0], fq[1], fq[2:]
        strain = np.einsum("kqij,jkq->ikq", materials.Cinv, s)
        total += np.sum(wq * mesh.J[ie] * (materials.rho * (v1**2 + v2**2) + np.sum(s * strain, axis=0)))
    return float(total)


class EnergyTrace:
    """Step callback collecting (step, time, energy) rows."""

    def __init__(self, mesh: Mesh, materials: MaterialField):
        self.norm = EnergyNorm(mesh, materials)
        self.rows: list[tuple[int, float, float]] = []

    def __call__(self, step: int, state: State) -> None:
        self.rows.append((step, float(state.time), self.norm.energy(state)))

    def max_relative_increase(self) -> float:
        e = np.array([r[2] for r in self.rows])
        if len(e) < 2:
            return 0.0
        return float(np.max(np.diff(e) / np.maximum(e[:-1], np.finfo(float).tiny)))


def antisymmetry_defect(L: np.ndarray, W: np.ndarray) -> float:
    """Relative size of the symmetric part of W L; zero for a skew bilinear form."""
    B = W @ (L.matrix if isinstance(L, OperatorMatrix) else L)
    scale = max(np.abs(B).max(), np.finfo(float).tiny)
    return float(np.abs(0.5 * (B + B.T)).max() / scale)


# -- convergence ----------------------------------------------------------------


def fit_rate(h, errors, points: int = RATE_POINTS) -> float:
    """Least-squares slope of log(error) against log(h) over the finest `points` levels."""
    h = np.asarray(h, dtype=float)
    errors = np.asarray(errors, dtype=float)
    order = np.argsort(h)[:points]
    if len(order) < 2:
        return float("nan")
    return float(stats.linregress(np.log(h[order]), np.log(errors[order])).slope)


def convergence_study(
    scenario: str,
    degrees: list[int],
    divisions: list[int],
    flux: FluxParams,
    cfl: float = 0.5,
    t_final: float | None = None,
) -> tuple[list[dict], dict[int, float]]:
    """
    L2 errors at the final time for every (N, n) pair.

    Starts from the projected exact solution and drives every boundary face
    with exact traction data.

    Returns:
        (rows, slopes): one dict per run with N, h, per-field errors and `total`;
        slopes maps N to the fitted rate of the total error
    """
    rows = []
    slopes = {}
    for N in degrees:
        ref = build_reference_element(N)
        hs, totals = [], []
        for n in divisions:
            setup = build_setup(scenario, ref, n)
            T = t_final if t_final is not None else setup.t_final
            operator = WaveOperator(setup.mesh, setup.materials, flux, setup.mode, setup.boundary)
            state = project_exact(setup.solution, setup.mesh, 0.0)
            dt = estimate_dt(setup.mesh, setup.materials, N, cfl)
            final = integrate(state, operator, TimeConfig(t_final=T, cfl=cfl), setup.mesh, dt=dt)
            errors = l2_error(final, setup.solution, setup.mesh, T)
            h = mesh_size(n)
            rows.append({"N": N, "h": h, **errors})
            hs.append(h)
            totals.append(errors["total"])
            logger.info(f"{scenario} N={N} h={h}: total error {errors['total']:.6e}")
        slopes[N] = fit_rate(hs, totals)
        logger.info(f"{scenario} N={N}: rate {slopes[N]:.3f}")
    return rows, slopes


def consistency_residual(
    scenario: str,
    degree: int,
    divisions: list[int],
    flux: FluxParams,
) -> tuple[list[dict], float]:
    """
    L2 norm of RHS(P u) - P du/dt with the exact solution inserted at t = 0.

    Returns rows with N, h and residual, and the fitted decay rate.
    """
    ref = build_reference_element(degree)
    rows = []
    for n in divisions:
        setup = build_setup(scenario, ref, n)
        mesh = setup.mesh
        operator = WaveOperator(mesh, setup.materials, flux, setup.mode, setup.boundary)
        state = project_exact(setup.solution, mesh, 0.0)
        rhs = operator.rhs_coupled(state)
        target = project_exact(setup.solution, mesh, 0.0, time_derivative=True)
        vq, wq = ref.interp_vol, ref.quad_weights
        total = 0.0
        for got, want, ids in ((rhs.acoustic, target.acoustic, mesh.acoustic_ids), (rhs.elastic, target.elastic, mesh.elastic_ids)):
            if len(ids):
                diff = np.einsum("qn,ckn->ckq", vq, got - want)
                total += np.sum(wq * mesh.J[ids] * diff**2)
        rows.append({"N": degree, "h": mesh_size(n), "residual": float(np.sqrt(total))})
        logger.info(f"Consistency {scenario} N={degree} h={rows[-1]['h']}: {rows[-1]['residual']:.6e}")
    rate = fit_rate([r["h"] for r in rows], [r["residual"] for r in rows])
    return rows, rate
