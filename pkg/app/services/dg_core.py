"""
Semidiscrete right-hand side of the coupled acoustic-elastic system.

Acoustic fields (p, u) with unit density:    p_t = c^2 div u,   u_t = grad p
Elastic fields (v, sigma) in Voigt notation:  rho v_t = A^T grad sigma,   C^{-1} sigma_t = A grad v

The pressure acts as the normal stress, so at a coupling interface the
traction A_n^T sigma equals p n and the normal velocities agree.

Residuals are evaluated in reference-element form, M^{-1} times the bilinear
form including the Jacobian, and then handed to the weight-adjusted mass
inversion in wadg.py.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Mapping

import numpy as np

from app.core.config import get_settings
from app.core.errors import WaveSolverError
from app.services.materials import MaterialField
from app.services.mesh import FaceKind, Mesh, Region
from app.services.wadg import WadgOperator

logger = logging.getLogger(__name__)

ACOUSTIC_FIELDS = ("p", "u1", "u2")
ELASTIC_FIELDS = ("v1", "v2", "sigma1", "sigma2", "sigma3")
DEFAULT_TAU = 0.5

BoundaryData = Callable[[float, np.ndarray, np.ndarray, np.ndarray, np.ndarray], object]


class FluxConfigurationError(WaveSolverError):
    """Negative penalty, missing boundary condition or absorbing boundary without dissipation."""


class GeometryModeError(WaveSolverError):
    """Volume kernel incompatible with the mesh geometry."""


class StateError(WaveSolverError):
    """State layout does not match the mesh, or contains non-finite values."""


class GeometryMode(str, Enum):
    AFFINE = "affine"
    STRONG_WEAK = "strong_weak"


class BCKind(str, Enum):
    DIRICHLET_PRESSURE = "dirichlet_pressure"
    TRACTION = "traction"
    ZERO_VELOCITY = "zero_velocity"
    ABSORBING = "absorbing"


@dataclass(frozen=True)
class FluxParams:
    """Penalty parameters; the elastic ones are tied to the acoustic ones (tau_v = tau_u, tau_sigma = tau_p)."""

    tau_p: float = DEFAULT_TAU
    tau_u: float = DEFAULT_TAU

    def __post_init__(self):
        if self.tau_p < 0 or self.tau_u < 0:
            raise FluxConfigurationError(f"Penalty parameters must be non-negative, got tau_p={self.tau_p}, tau_u={self.tau_u}")

    @property
    def tau_v(self) -> float:
        return self.tau_u

    @property
    def tau_sigma(self) -> float:
        return self.tau_p

    @property
    def dissipative(self) -> bool:
        return self.tau_p > 0 and self.tau_u > 0


@dataclass(frozen=True)
class BoundaryCondition:
    """
    Boundary condition for one boundary tag.

    data(t, x, y, nx, ny) returns the prescribed pressure for DIRICHLET_PRESSURE
    and a (t1, t2) pair for TRACTION, each shaped like x. None means zero data.
    """

    kind: BCKind
    data: BoundaryData | None = None


@dataclass
class State:
    """Nodal coefficients: acoustic (3, Ka, Np) as (p, u1, u2), elastic (5, Ke, Np) as (v1, v2, s1, s2, s3)."""

    acoustic: np.ndarray
    elastic: np.ndarray
    time: float = 0.0

    @classmethod
    def zeros(cls, mesh: Mesh, time: float = 0.0) -> "State":
        np_ = mesh.ref.num_basis
        return cls(
            acoustic=np.zeros((len(ACOUSTIC_FIELDS), len(mesh.acoustic_ids), np_)),
            elastic=np.zeros((len(ELASTIC_FIELDS), len(mesh.elastic_ids), np_)),
            time=time,
        )

    @classmethod
    def from_vector(cls, mesh: Mesh, vec: np.ndarray, time: float = 0.0) -> "State":
        np_ = mesh.ref.num_basis
        na = len(ACOUSTIC_FIELDS) * len(mesh.acoustic_ids) * np_
        ne = len(ELASTIC_FIELDS) * len(mesh.elastic_ids) * np_
        if vec.shape != (na + ne,):
            raise StateError(f"State vector has shape {vec.shape}, mesh needs ({na + ne},)")
        return cls(
            acoustic=vec[:na].reshape(len(ACOUSTIC_FIELDS), -1, np_),
            elastic=vec[na:].reshape(len(ELASTIC_FIELDS), -1, np_),
            time=time,
        )

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.acoustic.ravel(), self.elastic.ravel()])

    def copy(self) -> "State":
        return State(self.acoustic.copy(), self.elastic.copy(), self.time)

    def check_layout(self, mesh: Mesh) -> None:
        np_ = mesh.ref.num_basis
        want_a = (len(ACOUSTIC_FIELDS), len(mesh.acoustic_ids), np_)
        want_e = (len(ELASTIC_FIELDS), len(mesh.elastic_ids), np_)
        if self.acoustic.shape != want_a or self.elastic.shape != want_e:
            raise StateError(f"State blocks {self.acoustic.shape}/{self.elastic.shape} do not match mesh {want_a}/{want_e}")

    def check_finite(self) -> None:
        for name, block in (("acoustic", self.acoustic), ("elastic", self.elastic)):
            bad = ~np.isfinite(block)
            if bad.any():
                field, elem, _ = np.nonzero(bad)
                raise StateError(f"Non-finite {name} values in block elements {sorted(set(elem.tolist()))[:20]} at t={self.time}")

    def nodal_field(self, mesh: Mesh, name: str) -> np.ndarray:
        """(K, Np) array of one field, zero on elements of the other region; velocities merge u and v."""
        out = np.zeros((mesh.num_elements, mesh.ref.num_basis))
        merged = {"vx": ("u1", "v1"), "vy": ("u2", "v2")}
        a_name, e_name = merged.get(name, (name, name))
        if a_name in ACOUSTIC_FIELDS:
            out[mesh.acoustic_ids] = self.acoustic[ACOUSTIC_FIELDS.index(a_name)]
        if e_name in ELASTIC_FIELDS:
            out[mesh.elastic_ids] = self.elastic[ELASTIC_FIELDS.index(e_name)]
        return out


def num_dofs(mesh: Mesh) -> int:
    return (len(ACOUSTIC_FIELDS) * len(mesh.acoustic_ids) + len(ELASTIC_FIELDS) * len(mesh.elastic_ids)) * mesh.ref.num_basis


def normal_matrix(nx, ny, w1, w2) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """A_n w for a velocity-like 2-vector w."""
    return nx * w1, ny * w2, ny * w1 + nx * w2


def traction(nx, ny, s1, s2, s3) -> tuple[np.ndarray, np.ndarray]:
    """A_n^T sigma = (s1 n1 + s3 n2, s3 n1 + s2 n2)."""
    return s1 * nx + s3 * ny, s3 * nx + s2 * ny


def acoustic_flux(p, u1, u2, pE, u1E, u2E, nx, ny, flux: FluxParams):
    """
    Penalty flux on the acoustic side, strong form.

    Returns the face integrands for (p, u1, u2):
    1/2 [[u]].n + tau_p/2 [[p]]  and  (1/2 [[p]] + tau_u/2 [[u]].n) n.
    The velocity penalty acts on the normal jump [[u]].n only, not on the full
    jump [[u]]; tangential velocity jumps are left unpenalized.
    """
    dp = pE - p
    dun = nx * (u1E - u1) + ny * (u2E - u2)
    fp = 0.5 * dun + 0.5 * flux.tau_p * dp
    fu = 0.5 * dp + 0.5 * flux.tau_u * dun
    return fp, fu * nx, fu * ny


def elastic_flux(v1, v2, t1, t2, v1E, v2E, t1E, t2E, nx, ny, flux: FluxParams, coupled):
    """
    Penalty flux on the elastic side, strong form.

    On elastic-elastic and boundary faces:
        v: 1/2 [[t]] + tau_v/2 A_n^T A_n [[v]],   sigma: 1/2 A_n [[v]] + tau_sigma/2 A_n [[t]]
    On faces facing an acoustic neighbor (`coupled`), with exterior traction p n
    and only the normal velocity jump:
        v: 1/2 (p n - t - (I - n n^T) t) + tau_v/2 n n^T (u - v)
    """
    jv1, jv2 = v1E - v1, v2E - v2
    jt1, jt2 = t1E - t1, t2E - t2

    jn = nx * jv1 + ny * jv2
    jv1 = np.where(coupled, jn * nx, jv1)
    jv2 = np.where(coupled, jn * ny, jv2)

    tn = nx * t1 + ny * t2
    c1 = np.where(coupled, jt1 - (t1 - tn * nx), jt1)
    c2 = np.where(coupled, jt2 - (t2 - tn * ny), jt2)

    a1, a2, a3 = normal_matrix(nx, ny, jv1, jv2)
    q1, q2 = traction(nx, ny, a1, a2, a3)
    pen1 = np.where(coupled, jv1, q1)
    pen2 = np.where(coupled, jv2, q2)

    b1, b2, b3 = normal_matrix(nx, ny, jt1, jt2)
    return (
        0.5 * c1 + 0.5 * flux.tau_v * pen1,
        0.5 * c2 + 0.5 * flux.tau_v * pen2,
        0.5 * a1 + 0.5 * flux.tau_sigma * b1,
        0.5 * a2 + 0.5 * flux.tau_sigma * b2,
        0.5 * a3 + 0.5 * flux.tau_sigma * b3,
    )


def _pressure_data(bc: BoundaryCondition, data, nx, ny):
    if data is None:
        return 0.0
    if bc.kind == BCKind.TRACTION:
        t1, t2 = data
        return nx * t1 + ny * t2
    return data


def _traction_data(bc: BoundaryCondition, data, nx, ny):
    if data is None:
        return 0.0, 0.0
    if bc.kind == BCKind.DIRICHLET_PRESSURE:
        return data * nx, data * ny
    return data


def boundary_trace(bc: BoundaryCondition, region: Region, interior: tuple, nx, ny, data=None) -> tuple:
    """
    Exterior ghost values on boundary faces.

    Args:
        interior: (p, u1, u2) on acoustic faces, (v1, v2, t1, t2) on elastic faces
        data: evaluated boundary data for these faces, or None for zero data

    Returns:
        Exterior values in the same layout as interior
    """
    if region == Region.ACOUSTIC:
        p, u1, u2 = interior
        if bc.kind in (BCKind.DIRICHLET_PRESSURE, BCKind.TRACTION):
            p_bc = _pressure_data(bc, data, nx, ny)
            return 2.0 * p_bc - p, u1, u2
        if bc.kind == BCKind.ZERO_VELOCITY:
            un = u1 * nx + u2 * ny
            return p, u1 - 2.0 * un * nx, u2 - 2.0 * un * ny
        return np.zeros_like(p), np.zeros_like(u1), np.zeros_like(u2)

    v1, v2, t1, t2 = interior
    if bc.kind in (BCKind.DIRICHLET_PRESSURE, BCKind.TRACTION):
        b1, b2 = _traction_data(bc, data, nx, ny)
        return v1, v2, 2.0 * b1 - t1, 2.0 * b2 - t2
    if bc.kind == BCKind.ZERO_VELOCITY:
        return -v1, -v2, t1, t2
    return np.zeros_like(v1), np.zeros_like(v2), np.zeros_like(t1), np.zeros_like(t2)


@dataclass(frozen=True)
class _BoundaryGroup:
    tag: str
    bc: BoundaryCondition
    faces: tuple[np.ndarray, np.ndarray]           # all faces with the tag, global (k, f)
    acoustic: np.ndarray                           # mask into faces
    elastic: np.ndarray


class WaveOperator:
    """
    Coupled DG operator on a fixed mesh, media, flux and boundary setup.

    Calling the operator as rhs(t, y) on a flat state vector gives dy/dt,
    which is what timeint.integrate expects.
    """

    def __init__(
        self,
        mesh: Mesh,
        materials: MaterialField,
        flux: FluxParams | None = None,
        mode: GeometryMode = GeometryMode.AFFINE,
        boundary: BoundaryCondition | Mapping[str, BoundaryCondition] | None = None,
    ):
        self.mesh = mesh
        self.ref = mesh.ref
        self.materials = materials
        self.flux = flux or FluxParams()
        self.mode = GeometryMode(mode)
        if self.mode == GeometryMode.AFFINE and mesh.curved:
            raise GeometryModeError("Affine volume kernel requested on a curved mesh; use strong_weak")
        if self.mode == GeometryMode.STRONG_WEAK and not mesh.has_quadrature_geometry:
            raise GeometryModeError("strong_weak mode needs geometric factors at every volume quadrature point")
        self.wadg = WadgOperator(mesh, materials)
        self.debug = get_settings().debug

        k_count, nfq = mesh.num_elements, self.ref.num_face_quad
        ext = np.arange(k_count * 3 * nfq).reshape(k_count, 3, nfq)
        kk, ff = np.nonzero(mesh.neighbor >= 0)
        k2, f2 = mesh.neighbor[kk, ff], mesh.neighbor_face[kk, ff]
        ext[kk, ff] = (k2 * 3 + f2)[:, None] * nfq + mesh.face_perm[kk, ff]
        self._ext = ext

        self._groups = self._boundary_groups(boundary)
        self._ia, self._ie = mesh.acoustic_ids, mesh.elastic_ids
        self._coupled_a = (mesh.face_kind[self._ia] == FaceKind.AE)[:, :, None]
        self._coupled_e = (mesh.face_kind[self._ie] == FaceKind.EA)[:, :, None]
        logger.info(
            f"WaveOperator: mode={self.mode.value}, tau_p={self.flux.tau_p}, tau_u={self.flux.tau_u}, "
            f"dofs={num_dofs(mesh)}, boundary tags={[g.tag for g in self._groups]}"
        )

    def _boundary_groups(self, boundary) -> list[_BoundaryGroup]:
        mesh = self.mesh
        if boundary is None:
            boundary = BoundaryCondition(BCKind.DIRICHLET_PRESSURE)
        groups = []
        for index, tag in enumerate(mesh.boundary_tags):
            kk, ff = np.nonzero(mesh.boundary_tag_index == index)
            if kk.size == 0:
                continue
            bc = boundary if isinstance(boundary, BoundaryCondition) else boundary.get(tag)
            if bc is None:
                faces = list(zip(kk.tolist(), ff.tolist()))[:10]
                raise FluxConfigurationError(f"No boundary condition for tag '{tag}' (faces {faces})")
            if bc.kind == BCKind.ABSORBING and not self.flux.dissipative:
                raise FluxConfigurationError(
                    f"Absorbing boundary '{tag}' needs tau_p > 0 and tau_u > 0, got {self.flux.tau_p}, {self.flux.tau_u}"
                )
            acoustic = mesh.region[kk] == Region.ACOUSTIC
            groups.append(_BoundaryGroup(tag, bc, (kk, ff), acoustic, ~acoustic))
        return groups

    def boundary_points(self, tag: str) -> tuple[np.ndarray, np.ndarray]:
        """Face quadrature points of one boundary tag, in the order boundary data is evaluated."""
        for g in self._groups:
            if g.tag == tag:
                kk, ff = g.faces
                return self.mesh.xf[kk, ff], self.mesh.yf[kk, ff]
        raise FluxConfigurationError(f"Unknown boundary tag '{tag}'")

    # -- traces ---------------------------------------------------------------

    def _traces(self, state: State, t: float, include_data: bool):
        mesh, ref = self.mesh, self.ref
        shape = (mesh.num_elements, 3, ref.num_face_quad)
        P, U1, U2, S1, S2, S3 = (np.zeros(shape) for _ in range(6))
        ia, ie = self._ia, self._ie
        if len(ia):
            fa = np.einsum("fqn,ckn->ckfq", ref.interp_face, state.acoustic)
            P[ia], U1[ia], U2[ia] = fa
        if len(ie):
            fe = np.einsum("fqn,ckn->ckfq", ref.interp_face, state.elastic)
            U1[ie], U2[ie], S1[ie], S2[ie], S3[ie] = fe

        def gather(a):
            return a.reshape(-1)[self._ext]

        nx, ny = mesh.nx, mesh.ny
        PE, U1E, U2E = gather(P), gather(U1), gather(U2)
        T1E, T2E = traction(nx, ny, gather(S1), gather(S2), gather(S3))

        for g in self._groups:
            kk, ff = g.faces
            gx, gy = nx[kk, ff], ny[kk, ff]
            data = None
            if include_data and g.bc.data is not None:
                data = g.bc.data(t, mesh.xf[kk, ff], mesh.yf[kk, ff], gx, gy)
            for region, mask in ((Region.ACOUSTIC, g.acoustic), (Region.ELASTIC, g.elastic)):
                if not mask.any():
                    continue
                k, f = kk[mask], ff[mask]
                sub = None if data is None else _subset(data, mask)
                if region == Region.ACOUSTIC:
                    PE[k, f], U1E[k, f], U2E[k, f] = boundary_trace(
                        g.bc, region, (P[k, f], U1[k, f], U2[k, f]), gx[mask], gy[mask], sub
                    )
                else:
                    t1, t2 = traction(gx[mask], gy[mask], S1[k, f], S2[k, f], S3[k, f])
                    U1E[k, f], U2E[k, f], T1E[k, f], T2E[k, f] = boundary_trace(
                        g.bc, region, (U1[k, f], U2[k, f], t1, t2), gx[mask], gy[mask], sub
                    )
        return (P, U1, U2, S1, S2, S3), (PE, U1E, U2E, T1E, T2E)

    def _lift(self, fluxes: np.ndarray, ids: np.ndarray) -> np.ndarray:
        return np.einsum("fnq,ckfq->ckn", self.ref.lift, fluxes * self.mesh.sJ[ids])

    # -- volume kernels -------------------------------------------------------

    def _affine_grad(self, u: np.ndarray, ids: np.ndarray):
        """Physical (d/dx, d/dy) of nodal fields u (..., Kx, Np), scaled by J."""
        m = self.mesh
        dr, ds = self.ref.diff
        ur = np.einsum("nm,...km->...kn", dr, u)
        us = np.einsum("nm,...km->...kn", ds, u)
        J = m.J[ids, :1]
        dx = J * (m.rx[ids, :1] * ur + m.sx[ids, :1] * us)
        dy = J * (m.ry[ids, :1] * ur + m.sy[ids, :1] * us)
        return dx, dy

    def _quad_grad(self, u: np.ndarray, ids: np.ndarray):
        """J-scaled physical derivatives at volume quadrature points."""
        m = self.mesh
        vqr, vqs = self.ref.interp_grad
        ur = np.einsum("qn,...kn->...kq", vqr, u)
        us = np.einsum("qn,...kn->...kq", vqs, u)
        J = m.J[ids]
        return J * (m.rx[ids] * ur + m.sx[ids] * us), J * (m.ry[ids] * ur + m.sy[ids] * us)

    def _project(self, uq: np.ndarray) -> np.ndarray:
        return np.einsum("nq,...kq->...kn", self.ref.project, uq)

    def _weak_div(self, a: np.ndarray, b: np.ndarray, ids: np.ndarray) -> np.ndarray:
        """M^{-1} times -(a d/dx + b d/dy) tested against the basis, with a, b nodal."""
        m = self.mesh
        vq = self.ref.interp_vol
        pr, ps = self.ref.project_grad
        aq = np.einsum("qn,kn->kq", vq, a)
        bq = np.einsum("qn,kn->kq", vq, b)
        J = m.J[ids]
        fr = J * (m.rx[ids] * aq + m.ry[ids] * bq)
        fs = J * (m.sx[ids] * aq + m.sy[ids] * bq)
        return -(np.einsum("nq,kq->kn", pr, fr) + np.einsum("nq,kq->kn", ps, fs))

    # -- residuals ------------------------------------------------------------

    def _acoustic_residual(self, state: State, traces, exterior) -> np.ndarray:
        ia = self._ia
        out = np.empty_like(state.acoustic)
        if not len(ia):
            return out
        m = self.mesh
        P, U1, U2 = traces[0][ia], traces[1][ia], traces[2][ia]
        PE, U1E, U2E, T1E, T2E = (e[ia] for e in exterior)
        nx, ny = m.nx[ia], m.ny[ia]
        pE = np.where(self._coupled_a, nx * T1E + ny * T2E, PE)
        fp, fu1, fu2 = acoustic_flux(P, U1, U2, pE, U1E, U2E, nx, ny, self.flux)

        p, u1, u2 = state.acoustic
        if self.mode == GeometryMode.AFFINE:
            px, py = self._affine_grad(p, ia)
            (u1x, _), (_, u2y) = self._affine_grad(u1, ia), self._affine_grad(u2, ia)
            out[0], out[1], out[2] = u1x + u2y, px, py
        else:
            fp = fp + nx * U1 + ny * U2
            px, py = self._quad_grad(p, ia)
            out[0] = self._weak_div(u1, u2, ia)
            out[1], out[2] = self._project(px), self._project(py)
        return out + self._lift(np.stack([fp, fu1, fu2]), ia)

    def _elastic_residual(self, state: State, traces, exterior) -> np.ndarray:
        ie = self._ie
        out = np.empty_like(state.elastic)
        if not len(ie):
            return out
        m = self.mesh
        V1, V2, S1, S2, S3 = traces[1][ie], traces[2][ie], traces[3][ie], traces[4][ie], traces[5][ie]
        PE, U1E, U2E, T1E, T2E = (e[ie] for e in exterior)
        nx, ny = m.nx[ie], m.ny[ie]
        t1, t2 = traction(nx, ny, S1, S2, S3)
        t1E = np.where(self._coupled_e, PE * nx, T1E)
        t2E = np.where(self._coupled_e, PE * ny, T2E)
        fluxes = list(elastic_flux(V1, V2, t1, t2, U1E, U2E, t1E, t2E, nx, ny, self.flux, self._coupled_e))

        v1, v2, s1, s2, s3 = state.elastic
        if self.mode == GeometryMode.AFFINE:
            (s1x, _), (_, s2y) = self._affine_grad(s1, ie), self._affine_grad(s2, ie)
            s3x, s3y = self._affine_grad(s3, ie)
            v1x, v1y = self._affine_grad(v1, ie)
            v2x, v2y = self._affine_grad(v2, ie)
            out[:] = s1x + s3y, s3x + s2y, v1x, v2y, v1y + v2x
        else:
            a1, a2, a3 = normal_matrix(nx, ny, V1, V2)
            fluxes[2], fluxes[3], fluxes[4] = fluxes[2] + a1, fluxes[3] + a2, fluxes[4] + a3
            (s1x, _), (_, s2y) = self._quad_grad(s1, ie), self._quad_grad(s2, ie)
            s3x, s3y = self._quad_grad(s3, ie)
            zero = np.zeros_like(v1)
            out[0] = self._project(s1x + s3y)
            out[1] = self._project(s3x + s2y)
            out[2] = self._weak_div(v1, zero, ie)
            out[3] = self._weak_div(zero, v2, ie)
            out[4] = self._weak_div(v2, v1, ie)
        return out + self._lift(np.stack(fluxes), ie)

    def residual(self, state: State, include_data: bool = True) -> tuple[np.ndarray, np.ndarray]:
        """Mass-premultiplied residuals (acoustic, elastic) before weight-adjusted inversion."""
        state.check_layout(self.mesh)
        if self.debug:
            state.check_finite()
        traces, exterior = self._traces(state, state.time, include_data)
        return self._acoustic_residual(state, traces, exterior), self._elastic_residual(state, traces, exterior)

    def rhs_acoustic(self, state: State, include_data: bool = True) -> np.ndarray:
        return self.residual(state, include_data)[0]

    def rhs_elastic(self, state: State, include_data: bool = True) -> np.ndarray:
        return self.residual(state, include_data)[1]

    def rhs_coupled(self, state: State, include_data: bool = True) -> State:
        """Time derivative of the state, weight-adjusted mass inversion included."""
        ra, re = self.residual(state, include_data)
        da = self.wadg.acoustic(ra) if len(self._ia) else ra
        de = self.wadg.elastic(re) if len(self._ie) else re
        return State(da, de, state.time)

    def __call__(self, t: float, y: np.ndarray) -> np.ndarray:
        return self.rhs_coupled(State.from_vector(self.mesh, y, t)).to_vector()

    def apply_linear(self, y: np.ndarray) -> np.ndarray:
        """Homogeneous part of the operator (boundary data dropped), L y."""
        return self.rhs_coupled(State.from_vector(self.mesh, y), include_data=False).to_vector()


def _subset(data, mask: np.ndarray):
    if isinstance(data, tuple):
        return tuple(_subset(d, mask) for d in data)
    data = np.asarray(data, dtype=float)
    return data[mask] if data.ndim else data


def rhs_acoustic(state, mesh, materials, flux, mode=GeometryMode.AFFINE, boundary=None) -> np.ndarray:
    """Mass-premultiplied acoustic residual (3, Ka, Np); the 1/c^2 weight is not inverted."""
    return WaveOperator(mesh, materials, flux, mode, boundary).rhs_acoustic(state)


def rhs_elastic(state, mesh, materials, flux, mode=GeometryMode.AFFINE, boundary=None) -> np.ndarray:
    """Mass-premultiplied elastic residual (5, Ke, Np); rho and C^{-1} weights are not inverted."""
    return WaveOperator(mesh, materials, flux, mode, boundary).rhs_elastic(state)


def rhs_coupled(state, mesh, materials, flux, mode=GeometryMode.AFFINE, boundary=None) -> State:
    return WaveOperator(mesh, materials, flux, mode, boundary).rhs_coupled(state)
