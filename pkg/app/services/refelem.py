"""Degree-N reference triangle operators.

The working basis is nodal (Warp & Blend interpolation nodes) on the bi-unit
triangle with vertices (-1,-1), (1,-1), (-1,1). Modal evaluation goes through
the orthonormal simplex basis from modepy, so the modal mass matrix is the
identity and every nodal operator is obtained through the inverse Vandermonde.

Faces are numbered by their start vertex: face 0 runs v0 -> v1 (s = -1),
face 1 runs v1 -> v2 (r + s = 0), face 2 runs v2 -> v0 (r = -1). Each face is
parametrized by t in [-1, 1] from its start vertex to its end vertex.
"""

import logging
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import modepy as mp
import numpy as np
from scipy import linalg
from scipy.special import roots_legendre

from app.core.errors import WaveSolverError

logger = logging.getLogger(__name__)

MIN_DEGREE = 1
MAX_DEGREE = 8
NUM_FACES = 3
EXTRAPOLATION_TOL = 1e-8

REFERENCE_VERTICES = np.array([[-1.0, -1.0], [1.0, -1.0], [-1.0, 1.0]])
FACE_VERTICES = ((0, 1), (1, 2), (2, 0))
# d(r, s)/dt along each face
FACE_TANGENTS = np.array(
    [(REFERENCE_VERTICES[b] - REFERENCE_VERTICES[a]) / 2.0 for a, b in FACE_VERTICES]
)


class ReferenceElementError(WaveSolverError):
    """Unsupported polynomial degree or malformed reference data."""


@lru_cache(maxsize=None)
def _modal_basis(N: int):
    return mp.orthonormal_basis_for_space(mp.PN(2, N), mp.Simplex(2))


def _as_point_array(points) -> np.ndarray:
    """Normalize a sequence of (r, s) pairs or a (2, n) ndarray to shape (2, n)."""
    if isinstance(points, np.ndarray):
        pts = points.astype(float, copy=False)
        return pts.reshape(2, -1) if pts.ndim == 1 else pts
    return np.asarray(points, dtype=float).reshape(-1, 2).T


def barycentric(points: np.ndarray) -> np.ndarray:
    """Barycentric coordinates (3, n) of reference points given as (2, n)."""
    r, s = points
    return np.array([-(r + s) / 2.0, (1.0 + r) / 2.0, (1.0 + s) / 2.0])


def vandermonde(points, N: int) -> np.ndarray:
    """
    Evaluate the orthonormal modal basis at reference points.

    Args:
        points: list of (r, s) pairs, or an array of shape (2, n)
        N: total polynomial degree (N = 0 gives the constant column)

    Returns:
        Matrix of shape (n, Np) with entry (i, j) = phi_j(point_i)
    """
    pts = _as_point_array(points)
    outside = barycentric(pts).min(axis=0) < -EXTRAPOLATION_TOL
    if outside.any():
        logger.warning(f"Extrapolating modal basis at {int(outside.sum())} points outside the reference triangle")
    return mp.vandermonde(_modal_basis(N).functions, pts)


def grad_vandermonde(points, N: int) -> tuple[np.ndarray, np.ndarray]:
    """Return (d/dr, d/ds) of the modal basis at reference points."""
    pts = _as_point_array(points)
    vr, vs = mp.multi_vandermonde(_modal_basis(N).gradients, pts)
    return vr, vs


def quadrature_rule(degree: int) -> tuple[np.ndarray, np.ndarray]:
    """Xiao-Gimbutas triangle rule exact to the given total degree: points (2, nq), weights (nq,)."""
    try:
        quad = mp.XiaoGimbutasSimplexQuadrature(degree, 2)
    except mp.QuadratureRuleUnavailable as e:
        raise ReferenceElementError(f"No triangle quadrature of degree {degree}: {e}") from e
    return np.asarray(quad.nodes, dtype=float), np.asarray(quad.weights, dtype=float)


def face_points(t: np.ndarray) -> np.ndarray:
    """Reference coordinates (3, 2, nt) of the face parameters t on each face."""
    out = np.empty((NUM_FACES, 2, len(t)))
    for f, (a, b) in enumerate(FACE_VERTICES):
        va, vb = REFERENCE_VERTICES[a], REFERENCE_VERTICES[b]
        out[f] = va[:, None] * (1.0 - t) / 2.0 + vb[:, None] * (1.0 + t) / 2.0
    return out


@dataclass(frozen=True, eq=False)
class ReferenceElement:
    """All degree-N reference operators, expressed in the nodal working basis."""

    degree: int
    num_basis: int
    nodes: np.ndarray              # (2, Np)
    vdm: np.ndarray                # modal Vandermonde at nodes (Np, Np)
    inv_vdm: np.ndarray
    quad_points: np.ndarray        # (2, Nq)
    quad_weights: np.ndarray       # (Nq,)
    face_params: np.ndarray        # (Nfq,) Gauss-Legendre abscissae on [-1, 1]
    face_weights: np.ndarray       # (Nfq,)
    face_quad_points: np.ndarray   # (3, 2, Nfq)
    mass: np.ndarray
    inv_mass: np.ndarray
    weak_diff: tuple[np.ndarray, np.ndarray]
    diff: tuple[np.ndarray, np.ndarray]
    interp_vol: np.ndarray         # V_q (Nq, Np)
    interp_grad: tuple[np.ndarray, np.ndarray]
    interp_face: np.ndarray        # (3, Nfq, Np)
    interp_face_tangent: np.ndarray  # (3, Nfq, Np), d/dt along each face
    lift: np.ndarray               # (3, Np, Nfq) = M^-1 V_f^T diag(w_f)
    project: np.ndarray            # P_q (Np, Nq)
    project_grad: tuple[np.ndarray, np.ndarray]  # M^-1 (V_q^r)^T diag(w), M^-1 (V_q^s)^T diag(w)

    @property
    def num_quad(self) -> int:
        return self.quad_weights.shape[0]

    @property
    def num_face_quad(self) -> int:
        return self.face_weights.shape[0]

    def interpolation_matrices(self, points) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Nodal basis values and (r, s) derivatives at arbitrary reference points."""
        pts = _as_point_array(points)
        v = vandermonde(pts, self.degree) @ self.inv_vdm
        vr, vs = grad_vandermonde(pts, self.degree)
        return v, vr @ self.inv_vdm, vs @ self.inv_vdm

    def lattice_triangles(self) -> np.ndarray:
        """Linear sub-triangles (ntri, 3) of the node lattice, for visualization."""
        space = mp.PN(2, self.degree)
        tris = mp.submesh_for_shape(mp.Simplex(2), mp.node_tuples_for_space(space))
        return np.asarray(tris, dtype=np.int64).reshape(-1, 3)


def build_reference_element(N: int) -> ReferenceElement:
    """
    Build the degree-N reference element.

    Args:
        N: polynomial degree, 1 <= N <= 8

    Returns:
        ReferenceElement with volume quadrature exact to degree 2N+1 and
        N+1 point Gauss-Legendre rules on each face
    """
    if not isinstance(N, (int, np.integer)) or not MIN_DEGREE <= N <= MAX_DEGREE:
        raise ReferenceElementError(f"Unsupported degree N={N}; expected {MIN_DEGREE} <= N <= {MAX_DEGREE}")
    N = int(N)
    np_ = (N + 1) * (N + 2) // 2

    nodes = np.asarray(mp.warp_and_blend_nodes(2, N), dtype=float)
    vdm = vandermonde(nodes, N)
    inv_vdm = np.linalg.inv(vdm)

    rq, wq = quadrature_rule(2 * N + 1)
    vq = vandermonde(rq, N) @ inv_vdm
    vqr, vqs = (g @ inv_vdm for g in grad_vandermonde(rq, N))

    mass = vq.T @ (wq[:, None] * vq)
    mass = 0.5 * (mass + mass.T)
    try:
        cho = linalg.cho_factor(mass)
    except linalg.LinAlgError as e:
        raise ReferenceElementError(f"Reference mass matrix is not SPD for N={N}") from e
    inv_mass = linalg.cho_solve(cho, np.eye(np_))

    sr = vq.T @ (wq[:, None] * vqr)
    ss = vq.T @ (wq[:, None] * vqs)

    t, wt = roots_legendre(N + 1)
    fpts = face_points(t)
    interp_face = np.empty((NUM_FACES, N + 1, np_))
    interp_face_tangent = np.empty_like(interp_face)
    for f in range(NUM_FACES):
        interp_face[f] = vandermonde(fpts[f], N) @ inv_vdm
        fr, fs = (g @ inv_vdm for g in grad_vandermonde(fpts[f], N))
        interp_face_tangent[f] = FACE_TANGENTS[f, 0] * fr + FACE_TANGENTS[f, 1] * fs
    lift = np.einsum("nm,fqm,q->fnq", inv_mass, interp_face, wt)

    ref = ReferenceElement(
        degree=N,
        num_basis=np_,
        nodes=nodes,
        vdm=vdm,
        inv_vdm=inv_vdm,
        quad_points=rq,
        quad_weights=wq,
        face_params=t,
        face_weights=wt,
        face_quad_points=fpts,
        mass=mass,
        inv_mass=inv_mass,
        weak_diff=(sr, ss),
        diff=(inv_mass @ sr, inv_mass @ ss),
        interp_vol=vq,
        interp_grad=(vqr, vqs),
        interp_face=interp_face,
        interp_face_tangent=interp_face_tangent,
        lift=lift,
        project=(inv_mass @ vq.T) * wq[None, :],
        project_grad=((inv_mass @ vqr.T) * wq[None, :], (inv_mass @ vqs.T) * wq[None, :]),
    )
    logger.debug(f"Built reference element N={N}: Np={np_}, Nq={len(wq)}, Nfq={N + 1}")
    return ref


def dump_operators(ref: ReferenceElement, directory: str | Path) -> list[Path]:
    """
    Write every reference operator as a plain-text matrix.

    Each file starts with a `rows cols` header line followed by the matrix in
    row-major order.

    Returns:
        Paths of the files written
    """
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    matrices = {
        "mass": ref.mass,
        "weak_diff_r": ref.weak_diff[0],
        "weak_diff_s": ref.weak_diff[1],
        "interp_vol": ref.interp_vol,
        "interp_grad_r": ref.interp_grad[0],
        "interp_grad_s": ref.interp_grad[1],
        "project": ref.project,
        "quad_points": ref.quad_points.T,
        "quad_weights": ref.quad_weights[:, None],
    }
    for f in range(NUM_FACES):
        matrices[f"interp_face_{f}"] = ref.interp_face[f]
        matrices[f"lift_{f}"] = ref.lift[f]

    written = []
    for name, mat in matrices.items():
        path = out / f"{name}_N{ref.degree}.txt"
        rows, cols = mat.shape
        np.savetxt(path, mat, fmt="%.17e", header=f"{rows} {cols}", comments="")
        written.append(path)
    logger.info(f"Wrote {len(written)} reference operators to {out}")
    return written
