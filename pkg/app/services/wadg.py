"""
Weight-adjusted inverses of weighted mass matrices.

A weighted mass matrix M_w is replaced by M M_{1/w}^{-1} M, whose inverse
applied to M u is P_q diag(1/w) V_q u. Only quadrature-point values of the
weight are stored, never per-element dense matrices.
"""

import logging

import numpy as np

from app.core.errors import WaveSolverError
from app.services.materials import MaterialField
from app.services.mesh import Mesh
from app.services.refelem import ReferenceElement

logger = logging.getLogger(__name__)


class WadgError(WaveSolverError):
    """Non-positive scalar weight or non-SPD matrix weight."""


def _to_quad(ref: ReferenceElement, u: np.ndarray) -> np.ndarray:
    return np.einsum("qn,...kn->...kq", ref.interp_vol, u)


def _project(ref: ReferenceElement, uq: np.ndarray) -> np.ndarray:
    return np.einsum("nq,...kq->...kn", ref.project, uq)


def _check_positive(values: np.ndarray, name: str) -> None:
    bad = np.flatnonzero(~(values > 0).all(axis=-1).reshape(-1))
    if bad.size:
        raise WadgError(f"{name} must be positive at every quadrature point; failing elements {bad[:20].tolist()}")


def _check_spd(C: np.ndarray) -> None:
    if C.size == 0:
        return
    if np.abs(C - np.swapaxes(C, -1, -2)).max() > 1e-13 * max(1.0, np.abs(C).max()):
        raise WadgError("Matrix weight is not symmetric")
    eig = np.linalg.eigvalsh(C).min(axis=-1)
    bad = np.flatnonzero((eig <= 0).any(axis=-1))
    if bad.size:
        raise WadgError(f"Matrix weight is not positive definite in elements {bad[:20].tolist()}")


def apply_wadg_scalar(ref: ReferenceElement, coeffs: np.ndarray, weight: np.ndarray) -> np.ndarray:
    """
    Weight-adjusted inverse of the w-weighted mass matrix, applied to M coeffs.

    Args:
        coeffs: (..., K, Np) coefficients already multiplied by M^{-1}
        weight: (K, Nq) mass weight w (e.g. 1/c^2)

    Returns:
        P_q diag(1/w) V_q coeffs, shape (..., K, Np)
    """
    _check_positive(weight, "Scalar weight")
    return _project(ref, _to_quad(ref, coeffs) / weight)


def apply_wadg_matrix(ref: ReferenceElement, coeffs: np.ndarray, stiffness: np.ndarray) -> np.ndarray:
    """
    Weight-adjusted inverse of the C^{-1}-weighted block mass matrix.

    Args:
        coeffs: (3, K, Np) stress coefficients already multiplied by M^{-1}
        stiffness: (K, Nq, 3, 3) pointwise C, the inverse of the mass weight

    Returns:
        (I x P_q) C (I x V_q) coeffs, shape (3, K, Np)
    """
    _check_spd(stiffness)
    uq = _to_quad(ref, coeffs)
    return _project(ref, np.einsum("kqij,jkq->ikq", stiffness, uq))


def apply_wadg_geometric(ref: ReferenceElement, rhs: np.ndarray, J: np.ndarray) -> np.ndarray:
    """
    Curved-element inverse mass surrogate M^{-1} M_{1/J} M^{-1} applied to rhs.

    Args:
        rhs: (..., K, Np) reference-element residual (not premultiplied)
        J: (K, Nq) Jacobian at volume quadrature points
    """
    _check_positive(J, "Jacobian")
    coeffs = np.einsum("nm,...km->...kn", ref.inv_mass, rhs)
    return _project(ref, _to_quad(ref, coeffs) / J)


class WadgOperator:
    """
    Fused geometric and material weight-adjusted mass inversion for the coupled system.

    Every field gets a single P_q diag(.) V_q pass with the pointwise product of
    its material weight and 1/J.
    """

    def __init__(self, mesh: Mesh, materials: MaterialField):
        self.ref = mesh.ref
        ia, ie = mesh.acoustic_ids, mesh.elastic_ids
        J = mesh.J
        _check_positive(J, "Jacobian")
        _check_positive(materials.c2, "Acoustic c^2")
        _check_positive(materials.rho, "Density")
        _check_spd(materials.C)
        self.pressure_weight = materials.c2 / J[ia]                   # c^2 / J
        self.acoustic_velocity_weight = 1.0 / J[ia]                   # 1 / J
        self.elastic_velocity_weight = 1.0 / (materials.rho * J[ie])  # 1 / (rho J)
        self.stress_weight = materials.C / J[ie][:, :, None, None]    # C / J
        logger.debug(f"WADG weights: {self.floats_per_element} floats per element")

    @property
    def floats_per_element(self) -> int:
        """Stored weight values per element; the symmetric C counts 6 entries."""
        nq = self.ref.num_quad
        return max(2 * nq if self.pressure_weight.size else 0, 7 * nq if self.stress_weight.size else 0)

    def acoustic(self, residual: np.ndarray) -> np.ndarray:
        """(3, Ka, Np) premultiplied residual of (p, u1, u2) -> time derivative."""
        rq = _to_quad(self.ref, residual)
        rq[0] *= self.pressure_weight
        rq[1:] *= self.acoustic_velocity_weight
        return _project(self.ref, rq)

    def elastic(self, residual: np.ndarray) -> np.ndarray:
        """(5, Ke, Np) premultiplied residual of (v1, v2, s1, s2, s3) -> time derivative."""
        rq = _to_quad(self.ref, residual)
        out = np.empty_like(rq)
        out[:2] = rq[:2] * self.elastic_velocity_weight
        out[2:] = np.einsum("kqij,jkq->ikq", self.stress_weight, rq[2:])
        return _project(self.ref, out)

    def elastic_velocity(self, coeffs: np.ndarray) -> np.ndarray:
        """Velocity-block pass alone, for (Ke, Np) or (..., Ke, Np) loads."""
        return _project(self.ref, _to_quad(self.ref, coeffs) * self.elastic_velocity_weight)

    def acoustic_velocity(self, coeffs: np.ndarray) -> np.ndarray:
        return _project(self.ref, _to_quad(self.ref, coeffs) * self.acoustic_velocity_weight)
