"""Material coefficients sampled at volume quadrature points."""

import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np

from app.core.errors import WaveSolverError
from app.services.mesh import Mesh

logger = logging.getLogger(__name__)

# Directions used to bound the largest elastic wavespeed of an anisotropic C
CHRISTOFFEL_DIRECTIONS = 32

ANISO_BOUNDS = (-0.32, 0.32, -0.32, 0.32)
ANISO_DENSITY = 7100.0
ANISO_STIFFNESS = np.array([[0.165, 0.05, 0.0], [0.05, 0.062, 0.0], [0.0, 0.0, 0.0396]])
ISO_STIFFNESS = np.array([[0.165, 0.0858, 0.0], [0.0858, 0.165, 0.0], [0.0, 0.0, 0.0396]])
HETEROGENEITY_PERIOD = 0.08

ScalarFn = Callable[[np.ndarray, np.ndarray], np.ndarray]
StiffnessFn = Callable[[np.ndarray, np.ndarray], np.ndarray]


class MaterialError(WaveSolverError):
    """Non-positive wavespeed or density, or a stiffness that is not SPD."""


def isotropic_stiffness(lam: float, mu: float) -> np.ndarray:
    """
    Voigt stiffness of an isotropic solid.

    Args:
        lam: first Lame parameter
        mu: shear modulus, must be positive in elastic regions

    Returns:
        [[lam + 2mu, lam, 0], [lam, lam + 2mu, 0], [0, 0, mu]]
    """
    C = np.array([[lam + 2 * mu, lam, 0.0], [lam, lam + 2 * mu, 0.0], [0.0, 0.0, mu]])
    try:
        np.linalg.cholesky(C)
    except np.linalg.LinAlgError as e:
        raise MaterialError(f"Isotropic stiffness with lambda={lam}, mu={mu} is not positive definite") from e
    return C


def isotropic_wavespeeds(lam: float, mu: float, rho: float) -> tuple[float, float]:
    """Pressure and shear wavespeeds (c_p, c_s)."""
    if rho <= 0:
        raise MaterialError(f"Density must be positive, got {rho}")
    return float(np.sqrt((lam + 2 * mu) / rho)), float(np.sqrt(mu / rho))


def lame_from_wavespeeds(cp: float, cs: float, rho: float) -> tuple[float, float]:
    """Inverse of isotropic_wavespeeds: (lambda, mu)."""
    mu = rho * cs**2
    return rho * cp**2 - 2 * mu, mu


def random_rotation(rng: np.random.Generator, size: int = 3) -> np.ndarray:
    """Random orthogonal matrix from the QR factorization of a Gaussian matrix."""
    q, r = np.linalg.qr(rng.standard_normal((size, size)))
    return q * np.sign(np.diag(r))


def random_spd_stiffness(seed: int, d_min: float, d_max: float, shape: tuple[int, ...] = ()) -> np.ndarray:
    """
    Random SPD stiffness C = U D U^T at every sample.

    D has entries uniform in [d_min, d_max] and U is a random rotation, so the
    spectrum of each sample lies in [d_min, d_max].

    Args:
        seed: RNG seed; equal seeds give bit-identical output
        shape: leading sample shape, e.g. (K, Nq)

    Returns:
        Array of shape shape + (3, 3)
    """
    if not 0 < d_min <= d_max:
        raise MaterialError(f"Need 0 < d_min <= d_max, got d_min={d_min}, d_max={d_max}")
    rng = np.random.default_rng(seed)
    count = int(np.prod(shape)) if shape else 1
    out = np.empty((count, 3, 3))
    for i in range(count):
        U = random_rotation(rng)
        D = rng.uniform(d_min, d_max, size=3)
        C = (U * D) @ U.T
        out[i] = 0.5 * (C + C.T)
    return out.reshape(tuple(shape) + (3, 3))


def max_elastic_wavespeed(C: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """
    Upper estimate of the fastest elastic wavespeed at each sample.

    Maximizes the largest eigenvalue of the Christoffel matrix A_n^T C A_n / rho
    over a fan of unit directions n.
    """
    theta = np.linspace(0.0, np.pi, CHRISTOFFEL_DIRECTIONS, endpoint=False)
    n1, n2 = np.cos(theta), np.sin(theta)
    # A_n maps a 2-vector w to (n1 w1, n2 w2, n2 w1 + n1 w2)
    An = np.zeros((len(theta), 3, 2))
    An[:, 0, 0], An[:, 1, 1] = n1, n2
    An[:, 2, 0], An[:, 2, 1] = n2, n1
    gamma = np.einsum("dia,...ij,djb->...dab", An, C, An)
    eig = np.linalg.eigvalsh(gamma).max(axis=(-1, -2))
    return np.sqrt(eig / rho)


@dataclass(frozen=True, eq=False)
class MaterialField:
    """
    Coefficients at volume quadrature points.

    Acoustic arrays follow mesh.acoustic_ids and elastic arrays follow
    mesh.elastic_ids. The acoustic medium has unit density.
    """

    c2: np.ndarray    # (Ka, Nq)
    rho: np.ndarray   # (Ke, Nq)
    C: np.ndarray     # (Ke, Nq, 3, 3)
    Cinv: np.ndarray  # (Ke, Nq, 3, 3)

    @property
    def num_acoustic(self) -> int:
        return self.c2.shape[0]

    @property
    def num_elastic(self) -> int:
        return self.rho.shape[0]

    def element_max_wavespeed(self, mesh: Mesh) -> np.ndarray:
        """Largest local wavespeed per element, shape (K,)."""
        out = np.zeros(mesh.num_elements)
        if self.num_acoustic:
            out[mesh.acoustic_ids] = np.sqrt(self.c2.max(axis=1))
        if self.num_elastic:
            out[mesh.elastic_ids] = max_elastic_wavespeed(self.C, self.rho).max(axis=1)
        return out


def validate_material(field: MaterialField, mesh: Mesh | None = None) -> MaterialField:
    """Check positivity and SPD-ness at every point; raise MaterialError naming the offending elements."""
    if mesh is not None:
        nq = mesh.ref.num_quad
        if field.c2.shape != (len(mesh.acoustic_ids), nq) or field.rho.shape != (len(mesh.elastic_ids), nq):
            raise MaterialError(
                f"Material arrays {field.c2.shape}/{field.rho.shape} do not match mesh "
                f"({len(mesh.acoustic_ids)} acoustic, {len(mesh.elastic_ids)} elastic, Nq={nq})"
            )
    bad = np.flatnonzero(~(field.c2 > 0).all(axis=1))
    if bad.size:
        raise MaterialError(f"Non-positive or non-finite c^2 in acoustic block rows {bad[:20].tolist()}")
    bad = np.flatnonzero(~(field.rho > 0).all(axis=1))
    if bad.size:
        raise MaterialError(f"Non-positive or non-finite density in elastic block rows {bad[:20].tolist()}")
    if field.num_elastic:
        if np.abs(field.C - np.swapaxes(field.C, -1, -2)).max() > 1e-14 * max(1.0, np.abs(field.C).max()):
            raise MaterialError("Stiffness is not symmetric")
        try:
            np.linalg.cholesky(field.C)
        except np.linalg.LinAlgError as e:
            eig = np.linalg.eigvalsh(field.C).min(axis=-1)
            rows = np.flatnonzero((eig <= 0).any(axis=1))
            raise MaterialError(f"Stiffness not positive definite in elastic block rows {rows[:20].tolist()}") from e
        defect = np.abs(field.C @ field.Cinv - np.eye(3)).max()
        if defect > 1e-12:
            raise MaterialError(f"C * Cinv deviates from identity by {defect:.3e}")
    return field


def _sample(value, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    if callable(value):
        return np.broadcast_to(np.asarray(value(x, y), dtype=float), x.shape).copy()
    return np.full(x.shape, float(value))


def _sample_stiffness(value, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    if callable(value):
        C = np.asarray(value(x, y), dtype=float)
        return np.broadcast_to(C, x.shape + (3, 3)).copy()
    return np.broadcast_to(np.asarray(value, dtype=float), x.shape + (3, 3)).copy()


def build_material_field(
    mesh: Mesh,
    c2: float | ScalarFn,
    stiffness: np.ndarray | StiffnessFn,
    rho: float | ScalarFn = 1.0,
) -> MaterialField:
    """
    Sample coefficients at the volume quadrature points of every element.

    Args:
        c2: acoustic wavespeed squared, constant or function of (x, y)
        stiffness: 3x3 Voigt stiffness, constant or function returning (..., 3, 3)
        rho: elastic density, constant or function of (x, y)
    """
    ia, ie = mesh.acoustic_ids, mesh.elastic_ids
    C = _sample_stiffness(stiffness, mesh.xq[ie], mesh.yq[ie])
    field = MaterialField(
        c2=_sample(c2, mesh.xq[ia], mesh.yq[ia]),
        rho=_sample(rho, mesh.xq[ie], mesh.yq[ie]),
        C=C,
        Cinv=np.linalg.inv(C) if len(ie) else C.copy(),
    )
    return validate_material(field, mesh)


def isotropic_field(mesh: Mesh, c_acoustic: float, lam: float, mu: float, rho: float) -> MaterialField:
    """Homogeneous acoustic medium coupled to a homogeneous isotropic solid."""
    return build_material_field(mesh, c_acoustic**2, isotropic_stiffness(lam, mu), rho)


def anisotropic_demo_stiffness(x: np.ndarray, y: np.ndarray, heterogeneous: bool = False) -> np.ndarray:
    """
    Stiffness of the anisotropic/isotropic layered demo.

    x < 0 is anisotropic, x > 0 and y < 0 is isotropic. The heterogeneous variant
    scales C11, C22 and C33 by 1 + sin(pi x / 0.08) / 4.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    C = np.where((x < 0)[..., None, None], ANISO_STIFFNESS, ISO_STIFFNESS).copy()
    if heterogeneous:
        scale = 1.0 + 0.25 * np.sin(np.pi * x / HETEROGENEITY_PERIOD)
        for i in range(3):
            C[..., i, i] *= scale
    return C


def anisotropic_demo_field(mesh: Mesh, heterogeneous: bool = False) -> MaterialField:
    """Materials of the anisotropic demo; acoustic c = sqrt(C11 / rho) on x > 0, y > 0."""
    return build_material_field(
        mesh,
        c2=ISO_STIFFNESS[0, 0] / ANISO_DENSITY,
        stiffness=lambda x, y: anisotropic_demo_stiffness(x, y, heterogeneous),
        rho=ANISO_DENSITY,
    )


def random_media_field(
    mesh: Mesh,
    seed: int,
    c_range: tuple[float, float] = (1.0, 2.0),
    d_range: tuple[float, float] = (0.5, 2.0),
    rho: float = 1.0,
) -> MaterialField:
    """
    Pointwise random media for stability tests.

    Acoustic wavespeed is uniform in c_range independently at every quadrature
    point; the elastic stiffness is a random SPD matrix with spectrum in d_range.
    """
    rng = np.random.default_rng(seed)
    nq = mesh.ref.num_quad
    c = rng.uniform(c_range[0], c_range[1], size=(len(mesh.acoustic_ids), nq))
    C = random_spd_stiffness(seed + 1, d_range[0], d_range[1], (len(mesh.elastic_ids), nq))
    field = MaterialField(
        c2=c**2,
        rho=np.full((len(mesh.elastic_ids), nq), float(rho)),
        C=C,
        Cinv=np.linalg.inv(C) if len(mesh.elastic_ids) else C.copy(),
    )
    logger.info(f"Random media: seed={seed}, c in {c_range}, stiffness spectrum in {d_range}")
    return validate_material(field, mesh)
