"""Triangle meshes with isoparametric geometry and coupled-face classification."""

import logging
from dataclasses import dataclass, replace
from enum import IntEnum
from pathlib import Path
from typing import Callable

import numpy as np

from app.core.errors import WaveSolverError
from app.services.refelem import FACE_VERTICES, NUM_FACES, ReferenceElement, barycentric

logger = logging.getLogger(__name__)

DEFAULT_BOUNDARY_TAG = "boundary"
MATCH_TOL = 1e-10
AFFINE_TOL = 1e-13
MESH_FORMAT_HEADER = "wadg-mesh 1"


class MeshError(WaveSolverError):
    """Base class for mesh construction failures."""


class MeshFormatError(MeshError):
    """Malformed mesh file."""


class MeshTopologyError(MeshError):
    """Duplicate elements, dangling vertices or non-manifold edges."""


class MeshGeometryError(MeshError):
    """Degenerate or inverted elements, or unmatched face points."""


class PointLocationError(MeshError):
    """Point does not lie inside any element."""


class Region(IntEnum):
    ACOUSTIC = 0
    ELASTIC = 1


class FaceKind(IntEnum):
    BOUNDARY = 0
    AA = 1
    EE = 2
    AE = 3  # acoustic element, elastic neighbor
    EA = 4  # elastic element, acoustic neighbor


RegionFn = Callable[[float, float], Region]


@dataclass(frozen=True, eq=False)
class Mesh:
    """Conforming triangulation with per-quadrature-point geometric factors."""

    ref: ReferenceElement
    vertices: np.ndarray        # (Nv, 2)
    elements: np.ndarray        # (K, 3), counterclockwise
    region: np.ndarray          # (K,) Region values
    x: np.ndarray               # (K, Np) node coordinates
    y: np.ndarray
    curved: bool
    neighbor: np.ndarray        # (K, 3), -1 on boundary faces
    neighbor_face: np.ndarray   # (K, 3), -1 on boundary faces
    face_perm: np.ndarray       # (K, 3, Nfq) matching point index on the neighbor face
    boundary_tags: tuple[str, ...]
    boundary_tag_index: np.ndarray  # (K, 3), -1 on interior faces
    face_kind: np.ndarray       # (K, 3) FaceKind values
    # volume quadrature geometry (K, Nq)
    xq: np.ndarray
    yq: np.ndarray
    J: np.ndarray
    rx: np.ndarray
    ry: np.ndarray
    sx: np.ndarray
    sy: np.ndarray
    # face quadrature geometry (K, 3, Nfq)
    xf: np.ndarray
    yf: np.ndarray
    nx: np.ndarray
    ny: np.ndarray
    sJ: np.ndarray

    @property
    def num_elements(self) -> int:
        return self.elements.shape[0]

    @property
    def acoustic_ids(self) -> np.ndarray:
        return np.flatnonzero(self.region == Region.ACOUSTIC)

    @property
    def elastic_ids(self) -> np.ndarray:
        return np.flatnonzero(self.region == Region.ELASTIC)

    @property
    def has_quadrature_geometry(self) -> bool:
        return self.J is not None and self.J.shape == (self.num_elements, self.ref.num_quad)

    def inradius(self) -> np.ndarray:
        """Inscribed-circle radius of each vertex triangle."""
        v = self.vertices[self.elements]
        lengths = np.linalg.norm(v[:, [1, 2, 0]] - v, axis=2)
        semi = lengths.sum(axis=1) / 2.0
        area = np.abs(_signed_area(v))
        return area / semi

    def count_faces(self, kind: FaceKind) -> int:
        """Number of faces of a kind; interior faces are counted once per side."""
        return int(np.count_nonzero(self.face_kind == kind))


def _signed_area(v: np.ndarray) -> np.ndarray:
    return 0.5 * (
        (v[:, 1, 0] - v[:, 0, 0]) * (v[:, 2, 1] - v[:, 0, 1])
        - (v[:, 2, 0] - v[:, 0, 0]) * (v[:, 1, 1] - v[:, 0, 1])
    )


def affine_nodes(ref: ReferenceElement, vertices: np.ndarray, elements: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Map the reference nodes affinely onto each triangle."""
    lam = barycentric(ref.nodes)  # (3, Np)
    v = vertices[elements]        # (K, 3, 2)
    x = np.einsum("kv,vn->kn", v[:, :, 0], lam)
    y = np.einsum("kv,vn->kn", v[:, :, 1], lam)
    return x, y


def _check_topology(vertices: np.ndarray, elements: np.ndarray) -> np.ndarray:
    """Validate indices, duplicates and dangling vertices; return counterclockwise elements."""
    nv = vertices.shape[0]
    if elements.min() < 0 or elements.max() >= nv:
        bad = np.flatnonzero((elements < 0).any(axis=1) | (elements >= nv).any(axis=1))
        raise MeshTopologyError(f"Elements {bad.tolist()} reference missing vertices")

    keys = np.sort(elements, axis=1)
    _, first, counts = np.unique(keys, axis=0, return_index=True, return_counts=True)
    if (counts > 1).any():
        dup_keys = keys[first[counts > 1]]
        dups = [np.flatnonzero((keys == d).all(axis=1)).tolist() for d in dup_keys]
        raise MeshTopologyError(f"Duplicate elements: {dups}")

    used = np.zeros(nv, dtype=bool)
    used[elements.ravel()] = True
    if not used.all():
        raise MeshTopologyError(f"Dangling vertices: {np.flatnonzero(~used).tolist()}")

    area = _signed_area(vertices[elements])
    degenerate = np.abs(area) < 1e-14 * max(1.0, float(np.ptp(vertices, axis=0).max()) ** 2)
    if degenerate.any():
        raise MeshGeometryError(f"Degenerate elements: {np.flatnonzero(degenerate).tolist()}")

    elements = elements.copy()
    cw = area < 0
    if cw.any():
        logger.info(f"Reordering {int(cw.sum())} clockwise elements")
        elements[cw] = elements[cw][:, [0, 2, 1]]
    return elements


def _connect(elements: np.ndarray) -> tuple[np.ndarray, np.ndarray, dict[tuple[int, int], tuple[int, int]]]:
    """Face-to-face connectivity by shared vertex pairs."""
    k_count = elements.shape[0]
    neighbor = -np.ones((k_count, NUM_FACES), dtype=np.int64)
    neighbor_face = -np.ones((k_count, NUM_FACES), dtype=np.int64)
    edges: dict[tuple[int, int], list[tuple[int, int]]] = {}
    for k in range(k_count):
        for f, (a, b) in enumerate(FACE_VERTICES):
            va, vb = int(elements[k, a]), int(elements[k, b])
            edges.setdefault((min(va, vb), max(va, vb)), []).append((k, f))

    boundary: dict[tuple[int, int], tuple[int, int]] = {}
    for edge, sides in edges.items():
        if len(sides) > 2:
            raise MeshTopologyError(f"Non-manifold edge {edge} shared by elements {[k for k, _ in sides]}")
        if len(sides) == 1:
            boundary[edge] = sides[0]
            continue
        (k1, f1), (k2, f2) = sides
        neighbor[k1, f1], neighbor_face[k1, f1] = k2, f2
        neighbor[k2, f2], neighbor_face[k2, f2] = k1, f1
    return neighbor, neighbor_face, boundary


def _volume_geometry(ref: ReferenceElement, x: np.ndarray, y: np.ndarray) -> dict[str, np.ndarray]:
    vqr, vqs = ref.interp_grad
    xr, xs = x @ vqr.T, x @ vqs.T
    yr, ys = y @ vqr.T, y @ vqs.T
    J = xr * ys - xs * yr
    bad = np.flatnonzero((J <= 0).any(axis=1))
    if bad.size:
        raise MeshGeometryError(f"Non-positive Jacobian in elements {bad[:20].tolist()}")
    return {
        "xq": x @ ref.interp_vol.T,
        "yq": y @ ref.interp_vol.T,
        "J": J,
        "rx": ys / J,
        "ry": -xs / J,
        "sx": -yr / J,
        "sy": xr / J,
    }


def _face_geometry(ref: ReferenceElement, x: np.ndarray, y: np.ndarray) -> dict[str, np.ndarray]:
    tx = np.einsum("fqn,kn->kfq", ref.interp_face_tangent, x)
    ty = np.einsum("fqn,kn->kfq", ref.interp_face_tangent, y)
    sJ = np.hypot(tx, ty)
    return {
        "xf": np.einsum("fqn,kn->kfq", ref.interp_face, x),
        "yf": np.einsum("fqn,kn->kfq", ref.interp_face, y),
        "nx": ty / sJ,
        "ny": -tx / sJ,
        "sJ": sJ,
    }


def _match_face_points(
    xf: np.ndarray, yf: np.ndarray, neighbor: np.ndarray, neighbor_face: np.ndarray
) -> np.ndarray:
    """Permutation of neighbor face quadrature points matching each local point by coordinates."""
    k_count, _, nfq = xf.shape
    perm = np.tile(np.arange(nfq), (k_count, NUM_FACES, 1))
    kk, ff = np.nonzero(neighbor >= 0)
    if kk.size == 0:
        return perm
    k2, f2 = neighbor[kk, ff], neighbor_face[kk, ff]
    local = np.stack([xf[kk, ff], yf[kk, ff]], axis=-1)      # (nI, nfq, 2)
    other = np.stack([xf[k2, f2], yf[k2, f2]], axis=-1)
    dist = np.linalg.norm(local[:, :, None, :] - other[:, None, :, :], axis=-1)
    match = dist.argmin(axis=2)
    scale = max(1.0, float(np.abs(xf).max()), float(np.abs(yf).max()))
    worst = np.take_along_axis(dist, match[:, :, None], axis=2)[:, :, 0].max(axis=1)
    bad = np.flatnonzero(worst > MATCH_TOL * scale)
    if bad.size:
        pairs = [(int(kk[i]), int(ff[i])) for i in bad[:10]]
        raise MeshGeometryError(f"Face quadrature points do not coincide across faces {pairs}")
    if (np.sort(match, axis=1) != np.arange(nfq)).any():
        raise MeshGeometryError("Face point matching is not a permutation")
    perm[kk, ff] = match
    return perm


def classify_faces(mesh: Mesh) -> Mesh:
    """Return the mesh with face kinds recomputed from region tags and connectivity."""
    return replace(mesh, face_kind=_face_kinds(mesh.region, mesh.neighbor))


def _face_kinds(region: np.ndarray, neighbor: np.ndarray) -> np.ndarray:
    kind = np.full(neighbor.shape, FaceKind.BOUNDARY, dtype=np.int8)
    interior = neighbor >= 0
    local = np.repeat(region[:, None], NUM_FACES, axis=1)
    other = np.where(interior, region[np.where(interior, neighbor, 0)], -1)
    acoustic, elastic = Region.ACOUSTIC, Region.ELASTIC
    kind[interior & (local == acoustic) & (other == acoustic)] = FaceKind.AA
    kind[interior & (local == elastic) & (other == elastic)] = FaceKind.EE
    kind[interior & (local == acoustic) & (other == elastic)] = FaceKind.AE
    kind[interior & (local == elastic) & (other == acoustic)] = FaceKind.EA
    return kind


def build_mesh(
    ref: ReferenceElement,
    vertices: np.ndarray,
    elements: np.ndarray,
    region: np.ndarray,
    boundary_tags: dict[tuple[int, int], str] | Callable[[float, float], str] | None = None,
    node_coords: tuple[np.ndarray, np.ndarray] | None = None,
) -> Mesh:
    """
    Validate a triangulation and compute connectivity and geometric factors.

    Args:
        ref: reference element fixing the polynomial degree
        vertices: (Nv, 2) coordinates
        elements: (K, 3) vertex indices; clockwise triangles are reordered
        region: (K,) region tags
        boundary_tags: tag per boundary edge, keyed by the vertex pair in either
            order, or a function of the edge midpoint; untagged edges get "boundary"
        node_coords: optional high-order node coordinates (x, y), each (K, Np)

    Returns:
        Mesh satisfying the positivity, closure and pairing invariants
    """
    vertices = np.asarray(vertices, dtype=float)
    elements = np.asarray(elements, dtype=np.int64)
    region = np.asarray(region, dtype=np.int8)
    original = elements
    elements = _check_topology(vertices, elements)
    neighbor, neighbor_face, boundary = _connect(elements)

    tag_names: list[str] = [DEFAULT_BOUNDARY_TAG]
    tag_index = -np.ones((elements.shape[0], NUM_FACES), dtype=np.int64)
    keyed = {} if boundary_tags is None or callable(boundary_tags) else {
        (min(a, b), max(a, b)): tag for (a, b), tag in boundary_tags.items()
    }
    unknown = set(keyed) - set(boundary)
    if unknown:
        raise MeshFormatError(f"Boundary tags given for non-boundary edges {sorted(unknown)[:10]}")
    for edge, (k, f) in boundary.items():
        if callable(boundary_tags):
            mid = vertices[list(edge)].mean(axis=0)
            tag = boundary_tags(float(mid[0]), float(mid[1]))
        else:
            tag = keyed.get(edge, DEFAULT_BOUNDARY_TAG)
        if tag not in tag_names:
            tag_names.append(tag)
        tag_index[k, f] = tag_names.index(tag)

    if node_coords is None:
        x, y = affine_nodes(ref, vertices, elements)
        curved = False
    else:
        x, y = (np.asarray(c, dtype=float) for c in node_coords)
        if x.shape != (elements.shape[0], ref.num_basis):
            raise MeshFormatError(f"Node coordinates have shape {x.shape}, expected {(elements.shape[0], ref.num_basis)}")
        flipped = (original != elements).any(axis=1)
        if flipped.any():
            raise MeshFormatError(f"High-order nodes given for clockwise elements {np.flatnonzero(flipped)[:10].tolist()}")
        ax, ay = affine_nodes(ref, vertices, elements)
        curved = bool(np.abs(x - ax).max() > AFFINE_TOL or np.abs(y - ay).max() > AFFINE_TOL)

    return _assemble(ref, vertices, elements, region, x, y, curved, neighbor, neighbor_face, tuple(tag_names), tag_index)


def _assemble(ref, vertices, elements, region, x, y, curved, neighbor, neighbor_face, tag_names, tag_index) -> Mesh:
    vol = _volume_geometry(ref, x, y)
    face = _face_geometry(ref, x, y)
    perm = _match_face_points(face["xf"], face["yf"], neighbor, neighbor_face)
    mesh = Mesh(
        ref=ref,
        vertices=vertices,
        elements=elements,
        region=region,
        x=x,
        y=y,
        curved=curved,
        neighbor=neighbor,
        neighbor_face=neighbor_face,
        face_perm=perm,
        boundary_tags=tag_names,
        boundary_tag_index=tag_index,
        face_kind=_face_kinds(region, neighbor),
        **vol,
        **face,
    )
    logger.info(
        f"Mesh: K={mesh.num_elements} (acoustic {len(mesh.acoustic_ids)}, elastic {len(mesh.elastic_ids)}), "
        f"N={ref.degree}, curved={curved}, interface faces={mesh.count_faces(FaceKind.AE)}"
    )
    return mesh


def uniform_square_mesh(
    n: int,
    region_fn: RegionFn,
    ref: ReferenceElement,
    bounds: tuple[float, float, float, float] = (-1.0, 1.0, -1.0, 1.0),
    boundary_tags: Callable[[float, float], str] | None = None,
) -> Mesh:
    """
    n x n squares over the bounding box, each split into two triangles along the
    (x0, y0)-(x1, y1) diagonal; regions are assigned by element centroid.
    """
    if n < 1:
        raise MeshError(f"Uniform mesh needs n >= 1, got {n}")
    x0, x1, y0, y1 = bounds
    gx = np.linspace(x0, x1, n + 1)
    gy = np.linspace(y0, y1, n + 1)
    X, Y = np.meshgrid(gx, gy, indexing="xy")
    vertices = np.column_stack([X.ravel(), Y.ravel()])

    def vid(i: int, j: int) -> int:
        return j * (n + 1) + i

    elements = []
    for j in range(n):
        for i in range(n):
            v00, v10, v01, v11 = vid(i, j), vid(i + 1, j), vid(i, j + 1), vid(i + 1, j + 1)
            elements.append((v00, v10, v11))
            elements.append((v00, v11, v01))
    elements = np.array(elements, dtype=np.int64)
    centroids = vertices[elements].mean(axis=1)
    region = np.array([region_fn(cx, cy) for cx, cy in centroids], dtype=np.int8)
    return build_mesh(ref, vertices, elements, region, boundary_tags=boundary_tags)


def warp_coordinates(x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Smooth interior perturbation that leaves the boundary of [-1, 1]^2 fixed."""
    xw = x + np.cos(1.5 * np.pi * x) * np.sin(np.pi * y) / 8.0
    yw = y + np.sin(np.pi * x) * np.sin(np.pi * y) / 8.0
    return xw, yw


def warp_mesh(mesh: Mesh) -> Mesh:
    """Perturb the isoparametric nodes and recompute all geometric factors."""
    x, y = warp_coordinates(mesh.x, mesh.y)
    return _assemble(
        mesh.ref, mesh.vertices, mesh.elements, mesh.region, x, y, True,
        mesh.neighbor, mesh.neighbor_face, mesh.boundary_tags, mesh.boundary_tag_index,
    )


def retag_regions(mesh: Mesh, region: np.ndarray) -> Mesh:
    """Same geometry with new region tags."""
    region = np.asarray(region, dtype=np.int8)
    return replace(mesh, region=region, face_kind=_face_kinds(region, mesh.neighbor))


def _region_from_token(token: str, line_no: int) -> Region:
    key = token.lower()
    if key in ("a", "acoustic", "0"):
        return Region.ACOUSTIC
    if key in ("e", "elastic", "1"):
        return Region.ELASTIC
    raise MeshFormatError(f"Line {line_no}: unknown region tag '{token}'")


def load_mesh(path: str | Path, ref: ReferenceElement) -> Mesh:
    """
    Read a mesh in the plain-text format.

    Format (blank lines and lines starting with # are ignored):

        wadg-mesh 1
        vertices <Nv>
        <x> <y>                      Nv lines
        elements <K>
        <v0> <v1> <v2> <region>      K lines, 0-based, region acoustic|elastic
        boundary <Nb>                optional
        <va> <vb> <tag>              Nb lines
        nodes <K> <Np>               optional high-order node coordinates
        <x_1 .. x_Np y_1 .. y_Np>    K lines
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Mesh file not found: {path}")

    lines = []
    for no, raw in enumerate(path.read_text().splitlines(), start=1):
        text = raw.split("#", 1)[0].strip()
        if text:
            lines.append((no, text.split()))
    if not lines or " ".join(lines[0][1]) != MESH_FORMAT_HEADER:
        raise MeshFormatError(f"{path}: missing '{MESH_FORMAT_HEADER}' header")

    pos = 1
    vertices = elements = None
    region: list[Region] = []
    tags: dict[tuple[int, int], str] = {}
    nodes = None

    def take(count: int, width: int, section: str):
        nonlocal pos
        rows = lines[pos:pos + count]
        if len(rows) < count:
            raise MeshFormatError(f"{path}: section '{section}' truncated")
        for no, tok in rows:
            if width and len(tok) != width:
                raise MeshFormatError(f"{path}:{no}: expected {width} values in '{section}'")
        pos += count
        return rows

    try:
        while pos < len(lines):
            no, tok = lines[pos]
            pos += 1
            key = tok[0].lower()
            if key == "vertices":
                rows = take(int(tok[1]), 2, key)
                vertices = np.array([[float(v) for v in t] for _, t in rows])
            elif key == "elements":
                rows = take(int(tok[1]), 4, key)
                elements = np.array([[int(v) for v in t[:3]] for _, t in rows], dtype=np.int64)
                region = [_region_from_token(t[3], n) for n, t in rows]
            elif key == "boundary":
                for _, t in take(int(tok[1]), 3, key):
                    tags[(int(t[0]), int(t[1]))] = t[2]
            elif key == "nodes":
                k_count, np_count = int(tok[1]), int(tok[2])
                if np_count != ref.num_basis:
                    raise MeshFormatError(f"{path}:{no}: nodes for Np={np_count}, reference element has Np={ref.num_basis}")
                rows = take(k_count, 2 * np_count, key)
                data = np.array([[float(v) for v in t] for _, t in rows])
                nodes = (data[:, :np_count], data[:, np_count:])
            else:
                raise MeshFormatError(f"{path}:{no}: unknown section '{tok[0]}'")
    except ValueError as e:
        raise MeshFormatError(f"{path}: {e}") from e

    if vertices is None or elements is None:
        raise MeshFormatError(f"{path}: 'vertices' and 'elements' sections are required")
    logger.info(f"Loaded mesh {path}: {len(vertices)} vertices, {len(elements)} elements")
    return build_mesh(ref, vertices, elements, np.array(region, dtype=np.int8), tags or None, nodes)


def write_mesh(mesh: Mesh, path: str | Path) -> Path:
    """Write the mesh in the plain-text format read by load_mesh."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    out = [MESH_FORMAT_HEADER, f"vertices {len(mesh.vertices)}"]
    out += [f"{float(x)!r} {float(y)!r}" for x, y in mesh.vertices]
    out.append(f"elements {mesh.num_elements}")
    names = {Region.ACOUSTIC: "acoustic", Region.ELASTIC: "elastic"}
    out += [f"{a} {b} {c} {names[Region(r)]}" for (a, b, c), r in zip(mesh.elements, mesh.region)]
    kk, ff = np.nonzero(mesh.boundary_tag_index >= 0)
    out.append(f"boundary {len(kk)}")
    for k, f in zip(kk, ff):
        a, b = FACE_VERTICES[f]
        out.append(f"{mesh.elements[k, a]} {mesh.elements[k, b]} {mesh.boundary_tags[mesh.boundary_tag_index[k, f]]}")
    if mesh.curved:
        out.append(f"nodes {mesh.num_elements} {mesh.ref.num_basis}")
        out += [" ".join(repr(float(v)) for v in np.concatenate([xr, yr])) for xr, yr in zip(mesh.x, mesh.y)]
    path.write_text("\n".join(out) + "\n")
    return path


def locate_point(mesh: Mesh, x0: float, y0: float, tol: float = 1e-10) -> tuple[int, float, float]:
    """
    Find the element containing (x0, y0) and its reference coordinates.

    Straight-sided elements are inverted exactly; curved ones by Newton
    iteration on the isoparametric map starting from the affine guess.
    """
    v = mesh.vertices[mesh.elements]
    area = _signed_area(v)
    l1 = ((v[:, 1, 0] - x0) * (v[:, 2, 1] - y0) - (v[:, 2, 0] - x0) * (v[:, 1, 1] - y0)) / (2 * area)
    l2 = ((v[:, 2, 0] - x0) * (v[:, 0, 1] - y0) - (v[:, 0, 0] - x0) * (v[:, 2, 1] - y0)) / (2 * area)
    lam = np.stack([l1, l2, 1.0 - l1 - l2], axis=1)
    margin = 0.25 if mesh.curved else tol
    order = np.argsort(-lam.min(axis=1))
    for k in order:
        if lam[k].min() < -margin:
            break
        r, s = -1.0 + 2.0 * lam[k, 1], -1.0 + 2.0 * lam[k, 2]
        if mesh.curved:
            r, s = _newton_inverse(mesh, int(k), x0, y0, r, s)
        if barycentric(np.array([[r], [s]])).min() >= -tol:
            return int(k), float(r), float(s)
    raise PointLocationError(f"Point ({x0}, {y0}) lies outside the mesh")


def _newton_inverse(mesh: Mesh, k: int, x0: float, y0: float, r: float, s: float) -> tuple[float, float]:
    for _ in range(30):
        v, vr, vs = mesh.ref.interpolation_matrices(np.array([[r], [s]]))
        fx, fy = (v @ mesh.x[k])[0] - x0, (v @ mesh.y[k])[0] - y0
        jac = np.array([[(vr @ mesh.x[k])[0], (vs @ mesh.x[k])[0]],
                        [(vr @ mesh.y[k])[0], (vs @ mesh.y[k])[0]]])
        dr, ds = np.linalg.solve(jac, [fx, fy])
        r, s = r - dr, s - ds
        if abs(dr) + abs(ds) < 1e-14:
            break
    return r, s


def write_vtk(mesh: Mesh, path: str | Path, point_data: dict[str, np.ndarray], title: str = "wadg-wave") -> Path:
    """
    Legacy-VTK ASCII unstructured grid of the node lattice.

    Each element is split into the linear sub-triangles of its node lattice.

    Args:
        point_data: nodal fields, each of shape (K, Np)
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    k_count, np_ = mesh.x.shape
    sub = mesh.ref.lattice_triangles()
    cells = (np.arange(k_count)[:, None, None] * np_ + sub[None]).reshape(-1, 3)
    n_pts = k_count * np_

    out = ["# vtk DataFile Version 3.0", title, "ASCII", "DATASET UNSTRUCTURED_GRID", f"POINTS {n_pts} double"]
    out += [f"{float(x)!r} {float(y)!r} 0.0" for x, y in zip(mesh.x.ravel(), mesh.y.ravel())]
    out.append(f"CELLS {len(cells)} {4 * len(cells)}")
    out += [f"3 {a} {b} {c}" for a, b, c in cells]
    out.append(f"CELL_TYPES {len(cells)}")
    out += ["5"] * len(cells)
    out.append(f"CELL_DATA {len(cells)}")
    out += ["SCALARS region int 1", "LOOKUP_TABLE default"]
    out += [str(int(r)) for r in np.repeat(mesh.region, len(sub))]
    if point_data:
        out.append(f"POINT_DATA {n_pts}")
        for name, values in point_data.items():
            values = np.asarray(values, dtype=float)
            if values.shape != (k_count, np_):
                raise MeshError(f"VTK field '{name}' has shape {values.shape}, expected {(k_count, np_)}")
            out += [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
            out += [repr(float(v)) for v in values.ravel()]
    path.write_text("\n".join(out) + "\n")
    logger.debug(f"Wrote VTK {path}")
    return path
