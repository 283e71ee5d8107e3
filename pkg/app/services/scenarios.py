"""Named problem setups: mesh, media, boundary conditions and, where known, the exact solution."""

import logging
import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from app.core.errors import WaveSolverError
from app.services.dg_core import BCKind, BoundaryCondition, GeometryMode, State
from app.services.exact import (
    InterfaceSolution,
    ScholteConfig,
    SnellConfig,
    project_exact,
    scholte_solution,
    snell_solution,
)
from app.services.materials import (
    ANISO_BOUNDS,
    MaterialField,
    anisotropic_demo_field,
    isotropic_field,
    lame_from_wavespeeds,
    random_media_field,
)
from app.services.mesh import Mesh, Region, uniform_square_mesh, warp_mesh
from app.services.refelem import ReferenceElement
from app.services.timeint import RickerSource

logger = logging.getLogger(__name__)

PRESETS = ("snell", "scholte", "scholte-km", "aniso-demo", "random")
CONVERGENCE_SCENARIOS = ("snell", "scholte", "scholte-km", "curved-scholte")

DEMO_SOURCE = RickerSource(x0=(-0.02, 0.0), f0=0.17, t0=1.0 / 0.17)
DEMO_SNAPSHOTS = (30.0, 60.0)
DEMO_T_FINAL = 60.0

# Fluid over solid in km and s
KM_FLUID_C = 1.5
KM_SOLID_CP = 3.0
KM_SOLID_CS = 1.5
KM_SOLID_RHO = 2.5


class ScenarioError(WaveSolverError):
    """Unknown preset or a preset that cannot be built on the given mesh."""


@dataclass
class ProblemSetup:
    name: str
    mesh: Mesh
    materials: MaterialField
    boundary: BoundaryCondition | Mapping[str, BoundaryCondition]
    mode: GeometryMode = GeometryMode.AFFINE
    solution: InterfaceSolution | None = None
    t_final: float = 1.0
    sources: tuple[RickerSource, ...] = ()
    snapshot_times: tuple[float, ...] = field(default_factory=tuple)


def mesh_size(n: int, bounds: tuple[float, float, float, float] = (-1.0, 1.0, -1.0, 1.0)) -> float:
    """Square side length of an n x n uniform mesh."""
    return (bounds[1] - bounds[0]) / n


def divisions_for(h: float, bounds: tuple[float, float, float, float] = (-1.0, 1.0, -1.0, 1.0)) -> int:
    n = round((bounds[1] - bounds[0]) / h)
    if n < 1 or not math.isclose(mesh_size(n, bounds), h, rel_tol=1e-9):
        raise ScenarioError(f"h={h} does not divide the domain width {bounds[1] - bounds[0]}")
    return n


def half_plane_regions(acoustic_below: bool):
    def region(x: float, y: float) -> int:
        below = y < 0
        return Region.ACOUSTIC if below == acoustic_below else Region.ELASTIC

    return region


def aniso_demo_region(x: float, y: float) -> int:
    return Region.ACOUSTIC if x > 0 and y > 0 else Region.ELASTIC


def exact_boundary(solution: InterfaceSolution) -> BoundaryCondition:
    """Traction data from the exact fields on every boundary face."""
    return BoundaryCondition(BCKind.TRACTION, solution.traction_data)


def _generated_mesh(ref: ReferenceElement, n: int, region_fn, warped: bool, bounds=(-1.0, 1.0, -1.0, 1.0)) -> tuple[Mesh, GeometryMode]:
    mesh = uniform_square_mesh(n, region_fn, ref, bounds=bounds)
    if warped:
        return warp_mesh(mesh), GeometryMode.STRONG_WEAK
    return mesh, GeometryMode.AFFINE


def snell_setup(ref: ReferenceElement, n: int, warped: bool = False, config: SnellConfig = SnellConfig()) -> ProblemSetup:
    solution = snell_solution(config)
    mesh, mode = _generated_mesh(ref, n, half_plane_regions(acoustic_below=True), warped)
    materials = isotropic_field(mesh, config.cp1, solution.details["lam2"], solution.details["mu2"], config.rho2)
    return ProblemSetup("snell", mesh, materials, exact_boundary(solution), mode, solution, t_final=5.0)


def scholte_setup(ref: ReferenceElement, n: int, warped: bool = False, km: bool = False) -> ProblemSetup:
    if km:
        lam2, mu2 = lame_from_wavespeeds(KM_SOLID_CP, KM_SOLID_CS, KM_SOLID_RHO)
        config = ScholteConfig(lam1=KM_FLUID_C**2, rho1=1.0, lam2=lam2, mu2=mu2, rho2=KM_SOLID_RHO)
    else:
        config = ScholteConfig()
    solution = scholte_solution(config)
    mesh, mode = _generated_mesh(ref, n, half_plane_regions(acoustic_below=False), warped)
    materials = isotropic_field(mesh, math.sqrt(config.lam1 / config.rho1), config.lam2, config.mu2, config.rho2)
    name = "scholte-km" if km else ("curved-scholte" if warped else "scholte")
    return ProblemSetup(name, mesh, materials, exact_boundary(solution), mode, solution, t_final=1.0 if km else 5.0)


def aniso_demo_setup(ref: ReferenceElement, n: int, heterogeneous: bool = False, mesh: Mesh | None = None) -> ProblemSetup:
    """
    Layered solid with an anisotropic half, an isotropic quarter and a fluid quarter.

    Absorbing boundaries all around; a Ricker point source near the origin
    drives the y-velocity.
    """
    if mesh is None:
        mesh = uniform_square_mesh(n, aniso_demo_region, ref, bounds=ANISO_BOUNDS)
    materials = anisotropic_demo_field(mesh, heterogeneous)
    return ProblemSetup(
        "aniso-demo",
        mesh,
        materials,
        BoundaryCondition(BCKind.ABSORBING),
        GeometryMode.STRONG_WEAK if mesh.curved else GeometryMode.AFFINE,
        t_final=DEMO_T_FINAL,
        sources=(DEMO_SOURCE,),
        snapshot_times=DEMO_SNAPSHOTS,
    )


def random_media_setup(ref: ReferenceElement, n: int, seed: int, warped: bool = False, mesh: Mesh | None = None) -> ProblemSetup:
    """Fluid over solid with pointwise random media, zero pressure on the boundary."""
    if mesh is None:
        mesh, mode = _generated_mesh(ref, n, half_plane_regions(acoustic_below=False), warped)
    else:
        mode = GeometryMode.STRONG_WEAK if mesh.curved else GeometryMode.AFFINE
    materials = random_media_field(mesh, seed)
    return ProblemSetup("random", mesh, materials, BoundaryCondition(BCKind.DIRICHLET_PRESSURE), mode)


def build_setup(
    name: str,
    ref: ReferenceElement,
    n: int,
    *,
    warped: bool = False,
    seed: int = 0,
    heterogeneous: bool = False,
    mesh: Mesh | None = None,
) -> ProblemSetup:
    """
    Dispatch on a preset or convergence scenario name.

    A loaded mesh is only accepted by presets without an exact solution,
    whose interface must match the mesh's own region tags.
    """
    if name in ("snell", "scholte", "scholte-km", "curved-scholte") and mesh is not None:
        raise ScenarioError(f"Preset '{name}' generates its own mesh; a mesh file cannot be combined with it")
    if name == "snell":
        setup = snell_setup(ref, n, warped)
    elif name == "scholte":
        setup = scholte_setup(ref, n, warped)
    elif name == "curved-scholte":
        setup = scholte_setup(ref, n, warped=True)
    elif name == "scholte-km":
        setup = scholte_setup(ref, n, warped, km=True)
    elif name == "aniso-demo":
        setup = aniso_demo_setup(ref, n, heterogeneous, mesh)
    elif name == "random":
        setup = random_media_setup(ref, n, seed, warped, mesh)
    else:
        raise ScenarioError(f"Unknown preset '{name}'; choose from {PRESETS + ('curved-scholte',)}")
    m = setup.mesh
    logger.info(
        f"Scenario {setup.name}: K={m.num_elements} ({len(m.acoustic_ids)} acoustic, "
        f"{len(m.elastic_ids)} elastic), N={ref.degree}, mode={setup.mode.value}"
    )
    return setup


def gaussian_pulse(mesh: Mesh, center: tuple[float, float] | None = None, width: float | None = None) -> State:
    """Projected pressure pulse exp(-|x - center|^2 / width^2) on the acoustic elements."""
    if center is None:
        center = tuple(0.5 * (mesh.vertices.min(axis=0) + mesh.vertices.max(axis=0)))
    if width is None:
        width = 0.1 * float(np.ptp(mesh.vertices[:, 0]))
    state = State.zeros(mesh)
    ia = mesh.acoustic_ids
    if len(ia):
        r2 = (mesh.xq[ia] - center[0]) ** 2 + (mesh.yq[ia] - center[1]) ** 2
        state.acoustic[0] = np.exp(-r2 / width**2) @ mesh.ref.project.T
    return state


def initial_state(setup: ProblemSetup) -> State:
    """Projected exact solution at t = 0, rest for point-source runs, otherwise a pressure pulse."""
    if setup.solution is not None:
        return project_exact(setup.solution, setup.mesh, 0.0)
    if setup.sources:
        return State.zeros(setup.mesh)
    return gaussian_pulse(setup.mesh)
