"""`simulate`: forward run of a preset with energy trace and VTK snapshots."""

import argparse
import logging
from dataclasses import replace
from pathlib import Path

from app.core.config import get_settings
from app.schemas.config import RunConfig, SimulateConfig, with_overrides
from app.schemas.results import SimulationSummary
from app.services.analysis import EnergyTrace
from app.services.dg_core import WaveOperator, num_dofs
from app.services.exact import l2_error
from app.services.materials import isotropic_field
from app.services.mesh import load_mesh
from app.services.output import write_energy_csv, write_snapshot
from app.services.refelem import build_reference_element
from app.services.scenarios import PRESETS, ScenarioError, build_setup, initial_state
from app.services.timeint import PointSourceTerm, TimeConfig, estimate_dt, integrate, with_sources

logger = logging.getLogger(__name__)


def add_parser(subparsers) -> None:
    p = subparsers.add_parser("simulate", help="Forward simulation of a preset")
    p.add_argument("--preset", choices=PRESETS)
    p.add_argument("--N", type=int, dest="N", help="Polynomial degree")
    p.add_argument("--n", type=int, help="Uniform mesh divisions per side")
    p.add_argument("--mesh", dest="mesh_path", help="Mesh file in the wadg-mesh text format")
    p.add_argument("--warped", action="store_true", default=None, help="Curve the generated mesh")
    p.add_argument("--flux", choices=["penalty", "central"])
    p.add_argument("--tau", type=float, help="Sets tau_p and tau_u")
    p.add_argument("--t-final", type=float, dest="t_final")
    p.add_argument("--cfl", type=float)
    p.add_argument("--dt", type=float, help="Fixed time step")
    p.add_argument("--heterogeneous", action="store_true", default=None)
    p.add_argument("--seed", type=int)
    p.add_argument("--output-dir", dest="output_dir")
    p.add_argument("--no-vtk", action="store_false", dest="vtk", default=None)
    p.set_defaults(handler=run)


def resolve_config(args: argparse.Namespace, config: RunConfig) -> SimulateConfig:
    return with_overrides(config.simulate, {
        "N": args.N,
        "mesh.n": args.n,
        "mesh.path": args.mesh_path,
        "mesh.warped": args.warped,
        "flux.kind": args.flux,
        "flux.tau_p": args.tau,
        "flux.tau_u": args.tau,
        "time.t_final": args.t_final,
        "time.cfl": args.cfl,
        "time.dt_override": args.dt,
        "material.preset": args.preset,
        "material.heterogeneous": args.heterogeneous,
        "seed": args.seed,
        "output_dir": args.output_dir,
        "vtk": args.vtk,
    })


def simulate(cfg: SimulateConfig) -> SimulationSummary:
    ref = build_reference_element(cfg.N)
    mesh = load_mesh(cfg.mesh.path, ref) if cfg.mesh.path else None
    setup = build_setup(
        cfg.material.preset, ref, cfg.mesh.n,
        warped=cfg.mesh.warped, seed=cfg.seed, heterogeneous=cfg.material.heterogeneous, mesh=mesh,
    )
    if cfg.material.inline is not None:
        if setup.solution is not None:
            raise ScenarioError(f"Inline media cannot replace the media of exact-solution preset '{setup.name}'")
        m = cfg.material.inline
        setup = replace(setup, materials=isotropic_field(setup.mesh, m.c_acoustic, m.lam, m.mu, m.rho))
    if cfg.geometry_mode is not None:
        setup = replace(setup, mode=cfg.geometry_mode)

    out_dir = Path(cfg.output_dir or get_settings().output_dir)
    t_final = cfg.time.t_final if cfg.time.t_final is not None else setup.t_final
    snapshots = tuple(cfg.time.snapshot_times) if cfg.time.snapshot_times is not None else setup.snapshot_times
    time_config = TimeConfig(
        t_final=t_final, cfl=cfg.time.cfl, dt_override=cfg.time.dt_override,
        source=setup.sources[0] if setup.sources else None, snapshot_times=snapshots,
    )

    operator = WaveOperator(setup.mesh, setup.materials, cfg.flux.to_params(), setup.mode, setup.boundary)
    rhs = with_sources(operator, [PointSourceTerm(operator, s) for s in setup.sources])
    dt = estimate_dt(setup.mesh, setup.materials, cfg.N, cfg.time.cfl)

    trace = EnergyTrace(setup.mesh, setup.materials)
    files = []

    def on_snapshot(step, state):
        if cfg.vtk:
            files.append(str(write_snapshot(setup.mesh, state, out_dir / f"snapshot_{step:06d}.vtk")))

    logger.info(f"Simulating {setup.name} to T={t_final}")
    final = integrate(initial_state(setup), rhs, time_config, setup.mesh, dt=dt, on_step=trace, on_snapshot=on_snapshot)
    files.append(str(write_energy_csv(out_dir / "energy.csv", trace.rows)))

    if setup.solution is not None:
        errors = l2_error(final, setup.solution, setup.mesh, final.time)
        logger.info(f"L2 error at T={final.time}: {errors['total']:.6e}")

    return SimulationSummary(
        preset=setup.name,
        N=cfg.N,
        num_elements=setup.mesh.num_elements,
        dofs=num_dofs(setup.mesh),
        dt=time_config.dt_override or dt,
        steps=trace.rows[-1][0],
        t_final=final.time,
        initial_energy=trace.rows[0][2],
        final_energy=trace.rows[-1][2],
        max_energy_increase=trace.max_relative_increase(),
        files=files,
    )


def run(args: argparse.Namespace, config: RunConfig) -> SimulationSummary:
    return simulate(resolve_config(args, config))
