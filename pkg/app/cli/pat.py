"""`pat`: synthetic measurement and Neumann-series reconstruction of the skull phantom."""

import argparse
import logging
from pathlib import Path

from app.core.config import get_settings
from app.schemas.config import PatConfig, RunConfig, with_overrides
from app.schemas.results import PatIteration, PatSummary
from app.services.dg_core import FluxParams
from app.services.mesh import load_mesh
from app.services.output import write_pat_errors_csv, write_pressure_field
from app.services.pat import PAT_TAU, PhantomSpec, build_pat_problem, forward_measure, neumann_reconstruct, write_record
from app.services.refelem import build_reference_element

logger = logging.getLogger(__name__)


def add_parser(subparsers) -> None:
    p = subparsers.add_parser("pat", help="Photoacoustic reconstruction of the skull phantom")
    p.add_argument("--mode", choices=["coupled", "acoustic"])
    p.add_argument("--N", type=int, dest="N")
    p.add_argument("--n", type=int)
    p.add_argument("--mesh", dest="mesh_path")
    p.add_argument("--t-final", type=float, dest="t_final")
    p.add_argument("--max-iter", type=int, dest="max_iter")
    p.add_argument("--band", type=float, help="Phantom smoothing band width")
    p.add_argument("--cfl", type=float)
    p.add_argument("--output-dir", dest="output_dir")
    p.add_argument("--no-vtk", action="store_false", dest="vtk", default=None)
    p.set_defaults(handler=run)


def resolve_config(args: argparse.Namespace, config: RunConfig) -> PatConfig:
    return with_overrides(config.pat, {
        "mode": args.mode,
        "N": args.N,
        "mesh.n": args.n,
        "mesh.path": args.mesh_path,
        "t_final": args.t_final,
        "max_iter": args.max_iter,
        "band": args.band,
        "cfl": args.cfl,
        "output_dir": args.output_dir,
        "vtk": args.vtk,
    })


def reconstruct(cfg: PatConfig) -> PatSummary:
    ref = build_reference_element(cfg.N)
    mesh = load_mesh(cfg.mesh.path, ref) if cfg.mesh.path else None
    spec = PhantomSpec(band=cfg.band or 0.0)
    problem = build_pat_problem(ref, cfg.mesh.n, cfg.mode, spec, mesh)
    flux = FluxParams(PAT_TAU, PAT_TAU)
    out_dir = Path(cfg.output_dir or get_settings().output_dir)

    record, _ = forward_measure(problem.truth, problem.mesh, problem.materials, cfg.t_final, flux, cfg.cfl)
    files = [str(write_record(record, out_dir / f"record_{cfg.mode}.bin"))]
    result = neumann_reconstruct(
        record, problem.mesh, problem.materials, cfg.t_final, cfg.max_iter, truth=problem.truth, flux=flux, cfl=cfg.cfl
    )
    rows = result.rows()
    files.append(str(write_pat_errors_csv(out_dir / f"pat_errors_{cfg.mode}.csv", rows)))
    if cfg.vtk:
        files.append(str(write_pressure_field(problem.mesh, problem.truth, out_dir / "phantom.vtk", "phantom")))
        files.append(str(write_pressure_field(problem.mesh, result.pressure, out_dir / f"reconstruction_{cfg.mode}.vtk")))

    return PatSummary(
        mode=cfg.mode,
        N=cfg.N,
        num_elements=problem.mesh.num_elements,
        t_final=cfg.t_final,
        iterations=[PatIteration(**r) for r in rows],
        files=files,
    )


def run(args: argparse.Namespace, config: RunConfig) -> PatSummary:
    return reconstruct(resolve_config(args, config))
