"""`convergence`: h-refinement study against an exact interface solution."""

import argparse
import logging
from pathlib import Path

from app.core.config import get_settings
from app.schemas.config import ConvergenceConfig, RunConfig, with_overrides
from app.schemas.results import ConvergenceRow, ConvergenceSummary
from app.services.analysis import consistency_residual, convergence_study
from app.services.output import write_consistency_csv, write_convergence_csv
from app.services.scenarios import CONVERGENCE_SCENARIOS

logger = logging.getLogger(__name__)


def add_parser(subparsers) -> None:
    p = subparsers.add_parser("convergence", help="Convergence rates against an exact solution")
    p.add_argument("--scenario", choices=CONVERGENCE_SCENARIOS)
    p.add_argument("--N", type=int, nargs="+", dest="degrees", help="Polynomial degrees")
    p.add_argument("--n", type=int, nargs="+", dest="divisions", help="Uniform mesh divisions per side")
    p.add_argument("--flux", choices=["penalty", "central"])
    p.add_argument("--tau", type=float, help="Sets tau_p and tau_u of the penalty flux")
    p.add_argument("--t-final", type=float, dest="t_final")
    p.add_argument("--cfl", type=float)
    p.add_argument("--consistency", action="store_true", default=None, help="Also fit the consistency residual")
    p.add_argument("--output-dir", dest="output_dir")
    p.set_defaults(handler=run)


def resolve_config(args: argparse.Namespace, config: RunConfig) -> ConvergenceConfig:
    return with_overrides(config.convergence, {
        "scenario": args.scenario,
        "degrees": args.degrees,
        "divisions": args.divisions,
        "flux.kind": args.flux,
        "flux.tau_p": args.tau,
        "flux.tau_u": args.tau,
        "t_final": args.t_final,
        "cfl": args.cfl,
        "consistency": args.consistency,
        "output_dir": args.output_dir,
    })


def convergence(cfg: ConvergenceConfig) -> ConvergenceSummary:
    out_dir = Path(cfg.output_dir or get_settings().output_dir)
    flux = cfg.flux.to_params()
    rows, slopes = convergence_study(cfg.scenario, cfg.degrees, cfg.divisions, flux, cfg.cfl, cfg.t_final)
    table, slope_file = write_convergence_csv(out_dir / "convergence.csv", rows, slopes)
    files = [str(table), str(slope_file)]

    consistency_rate = None
    if cfg.consistency:
        residual_rows = []
        for N in cfg.degrees:
            level_rows, rate = consistency_residual(cfg.scenario, N, cfg.divisions, flux)
            residual_rows.extend(level_rows)
            logger.info(f"Consistency rate N={N}: {rate:.3f}")
            consistency_rate = rate
        files.append(str(write_consistency_csv(out_dir / "consistency.csv", residual_rows)))

    return ConvergenceSummary(
        scenario=cfg.scenario,
        flux=cfg.flux.kind,
        rows=[ConvergenceRow(**r) for r in rows],
        slopes=slopes,
        consistency_rate=consistency_rate,
        files=files,
    )


def run(args: argparse.Namespace, config: RunConfig) -> ConvergenceSummary:
    return convergence(resolve_config(args, config))
