"""`spectra`: eigenvalues of the assembled semidiscrete operator for several penalty values."""

import argparse
import logging
from pathlib import Path

from app.core.config import get_settings
from app.schemas.config import RunConfig, SpectraConfig, with_overrides
from app.schemas.results import SpectraSummary, SpectrumSummary
from app.services.analysis import antisymmetry_defect, energy_weight_matrix, operator_matrix, spectrum
from app.services.dg_core import FluxParams, WaveOperator
from app.services.mesh import load_mesh
from app.services.output import write_spectra_csv
from app.services.refelem import build_reference_element
from app.services.scenarios import PRESETS, build_setup

logger = logging.getLogger(__name__)


def add_parser(subparsers) -> None:
    p = subparsers.add_parser("spectra", help="Spectrum of the semidiscrete operator")
    p.add_argument("--preset", choices=PRESETS)
    p.add_argument("--N", type=int, dest="N")
    p.add_argument("--n", type=int)
    p.add_argument("--mesh", dest="mesh_path")
    p.add_argument("--warped", action="store_true", default=None)
    p.add_argument("--tau", type=float, nargs="+", dest="taus", help="Penalty values; tau_p = tau_u = tau")
    p.add_argument("--seed", type=int)
    p.add_argument("--output-dir", dest="output_dir")
    p.set_defaults(handler=run)


def resolve_config(args: argparse.Namespace, config: RunConfig) -> SpectraConfig:
    return with_overrides(config.spectra, {
        "preset": args.preset,
        "N": args.N,
        "mesh.n": args.n,
        "mesh.path": args.mesh_path,
        "mesh.warped": args.warped,
        "taus": args.taus,
        "seed": args.seed,
        "output_dir": args.output_dir,
    })


def spectra(cfg: SpectraConfig) -> SpectraSummary:
    ref = build_reference_element(cfg.N)
    mesh = load_mesh(cfg.mesh.path, ref) if cfg.mesh.path else None
    setup = build_setup(cfg.preset, ref, cfg.mesh.n, warped=cfg.mesh.warped, seed=cfg.seed, mesh=mesh)
    out_dir = Path(cfg.output_dir or get_settings().output_dir)

    results = []
    for tau in cfg.taus:
        flux = FluxParams(tau, tau)
        operator = WaveOperator(setup.mesh, setup.materials, flux, setup.mode, setup.boundary)
        L = operator_matrix(operator)
        eig = spectrum(L)
        defect = None
        if tau == 0:
            defect = antisymmetry_defect(L, energy_weight_matrix(setup.mesh, setup.materials))
            logger.info(f"Relative symmetric part of W L at tau=0: {defect:.3e}")
        name = "spectra.csv" if len(cfg.taus) == 1 else f"spectra_tau{tau:g}.csv"
        path = write_spectra_csv(out_dir / name, eig.eigenvalues, eig.max_real, eig.spectral_radius, tau)
        results.append(SpectrumSummary(
            tau=tau, size=L.size, max_real=eig.max_real, spectral_radius=eig.spectral_radius,
            antisymmetry_defect=defect, file=str(path),
        ))

    ratio = None
    base = [r for r in results if r.tau == 0]
    top = max(results, key=lambda r: r.tau)
    if base and top.tau > 0 and base[0].spectral_radius > 0:
        ratio = top.spectral_radius / base[0].spectral_radius
        logger.info(f"Spectral radius ratio tau={top.tau} / tau=0: {ratio:.3f}")

    return SpectraSummary(
        preset=setup.name,
        N=cfg.N,
        n=cfg.mesh.n,
        geometry_mode=setup.mode.value,
        spectra=results,
        radius_ratio=ratio,
    )


def run(args: argparse.Namespace, config: RunConfig) -> SpectraSummary:
    return spectra(resolve_config(args, config))
