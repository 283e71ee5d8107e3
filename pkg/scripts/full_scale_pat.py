#!/usr/bin/env python3
"""
Full-size skull phantom reconstruction, coupled and purely acoustic.

Runs both PAT modes at N = 3 on a fine uniform mesh and prints the relative
error per Neumann iterate side by side. Takes hours; not part of the test suite.
"""

import argparse
import logging

from app.cli.pat import reconstruct
from app.core.logging import configure_logging
from app.schemas.config import MeshConfig, PatConfig

logger = logging.getLogger(__name__)


def main():
    parser = argparse.ArgumentParser(description=__doc__.strip().splitlines()[0])
    parser.add_argument("--n", type=int, default=64, help="Uniform mesh divisions per side")
    parser.add_argument("--N", type=int, default=3, dest="N")
    parser.add_argument("--max-iter", type=int, default=10, dest="max_iter")
    parser.add_argument("--output-dir", default="output/pat_full", dest="output_dir")
    args = parser.parse_args()
    configure_logging()

    summaries = {}
    for mode in ("coupled", "acoustic"):
        cfg = PatConfig(
            N=args.N,
            mesh=MeshConfig(n=args.n),
            mode=mode,
            max_iter=args.max_iter,
            output_dir=f"{args.output_dir}/{mode}",
        )
        logger.info(f"Reconstructing in {mode} mode on {2 * args.n**2} elements")
        summaries[mode] = reconstruct(cfg)

    print(f"{'iter':>4}  {'coupled':>12}  {'acoustic':>12}")
    for c, a in zip(summaries["coupled"].iterations, summaries["acoustic"].iterations):
        print(f"{c.iteration:>4}  {c.relative_error:>12.6f}  {a.relative_error:>12.6f}")
    for mode, summary in summaries.items():
        print(f"{mode}: {', '.join(summary.files)}")


if __name__ == "__main__":
    main()
