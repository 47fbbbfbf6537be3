"""Run the figure sweeps from configs/ and write one CSV per figure.

    python scripts/run_figures.py --out results/ [--drops 20] [--only fig3_power]

Use JSCCRA_WORKERS (or --workers) to spread drops over processes.
"""

import argparse
import logging
import time
from dataclasses import replace
from pathlib import Path

from jsccra.experiments import emit_csv, load_spec, run_sweep

ROOT = Path(__file__).resolve().parents[1]
SPECS = ("fig3_power", "fig4_fixed_cr", "fig5_delay_classes", "fig6_psnr_classes", "users_sweep")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", type=Path, default=ROOT / "results")
    parser.add_argument("--drops", type=int, default=None, help="override num_drops")
    parser.add_argument("--workers", type=int, default=None)
    parser.add_argument("--only", nargs="+", choices=SPECS, default=SPECS)
    args = parser.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    args.out.mkdir(parents=True, exist_ok=True)
    for name in args.only:
        spec = load_spec(ROOT / "configs" / f"{name}.json")
        if args.drops is not None:
            spec = replace(spec, num_drops=args.drops)
        start = time.perf_counter()
        result = run_sweep(spec, workers=args.workers)
        emit_csv(result, args.out / f"{name}.csv")
        logging.info("%s: %d rows in %.1f s", name, len(result.rows), time.perf_counter() - start)


if __name__ == "__main__":
    main()
