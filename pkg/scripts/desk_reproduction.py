"""Desk-scale reproduction tables.

Runs three small grids with default annealing settings and prints median
final percent per cell:

  * ELD vs ST toward GRID on bar-albert
  * ELD toward GRID on bar-albert vs a 12x12 lattice
  * AR toward every built-in shape on bar-albert

With --out, every run goes through the experiment runner, so the JSONs,
SVGs and results.csv can be fed to ``metricmorph analyze``.
"""

import argparse

import numpy as np

from metricmorph.experiment import ExperimentPlan, run_experiment
from metricmorph.shapes import LABELS

TABLES = [
    ("metric difficulty", dict(graphs=["bar-albert"], targets=["GRID"], combos=["ELD", "ST"])),
    ("graph difficulty", dict(graphs=["bar-albert", "grid-12x12"], targets=["GRID"], combos=["ELD"])),
    ("shape difficulty", dict(graphs=["bar-albert"], targets=list(LABELS), combos=["AR"])),
]


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--out", default="desk_results")
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--workers", type=int, default=0)
    args = ap.parse_args()

    for name, cells in TABLES:
        plan = ExperimentPlan(**cells, seeds=list(range(args.seeds)), out_dir=args.out, workers=args.workers)
        grid = run_experiment(plan)
        print(f"\n{name}")
        groups = {}
        for r in grid.records:
            groups.setdefault((r.graph, r.target, r.combo), []).append(r.percent)
        for (g, t, c), vals in sorted(groups.items()):
            print(f"  {g:12s} {t:5s} {c:4s} median {np.median(vals):6.2f}  "
                  f"[{', '.join(f'{v:.2f}' for v in vals)}]")


if __name__ == "__main__":
    main()
