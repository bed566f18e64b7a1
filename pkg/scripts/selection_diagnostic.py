"""Average selected Volterra (p, m, lambda) per process under in-sample MSE selection.

Usage:
    python3 scripts/selection_diagnostic.py [--runs 200] [--full-grid] [--processes P2,P3,P4]

``--full-grid`` uses p in 1..10 and m in 1..30 instead of the coarse default.
"""

import argparse
from collections import Counter

import numpy as np

from volterraboot import rng
from volterraboot.procgen import get_process, simulate
from volterraboot.volterra import make_grid, select_model


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--runs", type=int, default=200)
    ap.add_argument("--n", type=int, default=100)
    ap.add_argument("--processes", default="P2,P3,P4")
    ap.add_argument("--full-grid", action="store_true")
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args(argv)

    grid = make_grid(range(1, 11), range(1, 31)) if args.full_grid else make_grid()
    print(f"grid size {len(grid)}; runs {args.runs}; n {args.n}")
    for k, name in enumerate(args.processes.split(",")):
        spec = get_process(name)
        picks = []
        for r in range(args.runs):
            x = simulate(spec, args.n, seed=rng.derive_seed(args.seed, k, r))
            chosen, _ = select_model(x, grid, rng.derive_seed(args.seed, k, r, rng.FIT))
            picks.append((chosen.order, chosen.memory, chosen.ridge))
        p, m, lam = map(np.array, zip(*picks))
        print(f"{name}: avg p {p.mean():.2f}, avg m {m.mean():.1f}, "
              f"lambda counts {dict(sorted(Counter(lam.tolist()).items()))}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
