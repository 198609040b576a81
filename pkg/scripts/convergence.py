"""Temporal self-convergence of both integrators on the coupled configuration.

Runs each scheme at dt, dt/2, dt/4, ... to a common horizon and reports the
successive differences and the observed order log2(e_k / e_{k+1}).
"""

import argparse
import math
from pathlib import Path

from npb import spectral as sp
from npb import studies
from npb.config import parse_config
from npb.timestepper import StepControl, run

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def distance(a, b):
    return math.sqrt(sp.inner(a.c - b.c, a.c - b.c) + sp.inner(a.u - b.u, a.u - b.u)
                     + sp.inner(a.T - b.T, a.T - b.T))


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", type=Path, default=CONFIGS / "npb_full.cfg")
    ap.add_argument("--horizon", type=float, default=0.1)
    ap.add_argument("--dt", type=float, default=8e-3, help="coarsest step")
    ap.add_argument("--levels", type=int, default=5)
    ap.add_argument("--resolution", type=int)
    args = ap.parse_args()
    cfg = parse_config(args.config, {"grid.n": args.resolution} if args.resolution else None)
    p, g = cfg.params, cfg.grid
    s0 = studies.initial_state(cfg)
    steps = [args.dt / 2**k for k in range(args.levels)]
    for mode in ("imex_rk2", "picard"):
        sols = [run(s0, p, g, StepControl.fixed(dt, mode=mode, picard_tol=1e-13), args.horizon)
                for dt in steps]
        errs = [distance(a, b) for a, b in zip(sols, sols[1:])]
        print(mode)
        for dt, e, nxt in zip(steps, errs, errs[1:] + [None]):
            order = f"{math.log2(e / nxt):.3f}" if nxt else ""
            print(f"  dt {dt:.2e}  |y(dt) - y(dt/2)| {e:.3e}  {order}")


if __name__ == "__main__":
    main()
