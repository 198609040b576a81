"""Fit the temperature decay rate of the pure-conduction run against 4 pi^2 kappa."""

import argparse
import math
from pathlib import Path

from npb import diagnostics as dg
from npb import studies
from npb.config import parse_config

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", type=Path, default=CONFIGS / "heat_limit.cfg")
    ap.add_argument("--out", type=Path)
    args = ap.parse_args()
    cfg = parse_config(args.config)
    _, records = studies.simulate(cfg, args.out)
    fit = dg.decay_fit([(r.time, r.temp_L2_dev) for r in records])
    target = 4 * math.pi**2 * cfg.params.kappa
    print(f"fitted rate   {fit.rate:.8f}  (r^2 = {fit.r_squared:.10f})")
    print(f"4 pi^2 kappa  {target:.8f}")
    print(f"relative gap  {abs(fit.rate - target) / target:.2e}")


if __name__ == "__main__":
    main()
