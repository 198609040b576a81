"""Successive L^2(0,T;L^2) velocity differences along an eta ladder."""

import argparse
from pathlib import Path

from npb import studies
from npb.config import parse_config

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--config", type=Path, default=CONFIGS / "eta_ladder.cfg")
    ap.add_argument("--ladder", type=float, nargs="+")
    args = ap.parse_args()
    cfg = parse_config(args.config)
    rep = studies.eta_study(cfg, ladder=args.ladder)
    etas = rep["eta_ladder"]
    for a, b, d in zip(etas, etas[1:], rep["l2_time_differences"]):
        print(f"  eta {a:<6g} vs {b:<6g}  {d:.6e}")
    print(f"strictly decreasing: {rep['strictly_decreasing']}")


if __name__ == "__main__":
    main()
