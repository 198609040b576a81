"""Decay-rate report for the unconditional and the gated (alpha_S > 0) cases.

Also sweeps the initial means across the smallness threshold to show where
the gate flips.
"""

import argparse
import json
from pathlib import Path

import numpy as np

from npb import diagnostics as dg
from npb import studies
from npb.config import parse_config

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def report_for(path, out):
    cfg = parse_config(path)
    s0 = studies.initial_state(cfg)
    means = [float(np.mean(ci)) for ci in s0.c]
    _, records = studies.simulate(cfg, out, s0=s0)
    return cfg, studies.decay_report(cfg, records, means)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path)
    args = ap.parse_args()
    for name in ("decay.cfg", "smallness.cfg"):
        out = args.out / name.removesuffix(".cfg") if args.out else None
        cfg, rep = report_for(CONFIGS / name, out)
        print(f"== {name}")
        for k, f in rep["fits"].items():
            print(f"  {k:16s} rate {f['rate']:8.4f}  r^2 {f['r_squared']:.5f}")
        print(f"  temperature bound {rep['temperature_rate_bound']:.4f}, "
              f"met: {rep['temperature_rate_meets_bound']}")
        print(f"  smallness threshold {rep['smallness_threshold']}, gate pass: "
              f"{rep['smallness_gate_pass']}")
        if out is not None:
            (out / "decay_report.json").write_text(json.dumps(rep, indent=2) + "\n")
    p = cfg.params
    print("== gate versus mean concentration (smallness.cfg parameters)")
    for mean in (0.5, 1.0, 2.0, 4.0):
        thr, ok = dg.smallness_check(p, [mean])
        print(f"  mean {mean:4.1f}: threshold {thr:.3f}, pass {ok}")


if __name__ == "__main__":
    main()
