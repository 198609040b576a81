"""Command line front end: ``npb run | decay-study | eta-study | selftest``.

Exit codes: 0 success, 2 configuration error, 3 numerical abort,
4 selftest failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from npb import studies
from npb.config import build_config, describe_defaults, parse_config
from npb.errors import ConfigError, InvalidIC, NonNeutralSource, NumericalAbort

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_SELFTEST = 0, 2, 3, 4

log = logging.getLogger("npb")


def _overrides(args):
    ov = {}
    if getattr(args, "seed", None) is not None:
        ov["ic.seed"] = args.seed
    if getattr(args, "mode", None) is not None:
        ov["time.mode"] = {"imex": "imex_rk2", "picard": "picard"}[args.mode]
    if getattr(args, "resolution", None) is not None:
        ov["grid.n"] = args.resolution
    if getattr(args, "t_end", None) is not None:
        ov["time.t_end"] = repr(args.t_end)
    return ov


def load(args):
    if args.config is None:
        return build_config({}, _overrides(args))
    return parse_config(args.config, _overrides(args))


def _write_json(obj, path):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def cmd_run(args):
    cfg = load(args)
    final, records = studies.simulate(cfg, args.out)
    log.info("finished at t = %.6g with %d records", final.time, len(records))
    return EXIT_OK


def cmd_decay_study(args):
    cfg = load(args)
    s0 = studies.initial_state(cfg)
    means = [float(np.mean(ci)) for ci in s0.c]
    _, records = studies.simulate(cfg, args.out, s0=s0)
    report = studies.decay_report(cfg, records, means)
    if args.out is not None:
        _write_json(report, Path(args.out) / "decay_report.json")
    print(json.dumps(report, indent=2, sort_keys=True))
    if not report["smallness_gate_pass"]:
        log.warning("initial means exceed the smallness threshold %s", report["smallness_threshold"])
    return EXIT_OK


def cmd_eta_study(args):
    cfg = load(args)
    report = studies.eta_study(cfg)
    if args.out is not None:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        _write_json(report, Path(args.out) / "eta_study.json")
    print(json.dumps(report, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_selftest(args):
    from npb.selftest import run_selftest

    ok = run_selftest(n=args.resolution or 16, seed=args.seed or 0)
    return EXIT_OK if ok else EXIT_SELFTEST


def build_parser():
    parser = argparse.ArgumentParser(
        prog="npb",
        description="Pseudo-spectral Nernst-Planck-Boussinesq simulator on the unit torus.",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="configuration keys and defaults:\n" + describe_defaults(),
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, with_out=True):
        p.add_argument("--config", type=Path, help="flat key = value config file")
        if with_out:
            p.add_argument("--out", type=Path, help="output directory")
        p.add_argument("--seed", type=int, help="seed for random initial data")
        p.add_argument("--mode", choices=("imex", "picard"), help="time integrator")
        p.add_argument("--resolution", type=int, help="override grid.n")
        p.add_argument("--t-end", type=float, dest="t_end", help="override time.t_end")

    common(sub.add_parser("run", help="single trajectory, time series and snapshots"))
    common(sub.add_parser("decay-study", help="run and fit exponential decay rates"))
    common(sub.add_parser("eta-study", help="repeat a run over an eta ladder"))
    st = sub.add_parser("selftest", help="property checks at n = 16")
    st.add_argument("--seed", type=int, default=0)
    st.add_argument("--resolution", type=int, default=16)
    return parser


COMMANDS = {
    "run": cmd_run,
    "decay-study": cmd_decay_study,
    "eta-study": cmd_eta_study,
    "selftest": cmd_selftest,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, InvalidIC, NonNeutralSource) as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except NumericalAbort as exc:
        log.error("numerical abort: %s", exc)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
