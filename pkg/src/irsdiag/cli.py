"""Command-line front end: run, sweep, repro-examples, calibrate."""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from . import harness
from .harness import ConfigError, ExperimentConfig


def _parse_float_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip() != "")
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad list {text!r}") from exc


def _parse_int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in text.split(",") if v.strip() != "")
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad list {text!r}") from exc


def _load(args: argparse.Namespace) -> ExperimentConfig:
    cfg = harness.load_config(args.config) if args.config else ExperimentConfig()
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["base_seed"] = args.seed
    if getattr(args, "trials", None) is not None:
        overrides["trials"] = args.trials
    if getattr(args, "method", None) is not None:
        overrides["method"] = args.method
    if getattr(args, "power_dbm", None) is not None:
        overrides["power_dbm"] = args.power_dbm
    if getattr(args, "antennas", None) is not None:
        overrides["antennas"] = args.antennas
    if getattr(args, "zero_noise", False):
        overrides["zero_noise"] = True
    return replace(cfg, **overrides) if overrides else cfg


def _cmd_run(args: argparse.Namespace) -> int:
    cfg = _load(args)
    power = args.power_dbm[0] if args.power_dbm else max(cfg.power_dbm)
    m = args.antennas[0] if args.antennas else cfg.m_antennas
    print(f"single trial: P_t={power} dBm, M={m}, noise={cfg.noise_dbm} dBm, "
          f"trial index {args.trial}")
    for method in cfg.methods:
        result = harness.run_trial(cfg, power, m, args.trial, method)
        print(f"  [{method}] true rect {result.true_bounds} -> "
              f"estimated {result.est_bounds} | "
              f"{'correct' if result.correct else 'WRONG'} | "
              f"slots={result.slots_used} converged={result.converged} "
              f"seed={result.seed}")
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    cfg = _load(args)
    n_points = len(cfg.power_dbm) * len(cfg.antennas)
    print(f"sweep: {n_points} points x {cfg.trials} trials x "
          f"{len(cfg.methods)} method(s) -> {args.out}")
    result = harness.sweep(cfg, progress=args.verbose)
    harness.write_sweep_csv(result, args.out)
    for agg in result.aggregates:
        print(f"  [{agg.method}] P={agg.power_dbm} dBm M={agg.m_antennas}: "
              f"accuracy={agg.mean_accuracy:.3f} slots={agg.mean_slots:.1f}")
    return 0


def _cmd_repro(args: argparse.Namespace) -> int:
    checks = harness.repro_examples()
    failed = [c for c in checks if not c.passed]
    for check in checks:
        status = "PASS" if check.passed else "FAIL"
        suffix = f" ({check.detail})" if check.detail else ""
        print(f"{status} {check.name}{suffix}")
    print(f"{len(checks) - len(failed)}/{len(checks)} example checks passed")
    return 1 if failed else 0


def _cmd_calibrate(args: argparse.Namespace) -> int:
    cfg = _load(args)
    report = harness.calibrate_noise(cfg, trials=args.trials or 24)
    for point in report.points:
        print(f"  noise={point.noise_dbm:.1f} dBm: "
              f"acc@{min(cfg.power_dbm)}dBm={point.low_power_accuracy:.2f} "
              f"acc@{max(cfg.power_dbm)}dBm={point.high_power_accuracy:.2f}")
    if report.recommended_noise_dbm is None:
        print("no noise level satisfied the calibration targets")
        return 1
    print(f"recommended noise power: {report.recommended_noise_dbm:.1f} dBm")
    if args.write_config:
        harness.save_config(
            replace(cfg, noise_dbm=report.recommended_noise_dbm), args.write_config
        )
        print(f"wrote {args.write_config}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="irsdiag",
        description="Over-the-air localization of stuck IRS elements",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="YAML config file")
        p.add_argument("--seed", type=int, help="base seed override")
        p.add_argument("--method", choices=["sortpm", "bisect", "both"])
        p.add_argument("--power-dbm", type=_parse_float_list, dest="power_dbm",
                       help="comma-separated transmit powers in dBm")
        p.add_argument("--antennas", type=_parse_int_list,
                       help="comma-separated receive antenna counts")
        p.add_argument("--zero-noise", action="store_true", dest="zero_noise")

    run_p = sub.add_parser("run", help="run one verbose trial")
    common(run_p)
    run_p.add_argument("--trial", type=int, default=0)
    run_p.set_defaults(func=_cmd_run)

    sweep_p = sub.add_parser("sweep", help="full grid sweep to CSV")
    common(sweep_p)
    sweep_p.add_argument("--trials", type=int, help="trials per point")
    sweep_p.add_argument("--out", required=True, help="output CSV path")
    sweep_p.add_argument("--verbose", action="store_true")
    sweep_p.set_defaults(func=_cmd_sweep)

    repro_p = sub.add_parser("repro-examples",
                             help="regression-check the worked examples")
    repro_p.set_defaults(func=_cmd_repro)

    cal_p = sub.add_parser("calibrate", help="locate the noise-power regime")
    common(cal_p)
    cal_p.add_argument("--trials", type=int, help="trials per probe point")
    cal_p.add_argument("--write-config", help="write calibrated config here")
    cal_p.set_defaults(func=_cmd_calibrate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
