"""``qndsim`` command line entry point."""
from __future__ import annotations

import argparse
import csv
import logging
import math
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import analysis, bloch, figures, optics, pulses, squeezing
from .config import RunConfig, parse_config
from .errors import ConfigError, NumericalError

log = logging.getLogger("qndsim")

TWO_PI = 2.0 * math.pi


def write_csv(path: Path, header: Sequence[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(x) for x in row])


def _cell(x):
    if isinstance(x, (bool, np.bool_)):
        return int(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return x


def write_report(path: Path, report: dict) -> None:
    write_csv(path, ("key", "value"), report.items())


def _emit(args, report: dict) -> None:
    if args.quiet:
        return
    for k, v in report.items():
        print(f"{k} = {_cell(v)}")


# subcommands ----------------------------------------------------------------

def cmd_scan_phase(cfg: RunConfig, args) -> dict:
    model = cfg.line_model()
    ens = cfg.ensemble()
    det_hz = np.linspace(cfg["scan_start"], cfg["scan_stop"], cfg["scan_points"])
    det = TWO_PI * det_hz
    phase = optics.phase_shift(model, ens, det)
    absorption = optics.field_attenuation(model, ens, det)
    write_csv(args.out / "scan_phase.csv", ("detuning_hz", "phase_rad", "absorption"),
              zip(det_hz, phase, absorption))
    return {"points": det.size, "phase_min_rad": float(phase.min()), "phase_max_rad": float(phase.max())}


def cmd_zero_crossing(cfg: RunConfig, args) -> dict:
    model = cfg.line_model()
    zero = optics.find_zero_crossing(model)
    report = {
        "zero_crossing_hz": zero / TWO_PI,
        "zero_crossing_mhz": zero / TWO_PI / 1e6,
        "detuning_function_at_zero": float(optics.detuning_function(model, zero)),
        "linewidth_function_at_zero": float(optics.linewidth_function(model, zero)),
    }
    write_report(args.out / "report.csv", report)
    return report


def _fom_report(setup: squeezing.QndSetup) -> dict:
    res = squeezing.squeeze(setup)
    report = dict(res.__dict__)
    ratio = res.kappa_sq / (res.alpha_0 * res.p_e) if res.alpha_0 * res.p_e > 0 else float("nan")
    report["kappa_sq_over_alpha0_pe"] = ratio
    report["pi_over_8"] = math.pi / 8
    report["xi_with_emission"] = squeezing.emission_penalized_xi(res.xi, res.p_e)
    report["dc_phase_rad"] = squeezing.dc_phase(setup)
    return report


def cmd_fom(cfg: RunConfig, args) -> dict:
    setup = cfg.setup()
    report = {"detuning_hz": cfg["detuning"], **_fom_report(setup)}
    write_report(args.out / "report.csv", report)
    det_hz = np.linspace(cfg["scan_start"], cfg["scan_stop"], cfg["scan_points"])
    rows = []
    for d in det_hz:
        r = squeezing.squeeze(setup.with_detuning(TWO_PI * d))
        rows.append((d, r.kappa_sq, r.xi, r.p_e))
    write_csv(args.out / "fom_scan.csv", ("detuning_hz", "kappa_sq", "xi", "p_e"), rows)
    return report


def cmd_protocol(cfg: RunConfig, args) -> dict:
    steps = cfg.protocol_steps()
    phases = np.linspace(-math.pi, math.pi, cfg["phase_points"])
    per_phase = max(1, args.trials // len(phases))
    rows = []
    for i, ph in enumerate(phases):
        for t in range(per_phase):
            trial = i * per_phase + t
            _, outcomes = bloch.run_protocol(steps, cfg["probed_atoms"], ph, bloch.trial_rng(args.seed, trial),
                                             cfg["kappa_sq"], cfg["emission"])
            rows.append((trial, ph, outcomes[-1]))
    write_csv(args.out / "protocol.csv", ("trial", "phase_rad", "jz_sample"), rows)
    return {"steps": len(steps), "trials": len(rows), "phase_points": len(phases)}


def _simulate(cfg: RunConfig, seed: int):
    env = cfg.noise()
    train = pulses.run_two_pulse_train(cfg.setup(ensemble={"probed_atoms": 0.0}), env, cfg["train_pulses"],
                                       cfg["train_spacing"], figures.stream(seed, 0))
    batch = pulses.run_three_pulse_sequences(cfg.setup(), env, cfg["sequences"], cfg["mean_atoms"],
                                             figures.stream(seed, 1), cfg["pulse_separation"],
                                             cfg["sequence_interval"])
    return train, batch


def cmd_simulate(cfg: RunConfig, args) -> dict:
    train, batch = _simulate(cfg, args.seed)
    pulses.write_pulse_csv(args.out / "train.csv", train)
    pulses.write_pulse_csv(args.out / "sequences.csv", batch)
    return {"train_pulses": train.areas.size, "sequences": len(batch)}


def cmd_analyze(cfg: RunConfig, args) -> dict:
    train_path, seq_path = args.out / "train.csv", args.out / "sequences.csv"
    if args.input is not None:
        train_path, seq_path = args.input / "train.csv", args.input / "sequences.csv"
    if train_path.is_file() and seq_path.is_file():
        train, batch = pulses.train_from_csv(train_path), pulses.batch_from_csv(seq_path)
    else:
        log.info("no pulse records found; simulating from the configuration")
        train, batch = _simulate(cfg, args.seed)
    max_lag = min(cfg["max_lag"], train.areas.size - 1)
    lags = np.arange(1, max_lag + 1)
    curve = analysis.two_point_variance_curve(train.areas, lags)
    write_csv(args.out / "two_point_variance.csv", ("lag", "lag_s", "sigma2"),
              zip(lags, lags * cfg["train_spacing"], curve))
    dec = analysis.decompose_three_pulse(batch, cfg.setup())
    report = {"two_point_variance_lag1": float(curve[0]), **dec.__dict__,
              "predicted_atomic_phase_var": squeezing.atomic_phase_variance(cfg.setup())}
    write_report(args.out / "report.csv", report)
    return report


def cmd_reproduce(cfg: RunConfig, args) -> dict:
    data = figures.reproduce(args.figure, cfg, args.seed, args.trials)
    stem = f"fig_{data.name}"
    write_csv(args.out / f"{stem}.csv", data.header, data.rows)
    (args.out / f"{stem}.gp").write_text(data.script)
    write_report(args.out / f"{stem}_report.csv", data.report)
    return data.report


COMMANDS = {
    "scan-phase": cmd_scan_phase,
    "zero-crossing": cmd_zero_crossing,
    "fom": cmd_fom,
    "protocol": cmd_protocol,
    "simulate": cmd_simulate,
    "analyze": cmd_analyze,
    "reproduce": cmd_reproduce,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="configuration file")
    common.add_argument("--seed", type=int, help="base random seed")
    common.add_argument("--out", type=Path, help="output directory")
    common.add_argument("--trials", type=int, help="Monte-Carlo trials")
    common.add_argument("--quiet", action="store_true", help="suppress the printed report")

    parser = argparse.ArgumentParser(prog="qndsim", description="QND interferometer and spin-squeezing simulator")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    sub.add_parser("scan-phase", parents=[common], help="phase and absorption versus detuning")
    sub.add_parser("zero-crossing", parents=[common], help="detuning of zero balanced phase shift")
    sub.add_parser("fom", parents=[common], help="squeezing figure of merit")
    sub.add_parser("protocol", parents=[common], help="Ramsey protocol samples")
    sub.add_parser("simulate", parents=[common], help="pulse-train and three-pulse records")
    p = sub.add_parser("analyze", parents=[common], help="noise analysis of pulse records")
    p.add_argument("--input", type=Path, help="directory holding train.csv and sequences.csv")
    p = sub.add_parser("reproduce", parents=[common], help="regenerate figure data and a gnuplot script")
    p.add_argument("figure", choices=list(figures.FIGURES))
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="%(message)s")
    try:
        cfg = parse_config(args.config)
        if args.seed is not None:
            cfg.override("seed", args.seed)
        if args.trials is not None:
            cfg.override("trials", args.trials)
        if args.out is not None:
            cfg.override("out", str(args.out))
        args.seed, args.trials = int(cfg["seed"]), int(cfg["trials"])
        if args.trials < 1:
            raise ConfigError(f"trials must be >= 1, got {args.trials}", key="trials")
        args.out = Path(cfg["out"])
        args.out.mkdir(parents=True, exist_ok=True)
        cfg.write_effective(args.out)
        with np.errstate(divide="raise", invalid="raise"):
            report = COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"qndsim: config error: {exc}", file=sys.stderr)
        return 2
    except (NumericalError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"qndsim: numerical error: {exc}", file=sys.stderr)
        return 3
    _emit(args, report)
    return 0


if __name__ == "__main__":
    sys.exit(main())
