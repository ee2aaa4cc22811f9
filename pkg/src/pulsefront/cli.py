"""Command-line entry point.

Exit codes: 0 success, 1 configuration or run error, 2 front-causality failure.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import config as cfgmod
from . import csvio, diagnostics
from .model import MediumModel, PulsefrontError
from .propagator import SchemeSpec, propagate, vacuum_reference

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_CAUSALITY = 2


def _parse_range(text: str) -> np.ndarray:
    try:
        lo, hi, n = text.split(":")
        return np.linspace(float(lo), float(hi), int(n))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected LO:HI:N, got {text!r}") from None


def _parse_floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="pulsefront",
        description="Propagate truncated pulses through saturable and reverse-saturable "
                    "absorbers and check that their fronts travel at c.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario preset or a config file")
    run.add_argument("scenario", help=f"one of {', '.join(cfgmod.SCENARIOS)} or a path to a .cfg file")
    run.add_argument("--out", help="output directory (default: out_dir from the config, "
                                   "else out/<scenario>)")
    run.add_argument("--amplitude", type=float, help="override the input peak amplitude")
    run.add_argument("--coarse-dtau", type=float)
    run.add_argument("--fine-dtau", type=float)
    run.add_argument("--dz", type=float)
    run.add_argument("--slices", type=_parse_floats, help="comma-separated z positions in cm")
    run.add_argument("--full-model", type=float, metavar="GAMMA1_RATIO",
                     help="use the full density-matrix model with this Gamma1/(2*Gamma2)")
    run.add_argument("--gamma3-ratio", type=float,
                     help="Gamma3/(2*Gamma2) for the full alexandrite model "
                          "(default: the --full-model value)")
    run.add_argument("--scan", "--amplitude-scan", dest="scan", type=_parse_range,
                     metavar="LO:HI:N", help="also sweep the input amplitude and write scan.csv")
    run.add_argument("--calibrate", type=_parse_floats, metavar="DELAY_S[,DELAY_S]",
                     help="with --scan: find amplitudes giving these peak delays (seconds)")

    sub.add_parser("list", help="list scenario presets")
    show = sub.add_parser("config", help="print a scenario preset")
    show.add_argument("scenario", choices=cfgmod.SCENARIOS)
    return ap


def _apply_overrides(cfg: cfgmod.RunConfig, args) -> cfgmod.RunConfig:
    changes = {}
    if args.coarse_dtau is not None:
        changes["coarse_dtau"] = args.coarse_dtau
    if args.fine_dtau is not None:
        changes["fine_dtau"] = args.fine_dtau
    if args.dz is not None:
        changes["dz"] = args.dz
    if args.slices is not None:
        changes["save_slices"] = args.slices
    if args.amplitude is not None:
        changes["pulse"] = cfg.pulse.with_amplitude(args.amplitude)
    if args.full_model is not None:
        model = cfg.medium.model
        full = MediumModel.ALEXANDRITE_FULL if model.is_alexandrite else MediumModel.RUBY_FULL
        if model is MediumModel.VACUUM:
            raise PulsefrontError("--full-model needs a ruby or alexandrite medium")
        g3 = args.gamma3_ratio if args.gamma3_ratio is not None else args.full_model
        changes["medium"] = cfg.medium.as_model(full, gamma1_ratio=args.full_model,
                                                gamma3_ratio=g3)
    return cfgmod.check_config(replace(cfg, **changes)) if changes else cfg


def run_scenario(name_or_path: str, out: str | None = None, *, args=None,
                 stderr=None) -> int:
    """Run medium and vacuum legs, write the CSV files and return the exit code."""
    stderr = stderr or sys.stderr
    try:
        cfg = cfgmod.load(name_or_path)
        if args is not None:
            cfg = _apply_overrides(cfg, args)
    except (cfgmod.ParseError, PulsefrontError, OSError, KeyError, ValueError) as exc:
        print(f"config error: {exc}", file=stderr)
        return EXIT_CONFIG

    scenario = Path(name_or_path).stem if name_or_path not in cfgmod.SCENARIOS else name_or_path
    out_dir = Path(out or cfg.out_dir or Path("out") / scenario)
    try:
        grid = cfg.build_grid()
        scheme = SchemeSpec(save_slices=cfg.slices)
        result = propagate(cfg.pulse, cfg.medium, grid, scheme)
        reference = vacuum_reference(cfg.pulse, grid, cfg.medium.time_unit_seconds)
        causality = diagnostics.front_causality_check(result)
        report = diagnostics.delay_report(result, reference)
        csvio.emit_csv(result, report, out_dir, reference=reference, scenario=scenario,
                       causality=causality, table_row_dtau=cfg.table_row_dtau)
        if args is not None and args.scan is not None:
            rows = diagnostics.amplitude_scan(cfg.pulse, cfg.medium, grid, args.scan)
            csvio.write_scan([r.as_tuple() for r in rows], out_dir)
            if args.calibrate:
                lo, hi = diagnostics.delay_envelope(rows)
                for target in args.calibrate:
                    amp = diagnostics.calibrate_amplitude(cfg.pulse, cfg.medium, grid, target, rows)
                    if amp is None:
                        print(f"calibration: no amplitude in the scan reaches {target:g} s; "
                              f"achievable delays span [{lo:g}, {hi:g}] s", file=stderr)
                    else:
                        print(f"calibration: delay {target:g} s at amplitude {amp:.6f}",
                              file=stderr)
    except (PulsefrontError, ValueError) as exc:
        print(f"run error: {exc}", file=stderr)
        return EXIT_CONFIG

    print(causality.summary(), file=stderr)
    if not np.isnan(report.peak_delay_s):
        print(f"peak delay: {report.peak_delay_norm:.6g} (normalized) = "
              f"{report.peak_delay_s:.6g} s", file=stderr)
    print(f"wrote {out_dir}", file=stderr)
    return EXIT_OK if causality.passed else EXIT_CAUSALITY


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "list":
        for name in cfgmod.SCENARIOS:
            print(name)
        return EXIT_OK
    if args.command == "config":
        sys.stdout.write(cfgmod.preset_text(args.scenario))
        return EXIT_OK
    return run_scenario(args.scenario, args.out, args=args)


if __name__ == "__main__":
    raise SystemExit(main())
