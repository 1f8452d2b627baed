"""Command-line entry point: scenario files, CSV emission, comparison reports.

Scenario files are flat ``key = value`` text with ``#`` comments.  Dotted
keys reach nested settings (``hysteresis.flux_band``); piecewise-constant
profiles are built from repeated ``<name>.step = <time>:<value>`` lines.
Unknown keys are a hard error.  See the README for the full key reference.

Commands:
    dtcsim run <scenario> [-o DIR] [--stride N]
    dtcsim compare <scenario> [-o DIR]
    dtcsim validate <scenario>

Exit codes: 0 success, 1 parse/validation error, 2 runtime instability.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path
from typing import Sequence

from . import metrics, sim
from .dtc_core import HysteresisConfig
from .fuzzy import FuzzyDefinitionError, OptimizerConfig, parse_definition
from .machine import MotorParams, UnstableSimulationError, default_motor
from .sim import PIGains, Scenario, SimRecord, StepProfile

CSV_HEADER = ("time,torque_est,torque_plant,torque_ref,flux_mag_est,flux_ref,"
              "flux_alpha,flux_beta,speed_mech,sector,sa,sb,sc")

_MOTOR_FLOAT_KEYS = ("rs", "rr", "ls", "lr", "lm", "inertia", "friction",
                     "rated_flux", "rated_torque", "vdc")
_OPTIMIZER_KEYS = ("torque_error_scale", "delta_max", "flux_min", "flux_max",
                   "update_period")
_PI_KEYS = ("kp", "ki", "torque_limit")

_SCALAR_KEYS = frozenset(
    ["controller", "duration", "dt", "substeps", "stride", "initial_flux_ref",
     "hysteresis.flux_band", "hysteresis.torque_band", "optimizer.rules",
     "motor.pole_pairs"]
    + [f"motor.{k}" for k in _MOTOR_FLOAT_KEYS]
    + [f"optimizer.{k}" for k in _OPTIMIZER_KEYS]
    + [f"speed_pi.{k}" for k in _PI_KEYS])
_PROFILE_KEYS = frozenset(["torque_ref.step", "speed_ref.step", "load.step"])


class ScenarioError(ValueError):
    """Scenario text failed to parse or validate."""


def parse_scenario(text: str, base_dir: Path | None = None) -> Scenario:
    """Parse scenario text into a validated Scenario with defaults filled."""
    scalars: dict[str, tuple[int, str]] = {}
    profiles: dict[str, list[tuple[float, float]]] = {k: [] for k in _PROFILE_KEYS}

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ScenarioError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key in _PROFILE_KEYS:
            profiles[key].append(_parse_profile_entry(value, key, lineno))
        elif key in _SCALAR_KEYS:
            if key in scalars:
                raise ScenarioError(
                    f"line {lineno}: duplicate key {key!r} (first at line {scalars[key][0]})")
            scalars[key] = (lineno, value)
        else:
            raise ScenarioError(f"line {lineno}: unknown key {key!r}")

    def take(key: str):
        entry = scalars.pop(key, None)
        return entry if entry is None else entry

    def take_float(key: str) -> float | None:
        entry = scalars.pop(key, None)
        if entry is None:
            return None
        lineno, value = entry
        try:
            return float(value)
        except ValueError:
            raise ScenarioError(f"line {lineno}: invalid number for {key}: {value!r}") from None

    def take_int(key: str) -> int | None:
        entry = scalars.pop(key, None)
        if entry is None:
            return None
        lineno, value = entry
        try:
            return int(value)
        except ValueError:
            raise ScenarioError(f"line {lineno}: invalid integer for {key}: {value!r}") from None

    motor_kwargs = {}
    for name in _MOTOR_FLOAT_KEYS:
        value = take_float(f"motor.{name}")
        if value is not None:
            motor_kwargs[name] = value
    pole_pairs = take_int("motor.pole_pairs")
    if pole_pairs is not None:
        motor_kwargs["pole_pairs"] = pole_pairs
    try:
        motor = dataclasses.replace(default_motor(), **motor_kwargs) if motor_kwargs \
            else default_motor()
    except ValueError as exc:
        raise ScenarioError(str(exc)) from None

    hysteresis = None
    flux_band = take_float("hysteresis.flux_band")
    torque_band = take_float("hysteresis.torque_band")
    if flux_band is not None or torque_band is not None:
        hysteresis = HysteresisConfig(
            flux_band if flux_band is not None else 0.01 * motor.rated_flux,
            torque_band if torque_band is not None else 0.02 * motor.rated_torque)

    optimizer = None
    optimizer_overrides = {}
    for name in _OPTIMIZER_KEYS:
        value = take_float(f"optimizer.{name}")
        if value is not None:
            optimizer_overrides[name] = value
    if optimizer_overrides:
        from .fuzzy import default_optimizer_config
        try:
            optimizer = dataclasses.replace(
                default_optimizer_config(motor.rated_flux, motor.rated_torque),
                **optimizer_overrides)
        except ValueError as exc:
            raise ScenarioError(str(exc)) from None

    fuzzy_definition = None
    rules_entry = scalars.pop("optimizer.rules", None)
    if rules_entry is not None:
        lineno, value = rules_entry
        path = Path(value)
        if not path.is_absolute() and base_dir is not None:
            path = base_dir / path
        try:
            fuzzy_definition = path.read_text()
            parse_definition(fuzzy_definition)
        except OSError as exc:
            raise ScenarioError(f"line {lineno}: cannot read rules file: {exc}") from None
        except FuzzyDefinitionError as exc:
            raise ScenarioError(f"line {lineno}: bad rules file {value!r}: {exc}") from None

    speed_pi = None
    pi_values = {name: take_float(f"speed_pi.{name}") for name in _PI_KEYS}
    if any(v is not None for v in pi_values.values()):
        speed_pi = PIGains(
            pi_values["kp"] if pi_values["kp"] is not None else 0.5,
            pi_values["ki"] if pi_values["ki"] is not None else 20.0,
            pi_values["torque_limit"] if pi_values["torque_limit"] is not None
            else 1.5 * motor.rated_torque)

    controller_entry = scalars.pop("controller", None)
    kwargs = dict(
        motor=motor,
        hysteresis=hysteresis,
        optimizer=optimizer,
        speed_pi=speed_pi,
        fuzzy_definition=fuzzy_definition,
    )
    if controller_entry is not None:
        kwargs["controller"] = controller_entry[1]
    for key, value in (("duration", take_float("duration")),
                       ("dt", take_float("dt")),
                       ("initial_flux_ref", take_float("initial_flux_ref")),
                       ("substeps", take_int("substeps")),
                       ("stride", take_int("stride"))):
        if value is not None:
            kwargs[key] = value
    if profiles["torque_ref.step"]:
        kwargs["torque_ref"] = StepProfile(profiles["torque_ref.step"])
    if profiles["speed_ref.step"]:
        kwargs["speed_ref"] = StepProfile(profiles["speed_ref.step"])
    if profiles["load.step"]:
        kwargs["load"] = StepProfile(profiles["load.step"])

    try:
        scenario = Scenario(**kwargs)
        scenario.validate()
    except ValueError as exc:
        raise ScenarioError(str(exc)) from None
    return scenario


def _parse_profile_entry(value: str, key: str, lineno: int) -> tuple[float, float]:
    parts = value.split(":")
    if len(parts) != 2:
        raise ScenarioError(
            f"line {lineno}: {key} expects '<time>:<value>', got {value!r}")
    try:
        return float(parts[0]), float(parts[1])
    except ValueError:
        raise ScenarioError(
            f"line {lineno}: {key} expects numbers in '<time>:<value>', got {value!r}") from None


def load_scenario(path: Path) -> Scenario:
    return parse_scenario(path.read_text(), base_dir=path.parent)


def emit_csv(records: Sequence[SimRecord], path: Path) -> None:
    """Write the record list as CSV with 9-significant-digit values."""
    try:
        with open(path, "w", newline="\n") as fh:
            fh.write(CSV_HEADER + "\n")
            for r in records:
                fh.write(f"{r.time:.9g},{r.torque_est:.9g},{r.torque_plant:.9g},"
                         f"{r.torque_ref:.9g},{r.flux_mag_est:.9g},{r.flux_ref:.9g},"
                         f"{r.flux_alpha:.9g},{r.flux_beta:.9g},{r.speed_mech:.9g},"
                         f"{r.sector},{r.switch.sa},{r.switch.sb},{r.switch.sc}\n")
    except OSError as exc:
        raise OSError(f"cannot write CSV to {path}: {exc}") from exc


def run_command(scenario: Scenario, out_dir: Path, stem: str) -> Path:
    """Run one scenario and write its CSV; returns the CSV path."""
    records = sim.run(scenario)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / f"{stem}.csv"
    emit_csv(records, csv_path)
    return csv_path


def compare_command(scenario: Scenario, out_dir: Path, stem: str,
                    variants: tuple[str, str] = ("conventional", "fuzzy_optimized"),
                    ) -> tuple[str, list[metrics.ComparisonSummary]]:
    """Run the scenario once per variant and build the ripple report.

    Returns the report text and the per-window comparison summaries; CSVs
    and the report file land in ``out_dir``.
    """
    out_dir.mkdir(parents=True, exist_ok=True)
    results = {}
    for index, variant in enumerate(variants):
        variant_scenario = dataclasses.replace(scenario, controller=variant)
        records = sim.run(variant_scenario)
        suffix = variant if variants.count(variant) == 1 else f"{variant}{index + 1}"
        emit_csv(records, out_dir / f"{stem}_{suffix}.csv")
        results[index] = records

    windows = metrics.steady_windows(scenario.step_times(), scenario.duration)
    lines = [f"DTC torque-ripple comparison: {variants[0]} vs {variants[1]}",
             f"ripple metric: RMS about the window mean; windows start "
             f"{metrics.SETTLE_TIME:g} s after each reference/load step", ""]
    summaries = []
    for t0, t1 in windows:
        base = metrics.torque_ripple(results[0], t0, t1)
        cand = metrics.torque_ripple(results[1], t0, t1)
        summary = metrics.compare(base, cand)
        summaries.append(summary)
        load_now = scenario.load.value(t0)
        lines.append(f"window [{t0:.4f}, {t1:.4f}) s  load {load_now:.4g} Nm")
        for name, rep in ((variants[0], base), (variants[1], cand)):
            lines.append(f"  {name:<16s} mean {rep.torque_mean:9.4f} Nm  "
                         f"rms {rep.torque_ripple_rms:8.5f} Nm  "
                         f"p2p {rep.torque_ripple_peak_to_peak:8.5f} Nm  "
                         f"flux_ref {rep.flux_ref_mean:7.5f} Wb")
        if summary.ratio_undefined:
            lines.append("  ripple ratio undefined (baseline ripple is zero)")
        else:
            lines.append(f"  ripple ratio {summary.ratio:.4f}  "
                         f"reduction {summary.reduction_percent:.2f} %")
        lines.append("")
    report = "\n".join(lines)
    (out_dir / f"{stem}_report.txt").write_text(report)
    return report, summaries


def main(argv: Sequence[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="dtcsim",
        description="Direct torque control simulator with fuzzy flux-reference optimization")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (("run", "simulate one scenario and write a CSV"),
                            ("compare", "run conventional and fuzzy variants, report ripple"),
                            ("validate", "check a scenario file and exit")):
        sub = subparsers.add_parser(name, help=help_text)
        sub.add_argument("scenario", type=Path, help="scenario file")
        if name != "validate":
            sub.add_argument("-o", "--out-dir", type=Path, default=Path("."),
                             help="output directory (default: current directory)")
        if name == "run":
            sub.add_argument("--stride", type=int, default=None,
                             help="record every Nth control step")
    args = parser.parse_args(argv)

    try:
        scenario = load_scenario(args.scenario)
    except OSError as exc:
        print(f"error: cannot read {args.scenario}: {exc}", file=sys.stderr)
        return 1
    except ScenarioError as exc:
        print(f"error: {args.scenario}: {exc}", file=sys.stderr)
        return 1

    stem = args.scenario.stem
    try:
        if args.command == "validate":
            print(f"OK {args.scenario}")
        elif args.command == "run":
            if args.stride is not None:
                if args.stride < 1:
                    print("error: --stride must be >= 1", file=sys.stderr)
                    return 1
                scenario.stride = args.stride
            csv_path = run_command(scenario, args.out_dir, stem)
            print(f"wrote {csv_path}")
        else:
            report, _ = compare_command(scenario, args.out_dir, stem)
            print(report)
            print(f"wrote {args.out_dir / (stem + '_report.txt')}")
    except UnstableSimulationError as exc:
        print(f"error: simulation diverged: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
