"""Command-line front end.

Subcommands:

  separation     closed-form guide separation for a given vertical spread
                 and mismatch tolerance
  run            one scenario sweep -> CSV (or JSON lines) + metadata
                 sidecar, optional rendered figure
  reproduce-all  every preset study with the documented default seed,
                 figures included, plus a manifest

Exit codes: 0 success, 2 usage or configuration error, 3 I/O failure.
Diagnostics go to stderr; stdout carries data and summaries only.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import replace
from pathlib import Path

from . import __version__
from .channel import CarrierConfig
from .experiments import (BEAMPATTERN_ALIASES, BEAMPATTERN_PRESETS, SCENARIOS,
                          ScenarioConfig, UnknownConfigKeyError,
                          parse_config_value, preset_config, run_scenario)
from .geometry import InvalidToleranceError, separation_bound

ENV_SEED = "DBF_SIM_SEED"

#: Scenarios run by ``reproduce-all``: one per published figure family.
REPRODUCE_SCENARIOS = ("separation-sweep", "delta-sweep", "beampattern",
                       "localization", "kfactor", "distance-comparison")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="guided-dbf",
        description="Guided distributed transmit beamforming simulator")
    parser.add_argument("--version", action="version",
                        version=f"guided-dbf {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sep = sub.add_parser("separation",
                           help="closed-form guide separation bound")
    p_sep.add_argument("--ly", type=float, required=True,
                       help="vertical spread of the followers (m)")
    group = p_sep.add_mutually_exclusive_group(required=True)
    group.add_argument("--delta-frac", type=float,
                       help="mismatch tolerance as a fraction of the wavelength")
    group.add_argument("--delta-m", type=float,
                       help="mismatch tolerance in meters")
    p_sep.add_argument("--fc", type=float, default=900e6,
                       help="carrier frequency in Hz (used with --delta-frac)")

    p_run = sub.add_parser("run", help="run one scenario sweep")
    p_run.add_argument("scenario", choices=SCENARIOS)
    p_run.add_argument("--config", type=Path,
                       help="flat key = value config file")
    p_run.add_argument("--set", dest="overrides", action="append", default=[],
                       metavar="KEY=VALUE", help="override one config key")
    p_run.add_argument("--seed", type=int)
    p_run.add_argument("--trials", type=int)
    p_run.add_argument("--out", type=Path, default=Path("results"))
    p_run.add_argument("--jobs", type=int, default=1)
    p_run.add_argument("--format", choices=("csv", "jsonlines"), default="csv")
    p_run.add_argument("--preset",
                       help="beampattern region preset (beampattern only)")
    p_run.add_argument("--plot", action="store_true",
                       help="render the scenario figure next to the table")

    p_all = sub.add_parser("reproduce-all",
                           help="run every preset study with default seeds")
    p_all.add_argument("--out", type=Path, default=Path("results"))
    p_all.add_argument("--seed", type=int)
    p_all.add_argument("--trials", type=int)
    p_all.add_argument("--jobs", type=int, default=1)
    p_all.add_argument("--no-plots", action="store_true",
                       help="skip figure rendering")
    return parser


def _fallback_seed() -> int | None:
    raw = os.environ.get(ENV_SEED)
    if raw is None:
        return None
    try:
        return int(raw)
    except ValueError:
        raise UnknownConfigKeyError(f"{ENV_SEED} must be an integer, got {raw!r}")


def _load_config(scenario: str, config_path: Path | None, overrides,
                 seed: int | None, trials: int | None,
                 preset: str | None) -> ScenarioConfig:
    cfg = preset_config(scenario)
    updates = {}
    if config_path is not None:
        for line_no, line in enumerate(config_path.read_text().splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise UnknownConfigKeyError(
                    f"{config_path}:{line_no}: expected 'key = value'")
            key, _, value = line.partition("=")
            name, parsed = parse_config_value(key.strip(), value)
            updates[name] = parsed
    for item in overrides:
        if "=" not in item:
            raise UnknownConfigKeyError(f"--set expects KEY=VALUE, got {item!r}")
        key, _, value = item.partition("=")
        name, parsed = parse_config_value(key.strip(), value)
        updates[name] = parsed
    if "scenario" in updates and updates["scenario"] != scenario:
        raise UnknownConfigKeyError(
            f"config names scenario {updates['scenario']!r} but the command "
            f"line says {scenario!r}")
    updates.pop("scenario", None)
    if preset is not None:
        if scenario != "beampattern":
            raise UnknownConfigKeyError("--preset applies to the beampattern "
                                        "scenario only")
        name = BEAMPATTERN_ALIASES.get(preset, preset)
        if name not in BEAMPATTERN_PRESETS:
            known = ", ".join(list(BEAMPATTERN_PRESETS) + list(BEAMPATTERN_ALIASES))
            raise UnknownConfigKeyError(
                f"unknown beampattern preset {preset!r} (known: {known})")
        updates["presets"] = (name,)
    if trials is not None:
        updates["trials"] = trials
    env_seed = _fallback_seed()
    if seed is not None:
        updates["seed"] = seed
    elif "seed" not in updates and env_seed is not None:
        updates["seed"] = env_seed
    return replace(cfg, **updates)


def _write_result(result, out_dir: Path, fmt: str, plot: bool) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    scenario = result.config.scenario
    table = out_dir / (f"{scenario}.csv" if fmt == "csv"
                       else f"{scenario}.jsonl")
    if fmt == "csv":
        result.write_csv(table)
    else:
        result.write_jsonlines(table)
    result.write_metadata(out_dir / f"{scenario}.meta.txt")
    if plot:
        from . import plots
        plots.render(result, out_dir / f"{scenario}.png")
    return table


def _cmd_separation(args) -> int:
    if args.ly < 0:
        print("error: --ly must be nonnegative", file=sys.stderr)
        return 2
    if args.delta_m is not None:
        delta = args.delta_m
    else:
        delta = args.delta_frac * CarrierConfig(args.fc).wavelength_m
    try:
        bound = separation_bound(args.ly, delta)
    except InvalidToleranceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(format(bound, ".4g"))
    return 0


def _cmd_run(args) -> int:
    try:
        cfg = _load_config(args.scenario, args.config, args.overrides,
                           args.seed, args.trials, args.preset)
        result = run_scenario(cfg, jobs=args.jobs)
    except (UnknownConfigKeyError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        table = _write_result(result, args.out, args.format, args.plot)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    print(f"{cfg.scenario}: {len(result.rows)} rows -> {table}")
    return 0


def _cmd_reproduce_all(args) -> int:
    try:
        env_seed = _fallback_seed()
    except UnknownConfigKeyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    manifest = {"tool_version": __version__, "scenarios": {}}
    failed = False
    try:
        args.out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    for scenario in REPRODUCE_SCENARIOS:
        cfg = preset_config(scenario)
        if args.seed is not None:
            cfg = replace(cfg, seed=args.seed)
        elif env_seed is not None:
            cfg = replace(cfg, seed=env_seed)
        if args.trials is not None:
            cfg = replace(cfg, trials=args.trials)
        t0 = time.monotonic()
        entry = {"seed": cfg.seed, "trials": cfg.trials}
        try:
            result = run_scenario(cfg, jobs=args.jobs)
            table = _write_result(result, args.out, "csv", not args.no_plots)
            entry.update(status="ok", rows=len(result.rows), table=table.name,
                         runtime_s=round(time.monotonic() - t0, 3))
            print(f"{scenario}: {len(result.rows)} rows -> {table}")
        except Exception as exc:    # keep partial results, mark the failure
            failed = True
            entry.update(status="failed", error=str(exc),
                         runtime_s=round(time.monotonic() - t0, 3))
            print(f"{scenario}: FAILED ({exc})", file=sys.stderr)
        manifest["scenarios"][scenario] = entry
    try:
        with open(args.out / "manifest.json", "w") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    return 1 if failed else 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "separation":
        return _cmd_separation(args)
    if args.command == "run":
        return _cmd_run(args)
    return _cmd_reproduce_all(args)


if __name__ == "__main__":
    sys.exit(main())
