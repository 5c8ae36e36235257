"""Experiment runner and crypto utilities.

``zkpot run CONFIG`` executes every configured mode x repeat, writes the four
metric CSVs plus a JSON manifest per run under ``output/<mode>/<repeat>/``,
and a cross-mode ``summary.csv``.  ``zkpot vectors gen|check`` produces and
validates conformance vectors for the proof primitives.

Exit codes: 0 success, 1 verification/conformance failure, 2 configuration
error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import multiprocessing
import sys
import time
from pathlib import Path

try:
    import tomllib
except ImportError:  # Python < 3.11
    import tomli as tomllib

from . import __version__, vectors
from .sim import kernels
from .sim.metrics import MetricsLedger
from .sim.scenario import (AttackerMix, ChannelParams, ConfigError, ManhattanGrid,
                           Mode, PerceptionParams, ScenarioSpec, TraceFile, parse_mode)
from .sim.world import World
from .proofs import KdfConfig, KdfMode

# Bootstrap transient excluded from steady-state metrics (TTV quantiles,
# mean bandwidth): first quarter of the run.
STEADY_FRACTION = 0.25


def steady_start(duration_ticks: int) -> int:
    return duration_ticks // 4


# --- configuration -----------------------------------------------------------

_SCHEMA = {
    "run": {"output_dir", "modes", "repeats", "seed"},
    "scenario": {"duration_ticks", "pseudonym_expected_lifetime_s"},
    "scenario.mobility": {"kind", "rows", "cols", "block_m", "n_vehicles",
                          "speed_min", "speed_max", "lane_offset_m", "path"},
    "scenario.channel": {"range_m", "pdr"},
    "scenario.perception": {"range_m", "fov_deg", "plate_width_m",
                            "vehicle_length_m", "vehicle_width_m"},
    "scenario.attackers": {"spam", "replay", "silence", "spam_fabrication_count"},
    "station": {"pending_ttl_s", "spam_limit", "max_proofs_per_cpm",
                "kdf_mode", "kdf_iterations"},
}


def _check_keys(table: dict, path: str):
    allowed = _SCHEMA.get(path)
    if allowed is None:
        raise ConfigError(f"{path}: unknown section")
    for key, value in table.items():
        if isinstance(value, dict):
            _check_keys(value, f"{path}.{key}")
        elif key not in allowed:
            raise ConfigError(f"{path}.{key}: unknown key")


class RunConfig:
    def __init__(self, output_dir, modes, repeats, seed, scenario_kwargs):
        if not modes:
            raise ConfigError("run.modes: must name at least one mode")
        if repeats < 1:
            raise ConfigError("run.repeats: must be >= 1")
        self.output_dir = Path(output_dir)
        self.modes = [parse_mode(m) for m in modes]
        self.repeats = repeats
        self.seed = seed
        self.scenario_kwargs = scenario_kwargs

    def scenario(self, mode: Mode, repeat: int) -> ScenarioSpec:
        return ScenarioSpec(mode=mode, seed=self.seed + repeat, **self.scenario_kwargs)


def load_config(path) -> RunConfig:
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    for section, table in raw.items():
        if not isinstance(table, dict):
            raise ConfigError(f"{section}: top-level values must live in sections")
        _check_keys(table, section)

    run = raw.get("run", {})
    scen = dict(raw.get("scenario", {}))
    mob_raw = dict(scen.pop("mobility", {}))
    chan_raw = scen.pop("channel", {})
    perc_raw = scen.pop("perception", {})
    atk_raw = scen.pop("attackers", {})
    station = raw.get("station", {})

    kind = mob_raw.pop("kind", "manhattan")
    try:
        if kind == "manhattan":
            mobility = ManhattanGrid(**mob_raw)
        elif kind == "trace":
            if "path" not in mob_raw:
                raise ConfigError("scenario.mobility.path: required for kind=\"trace\"")
            mobility = TraceFile(mob_raw["path"])
        else:
            raise ConfigError(f"scenario.mobility.kind: unknown value {kind!r}")
        channel = ChannelParams(**chan_raw)
        perception = PerceptionParams(**perc_raw)
        attackers = AttackerMix(**atk_raw)
        kdf_mode = station.get("kdf_mode", "plain_hash")
        try:
            kdf = KdfConfig(KdfMode(kdf_mode), station.get("kdf_iterations", 1))
        except ValueError:
            raise ConfigError(f"station.kdf_mode: unknown value {kdf_mode!r}") from None

        lifetime = scen.get("pseudonym_expected_lifetime_s", 43200)
        if lifetime <= 0:
            raise ConfigError("scenario.pseudonym_expected_lifetime_s: must be positive")
        scenario_kwargs = dict(
            mobility=mobility,
            duration_ticks=scen.get("duration_ticks", 7200),
            channel=channel,
            perception=perception,
            attackers=attackers,
            pending_ttl=station.get("pending_ttl_s", 30),
            spam_limit=station.get("spam_limit", 32),
            max_proofs_per_cpm=station.get("max_proofs_per_cpm", 8),
            kdf=kdf,
            pseudonym_change_prob=1.0 / lifetime,
        )
        # validate eagerly so errors surface as ConfigError at load time
        ScenarioSpec(mode=Mode(Mode.CONVENTIONAL), seed=0, **scenario_kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None

    return RunConfig(
        output_dir=run.get("output_dir", "results"),
        modes=run.get("modes", ["local_only", "conventional_cps", "pot_1s", "pot_3s"]),
        repeats=run.get("repeats", 1),
        seed=run.get("seed", 0),
        scenario_kwargs=scenario_kwargs,
    )


# --- run ----------------------------------------------------------------------

def _execute_run(task):
    """One (mode, repeat) simulation; returns the summary row ingredients."""
    config, mode, repeat = task
    spec = config.scenario(mode, repeat)
    outdir = config.output_dir / mode.name / str(repeat)
    start = time.perf_counter()
    world = World(spec)
    ledger = world.run()
    wall = time.perf_counter() - start

    ledger.write_csvs(outdir, world.kinds)
    since = steady_start(spec.duration_ticks)
    manifest = {
        "mode": mode.name,
        "repeat": repeat,
        "seed": spec.seed,
        "version": __version__,
        "numba_kernel": kernels.use_numba(),
        "duration_ticks": spec.duration_ticks,
        "n_vehicles": world.n,
        "wall_time_s": round(wall, 3),
        "steady_window_start_tick": since,
        "diagnostics": world.diagnostics(),
        "config": _spec_echo(spec),
    }
    with open(outdir / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)

    return {
        "mode": mode.name,
        "repeat": repeat,
        "mean_verification_ratio": ledger.mean_verification_ratio(),
        "ttv_frac_1s": ledger.ttv_fraction_within(1, since),
        "ttv_frac_2s": ledger.ttv_fraction_within(2, since),
        "ttv_frac_5s": ledger.ttv_fraction_within(5, since),
        "steady_bandwidth_bps": ledger.steady_state_bandwidth(since),
        "ticks_to_95_coverage": ledger.ticks_to_coverage(0.95),
    }


def _spec_echo(spec: ScenarioSpec):
    def plain(obj):
        if hasattr(obj, "__dataclass_fields__"):
            return {f: plain(getattr(obj, f)) for f in obj.__dataclass_fields__}
        if isinstance(obj, KdfMode):
            return obj.value
        return obj
    return plain(spec)


def _mean(values):
    values = [v for v in values if v is not None]
    return sum(values) / len(values) if values else None


def write_summary(path, rows, modes, repeats):
    import csv
    columns = ["mean_verification_ratio", "ttv_frac_1s", "ttv_frac_2s",
               "ttv_frac_5s", "steady_bandwidth_bps", "ticks_to_95_coverage"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["mode", "repeats"] + columns)
        for mode in modes:
            mode_rows = [r for r in rows if r["mode"] == mode.name]
            out = [mode.name, repeats]
            for col in columns:
                value = _mean([r[col] for r in mode_rows])
                out.append("" if value is None else repr(round(value, 9)))
            w.writerow(out)


def cmd_run(args) -> int:
    try:
        config = load_config(args.config)
        if args.output:
            config.output_dir = Path(args.output)
        if args.mode:
            config.modes = [parse_mode(m) for m in args.mode]
        if args.seed is not None:
            config.seed = args.seed
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    tasks = [(config, mode, rep)
             for mode in config.modes for rep in range(config.repeats)]
    try:
        config.output_dir.mkdir(parents=True, exist_ok=True)
        if args.jobs > 1:
            with multiprocessing.Pool(args.jobs) as pool:
                rows = pool.map(_execute_run, tasks)
        else:
            rows = [_execute_run(t) for t in tasks]
        write_summary(config.output_dir / "summary.csv", rows, config.modes,
                      config.repeats)
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3

    for row in rows:
        ratio = row["mean_verification_ratio"]
        print(f"{row['mode']}/{row['repeat']}: "
              f"R_veri={'n/a' if ratio is None else f'{ratio:.3f}'} "
              f"bw={row['steady_bandwidth_bps']:.0f} b/s "
              f"t95={row['ticks_to_95_coverage']}")
    print(f"summary written to {config.output_dir / 'summary.csv'}")
    return 0


# --- vectors ---------------------------------------------------------------------

def cmd_vectors(args) -> int:
    if args.action == "gen":
        try:
            vectors.write_vectors(args.out, args.count, args.seed)
        except OSError as exc:
            print(f"i/o error: {exc}", file=sys.stderr)
            return 3
        print(f"wrote {args.count} vectors to {args.out}")
        return 0
    try:
        ok, index, message = vectors.check_vectors(args.file)
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3
    if not ok:
        print(message, file=sys.stderr)
        return 1
    print("all vectors check out")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="zkpot", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a scenario configuration")
    p_run.add_argument("config", help="TOML configuration file")
    p_run.add_argument("--output", help="override run.output_dir")
    p_run.add_argument("--mode", action="append",
                       help="override run.modes (repeatable)")
    p_run.add_argument("--seed", type=int, help="override run.seed")
    p_run.add_argument("--jobs", type=int, default=1,
                       help="run mode/repeat combinations in parallel")
    p_run.set_defaults(func=cmd_run)

    p_vec = sub.add_parser("vectors", help="conformance vectors")
    vec_sub = p_vec.add_subparsers(dest="action", required=True)
    p_gen = vec_sub.add_parser("gen")
    p_gen.add_argument("--count", type=int, default=100)
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--out", default="vectors.txt")
    p_chk = vec_sub.add_parser("check")
    p_chk.add_argument("file")
    p_vec.set_defaults(func=cmd_vectors)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
