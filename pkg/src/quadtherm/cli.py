"""``quadtherm`` command line: simulate | endurance | sweep | gamma | reward | randomize.

Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from . import __version__
from ._backend import BACKEND
from .config import ConfigError, atomic_write_text, check_schema, digest, read_bytes, read_json
from .network import HeatInput, load_network
from .randomizer import RandomizationRanges, sample_episode
from .rewards import WORST_CASE_AMBIENT, RewardConfig, RobotSnapshot, TERM_NAMES, max_feasible_gamma, total_reward
from .scenario import CONTROLLERS, Scenario, load_variations, sweep, sweep_csv
from .thermal import EULER, EXACT, matrices_for, simulate

DEFAULT_NETWORK = "builtin:a1_placeholder_network"
DEFAULT_SCENARIO = "builtin:demo_hot_load"


def _write_manifest(args, out, config_paths, t_start, extra_outputs=()):
    blobs = [read_bytes(p) for p in config_paths if p]
    manifest = {
        "tool": "quadtherm",
        "version": __version__,
        "backend": BACKEND,
        "command": args.command,
        "argv": list(args.argv),
        "config_digest": digest(*blobs),
        "config_files": [str(p) for p in config_paths if p],
        "seed": getattr(args, "seed", None),
        "outputs": [str(out), *map(str, extra_outputs)],
        "wall_clock_s": round(time.perf_counter() - t_start, 6),
    }
    atomic_write_text(f"{out}.manifest.json", json.dumps(manifest, indent=2) + "\n")


def _reward_config(path):
    if path is None:
        return RewardConfig()
    data = read_json(path)
    check_schema(data, "reward")
    try:
        return RewardConfig.from_dict(data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from None


def _schedule_from_file(path, network):
    data = read_json(path)
    check_schema(data, "inputs")
    segs = data.get("segments")
    if not isinstance(segs, list) or not segs:
        raise ConfigError(f"{path}: field 'segments' must be a nonempty list")
    starts, watts = [], []
    for k, seg in enumerate(segs):
        try:
            t = float(seg["t"])
            w = np.asarray(seg["watts"], dtype=float)
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"{path}: segments[{k}]: needs numeric 't' and 'watts' ({exc})") from None
        if w.shape != (network.n,):
            raise ConfigError(f"{path}: segments[{k}].watts needs {network.n} entries, got {w.size}")
        if starts and t <= starts[-1]:
            raise ConfigError(f"{path}: segments[{k}].t must increase")
        starts.append(t)
        watts.append(w)
    if starts[0] > 0:
        raise ConfigError(f"{path}: segments[0].t must be <= 0")

    def schedule(t):
        k = int(np.searchsorted(starts, t + 1e-12, side="right")) - 1
        return HeatInput(watts[max(k, 0)])

    return schedule, data.get("initial_temperature")


def cmd_simulate(args):
    t0 = time.perf_counter()
    net = load_network(args.config)
    if args.inputs:
        schedule, T0 = _schedule_from_file(args.inputs, net)
    else:
        schedule, T0 = HeatInput(net.aux_heat), None
    if args.horizon is None or args.h is None:
        raise ConfigError("simulate needs --h and --horizon")
    try:
        trace = simulate(net, schedule, T0=T0, horizon=args.horizon, h=args.h, method=args.method)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    atomic_write_text(args.out, trace.to_csv())
    _write_manifest(args, args.out, [args.config, args.inputs], t0)
    print(f"wrote {len(trace)} rows to {args.out}")


def _load_scenario(args):
    sc = Scenario.load(args.config)
    overrides = {}
    if args.h is not None:
        overrides["h"] = args.h
    if args.horizon is not None:
        overrides["horizon"] = args.horizon
    if getattr(args, "controller", None):
        overrides["controller"] = args.controller
    return sc.with_overrides(overrides) if overrides else sc


def cmd_endurance(args):
    t0 = time.perf_counter()
    sc = _load_scenario(args)
    result = sc.run(seed=args.seed)
    if args.out:
        atomic_write_text(args.out, result.trace.to_csv())
        _write_manifest(args, args.out, [args.config], t0)
    if result.overheat_time is None:
        print(f"{sc.controller}: no overheat within horizon ({sc.horizon:g} s); "
              f"max motor temperature {result.max_motor_temperature:.3f} C")
    else:
        print(f"{sc.controller}: overheat_time {result.overheat_time:.3f} s "
              f"(motor {result.hottest_motor}); max motor temperature {result.max_motor_temperature:.3f} C")


def _parse_seeds(args):
    if args.seeds:
        try:
            return [int(s) for s in args.seeds.split(",") if s.strip()]
        except ValueError:
            raise ConfigError(f"--seeds: expected comma-separated integers, got {args.seeds!r}") from None
    return [args.seed]


def cmd_sweep(args):
    t0 = time.perf_counter()
    sc = _load_scenario(args)
    variations = load_variations(args.variations) if args.variations else [{}]
    rows = sweep(sc, variations, _parse_seeds(args), jobs=args.jobs)
    atomic_write_text(args.out, sweep_csv(rows))
    _write_manifest(args, args.out, [args.config, args.variations], t0)
    failed = sum(bool(r.get("error")) for r in rows)
    print(f"wrote {len(rows)} rows to {args.out} ({failed} failed)")
    return 1 if failed else 0


def cmd_gamma(args):
    net = load_network(args.config)
    cfg = _reward_config(args.reward)
    h = 0.02 if args.h is None else args.h
    mat = matrices_for(net, h, args.method)
    try:
        g = max_feasible_gamma(mat, net, cfg, ambient=args.ambient)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    print(f"gamma_max {g:.12g}")
    verdict = "admitted" if cfg.gamma_T <= g else "NOT admitted"
    print(f"gamma_T {cfg.gamma_T:g} {verdict}")


def cmd_reward(args):
    t0 = time.perf_counter()
    data = read_json(args.config)
    check_schema(data, "snapshot")
    try:
        snap = RobotSnapshot.from_dict(data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{args.config}: {exc}") from None
    cfg = _reward_config(args.reward)
    total, parts = total_reward(snap, cfg)
    print(f"total {total:.12g}")
    for name in TERM_NAMES:
        print(f"  {name} {parts[name]:.12g}")
    if args.out:
        header = ["total", *TERM_NAMES]
        values = [total, *(parts[n] for n in TERM_NAMES)]
        atomic_write_text(args.out, ",".join(header) + "\n" + ",".join(format(v, ".12g") for v in values) + "\n")
        _write_manifest(args, args.out, [args.config, args.reward], t0)


def cmd_randomize(args):
    t0 = time.perf_counter()
    if args.config:
        data = read_json(args.config)
        check_schema(data, "randomization")
        try:
            ranges = RandomizationRanges.from_dict(data)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{args.config}: {exc}") from None
    else:
        ranges = RandomizationRanges()
    if args.count < 1 or args.seed < 0:
        raise ConfigError("--count must be >= 1 and --seed >= 0")
    records = [sample_episode(ranges, args.seed + k).to_record() for k in range(args.count)]
    text = json.dumps(records, indent=2) + "\n"
    if args.out:
        atomic_write_text(args.out, text)
        _write_manifest(args, args.out, [args.config], t0)
    else:
        sys.stdout.write(text)


def build_parser():
    p = argparse.ArgumentParser(prog="quadtherm", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"quadtherm {__version__} ({BACKEND} kernels)")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="step a thermal network under a piecewise-constant heat schedule")
    s.add_argument("--config", default=DEFAULT_NETWORK, help="network file (JSON); default: %(default)s")
    s.add_argument("--inputs", help="heat schedule file (JSON); default: constant aux heat")
    s.add_argument("--h", type=float, required=True, help="sampling interval [s]")
    s.add_argument("--horizon", type=float, required=True, help="simulated time [s]")
    s.add_argument("--method", choices=(EXACT, EULER), default=EXACT, help="discretization")
    s.add_argument("--out", required=True, help="trace CSV path")
    s.add_argument("--seed", type=int, default=None, help="recorded in the manifest only")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("endurance", help="run one baseline or throttled endurance scenario")
    s.add_argument("--config", default=DEFAULT_SCENARIO, help="scenario file (JSON); default: %(default)s")
    s.add_argument("--controller", choices=CONTROLLERS, help="override the scenario's controller")
    s.add_argument("--seed", type=int, default=None, help="randomization seed (used when randomization is enabled)")
    s.add_argument("--h", type=float, default=None, help="override thermal step [s]")
    s.add_argument("--horizon", type=float, default=None, help="override horizon [s]")
    s.add_argument("--out", help="trace CSV path")
    s.set_defaults(func=cmd_endurance)

    s = sub.add_parser("sweep", help="run scenario variations x seeds and tabulate summaries")
    s.add_argument("--config", default=DEFAULT_SCENARIO, help="base scenario file (JSON)")
    s.add_argument("--variations", help="variations file (JSON): {schema_version, variations: [overrides...]}")
    s.add_argument("--seeds", help="comma-separated seeds, e.g. 0,1,2")
    s.add_argument("--seed", type=int, default=None, help="single seed when --seeds is absent")
    s.add_argument("--jobs", type=int, default=1, help="concurrent runs")
    s.add_argument("--h", type=float, default=None, help="override thermal step [s]")
    s.add_argument("--horizon", type=float, default=None, help="override horizon [s]")
    s.add_argument("--out", required=True, help="summary CSV path")
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("gamma", help="largest gamma_T satisfying the barrier condition at the worst hot state")
    s.add_argument("--config", default=DEFAULT_NETWORK, help="network file (JSON)")
    s.add_argument("--reward", help="reward config file (JSON); default: built-in values")
    s.add_argument("--h", type=float, default=None, help="sampling interval [s] (default 0.02)")
    s.add_argument("--method", choices=(EXACT, EULER), default=EXACT, help="discretization")
    s.add_argument("--ambient", type=float, default=WORST_CASE_AMBIENT, help="worst-case ambient [C]")
    s.set_defaults(func=cmd_gamma)

    s = sub.add_parser("reward", help="evaluate every reward term on a robot snapshot")
    s.add_argument("--config", required=True, help="snapshot file (JSON)")
    s.add_argument("--reward", help="reward config file (JSON); default: built-in values")
    s.add_argument("--out", help="breakdown CSV path")
    s.set_defaults(func=cmd_reward)

    s = sub.add_parser("randomize", help="draw seeded episode randomizations")
    s.add_argument("--config", help="ranges file (JSON); default: built-in ranges")
    s.add_argument("--seed", type=int, default=0, help="first seed")
    s.add_argument("--count", type=int, default=1, help="number of records (seeds seed..seed+count-1)")
    s.add_argument("--out", help="JSON output path; default: stdout")
    s.set_defaults(func=cmd_randomize)
    return p


def main(argv=None):
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    args = parser.parse_args(argv)
    args.argv = argv
    try:
        code = args.func(args)
    except ConfigError as exc:
        print(f"quadtherm {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"quadtherm {args.command}: runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return code or 0


if __name__ == "__main__":
    sys.exit(main())
