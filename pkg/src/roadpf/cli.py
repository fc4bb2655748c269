"""Command-line entry point: ``roadpf <command> [options]``.

Every command also accepts ``--config FILE``, a file of ``key = value`` lines
whose keys are the long option names (dashes or underscores). Command-line
flags override the file.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .evaluation import (ExperimentConfig, evaluate_trace, expand_grid,
                         summarize, sweep, write_results_csv)
from .network import NetworkError, RoadNetwork, make_grid_network
from .sensor_models import ObservationModel, TransitionModel
from .simulator import (SpeedProfile, generate_route, observe, read_trace_csv, write_trace_csv,
                        write_truepath_csv)
from .svgplot import write_chart
from .tracker import track, write_diagnostics_csv
from .trajectory import extract_fragments, write_trajectory_csv


class ConfigError(Exception):
    """Invalid configuration; reported with exit code 2."""


def _floats(text: str) -> list[float]:
    return [float(x) for x in str(text).split(",") if x.strip()]


def _ints(text: str) -> list[int]:
    return [int(x) for x in str(text).split(",") if x.strip()]


def read_config_file(path: str | Path) -> dict[str, str]:
    out = {}
    for n, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{n}: expected 'key = value'")
        key, value = (p.strip() for p in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def _model_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--method", choices=["standard", "improved"], default="improved", help="filter variant")
    p.add_argument("--m", type=int, default=10, help="number of particles")
    p.add_argument("--sigma-obs", type=float, default=10.0, help="GPS noise std. dev. assumed by the filter (m)")
    p.add_argument("--sigma-floor", type=float, default=2.0, help="minimum transition noise (m)")
    p.add_argument("--alpha", type=float, default=0.1, help="transition noise per meter of control")
    p.add_argument("--truncation-k", type=float, default=4.0, help="proposal radius in GPS std. devs.")
    p.add_argument("--resampling", choices=["multinomial", "systematic"], default="multinomial",
                   help="resampling scheme")
    p.add_argument("--propagation", choices=["kernel", "walk"], default="kernel",
                   help="standard filter propagation")
    p.add_argument("--seed", type=int, default=0, help="RNG seed")


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = argparse.ArgumentParser(prog="roadpf", description=__doc__, formatter_class=fmt)
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-network", help="write a grid road network", formatter_class=fmt)
    p.add_argument("--grid", type=int, default=10, help="nodes per side")
    p.add_argument("--spacing", type=float, default=100.0, help="node spacing (m)")
    p.add_argument("--out", default="network.json", help="output file")

    p = sub.add_parser("simulate", help="simulate a route and its GPS trace", formatter_class=fmt)
    p.add_argument("--network", required=True, help="network JSON")
    p.add_argument("--duration", type=int, default=3600, help="seconds")
    p.add_argument("--interval", type=int, default=1, help="GPS sampling interval (s)")
    p.add_argument("--sigma", type=float, default=10.0, help="GPS noise std. dev. (m)")
    p.add_argument("--speed-mean", type=float, default=10.0, help="mean speed, m/s")
    p.add_argument("--speed-std", type=float, default=3.0, help="speed std. dev., m/s")
    p.add_argument("--seed", type=int, default=0, help="RNG seed")
    p.add_argument("--out-trace", default="trace.csv", help="GPS trace CSV")
    p.add_argument("--out-truth", default="truth.csv", help="true path CSV")

    p = sub.add_parser("track", help="track a GPS trace and extract the path", formatter_class=fmt)
    p.add_argument("--network", required=True, help="network JSON")
    p.add_argument("--trace", required=True, help="GPS trace CSV")
    _model_args(p)
    p.add_argument("--path-method", choices=["greedy", "viterbi"], default="greedy", help="trajectory extraction")
    p.add_argument("--out", default="trajectory.csv", help="output file")
    p.add_argument("--diagnostics", default="diagnostics.csv", help="per-step diagnostics CSV")

    p = sub.add_parser("evaluate", help="hold-out evaluation of one trace", formatter_class=fmt)
    p.add_argument("--network", required=True, help="network JSON")
    p.add_argument("--trace", required=True, help="GPS trace CSV")
    _model_args(p)
    p.add_argument("--holdout-every", type=int, default=10, help="hold out every n-th fix")
    p.add_argument("--out", default="results.csv", help="output file")

    p = sub.add_parser("sweep", help="simulate-and-evaluate over a parameter grid", formatter_class=fmt)
    p.add_argument("--network", default=None, help="network JSON; a grid is generated when omitted")
    p.add_argument("--grid", type=int, default=10, help="nodes per side of the generated grid")
    p.add_argument("--spacing", type=float, default=100.0, help="grid spacing, m")
    p.add_argument("--methods", default="standard,improved", help="comma-separated filter variants")
    p.add_argument("--intervals", default="10,30,60", help="comma-separated seconds")
    p.add_argument("--sigmas", default="10", help="comma-separated meters")
    p.add_argument("--ms", default="10", help="comma-separated particle counts")
    p.add_argument("--seeds", type=int, default=20, help="seeds 0..N-1")
    p.add_argument("--duration", type=int, default=3600, help="simulated seconds per run")
    p.add_argument("--sigma-floor", type=float, default=2.0, help="transition noise floor, m")
    p.add_argument("--alpha", type=float, default=0.1, help="transition noise per meter of control")
    p.add_argument("--truncation-k", type=float, default=4.0, help="proposal radius in sigmas")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.add_argument("--out", default="results.csv", help="output file")
    p.add_argument("--plot-dir", default=None, help="write SVG charts here")
    return parser


def parse_args(argv: list[str] | None) -> argparse.Namespace:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    cfg_path = None
    if "--config" in argv:
        i = argv.index("--config")
        if i + 1 >= len(argv):
            parser.error("--config needs a file")
        cfg_path = argv[i + 1]
        del argv[i:i + 2]
    args = parser.parse_args(argv)
    if cfg_path is None:
        return args
    try:
        values = read_config_file(cfg_path)
    except OSError as exc:
        parser.error(f"cannot read config: {exc}")
    except ConfigError as exc:
        parser.error(str(exc))
    subparser = parser._subparsers._group_actions[0].choices[args.command]
    known = {a.dest for a in subparser._actions}
    unknown = sorted(set(values) - known)
    if unknown:
        parser.error(f"unknown config keys: {', '.join(unknown)}")
    subparser.set_defaults(**values)
    args = parser.parse_args(argv)
    # defaults bypass argparse's choices check
    for action in subparser._actions:
        if action.choices and getattr(args, action.dest, None) not in action.choices:
            parser.error(f"invalid value for {action.dest}: {getattr(args, action.dest)!r}")
    return args


def _validate(args: argparse.Namespace) -> None:
    checks = [
        ("m", lambda v: v >= 1, ">= 1"),
        ("sigma_obs", lambda v: v > 0, "> 0"),
        ("sigma_floor", lambda v: v > 0, "> 0"),
        ("alpha", lambda v: v >= 0, ">= 0"),
        ("truncation_k", lambda v: v >= 3, ">= 3"),
        ("interval", lambda v: v >= 1, ">= 1"),
        ("duration", lambda v: v >= 1, ">= 1"),
        ("sigma", lambda v: v >= 0, ">= 0"),
        ("seeds", lambda v: v >= 1, ">= 1"),
        ("jobs", lambda v: v >= 1, ">= 1"),
        ("holdout_every", lambda v: v >= 2, ">= 2"),
    ]
    for name, ok, desc in checks:
        if hasattr(args, name) and not ok(getattr(args, name)):
            raise ConfigError(f"--{name.replace('_', '-')} must be {desc}")


def _models(args) -> tuple[ObservationModel, TransitionModel]:
    return (ObservationModel(args.sigma_obs, args.truncation_k),
            TransitionModel(args.sigma_floor, args.alpha))


def cmd_gen_network(args) -> int:
    if args.grid < 2:
        raise ConfigError("--grid must be >= 2")
    if args.spacing <= 0:
        raise ConfigError("--spacing must be > 0")
    net = make_grid_network(args.grid, args.spacing)
    net.save(args.out)
    print(f"wrote {args.out}: {net.n_segments} segments")
    return 0


def cmd_simulate(args) -> int:
    net = RoadNetwork.load(args.network)
    route_rng = np.random.default_rng([args.seed, 0])
    noise_rng = np.random.default_rng([args.seed, 1])
    path = generate_route(net, args.duration, SpeedProfile(args.speed_mean, args.speed_std), route_rng)
    trace = observe(path, args.interval, args.sigma, noise_rng)
    write_truepath_csv(args.out_truth, path)
    write_trace_csv(args.out_trace, trace)
    print(f"wrote {args.out_truth} ({len(path.times)} positions), {args.out_trace} ({len(trace)} fixes)")
    return 0


def cmd_track(args) -> int:
    net = RoadNetwork.load(args.network)
    trace = read_trace_csv(args.trace)
    obs, trans = _models(args)
    res = track(net, trace.t, trace.xy, args.method, args.m, obs, trans,
                np.random.default_rng(args.seed), args.resampling, args.propagation)
    frags = extract_fragments(res.history, trans, net, method=args.path_method)
    write_trajectory_csv(args.out, frags)
    write_diagnostics_csv(args.diagnostics, res.diagnostics, res.history)
    print(f"{args.method}: {res.n_steps} steps, {res.n_failed} failures "
          f"({res.failure_rate:.3f}), {len(frags)} fragment(s) -> {args.out}")
    return 0


def cmd_evaluate(args) -> int:
    net = RoadNetwork.load(args.network)
    trace = read_trace_csv(args.trace)
    interval = int(round(trace.interval))
    cfg = ExperimentConfig(method=args.method, m=args.m, interval=interval, sigma=args.sigma_obs,
                           seed=args.seed, sigma_floor=args.sigma_floor, alpha=args.alpha,
                           truncation_k=args.truncation_k, resampling=args.resampling,
                           propagation=args.propagation, holdout_every=args.holdout_every)
    rec = evaluate_trace(net, trace, cfg, np.random.default_rng(args.seed))
    write_results_csv(args.out, [rec])
    print(f"{rec.config_id}: p25={rec.p25_m:.2f} p50={rec.p50_m:.2f} p75={rec.p75_m:.2f} m, "
          f"failure_rate={rec.failure_rate:.3f}, unscored={rec.unscored}")
    return 0


def cmd_sweep(args) -> int:
    base = ExperimentConfig(duration=args.duration, grid_n=args.grid, spacing=args.spacing,
                            network_path=args.network, sigma_floor=args.sigma_floor,
                            alpha=args.alpha, truncation_k=args.truncation_k)
    axes = {"method": [m.strip() for m in args.methods.split(",") if m.strip()],
            "interval": _ints(args.intervals), "sigma": _floats(args.sigmas), "m": _ints(args.ms)}
    for name, vals in axes.items():
        if not vals:
            raise ConfigError(f"empty sweep axis {name}")
    bad = set(axes["method"]) - {"standard", "improved"}
    if bad:
        raise ConfigError(f"unknown method(s): {', '.join(sorted(bad))}")
    configs = expand_grid(base, **axes)
    records = sweep(configs, range(args.seeds), jobs=args.jobs)
    write_results_csv(args.out, records)
    ok = [r for r in records if not r.err]
    print(f"wrote {args.out}: {len(records)} rows, {len(records) - len(ok)} errors")
    if args.plot_dir:
        _plots(Path(args.plot_dir), records, axes)
    return 0 if ok else 1


_AXIS_FIELD = {"interval": ("interval_s", "sampling interval (s)"),
               "sigma": ("sigma_m", "GPS noise sigma (m)"),
               "m": ("m", "particles")}


def _plots(out_dir: Path, records, axes) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    swept = [a for a in ("interval", "sigma", "m") if len(axes[a]) > 1] or ["interval"]
    for axis in swept:
        field, label = _AXIS_FIELD[axis]
        summary = summarize(records, field)
        for metric, ylabel in (("p50_m", "median error (m)"), ("failure_rate", "failure rate")):
            series = {meth: [(x, v[metric]) for x, v in pts.items()] for meth, pts in summary.items()}
            write_chart(out_dir / f"{metric}_vs_{axis}.svg", series, title=f"{ylabel} vs {label}",
                        xlabel=label, ylabel=ylabel)


COMMANDS = {"gen-network": cmd_gen_network, "simulate": cmd_simulate, "track": cmd_track,
            "evaluate": cmd_evaluate, "sweep": cmd_sweep}


def main(argv: list[str] | None = None) -> int:
    args = parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        _validate(args)
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"roadpf {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (OSError, NetworkError, ValueError) as exc:
        print(f"roadpf {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
