"""Hold-out cross-validation, error/failure metrics and parameter sweeps."""

from __future__ import annotations

import csv
import itertools
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .network import RoadNetwork, make_grid_network
from .sensor_models import ObservationModel, TransitionModel
from .simulator import GpsTrace, SpeedProfile, controls_from_trace, generate_route, observe
from .tracker import track
from .trajectory import Trajectory, extract_fragments

log = logging.getLogger(__name__)

# filters assume at least this much GPS noise, so noiseless traces stay trackable
MIN_MODEL_SIGMA = 1.0


@dataclass
class HoldoutSplit:
    kept: GpsTrace
    removed_t: np.ndarray
    removed_xy: np.ndarray
    removed_indices: np.ndarray

    @property
    def controls(self) -> np.ndarray:
        """Controls between consecutive kept fixes (gaps bridged)."""
        return controls_from_trace(self.kept)


def holdout_split(trace: GpsTrace, every: int = 10) -> HoldoutSplit:
    """Remove records at 1-based positions every, 2*every, ..."""
    if not len(trace):
        raise ValueError("empty trace")
    pos = np.arange(1, len(trace) + 1)
    removed = pos % every == 0
    kept = GpsTrace(trace.t[~removed], trace.xy[~removed], trace.interval, trace.sigma)
    idx = np.flatnonzero(removed)
    return HoldoutSplit(kept, trace.t[idx], trace.xy[idx], idx)


def prediction_error(removed_t: Sequence[float], removed_xy: np.ndarray,
                     trajectory: Trajectory | Sequence[Trajectory]) -> tuple[np.ndarray, int]:
    """Distance from each held-out fix to the inferred path.

    The path is the chord polyline through consecutive trajectory states.
    With several fragments, a point is scored against the fragment whose time
    span covers it (points before the first or after the last fragment go to
    that fragment); points falling in a gap between fragments are returned in
    the unscored count.
    """
    frags = [trajectory] if isinstance(trajectory, Trajectory) else list(trajectory)
    frags = [f for f in frags if len(f)]
    removed_xy = np.asarray(removed_xy, dtype=float).reshape(-1, 2)
    removed_t = np.asarray(removed_t, dtype=float)
    if not frags:
        return np.empty(0), len(removed_t)
    owner = np.full(len(removed_t), -1)
    for k, f in enumerate(frags):
        lo = -np.inf if k == 0 else f.times[0]
        hi = np.inf if k == len(frags) - 1 else f.times[-1]
        owner[(removed_t >= lo) & (removed_t <= hi) & (owner < 0)] = k
    errors = np.empty(len(removed_t))
    for k, f in enumerate(frags):
        sel = owner == k
        if sel.any():
            errors[sel] = kernels.polyline_distance(removed_xy[sel], f.points)
    return errors[owner >= 0], int(np.sum(owner < 0))


@dataclass(frozen=True)
class ExperimentConfig:
    method: str = "improved"
    m: int = 10
    interval: int = 10
    sigma: float = 10.0
    seed: int = 0
    duration: int = 3600
    grid_n: int = 10
    spacing: float = 100.0
    network_path: str | None = None
    sigma_floor: float = 2.0
    alpha: float = 0.1
    truncation_k: float = 4.0
    speed_mean: float = 10.0
    speed_std: float = 3.0
    resampling: str = "multinomial"
    propagation: str = "kernel"
    holdout_every: int = 10

    @property
    def config_id(self) -> str:
        return f"{self.method}-m{self.m}-i{self.interval}-s{self.sigma:g}"

    def network(self) -> RoadNetwork:
        if self.network_path:
            return RoadNetwork.load(self.network_path)
        return make_grid_network(self.grid_n, self.spacing)


RESULT_FIELDS = ["config_id", "method", "m", "interval_s", "sigma_m", "seed",
                 "p25_m", "p50_m", "p75_m", "failure_rate", "unscored", "err"]


@dataclass
class MetricsRecord:
    config_id: str
    method: str
    m: int
    interval_s: float
    sigma_m: float
    seed: int
    p25_m: float = float("nan")
    p50_m: float = float("nan")
    p75_m: float = float("nan")
    failure_rate: float = float("nan")
    unscored: int = 0
    err: str = ""

    def row(self) -> list:
        return [getattr(self, f) for f in RESULT_FIELDS]


def _streams(cfg: ExperimentConfig) -> tuple[np.random.Generator, ...]:
    # route and noise depend only on the seed so methods are compared on the same data
    route = np.random.default_rng([cfg.seed, 0])
    noise = np.random.default_rng([cfg.seed, 1, cfg.interval, int(round(cfg.sigma * 1000))])
    filt = np.random.default_rng([cfg.seed, 2, 0 if cfg.method == "standard" else 1, cfg.m])
    return route, noise, filt


def simulate_trace(cfg: ExperimentConfig, network: RoadNetwork | None = None):
    network = network or cfg.network()
    route_rng, noise_rng, _ = _streams(cfg)
    path = generate_route(network, cfg.duration, SpeedProfile(cfg.speed_mean, cfg.speed_std), route_rng)
    return network, path, observe(path, cfg.interval, cfg.sigma, noise_rng)


def evaluate_trace(network: RoadNetwork, trace: GpsTrace, cfg: ExperimentConfig,
                   rng: np.random.Generator) -> MetricsRecord:
    """Hold out every n-th fix, track on the rest, score the held-out fixes."""
    split = holdout_split(trace, cfg.holdout_every)
    obs = ObservationModel(max(cfg.sigma, MIN_MODEL_SIGMA), cfg.truncation_k)
    trans = TransitionModel(cfg.sigma_floor, cfg.alpha)
    res = track(network, split.kept.t, split.kept.xy, cfg.method, cfg.m, obs, trans, rng,
                resampling=cfg.resampling, propagation=cfg.propagation)
    frags = extract_fragments(res.history, trans, network)
    errors, unscored = prediction_error(split.removed_t, split.removed_xy, frags)
    rec = MetricsRecord(cfg.config_id, cfg.method, cfg.m, float(cfg.interval), float(cfg.sigma),
                        cfg.seed, failure_rate=res.failure_rate, unscored=unscored)
    if len(errors):
        rec.p25_m, rec.p50_m, rec.p75_m = (float(x) for x in np.percentile(errors, [25, 50, 75]))
    return rec


def run_experiment(cfg: ExperimentConfig) -> MetricsRecord:
    """Simulate, split, track, extract and score one configuration."""
    network, _, trace = simulate_trace(cfg)
    _, _, filt_rng = _streams(cfg)
    return evaluate_trace(network, trace, cfg, filt_rng)


def _safe_run(cfg: ExperimentConfig) -> MetricsRecord:
    try:
        return run_experiment(cfg)
    except Exception as exc:  # recorded per row, a sweep never aborts
        log.warning("run %s seed %d failed: %s", cfg.config_id, cfg.seed, exc)
        return MetricsRecord(cfg.config_id, cfg.method, cfg.m, float(cfg.interval), float(cfg.sigma),
                             cfg.seed, err=f"{type(exc).__name__}: {exc}")


def expand_grid(base: ExperimentConfig, **axes: Iterable) -> list[ExperimentConfig]:
    """Cartesian product of the given axes (ExperimentConfig field names) over ``base``."""
    names = list(axes)
    return [replace(base, **dict(zip(names, combo)))
            for combo in itertools.product(*(list(axes[n]) for n in names))]


def sweep(configs: Sequence[ExperimentConfig], seeds: Iterable[int], jobs: int = 1) -> list[MetricsRecord]:
    """Run every config under every seed; rows come back in (config, seed) order."""
    if not configs:
        raise ValueError("empty config grid")
    runs = [replace(c, seed=int(s)) for c in configs for s in seeds]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_safe_run, runs))
    return [_safe_run(r) for r in runs]


def write_results_csv(path: str | Path, records: Sequence[MetricsRecord]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(RESULT_FIELDS)
        for r in records:
            w.writerow(r.row())


def read_results_csv(path: str | Path) -> list[MetricsRecord]:
    types = {f.name: f.type for f in fields(MetricsRecord)}
    casts = {"int": int, "float": float, "str": str}
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out.append(MetricsRecord(**{k: casts[types[k]](v) for k, v in row.items()}))
    return out


def summarize(records: Sequence[MetricsRecord], axis: str) -> dict[str, dict[float, dict[str, float]]]:
    """Seed-averaged p25/p50/p75 and failure rate per method along ``axis``
    (``interval_s``, ``sigma_m`` or ``m``)."""
    groups: dict[tuple[str, float], list[MetricsRecord]] = {}
    for r in records:
        if r.err:
            continue
        groups.setdefault((r.method, float(getattr(r, axis))), []).append(r)
    out: dict[str, dict[float, dict[str, float]]] = {}
    for (method, x), rs in sorted(groups.items()):
        out.setdefault(method, {})[x] = {
            "p25_m": float(np.nanmean([r.p25_m for r in rs])) if any(np.isfinite(r.p25_m) for r in rs) else float("nan"),
            "p50_m": float(np.nanmean([r.p50_m for r in rs])) if any(np.isfinite(r.p50_m) for r in rs) else float("nan"),
            "p75_m": float(np.nanmean([r.p75_m for r in rs])) if any(np.isfinite(r.p75_m) for r in rs) else float("nan"),
            "failure_rate": float(np.mean([r.failure_rate for r in rs])),
            "n": len(rs),
        }
    return out
