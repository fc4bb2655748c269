"""Synthetic ground-truth routes and noisy GPS traces on a road network."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .network import RoadNetwork


@dataclass(frozen=True)
class SpeedProfile:
    """Per-second speed ~ clip(N(mean, std), lo, hi), in m/s."""

    mean: float = 10.0
    std: float = 3.0
    lo: float = 0.0
    hi: float = 20.0

    def draw(self, rng: np.random.Generator) -> float:
        if self.std == 0:
            return float(np.clip(self.mean, self.lo, self.hi))
        return float(np.clip(rng.normal(self.mean, self.std), self.lo, self.hi))


@dataclass
class TruePath:
    """Positions at every whole second t = 0..duration.

    ``route`` lists the (segment row, heading) legs driven in order and
    ``legs[k]`` is the leg the vehicle is on at second k; ``odometer[k]`` is
    the network distance driven by then.
    """

    network: RoadNetwork
    times: np.ndarray
    rows: np.ndarray
    offsets: np.ndarray
    speeds: np.ndarray
    odometer: np.ndarray
    route: list[tuple[int, int]]
    legs: np.ndarray

    @property
    def points(self) -> np.ndarray:
        return self.network.points(self.rows, self.offsets)

    @property
    def duration(self) -> int:
        return int(self.times[-1])


@dataclass
class GpsTrace:
    t: np.ndarray
    xy: np.ndarray
    interval: float
    sigma: float

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.xy = np.asarray(self.xy, dtype=float).reshape(-1, 2)
        if len(self.t) != len(self.xy):
            raise ValueError("timestamps and positions differ in length")
        if np.any(np.diff(self.t) <= 0):
            raise ValueError("trace timestamps must be strictly increasing")

    def __len__(self) -> int:
        return len(self.t)


def _next_leg(network: RoadNetwork, row: int, node: int, rng: np.random.Generator) -> tuple[int, int]:
    inc = network.incident[node, :network.degree[node]]
    choices = inc[inc != row] if len(inc) > 1 else inc
    nxt = int(choices[rng.integers(len(choices))])
    return (nxt, 1) if network.seg_u[nxt] == node else (nxt, -1)


def generate_route(network: RoadNetwork, duration: int, speed: SpeedProfile | None = None,
                   rng: np.random.Generator | None = None,
                   start: tuple[int, float, int] | None = None) -> TruePath:
    """Random drive over the network, one position per second.

    At each node the next segment is chosen uniformly among the incident ones
    other than the one just driven; a U-turn happens only at dead ends.
    ``start`` is an optional (row, offset, heading).
    """
    if duration < 1:
        raise ValueError("duration must be at least 1 s")
    speed = speed or SpeedProfile()
    rng = rng or np.random.default_rng()
    if start is None:
        p = network.seg_len / network.seg_len.sum()
        row = int(rng.choice(network.n_segments, p=p))
        off = float(rng.uniform(0.0, network.seg_len[row]))
        heading = 1 if rng.random() < 0.5 else -1
    else:
        row, off, heading = int(start[0]), float(start[1]), int(start[2])

    n = int(duration)
    rows = np.empty(n + 1, dtype=np.intp)
    offs = np.empty(n + 1)
    legs = np.empty(n + 1, dtype=np.intp)
    speeds = np.empty(n)
    route = [(row, heading)]
    rows[0], offs[0], legs[0] = row, off, 0
    for k in range(n):
        v = speed.draw(rng)
        speeds[k] = v
        remaining = v
        while True:
            room = network.seg_len[row] - off if heading > 0 else off
            if remaining <= room:
                off += heading * remaining
                break
            remaining -= room
            node = network.seg_v[row] if heading > 0 else network.seg_u[row]
            row, heading = _next_leg(network, row, int(node), rng)
            off = 0.0 if heading > 0 else float(network.seg_len[row])
            route.append((row, heading))
        rows[k + 1] = row
        offs[k + 1] = min(max(off, 0.0), network.seg_len[row])
        legs[k + 1] = len(route) - 1
    odometer = np.concatenate([[0.0], np.cumsum(speeds)])
    return TruePath(network, np.arange(n + 1, dtype=float), rows, offs, speeds, odometer, route, legs)


def observe(path: TruePath, interval: int, sigma: float, rng: np.random.Generator) -> GpsTrace:
    """True position every ``interval`` seconds plus isotropic N(0, sigma^2 I) noise."""
    if interval < 1 or int(interval) != interval:
        raise ValueError("interval must be a whole number of seconds >= 1")
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    idx = np.arange(0, len(path.times), int(interval))
    xy = path.points[idx]
    if sigma > 0:
        xy = xy + rng.normal(0.0, sigma, size=xy.shape)
    return GpsTrace(path.times[idx], xy, float(interval), float(sigma))


def controls_from_trace(trace: GpsTrace) -> np.ndarray:
    """Cartesian distance between consecutive fixes, one control per interval."""
    if len(trace) < 2:
        raise ValueError("need at least two records to form controls")
    d = np.diff(trace.xy, axis=0)
    return np.hypot(d[:, 0], d[:, 1])


# -- CSV ---------------------------------------------------------------------

def write_trace_csv(path: str | Path, trace: GpsTrace) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "e", "n"])
        for t, (e, n) in zip(trace.t, trace.xy):
            w.writerow([f"{t:g}", f"{e:.9f}", f"{n:.9f}"])


def read_trace_csv(path: str | Path, sigma: float = float("nan")) -> GpsTrace:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["t", "e", "n"]:
            raise ValueError(f"{path}: expected header t,e,n, got {header}")
        rows = [(float(a), float(b), float(c)) for a, b, c in reader]
    if not rows:
        raise ValueError(f"{path}: empty trace")
    arr = np.array(rows)
    steps = np.diff(arr[:, 0])
    interval = float(np.median(steps)) if len(steps) else 1.0
    return GpsTrace(arr[:, 0], arr[:, 1:], interval, sigma)


def write_truepath_csv(path: str | Path, true_path: TruePath) -> None:
    net = true_path.network
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "segment_id", "offset_m", "e", "n"])
        for t, r, o, (e, n) in zip(true_path.times, true_path.rows, true_path.offsets, true_path.points):
            w.writerow([f"{t:g}", int(net.seg_ids[r]), f"{o:.9f}", f"{e:.9f}", f"{n:.9f}"])


def read_truepath_csv(path: str | Path) -> np.ndarray:
    """Rows of (t, segment_id, offset_m, e, n) as a float array."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["t", "segment_id", "offset_m", "e", "n"]:
            raise ValueError(f"{path}: unexpected header {header}")
        return np.array([[float(x) for x in row] for row in reader]).reshape(-1, 5)
