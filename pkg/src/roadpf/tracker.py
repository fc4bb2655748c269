"""Run a filter over a whole GPS trace, recovering after loss of track."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .filter import (Belief, StepInput, effective_sample_size, improved_update,
                     init_from_observation, recover, standard_update)
from .network import RoadNetwork
from .sensor_models import NoCandidateSegments, ObservationModel, TransitionModel
from .trajectory import BeliefHistory

METHODS = ("standard", "improved")


@dataclass
class StepDiagnostics:
    t: float
    ess: float
    max_weight: float
    raw_weight_sum: float
    failed: bool


@dataclass
class TrackResult:
    history: BeliefHistory
    diagnostics: list[StepDiagnostics]
    n_failed: int

    @property
    def n_steps(self) -> int:
        return max(len(self.history) - 1, 0)

    @property
    def failure_rate(self) -> float:
        return self.n_failed / self.n_steps if self.n_steps else 0.0


def _lost(network: RoadNetwork, m: int, t: int, reason: str) -> Belief:
    return Belief(network, np.zeros(m, dtype=np.intp), np.zeros(m), np.zeros(m),
                  t=t, failed=True, reason=reason)


def _start(obs_model, network, y, m, rng, t) -> Belief:
    try:
        return init_from_observation(obs_model, network, y, m, rng, t=t)
    except NoCandidateSegments as exc:
        return _lost(network, m, t, str(exc))


def track(network: RoadNetwork, times: np.ndarray, xy: np.ndarray, method: str, m: int,
          obs_model: ObservationModel, trans_model: TransitionModel,
          rng: np.random.Generator, resampling: str = "multinomial",
          propagation: str = "kernel") -> TrackResult:
    """Filter a sequence of fixes.

    Controls are the Cartesian distances between consecutive fixes. A step
    whose update fails (or that has no live belief to update) counts as a
    failure; the filter then restarts from the current fix.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}")
    xy = np.asarray(xy, dtype=float).reshape(-1, 2)
    if not len(xy):
        raise ValueError("empty trace")
    d = np.diff(xy, axis=0)
    controls = np.hypot(d[:, 0], d[:, 1]).tolist()
    beliefs: list[Belief] = []
    failures: set[int] = set()
    diags: list[StepDiagnostics] = []
    for k, y in enumerate(xy):
        if k == 0:
            b = _start(obs_model, network, y, m, rng, 0)
            step_failed = False
        elif beliefs[-1].failed:
            b = _start(obs_model, network, y, m, rng, k)
            step_failed = True
        else:
            inp = StepInput((float(y[0]), float(y[1])), controls[k - 1])
            if method == "standard":
                b = standard_update(beliefs[-1], inp, obs_model, trans_model, network, rng,
                                    resampling=resampling, propagation=propagation)
            else:
                b = improved_update(beliefs[-1], inp, obs_model, trans_model, network, rng)
            step_failed = b.failed
            if b.failed:
                try:
                    b = recover(obs_model, network, y, m, rng, t=k)
                except NoCandidateSegments as exc:
                    b = _lost(network, m, k, str(exc))
        if step_failed:
            failures.add(k)
        raw_sum = float(np.sum(b.raw_weights)) if b.raw_weights is not None else 0.0
        diags.append(StepDiagnostics(
            float(times[k]),
            effective_sample_size(b) if not b.failed else float("nan"),
            float(b.weights.max()) if not b.failed else 0.0,
            raw_sum, step_failed))
        beliefs.append(b)
    history = BeliefHistory(beliefs, controls, failures, [float(t) for t in times])
    return TrackResult(history, diags, len(failures))


def write_diagnostics_csv(path: str | Path, diags: list[StepDiagnostics], history: BeliefHistory) -> None:
    frag_of = {}
    for f, (a, b) in enumerate(history.spans()):
        for t in range(a, b + 1):
            frag_of[t] = f
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "ess", "weight", "raw_weight_sum", "failed", "fragment"])
        for k, d in enumerate(diags):
            w.writerow([f"{d.t:g}", f"{d.ess:.6f}", f"{d.max_weight:.12g}", f"{d.raw_weight_sum:.6e}",
                        int(d.failed), frag_of.get(k, -1)])
