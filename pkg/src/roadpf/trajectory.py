"""Most-likely path extraction from a sequence of particle beliefs."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .filter import Belief
from .network import NetworkPosition, RoadNetwork
from .sensor_models import TransitionModel, transition_mass


@dataclass
class BeliefHistory:
    """Beliefs for t = 0..T, the controls between them, and the steps at which
    the filter lost track and was re-initialised."""

    beliefs: list[Belief]
    controls: list[float]
    failure_steps: set[int] = field(default_factory=set)
    times: list[float] | None = None

    def __post_init__(self):
        if self.beliefs and len(self.controls) != len(self.beliefs) - 1:
            raise ValueError("need exactly one control per interval between beliefs")
        if self.times is None:
            self.times = [float(t) for t in range(len(self.beliefs))]

    def __len__(self) -> int:
        return len(self.beliefs)

    def spans(self) -> list[tuple[int, int]]:
        """Maximal [start, end] index ranges free of failures and failed beliefs."""
        out = []
        start = None
        for t, b in enumerate(self.beliefs):
            if b.failed:
                if start is not None:
                    out.append((start, t - 1))
                start = None
                continue
            if start is None:
                start = t
            elif t in self.failure_steps:
                out.append((start, t - 1))
                start = t
        if start is not None:
            out.append((start, len(self.beliefs) - 1))
        return out

    def sub(self, start: int, end: int) -> "BeliefHistory":
        return BeliefHistory(self.beliefs[start:end + 1], self.controls[start:end],
                             set(), self.times[start:end + 1])


@dataclass
class Trajectory:
    states: list[NetworkPosition]
    score_trace: list[float]
    indices: list[int]
    times: list[float]

    @property
    def points(self) -> np.ndarray:
        return np.array([s.point for s in self.states], dtype=float).reshape(-1, 2)

    def __len__(self) -> int:
        return len(self.states)


def _check(history: BeliefHistory) -> None:
    if not len(history):
        raise ValueError("empty belief history")
    if any(b.failed for b in history.beliefs) or (history.failure_steps - {0}):
        raise ValueError("history contains failures; extract per span with extract_fragments")


def _conditional(trans_model: TransitionModel, network: RoadNetwork | None):
    """p(x_cur | x_prev, u) for arrays of previous points against one or many
    current points. With a network the density is normalised over it."""
    def dens(prev_pts: np.ndarray, cur_pts: np.ndarray, u: float) -> np.ndarray:
        d = np.hypot(cur_pts[None, :, 0] - prev_pts[:, None, 0],
                     cur_pts[None, :, 1] - prev_pts[:, None, 1])
        p = trans_model.density(d, u)
        if network is not None:
            mass = transition_mass(trans_model, network, prev_pts, u)
            p = np.divide(p, mass[:, None], out=np.zeros_like(p), where=mass[:, None] > 0)
        return p
    return dens


def _build(history: BeliefHistory, idx: list[int], scores: list[float]) -> Trajectory:
    states = [b.state(i) for b, i in zip(history.beliefs, idx)]
    return Trajectory(states, scores, idx, list(history.times))


def extract_path(history: BeliefHistory, trans_model: TransitionModel,
                 network: RoadNetwork | None = None) -> Trajectory:
    """Greedy backward chaining.

    Start from the highest-weight particle at the last step, then repeatedly
    take the previous-step particle maximising p(x_t | x_{t-1}, u) * w_{t-1}.
    Ties go to the lowest particle index. When ``network`` is given the
    transition density is normalised over the network.
    """
    _check(history)
    dens = _conditional(trans_model, network)
    last = history.beliefs[-1]
    i = int(np.argmax(last.weights))
    idx = [i]
    scores = [float(last.weights[i])]
    for t in range(len(history) - 1, 0, -1):
        prev = history.beliefs[t - 1]
        cur_pt = history.beliefs[t].points[i][None, :]
        live = prev.weights > 0
        score = np.zeros(prev.m)
        if live.any():
            score[live] = dens(prev.points[live], cur_pt, history.controls[t - 1])[:, 0] * prev.weights[live]
        i = int(np.argmax(score))
        idx.append(i)
        scores.append(float(score[i]))
    idx.reverse()
    scores.reverse()
    return _build(history, idx, scores)


def extract_path_viterbi(history: BeliefHistory, trans_model: TransitionModel,
                         network: RoadNetwork | None = None) -> Trajectory:
    """Particle sequence maximising prod_t p(x_t | x_{t-1}, u) * p(y_t | x_t).

    Forward max-product in log space, then backtracking; ties go to the lowest
    index. ``score_trace`` holds the running log-score of the chosen path.
    """
    _check(history)
    dens = _conditional(trans_model, network)
    with np.errstate(divide="ignore"):
        delta = np.log(history.beliefs[0].obs_weights)
        back = []
        for t in range(1, len(history)):
            prev, cur = history.beliefs[t - 1], history.beliefs[t]
            logp = np.log(dens(prev.points, cur.points, history.controls[t - 1]))
            cand = delta[:, None] + logp
            arg = np.argmax(cand, axis=0)
            back.append(arg)
            delta = cand[arg, np.arange(cur.m)] + np.log(cur.obs_weights)
    i = int(np.argmax(delta))
    idx = [i]
    for arg in reversed(back):
        i = int(arg[i])
        idx.append(i)
    idx.reverse()
    scores = np.cumsum(_path_terms(history, idx, dens)).tolist()
    return _build(history, idx, scores)


def _path_terms(history: BeliefHistory, idx: Sequence[int], dens) -> list[float]:
    with np.errstate(divide="ignore"):
        terms = [float(np.log(history.beliefs[0].obs_weights[idx[0]]))]
        for t in range(1, len(history)):
            prev, cur = history.beliefs[t - 1], history.beliefs[t]
            p = dens(prev.points[[idx[t - 1]]], cur.points[[idx[t]]], history.controls[t - 1])[0, 0]
            terms.append(float(np.log(p) + np.log(cur.obs_weights[idx[t]])))
    return terms


def path_log_score(history: BeliefHistory, idx: Sequence[int], trans_model: TransitionModel,
                   network: RoadNetwork | None = None) -> float:
    """Max-product objective log p(y_0|x_0) + sum_t log[p(x_t|x_{t-1},u) p(y_t|x_t)]."""
    return float(np.sum(_path_terms(history, idx, _conditional(trans_model, network))))


def extract_fragments(history: BeliefHistory, trans_model: TransitionModel,
                      network: RoadNetwork | None = None, method: str = "greedy") -> list[Trajectory]:
    """One trajectory per failure-free span of the history."""
    fn = {"greedy": extract_path, "viterbi": extract_path_viterbi}[method]
    return [fn(history.sub(a, b), trans_model, network) for a, b in history.spans()]


TRAJECTORY_FIELDS = ["t", "segment_id", "offset_m", "e", "n"]


def write_trajectory_csv(path: str | Path, fragments: Sequence[Trajectory]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRAJECTORY_FIELDS)
        for frag in fragments:
            for t, s in zip(frag.times, frag.states):
                w.writerow([f"{t:g}", s.segment_id, f"{s.offset:.6f}",
                            f"{s.point[0]:.6f}", f"{s.point[1]:.6f}"])


def read_trajectory_csv(path: str | Path) -> list[dict]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if rows and list(rows[0].keys()) != TRAJECTORY_FIELDS:
        raise ValueError(f"unexpected trajectory header {list(rows[0].keys())}")
    return [{"t": float(r["t"]), "segment_id": int(r["segment_id"]), "offset_m": float(r["offset_m"]),
             "e": float(r["e"]), "n": float(r["n"])} for r in rows]
