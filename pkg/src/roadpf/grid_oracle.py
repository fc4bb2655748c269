"""Exact Bayes filter on a discretised network, for checking particle filters.

The network is cut into cells of at most ``delta`` meters; the prediction
integral becomes a dense matrix-vector product over cells. Only meant for
small networks: the transition matrix has (cells)^2 entries.
"""

from __future__ import annotations

import math
from typing import NamedTuple, Sequence

import numpy as np
from scipy.spatial.distance import cdist
from scipy.stats import norm

from .filter import Belief, StepInput
from .network import NetworkPosition, RoadNetwork
from .sensor_models import ObservationModel, TransitionModel


class DiscreteStateSpace:
    def __init__(self, network: RoadNetwork, delta: float = 0.5):
        if not delta > 0:
            raise ValueError("delta must be positive")
        self.network = network
        self.delta = delta
        counts = np.ceil(network.seg_len / delta - 1e-9).astype(int)
        counts = np.maximum(counts, 1)
        self.counts = counts
        self.first = np.concatenate([[0], np.cumsum(counts)[:-1]])
        self.rows = np.repeat(np.arange(network.n_segments), counts)
        self.cell_len = np.repeat(network.seg_len / counts, counts)
        local = np.arange(len(self.rows)) - np.repeat(self.first, counts)
        self.offsets = (local + 0.5) * self.cell_len
        self.points = network.points(self.rows, self.offsets)
        self._dist = None

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def cells(self) -> list[NetworkPosition]:
        return [self.network.position_from_row(int(r), float(o)) for r, o in zip(self.rows, self.offsets)]

    @property
    def distances(self) -> np.ndarray:
        if self._dist is None:
            self._dist = cdist(self.points, self.points)
        return self._dist

    def cell_index(self, rows: np.ndarray, offsets: np.ndarray) -> np.ndarray:
        rows = np.asarray(rows, dtype=np.intp)
        k = np.floor(np.asarray(offsets) / (self.network.seg_len[rows] / self.counts[rows])).astype(int)
        return self.first[rows] + np.clip(k, 0, self.counts[rows] - 1)

    def bin(self, rows: np.ndarray, offsets: np.ndarray, weights: np.ndarray) -> np.ndarray:
        return np.bincount(self.cell_index(rows, offsets), weights=weights, minlength=len(self))


class OracleStep(NamedTuple):
    posterior: np.ndarray
    degenerate: bool


def _likelihood(obs_model: ObservationModel, space: DiscreteStateSpace, y: Sequence[float]) -> np.ndarray:
    d = np.asarray(space.points) - np.asarray(y, dtype=float)
    return norm.pdf(d[:, 0], scale=obs_model.sigma) * norm.pdf(d[:, 1], scale=obs_model.sigma)


def _normalise(v: np.ndarray) -> OracleStep:
    total = v.sum()
    if not total > 0 or not np.isfinite(total):
        return OracleStep(np.zeros_like(v), True)
    return OracleStep(v / total, False)


def exact_initial(obs_model: ObservationModel, y0: Sequence[float], space: DiscreteStateSpace) -> OracleStep:
    """Cell masses of the truncated observation proposal around ``y0``."""
    d = np.hypot(*(space.points - np.asarray(y0, dtype=float)).T)
    lik = _likelihood(obs_model, space, y0) * space.cell_len
    return _normalise(np.where(d <= obs_model.radius, lik, 0.0))


def transition_matrix(trans_model: TransitionModel, u: float, space: DiscreteStateSpace) -> np.ndarray:
    """Row-stochastic cell-to-cell transition matrix for control ``u``."""
    T = norm.pdf(space.distances, loc=u, scale=trans_model.std(u)) * space.cell_len[None, :]
    rs = T.sum(axis=1, keepdims=True)
    return np.divide(T, rs, out=np.zeros_like(T), where=rs > 0)


def exact_filter_step(prior: np.ndarray, inp: StepInput, obs_model: ObservationModel,
                      trans_model: TransitionModel, space: DiscreteStateSpace) -> OracleStep:
    prior = np.asarray(prior, dtype=float)
    if abs(prior.sum() - 1.0) > 1e-9:
        raise ValueError("prior must sum to 1")
    predicted = prior @ transition_matrix(trans_model, inp.u, space)
    return _normalise(_likelihood(obs_model, space, inp.y) * predicted)


def exact_filter(ys: np.ndarray, controls: Sequence[float], obs_model: ObservationModel,
                 trans_model: TransitionModel, space: DiscreteStateSpace) -> list[OracleStep]:
    out = [exact_initial(obs_model, ys[0], space)]
    for y, u in zip(ys[1:], controls):
        if out[-1].degenerate:
            out.append(out[-1])
            continue
        out.append(exact_filter_step(out[-1].posterior, StepInput(tuple(y), float(u)),
                                     obs_model, trans_model, space))
    return out


def tv_distance(belief: Belief | np.ndarray, exact: np.ndarray, space: DiscreteStateSpace) -> float:
    """Total-variation distance between a particle belief binned to cells and
    an exact cell distribution."""
    if isinstance(belief, Belief):
        p = space.bin(belief.rows, belief.offsets, belief.weights)
    else:
        p = np.asarray(belief, dtype=float)
    return 0.5 * float(np.abs(p - np.asarray(exact)).sum())


def coarsen(masses: np.ndarray, fine: DiscreteStateSpace, coarse: DiscreteStateSpace) -> np.ndarray:
    """Re-bin fine-cell masses onto a coarser space of the same network."""
    return coarse.bin(fine.rows, fine.offsets, masses)


def cell_count(network: RoadNetwork, delta: float) -> int:
    return int(sum(math.ceil(L / delta - 1e-9) for L in network.seg_len))
