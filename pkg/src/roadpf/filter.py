"""Particle beliefs and the two recursive update rules.

``standard_update`` is the bootstrap filter: resample, propagate through the
transition model, weight by the observation likelihood. ``improved_update``
swaps the roles: particles are drawn around the newest fix and weighted by
how well the previous belief predicts them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import kernels
from .network import NetworkPosition, RoadNetwork
from .sensor_models import (NoCandidateSegments, ObservationModel, ObservationProposal,
                            TransitionModel, sample_transition, transition_mass,
                            walk_transition)

FAIL_EPS = 1e-300


@dataclass(frozen=True)
class Particle:
    state: NetworkPosition
    weight: float


@dataclass(frozen=True)
class StepInput:
    y: tuple[float, float]
    u: float
    dt: float = 1.0

    def __post_init__(self):
        if self.u < 0:
            raise ValueError("control must be non-negative")
        if not self.dt > 0:
            raise ValueError("dt must be positive")


@dataclass
class Belief:
    """Weighted particle set over network states.

    States are kept as parallel arrays (segment row, offset). ``raw_weights``
    are the unnormalised importance factors of the step that produced the
    belief and ``obs_weights`` the observation likelihood p(y_t | x) of each
    particle; both feed the trajectory extractors.
    """

    network: RoadNetwork
    rows: np.ndarray
    offsets: np.ndarray
    weights: np.ndarray
    t: int = 0
    failed: bool = False
    reason: str = ""
    raw_weights: np.ndarray | None = None
    obs_weights: np.ndarray | None = None
    _points: np.ndarray | None = field(default=None, repr=False)

    @property
    def m(self) -> int:
        return len(self.rows)

    @property
    def points(self) -> np.ndarray:
        if self._points is None:
            self._points = self.network.points(self.rows, self.offsets)
        return self._points

    def state(self, i: int) -> NetworkPosition:
        return self.network.position_from_row(int(self.rows[i]), float(self.offsets[i]))

    @property
    def particles(self) -> list[Particle]:
        return [Particle(self.state(i), float(w)) for i, w in enumerate(self.weights)]


def detect_failure(raw_weights: Sequence[float]) -> bool:
    """True when the importance factors sum to (numerically) zero."""
    total = float(np.sum(np.asarray(raw_weights, dtype=float)))
    return not total > FAIL_EPS


def effective_sample_size(belief: Belief) -> float:
    w = np.asarray(belief.weights, dtype=float)
    return float(1.0 / np.dot(w, w))


def resample_multinomial(weights: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    w = np.asarray(weights, dtype=float)
    cdf = np.cumsum(w)
    cdf /= cdf[-1]
    idx = np.searchsorted(cdf, rng.random(len(w)), side="right")
    return np.minimum(idx, len(w) - 1)


def resample_systematic(weights: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    w = np.asarray(weights, dtype=float)
    n = len(w)
    cdf = np.cumsum(w)
    cdf /= cdf[-1]
    pos = (rng.random() + np.arange(n)) / n
    return np.minimum(np.searchsorted(cdf, pos, side="right"), n - 1)


_RESAMPLERS = {"multinomial": resample_multinomial, "systematic": resample_systematic}


def _finish(network, rows, offsets, raw, obs, t, reason="") -> Belief:
    raw = np.where(np.isfinite(raw), raw, 0.0)
    if detect_failure(raw):
        return Belief(network, rows, offsets, np.zeros(len(rows)), t=t, failed=True,
                      reason=reason or "weights sum to zero", raw_weights=raw, obs_weights=obs)
    w = raw / raw.sum()
    w /= w.sum()
    return Belief(network, rows, offsets, w, t=t, raw_weights=raw, obs_weights=obs)


def init_from_observation(model: ObservationModel, network: RoadNetwork, y0: Sequence[float],
                          m: int, rng: np.random.Generator, t: int = 0) -> Belief:
    """m draws from the observation proposal around ``y0`` with weights 1/m."""
    if m < 1:
        raise ValueError("m must be >= 1")
    prop = ObservationProposal(model, network, y0)
    rows, offs = prop.sample(rng, m)
    obs = model.density(network.points(rows, offs), y0)
    return Belief(network, rows, offs, np.full(m, 1.0 / m), t=t,
                  raw_weights=np.ones(m), obs_weights=obs)


recover = init_from_observation


def standard_update(belief: Belief, inp: StepInput, obs_model: ObservationModel,
                    trans_model: TransitionModel, network: RoadNetwork,
                    rng: np.random.Generator, resampling: str = "multinomial",
                    propagation: str = "kernel") -> Belief:
    """Resample ancestors, propagate through the transition model, weight by p(y|x).

    ``propagation="kernel"`` samples the transition density exactly (normalised
    over the network); ``"walk"`` uses a random walk of the drawn length.
    """
    if belief.failed:
        raise ValueError("cannot update a failed belief; recover first")
    anc = _RESAMPLERS[resampling](belief.weights, rng)
    rows, offs = belief.rows[anc], belief.offsets[anc]
    if propagation == "kernel":
        rows, offs, ok = sample_transition(trans_model, network, rows, offs, inp.u, rng)
    elif propagation == "walk":
        rows, offs = walk_transition(trans_model, network, rows, offs, inp.u, rng)
        ok = np.ones(len(rows), dtype=bool)
    else:
        raise ValueError(f"unknown propagation {propagation!r}")
    obs = obs_model.density(network.points(rows, offs), inp.y)
    raw = np.where(ok, obs, 0.0)
    return _finish(network, rows, offs, raw, obs, belief.t + 1)


def prior_predictive(belief: Belief, points: np.ndarray, u: float,
                     trans_model: TransitionModel, network: RoadNetwork) -> np.ndarray:
    """sum_i p(x_j | x_i, u) w_i for each point x_j, with p the network-normalised
    transition density."""
    w = belief.weights
    live = w > 0
    mass = np.zeros(belief.m)
    mass[live] = transition_mass(trans_model, network, belief.points[live], u)
    coef = np.divide(w, mass, out=np.zeros_like(w), where=mass > 0)
    return kernels.pair_transition_sum(belief.points, coef, points, u, trans_model.std(u))


def improved_update(belief: Belief, inp: StepInput, obs_model: ObservationModel,
                    trans_model: TransitionModel, network: RoadNetwork,
                    rng: np.random.Generator) -> Belief:
    """Draw around y_t, weight by the predictive density of the previous belief.

    The raw weight also carries p(y|x)/q(x) for the truncated proposal q; inside
    the truncation disc that ratio is the constant proposal mass.
    """
    if belief.failed:
        raise ValueError("cannot update a failed belief; recover first")
    m = belief.m
    try:
        prop = ObservationProposal(obs_model, network, inp.y)
    except NoCandidateSegments as exc:
        return Belief(network, belief.rows.copy(), belief.offsets.copy(), np.zeros(m),
                      t=belief.t + 1, failed=True, reason=str(exc))
    rows, offs = prop.sample(rng, m)
    pts = network.points(rows, offs)
    prior = prior_predictive(belief, pts, inp.u, trans_model, network)
    obs = obs_model.density(pts, inp.y)
    q = prop.density(rows, offs)
    raw = prior * np.divide(obs, q, out=np.zeros_like(obs), where=q > 0)
    out = _finish(network, rows, offs, raw, obs, belief.t + 1)
    out._points = pts
    return out


UPDATES = {"standard": standard_update, "improved": improved_update}

