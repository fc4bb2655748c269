"""Observation model, on-network observation proposal, and transition model."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import ndtr, ndtri

from . import kernels
from .network import NetworkPosition, RoadNetwork

_SQRT_2PI = math.sqrt(2.0 * math.pi)


class NoCandidateSegments(RuntimeError):
    """No road segment lies within the proposal truncation radius of an observation."""


@dataclass(frozen=True)
class ObservationModel:
    """Isotropic Gaussian GPS noise with standard deviation ``sigma`` (m).

    ``truncation_k`` bounds the observation proposal to a disc of radius
    ``truncation_k * sigma`` around the fix.
    """

    sigma: float
    truncation_k: float = 4.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("observation sigma must be positive")
        if not self.truncation_k >= 3:
            raise ValueError("truncation_k must be >= 3")

    @property
    def radius(self) -> float:
        return self.truncation_k * self.sigma

    def density(self, points: np.ndarray, y: Sequence[float]) -> np.ndarray:
        """p(y | x) for planar points x, vectorised over the leading axis."""
        d = np.asarray(points, dtype=float) - np.asarray(y, dtype=float)
        sq = np.einsum("...j,...j->...", d, d)
        return np.exp(-sq / (2.0 * self.sigma ** 2)) / (2.0 * math.pi * self.sigma ** 2)


@dataclass(frozen=True)
class TransitionModel:
    """Gaussian noise on the Cartesian displacement between consecutive states.

    Noise std. dev. for a control ``u`` is ``max(sigma_floor, alpha * u)``.
    """

    sigma_floor: float = 2.0
    alpha: float = 0.1

    def __post_init__(self):
        if not self.sigma_floor > 0:
            raise ValueError("sigma_floor must be positive")
        if not self.alpha >= 0:
            raise ValueError("alpha must be non-negative")

    def std(self, u: float) -> float:
        return max(self.sigma_floor, self.alpha * u)

    def density(self, dist: np.ndarray, u: float) -> np.ndarray:
        s = self.std(u)
        z = (np.asarray(dist, dtype=float) - u) / s
        return np.exp(-0.5 * z * z) / (_SQRT_2PI * s)


@dataclass(frozen=True)
class ProposalDraw:
    position: NetworkPosition
    proposal_density: float


def observation_density(model: ObservationModel, network: RoadNetwork,
                        x: NetworkPosition, y: Sequence[float]) -> float:
    a, b = network.ab_coordinates(x, y)
    s2 = model.sigma ** 2
    return math.exp(-(a * a + b * b) / (2.0 * s2)) / (2.0 * math.pi * s2)


def _mass_between(lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Phi(hi) - Phi(lo), evaluated on the side that avoids cancellation."""
    flip = lo > 0
    return np.where(flip, ndtr(-lo) - ndtr(-hi), ndtr(hi) - ndtr(lo))


class ObservationProposal:
    """Truncated Gaussian around a fix, restricted to the network.

    Every candidate segment meets the disc of radius ``k*sigma`` around ``y``
    in a chord. In the segment frame the Gaussian factorises into a
    perpendicular term N(a) and an along-segment term N(b), so a draw is a
    chord chosen with probability proportional to N(a)*[Phi(hi) - Phi(lo)],
    then an offset from N(b) truncated to the chord. The resulting density
    on the network is p(y|x) / total_mass inside the disc and 0 outside.
    """

    def __init__(self, model: ObservationModel, network: RoadNetwork, y: Sequence[float]):
        self.model = model
        self.network = network
        self.y = np.asarray(y, dtype=float)
        sigma = model.sigma
        rows, _ = network.rows_near(self.y, model.radius)
        if rows.size == 0:
            raise NoCandidateSegments(f"no segment within {model.radius:g} m of {tuple(self.y)}")
        rel = self.y - network.seg_start[rows]
        foot = np.einsum("ij,ij->i", rel, network.seg_dir[rows])
        perp = np.abs(np.einsum("ij,ij->i", rel, network.seg_normal[rows]))
        half = np.sqrt(np.maximum(model.radius ** 2 - perp ** 2, 0.0))
        # chord in along-segment coordinates relative to the foot of the perpendicular
        lo = np.maximum(-foot, -half)
        hi = np.minimum(network.seg_len[rows] - foot, half)
        keep = hi > lo
        self.rows = rows[keep]
        self.foot = foot[keep]
        self.perp = perp[keep]
        self.lo = lo[keep] / sigma
        self.hi = hi[keep] / sigma
        self.mass_along = _mass_between(self.lo, self.hi)
        self.weights = np.exp(-0.5 * (self.perp / sigma) ** 2) / (_SQRT_2PI * sigma) * self.mass_along
        self.total_mass = float(self.weights.sum())
        if self.rows.size == 0 or not self.total_mass > 0:
            raise NoCandidateSegments(f"no proposal mass near {tuple(self.y)}")
        self.probs = self.weights / self.total_mass

    def sample(self, rng: np.random.Generator, size: int) -> tuple[np.ndarray, np.ndarray]:
        """Draw ``size`` states; returns (segment rows, offsets)."""
        k = rng.choice(len(self.rows), size=size, p=self.probs)
        lo, hi = self.lo[k], self.hi[k]
        flip = lo > 0
        # sample in the tail nearer zero for accuracy, mirror back afterwards
        a = np.where(flip, -hi, lo)
        b = np.where(flip, -lo, hi)
        pa, pb = ndtr(a), ndtr(b)
        z = ndtri(pa + rng.random(size) * (pb - pa))
        z = np.clip(np.where(flip, -z, z), lo, hi)
        offsets = self.foot[k] + z * self.model.sigma
        rows = self.rows[k]
        offsets = np.clip(offsets, 0.0, self.network.seg_len[rows])
        return rows, offsets

    def density(self, rows: np.ndarray, offsets: np.ndarray) -> np.ndarray:
        """Proposal density (per meter of road) at network states."""
        pts = self.network.points(rows, offsets)
        d = pts - self.y
        inside = np.einsum("ij,ij->i", d, d) <= self.model.radius ** 2 * (1 + 1e-12)
        on_candidate = np.isin(rows, self.rows)
        return np.where(inside & on_candidate, self.model.density(pts, self.y) / self.total_mass, 0.0)


def sample_observation_proposal(model: ObservationModel, network: RoadNetwork,
                                y: Sequence[float], rng: np.random.Generator) -> ProposalDraw:
    prop = ObservationProposal(model, network, y)
    rows, offs = prop.sample(rng, 1)
    pos = network.position_from_row(int(rows[0]), float(offs[0]))
    return ProposalDraw(pos, float(prop.density(rows, offs)[0]))


def proposal_density(model: ObservationModel, network: RoadNetwork,
                     y: Sequence[float], x: NetworkPosition) -> float:
    try:
        prop = ObservationProposal(model, network, y)
    except NoCandidateSegments:
        return 0.0
    row = network.row_of(x.segment_id)
    return float(prop.density(np.array([row]), np.array([x.offset]))[0])


def transition_density(model: TransitionModel, x_prev: NetworkPosition,
                       x_cur: NetworkPosition, u: float) -> float:
    """N(|x_cur - x_prev| ; u, sigma_t(u)) as a 1-D normal density."""
    if u < 0:
        raise ValueError("control must be non-negative")
    dist = math.hypot(x_cur.point[0] - x_prev.point[0], x_cur.point[1] - x_prev.point[1])
    return float(model.density(dist, u))


def transition_mass(model: TransitionModel, network: RoadNetwork,
                    points: np.ndarray, u: float) -> np.ndarray:
    """Integral of the transition density over the whole network, per source point.

    Dividing ``transition_density`` by this gives a proper conditional density
    over network positions.
    """
    return kernels.transition_mass(np.asarray(points, dtype=float).reshape(-1, 2),
                                   network.seg_start, network.seg_dir, network.seg_len,
                                   u, model.std(u))


def sample_transition(model: TransitionModel, network: RoadNetwork, rows: np.ndarray,
                      offsets: np.ndarray, u: float, rng: np.random.Generator,
                      chunk: int = 2048) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Draw x_t ~ transition_density(x_prev, ., u) / transition_mass(x_prev) on the network.

    Exact rejection sampler: a uniform point on the parts of the network
    inside the annulus u +- span*sigma_t around the source, accepted with
    probability exp(-(r-u)^2 / (2 sigma_t^2)). Returns (rows, offsets, ok);
    ``ok`` is False where no network lies in the annulus (state left as is).
    """
    rows = np.asarray(rows, dtype=np.intp)
    offsets = np.asarray(offsets, dtype=float)
    out_rows = rows.copy()
    out_offs = offsets.copy()
    ok = np.ones(len(rows), dtype=bool)
    sigma = model.std(u)
    span = kernels.TRANSITION_SPAN
    for lo in range(0, len(rows), chunk):
        sl = slice(lo, lo + chunk)
        centers = network.points(rows[sl], offsets[sl])
        t0, _, q1, q2, valid = kernels._pykernels._side_ranges(
            centers, network.seg_start, network.seg_dir, network.seg_len, u, sigma, span)
        lengths = np.where(valid, q2 - q1, 0.0).reshape(len(centers), -1)
        total = lengths.sum(axis=1)
        cum = np.cumsum(lengths, axis=1)
        pending = np.flatnonzero(total > 0)
        ok[sl][total <= 0] = False
        n_side = lengths.shape[1]
        while pending.size:
            pick = rng.random(pending.size) * total[pending]
            j = (cum[pending] <= pick[:, None]).sum(axis=1)
            j = np.minimum(j, n_side - 1)
            seg, side = np.divmod(j, 2)
            within = pick - (cum[pending, j] - lengths[pending, j])
            qv = q1.reshape(len(centers), -1)[pending, j] + within
            s = np.where(side == 0, t0[pending, seg] + qv, t0[pending, seg] - qv)
            s = np.clip(s, 0.0, network.seg_len[seg])
            pts = network.points(seg, s)
            r = np.hypot(*(pts - centers[pending]).T)
            accept = rng.random(pending.size) < np.exp(-0.5 * ((r - u) / sigma) ** 2)
            idx = lo + pending[accept]
            out_rows[idx] = seg[accept]
            out_offs[idx] = s[accept]
            pending = pending[~accept]
    return out_rows, out_offs, ok


def walk_transition(model: TransitionModel, network: RoadNetwork, rows: np.ndarray,
                    offsets: np.ndarray, u: float, rng: np.random.Generator
                    ) -> tuple[np.ndarray, np.ndarray]:
    """Random-walk propagation: travel |N(u, sigma_t)| meters along the network
    in a random direction, turning onto a random incident segment at each node
    (no U-turns except at dead ends)."""
    rows = np.array(rows, dtype=np.intp)
    offs = np.array(offsets, dtype=float)
    remaining = np.abs(rng.normal(u, model.std(u), size=len(rows)))
    heading = np.where(rng.random(len(rows)) < 0.5, 1, -1)
    active = np.arange(len(rows))
    while active.size:
        r, h = rows[active], heading[active]
        room = np.where(h > 0, network.seg_len[r] - offs[active], offs[active])
        done = remaining[active] <= room
        fin = active[done]
        offs[fin] += heading[fin] * remaining[fin]
        active = active[~done]
        if not active.size:
            break
        r, h = rows[active], heading[active]
        remaining[active] -= np.where(h > 0, network.seg_len[r] - offs[active], offs[active])
        node = np.where(h > 0, network.seg_v[r], network.seg_u[r])
        deg = network.degree[node]
        inc = network.incident[node]
        here = (inc == r[:, None]).argmax(axis=1)
        k = np.floor(rng.random(active.size) * np.maximum(deg - 1, 1)).astype(np.intp)
        k = np.where(deg > 1, k + (k >= here), here)
        nxt = inc[np.arange(active.size), k]
        forward = network.seg_u[nxt] == node
        rows[active] = nxt
        heading[active] = np.where(forward, 1, -1)
        offs[active] = np.where(forward, 0.0, network.seg_len[nxt])
    offs = np.clip(offs, 0.0, network.seg_len[rows])
    return rows, offs
