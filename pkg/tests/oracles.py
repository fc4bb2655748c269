"""Independent brute-force references used by the unit and acceptance tests."""

import itertools
import math

import numpy as np

from roadpf.filter import Belief
from roadpf.sensor_models import TransitionModel
from roadpf.trajectory import BeliefHistory


def trans_pdf(model: TransitionModel, p, q, u, mass=1.0):
    s = model.std(u)
    d = math.hypot(q[0] - p[0], q[1] - p[1])
    return math.exp(-0.5 * ((d - u) / s) ** 2) / (math.sqrt(2 * math.pi) * s) / mass


def random_history(rng, net, T, m, zero_prob=0.2):
    """T+1 random beliefs of m particles on ``net`` with random controls."""
    beliefs = []
    for t in range(T + 1):
        rows = rng.integers(0, net.n_segments, m)
        offs = rng.uniform(0, net.seg_len[rows])
        w = rng.random(m)
        w[rng.random(m) < zero_prob] = 0.0
        if w.sum() == 0:
            w[rng.integers(m)] = 1.0
        w /= w.sum()
        obs = np.exp(rng.uniform(-30, 0, m))
        beliefs.append(Belief(net, rows, offs, w, t=t, obs_weights=obs))
    controls = rng.uniform(0, 80, T).tolist()
    return BeliefHistory(beliefs, controls)


def _masses(history, model, net):
    from roadpf.sensor_models import transition_mass
    if net is None:
        return [np.ones(b.m) for b in history.beliefs]
    out = []
    for t, b in enumerate(history.beliefs[:-1]):
        out.append(transition_mass(model, net, b.points, history.controls[t]))
    return out


def greedy_backward(history: BeliefHistory, model: TransitionModel, net=None) -> list[int]:
    """Backward argmax chain with scalar loops; ties go to the lowest index."""
    masses = _masses(history, model, net)
    B = history.beliefs
    last = B[-1]
    i = max(range(last.m), key=lambda k: (last.weights[k], -k))
    idx = [i]
    for t in range(len(B) - 1, 0, -1):
        prev, cur = B[t - 1], B[t]
        best, best_j = -1.0, 0
        for j in range(prev.m):
            if prev.weights[j] <= 0:
                s = 0.0
            else:
                s = trans_pdf(model, prev.points[j], cur.points[i], history.controls[t - 1],
                              masses[t - 1][j]) * prev.weights[j]
            if s > best:
                best, best_j = s, j
        i = best_j
        idx.append(i)
    return idx[::-1]


def path_score(history, idx, model, net=None, masses=None) -> float:
    masses = masses if masses is not None else _masses(history, model, net)
    B = history.beliefs
    total = math.log(B[0].obs_weights[idx[0]]) if B[0].obs_weights[idx[0]] > 0 else -math.inf
    for t in range(1, len(B)):
        p = trans_pdf(model, B[t - 1].points[idx[t - 1]], B[t].points[idx[t]], history.controls[t - 1],
                      masses[t - 1][idx[t - 1]])
        o = B[t].obs_weights[idx[t]]
        total += (math.log(p) if p > 0 else -math.inf) + (math.log(o) if o > 0 else -math.inf)
    return total


def exhaustive_best(history, model, net=None):
    """All m^(T+1) index sequences; returns (best score, all sequences achieving it within 1e-9)."""
    masses = _masses(history, model, net)
    ms = [b.m for b in history.beliefs]
    scored = [(path_score(history, seq, model, net, masses), seq)
              for seq in itertools.product(*(range(m) for m in ms))]
    best = max(s for s, _ in scored)
    tol = 1e-9 * max(1.0, abs(best))
    return best, [list(seq) for s, seq in scored if s >= best - tol]


def point_polyline_distance(p, verts, step=0.001):
    """Distance from p to a polyline by dense sampling (1 mm) of every chord."""
    verts = np.asarray(verts, dtype=float)
    if len(verts) == 1:
        return float(np.hypot(*(verts[0] - p)))
    best = math.inf
    for a, b in zip(verts[:-1], verts[1:]):
        L = float(np.hypot(*(b - a)))
        n = max(2, int(math.ceil(L / step)) + 1)
        s = np.linspace(0.0, 1.0, n)[:, None]
        pts = a + s * (b - a)
        best = min(best, float(np.min(np.hypot(*(pts - p).T))))
    return best


def trapezoid_over_network(net, fn, step=0.01):
    """Integral of fn(rows, offsets) along every segment, trapezoid rule."""
    total = 0.0
    for row, L in enumerate(net.seg_len):
        n = max(2, int(math.ceil(L / step)) + 1)
        s = np.linspace(0.0, L, n)
        total += np.trapezoid(fn(np.full(n, row), s), s)
    return total


def chord_mass(net, y, sigma, radius, step=0.005):
    """Per-segment integral of the 2-D Gaussian over the part inside the disc."""
    out = np.zeros(net.n_segments)
    for row, L in enumerate(net.seg_len):
        n = int(math.ceil(L / step)) + 1
        s = np.linspace(0.0, L, n)
        pts = net.points(np.full(n, row), s)
        d2 = np.sum((pts - y) ** 2, axis=1)
        f = np.where(d2 <= radius ** 2, np.exp(-d2 / (2 * sigma ** 2)) / (2 * math.pi * sigma ** 2), 0.0)
        out[row] = np.trapezoid(f, s)
    return out
