"""Pure numpy implementations of the numeric hot spots.

These are the reference versions; ``_ckernels.pyx`` mirrors them loop for loop.
"""

import math

import numpy as np

_SQRT_2PI = math.sqrt(2.0 * math.pi)


def pair_transition_sum(prev_xy, coef, cur_xy, u, sigma, chunk=2048):
    """out[j] = sum_i coef[i] * N(|cur_j - prev_i| ; u, sigma)."""
    prev_xy = np.ascontiguousarray(prev_xy, dtype=float)
    cur_xy = np.ascontiguousarray(cur_xy, dtype=float)
    coef = np.asarray(coef, dtype=float)
    out = np.empty(len(cur_xy))
    norm = 1.0 / (_SQRT_2PI * sigma)
    inv = 1.0 / (2.0 * sigma * sigma)
    for lo in range(0, len(cur_xy), chunk):
        c = cur_xy[lo:lo + chunk]
        d = np.hypot(c[:, None, 0] - prev_xy[None, :, 0], c[:, None, 1] - prev_xy[None, :, 1])
        out[lo:lo + chunk] = (np.exp(-(d - u) ** 2 * inv) * norm) @ coef
    return out


def _side_ranges(centers, seg_start, seg_dir, seg_len, u, sigma, span):
    """Per (center, segment, side): foot offset, perpendicular distance and the
    along-segment distance range [q1, q2] from the foot that lies inside the
    annulus u +- span*sigma."""
    d = centers[:, None, :] - seg_start[None, :, :]
    t0 = np.einsum("mkj,kj->mk", d, seg_dir)
    a = np.abs(d[..., 0] * seg_dir[None, :, 1] - d[..., 1] * seg_dir[None, :, 0])
    r_out = u + span * sigma
    r_in = u - span * sigma
    ho = np.sqrt(np.maximum(r_out * r_out - a * a, 0.0))
    hi = np.where(r_in > a, np.sqrt(np.maximum(r_in * r_in - a * a, 0.0)), 0.0)
    inside = a <= r_out
    L = seg_len[None, :]
    # side +1: s in [t0+hi, t0+ho]; in q = s - t0
    q1p = np.maximum(hi, -t0)
    q2p = np.minimum(ho, L - t0)
    # side -1: s in [t0-ho, t0-hi]; q = t0 - s
    q1m = np.maximum(hi, t0 - L)
    q2m = np.minimum(ho, t0)
    q1 = np.stack([q1p, q1m], axis=-1)
    q2 = np.stack([q2p, q2m], axis=-1)
    ok = inside[..., None] & (q2 > q1)
    return t0, a, q1, q2, ok


def transition_mass(centers, seg_start, seg_dir, seg_len, u, sigma, nodes, weights, span=8.0):
    """Integral over the network of N(|x - c| ; u, sigma) dx for each center c.

    Each side of the perpendicular foot is integrated in the along-segment
    distance q with Gauss-Legendre panels of width min(sigma, sqrt(q^2 + a^2)),
    which keeps panels small where sqrt(a^2 + q^2) is nearly singular.
    """
    centers = np.ascontiguousarray(centers, dtype=float).reshape(-1, 2)
    t0, a, q1, q2, ok = _side_ranges(centers, seg_start, seg_dir, seg_len, u, sigma, span)
    idx = np.nonzero(ok)
    owner = idx[0]
    aa = a[idx[0], idx[1]]
    aa = np.where(aa < 1e-9 * sigma, 0.0, aa)
    q = q1[idx]
    qend = q2[idx]
    total = np.zeros(len(owner))
    norm = 1.0 / (_SQRT_2PI * sigma)
    inv = 1.0 / (2.0 * sigma * sigma)
    active = np.arange(len(owner))
    while active.size:
        qa = q[active]
        ai = aa[active]
        step = np.where(ai > 0.0, np.minimum(sigma, np.hypot(qa, ai)), sigma)
        nxt = np.minimum(qa + step, qend[active])
        half = 0.5 * (nxt - qa)
        mid = 0.5 * (nxt + qa)
        qq = mid[:, None] + half[:, None] * nodes[None, :]
        r = np.sqrt(ai[:, None] ** 2 + qq * qq)
        f = np.exp(-(r - u) ** 2 * inv) * norm
        total[active] += half * (f @ weights)
        q[active] = nxt
        active = active[nxt < qend[active]]
    return np.bincount(owner, weights=total, minlength=len(centers))


def polyline_distance(points, verts):
    """Minimum Euclidean distance from each point to the polyline through verts."""
    points = np.ascontiguousarray(points, dtype=float).reshape(-1, 2)
    verts = np.ascontiguousarray(verts, dtype=float).reshape(-1, 2)
    if len(verts) == 1:
        return np.hypot(points[:, 0] - verts[0, 0], points[:, 1] - verts[0, 1])
    p0 = verts[:-1]
    seg = verts[1:] - p0
    ll = np.einsum("ij,ij->i", seg, seg)
    out = np.full(len(points), np.inf)
    for lo in range(0, len(points), 1024):
        pts = points[lo:lo + 1024]
        d = pts[:, None, :] - p0[None, :, :]
        with np.errstate(invalid="ignore", divide="ignore"):
            t = np.where(ll > 0, np.einsum("mkj,kj->mk", d, seg) / ll, 0.0)
        t = np.clip(t, 0.0, 1.0)
        diff = d - t[..., None] * seg[None]
        out[lo:lo + 1024] = np.hypot(diff[..., 0], diff[..., 1]).min(axis=1)
    return out
