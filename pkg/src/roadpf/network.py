"""Road network geometry: straight segments, positions on them, spatial queries."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


class NetworkError(ValueError):
    """Raised for malformed networks or invalid positions."""


@dataclass(frozen=True)
class Segment:
    id: int
    u: int
    v: int
    start: tuple[float, float]
    end: tuple[float, float]

    @property
    def length(self) -> float:
        return math.hypot(self.end[0] - self.start[0], self.end[1] - self.start[1])


@dataclass(frozen=True)
class NetworkPosition:
    """A vehicle state: a segment plus the distance travelled along it from its start node."""

    segment_id: int
    offset: float
    point: tuple[float, float]


class _GridIndex:
    """Uniform grid over segment bounding boxes.

    A query returns every segment registered in a cell touched by the query
    disc's bounding box, so it never misses a segment that meets the disc.
    """

    def __init__(self, start: np.ndarray, end: np.ndarray, cell: float):
        self.cell = cell
        lo = np.minimum(start, end)
        hi = np.maximum(start, end)
        self.origin = lo.min(axis=0) if len(lo) else np.zeros(2)
        self.cells: dict[tuple[int, int], list[int]] = {}
        c0 = np.floor((lo - self.origin) / cell).astype(int)
        c1 = np.floor((hi - self.origin) / cell).astype(int)
        for row, (a, b) in enumerate(zip(c0, c1)):
            for i in range(a[0], b[0] + 1):
                for j in range(a[1], b[1] + 1):
                    self.cells.setdefault((i, j), []).append(row)

    def query(self, center: np.ndarray, radius: float) -> np.ndarray:
        i0, j0 = np.floor((center - radius - self.origin) / self.cell).astype(int)
        i1, j1 = np.floor((center + radius - self.origin) / self.cell).astype(int)
        found: set[int] = set()
        # A huge radius would enumerate empty cells; fall back to the cell list.
        if (i1 - i0 + 1) * (j1 - j0 + 1) > len(self.cells):
            for (i, j), rows in self.cells.items():
                if i0 <= i <= i1 and j0 <= j <= j1:
                    found.update(rows)
        else:
            for i in range(i0, i1 + 1):
                for j in range(j0, j1 + 1):
                    found.update(self.cells.get((i, j), ()))
        return np.fromiter(sorted(found), dtype=np.intp, count=len(found))


class RoadNetwork:
    """Immutable planar road graph made of straight, undirected segments.

    Coordinates are easting/northing in meters. Segments are addressed by
    their public ``id``; internally every array is indexed by *row*, the
    segment's position in ``segments``.
    """

    def __init__(self, nodes: Iterable[tuple[int, float, float]],
                 segments: Iterable[tuple[int, int, int]]):
        nodes = [(int(i), float(e), float(n)) for i, e, n in nodes]
        segments = [(int(s), int(u), int(v)) for s, u, v in segments]
        node_row: dict[int, int] = {}
        for row, (nid, _, _) in enumerate(nodes):
            if nid in node_row:
                raise NetworkError(f"duplicate node id {nid}")
            node_row[nid] = row
        if not segments:
            raise NetworkError("network has no segments")
        self.node_ids = np.array([n[0] for n in nodes], dtype=np.int64)
        self.node_xy = np.array([(n[1], n[2]) for n in nodes], dtype=float).reshape(-1, 2)
        self._node_row = node_row

        seg_row: dict[int, int] = {}
        su, sv = [], []
        for row, (sid, u, v) in enumerate(segments):
            if sid in seg_row:
                raise NetworkError(f"duplicate segment id {sid}")
            if u not in node_row or v not in node_row:
                raise NetworkError(f"segment {sid} references unknown node")
            if u == v:
                raise NetworkError(f"segment {sid} joins node {u} to itself")
            seg_row[sid] = row
            su.append(node_row[u])
            sv.append(node_row[v])
        self.seg_ids = np.array([s[0] for s in segments], dtype=np.int64)
        self._seg_row = seg_row
        self.seg_u = np.array(su, dtype=np.intp)
        self.seg_v = np.array(sv, dtype=np.intp)
        self.seg_start = self.node_xy[self.seg_u]
        self.seg_end = self.node_xy[self.seg_v]
        delta = self.seg_end - self.seg_start
        self.seg_len = np.hypot(delta[:, 0], delta[:, 1])
        bad = np.flatnonzero(self.seg_len <= 0.0)
        if len(bad):
            raise NetworkError(f"segment {self.seg_ids[bad[0]]} has zero length")
        self.seg_dir = delta / self.seg_len[:, None]
        # left-hand normal of the travel direction
        self.seg_normal = np.column_stack([-self.seg_dir[:, 1], self.seg_dir[:, 0]])

        incident: list[list[int]] = [[] for _ in nodes]
        for row in range(len(segments)):
            incident[su[row]].append(row)
            incident[sv[row]].append(row)
        self.degree = np.array([len(x) for x in incident], dtype=np.intp)
        width = max(1, int(self.degree.max()))
        self.incident = np.full((len(nodes), width), -1, dtype=np.intp)
        for row, rows in enumerate(incident):
            self.incident[row, :len(rows)] = rows

        for a in (self.seg_start, self.seg_end):
            a.flags.writeable = False
        self._index = _GridIndex(self.seg_start, self.seg_end, float(self.seg_len.max()))

    # -- basic accessors -------------------------------------------------

    @property
    def n_segments(self) -> int:
        return len(self.seg_ids)

    @property
    def total_length(self) -> float:
        return float(self.seg_len.sum())

    def row_of(self, segment_id: int) -> int:
        try:
            return self._seg_row[int(segment_id)]
        except KeyError:
            raise NetworkError(f"unknown segment id {segment_id}") from None

    def segment(self, segment_id: int) -> Segment:
        row = self.row_of(segment_id)
        return self._segment_at(row)

    def _segment_at(self, row: int) -> Segment:
        return Segment(int(self.seg_ids[row]), int(self.node_ids[self.seg_u[row]]),
                       int(self.node_ids[self.seg_v[row]]),
                       tuple(self.seg_start[row]), tuple(self.seg_end[row]))

    @property
    def segments(self) -> list[Segment]:
        return [self._segment_at(r) for r in range(self.n_segments)]

    @property
    def nodes(self) -> list[tuple[int, float, float]]:
        return [(int(i), float(e), float(n)) for i, (e, n) in zip(self.node_ids, self.node_xy)]

    # -- positions -------------------------------------------------------

    def points(self, rows: np.ndarray, offsets: np.ndarray) -> np.ndarray:
        """Planar coordinates of (row, offset) pairs, vectorised."""
        rows = np.asarray(rows, dtype=np.intp)
        offsets = np.asarray(offsets, dtype=float)
        return self.seg_start[rows] + offsets[..., None] * self.seg_dir[rows]

    def position_at(self, segment_id: int, offset: float) -> NetworkPosition:
        row = self.row_of(segment_id)
        length = self.seg_len[row]
        if not 0.0 <= offset <= length:
            raise NetworkError(f"offset {offset} outside [0, {length}] on segment {segment_id}")
        frac = offset / length
        p = self.seg_start[row] + frac * (self.seg_end[row] - self.seg_start[row])
        return NetworkPosition(int(segment_id), float(offset), (float(p[0]), float(p[1])))

    def position_from_row(self, row: int, offset: float) -> NetworkPosition:
        offset = min(max(float(offset), 0.0), float(self.seg_len[row]))
        return self.position_at(int(self.seg_ids[row]), offset)

    def ab_coordinates(self, x: NetworkPosition, y: Sequence[float]) -> tuple[float, float]:
        """Coordinates of ``y`` in the frame of ``x``'s segment, centred on ``x``.

        ``a`` is the signed offset across the segment (positive to the left of
        the start->end direction), ``b`` the displacement along it.
        """
        row = self.row_of(x.segment_id)
        r = np.asarray(y, dtype=float) - np.asarray(x.point)
        return float(r @ self.seg_normal[row]), float(r @ self.seg_dir[row])

    def project(self, point: Sequence[float]) -> NetworkPosition:
        """Nearest network position to a planar point (ties: lowest row)."""
        p = np.asarray(point, dtype=float)
        t = np.einsum("ij,ij->i", p - self.seg_start, self.seg_dir)
        t = np.clip(t, 0.0, self.seg_len)
        foot = self.seg_start + t[:, None] * self.seg_dir
        d = np.hypot(*(foot - p).T)
        row = int(np.argmin(d))
        return self.position_from_row(row, t[row])

    # -- spatial queries -------------------------------------------------

    def distances_to(self, point: Sequence[float], rows: np.ndarray | None = None) -> np.ndarray:
        """Minimum point-to-segment distance for the given rows (default: all)."""
        p = np.asarray(point, dtype=float)
        if rows is None:
            rows = np.arange(self.n_segments)
        start = self.seg_start[rows]
        t = np.einsum("ij,ij->i", p - start, self.seg_dir[rows])
        t = np.clip(t, 0.0, self.seg_len[rows])
        foot = start + t[:, None] * self.seg_dir[rows]
        return np.hypot(foot[:, 0] - p[0], foot[:, 1] - p[1])

    def rows_near(self, center: Sequence[float], radius: float) -> tuple[np.ndarray, np.ndarray]:
        """Rows of segments within ``radius`` of ``center`` and their distances."""
        if radius <= 0:
            raise NetworkError("radius must be positive")
        c = np.asarray(center, dtype=float)
        rows = self._index.query(c, radius)
        d = self.distances_to(c, rows)
        keep = d <= radius
        return rows[keep], d[keep]

    def segments_near(self, center: Sequence[float], radius: float) -> list[tuple[Segment, float]]:
        rows, d = self.rows_near(center, radius)
        return [(self._segment_at(r), float(x)) for r, x in zip(rows, d)]

    # -- serialisation ---------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "nodes": [{"id": i, "e": e, "n": n} for i, e, n in self.nodes],
            "segments": [{"id": int(s), "u": int(self.node_ids[u]), "v": int(self.node_ids[v])}
                         for s, u, v in zip(self.seg_ids, self.seg_u, self.seg_v)],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RoadNetwork":
        try:
            nodes = [(d["id"], d["e"], d["n"]) for d in data["nodes"]]
            segs = [(d["id"], d["u"], d["v"]) for d in data["segments"]]
        except (KeyError, TypeError) as exc:
            raise NetworkError(f"malformed network document: {exc!r}") from None
        return cls(nodes, segs)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1))

    @classmethod
    def load(cls, path: str | Path) -> "RoadNetwork":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RoadNetwork):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    def __repr__(self) -> str:
        return f"RoadNetwork({len(self.node_ids)} nodes, {self.n_segments} segments)"


def position_at(network: RoadNetwork, segment_id: int, offset: float) -> NetworkPosition:
    return network.position_at(segment_id, offset)


def ab_coordinates(network: RoadNetwork, x: NetworkPosition, y: Sequence[float]) -> tuple[float, float]:
    return network.ab_coordinates(x, y)


def segments_near(network: RoadNetwork, center: Sequence[float], radius: float):
    return network.segments_near(center, radius)


def make_grid_network(n: int, spacing: float) -> RoadNetwork:
    """``n`` x ``n`` lattice with horizontal and vertical links between neighbours."""
    if n < 2:
        raise NetworkError("grid needs n >= 2")
    if spacing <= 0:
        raise NetworkError("spacing must be positive")
    nodes = [(i * n + j, j * spacing, i * spacing) for i in range(n) for j in range(n)]
    segs = []
    for i in range(n):
        for j in range(n):
            k = i * n + j
            if j + 1 < n:
                segs.append((len(segs), k, k + 1))
            if i + 1 < n:
                segs.append((len(segs), k, k + n))
    return RoadNetwork(nodes, segs)
