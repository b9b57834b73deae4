"""Track geometry: analytic arcs and lines plus global polyline tracks.

Sign conventions, used consistently everywhere:

* curvature ``kappa`` is positive for a left (counterclockwise) turn;
* the lateral offset ``d`` is positive on the left of the travel
  direction (for ``kappa > 0`` that is the side toward the arc center);
* the arc parameter ``s`` is the turned tangent angle for arcs (arc
  length between parameters is ``(s1 - s0) / kappa``) and plain arc
  length for lines and polylines.

The normalized local track through the origin with zero tangent angle is
the arc ``(1/kappa) * (cos(s - pi/2), 1 + sin(s - pi/2))`` or, below the
curvature tolerance, the horizontal line.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import SingularProjectionError, TrackFormatError
from .vehicle import Se2Action, wrap_angle

KAPPA_TOL = 1e-6  # 1/m; arcs flatter than this degenerate to a line


@dataclass(frozen=True)
class Projection:
    point: np.ndarray   # closest point on the track
    distance: float     # signed lateral offset d (left positive)
    alpha: float        # track tangent angle at the projection
    kappa: float        # curvature at the projection
    s: float            # arc parameter of the projection


@dataclass(frozen=True)
class Line:
    """Straight track through ``anchor`` with tangent angle ``phi``."""

    anchor: tuple[float, float] = (0.0, 0.0)
    phi: float = 0.0
    kappa: float = 0.0

    def project(self, p) -> Projection:
        p = np.asarray(p, dtype=float)
        t = np.array([math.cos(self.phi), math.sin(self.phi)])
        w = p - np.asarray(self.anchor)
        s = float(w @ t)
        d = float(t[0] * w[1] - t[1] * w[0])
        return Projection(np.asarray(self.anchor) + s * t, d, self.phi, 0.0, s)

    def arc_length_between(self, s0: float, s1: float) -> float:
        return s1 - s0

    def point_at(self, s: float) -> np.ndarray:
        t = np.array([math.cos(self.phi), math.sin(self.phi)])
        return np.asarray(self.anchor) + s * t


@dataclass(frozen=True)
class Arc:
    """Circular track through ``anchor`` with tangent angle ``phi`` there.

    ``s`` measures the turned tangent angle from the anchor, so forward
    travel increases ``s`` for either curvature sign.
    """

    kappa: float
    anchor: tuple[float, float] = (0.0, 0.0)
    phi: float = 0.0

    def __post_init__(self):
        if abs(self.kappa) < KAPPA_TOL:
            raise ValueError(f"arc curvature too small ({self.kappa}); use Line")

    @property
    def radius(self) -> float:
        return 1.0 / abs(self.kappa)

    @property
    def center(self) -> np.ndarray:
        n = np.array([-math.sin(self.phi), math.cos(self.phi)])
        return np.asarray(self.anchor) + n / self.kappa

    def project(self, p) -> Projection:
        p = np.asarray(p, dtype=float)
        c = self.center
        w = p - c
        dist = float(np.linalg.norm(w))
        if dist < 1e-12 * self.radius:
            raise SingularProjectionError("point coincides with the arc center")
        radial = w / dist
        point = c + self.radius * radial
        d = math.copysign(1.0, self.kappa) * (self.radius - dist)
        w0 = np.asarray(self.anchor) - c
        s = math.atan2(w0[0] * w[1] - w0[1] * w[0], float(w0 @ w))
        return Projection(point, d, wrap_angle(self.phi + s), self.kappa, s)

    def arc_length_between(self, s0: float, s1: float) -> float:
        return (s1 - s0) / self.kappa

    def point_at(self, s: float) -> np.ndarray:
        c = self.center
        w0 = np.asarray(self.anchor) - c
        rot = np.array([[math.cos(s), -math.sin(s)], [math.sin(s), math.cos(s)]])
        return c + rot @ w0


def local_track(kappa: float, kappa_tol: float = KAPPA_TOL):
    """Normalized track through the origin: arc of curvature ``kappa`` or a line."""
    if abs(kappa) < kappa_tol:
        return Line()
    return Arc(kappa)


def _vertex_curvature(points: np.ndarray, closed: bool) -> np.ndarray:
    """Signed circumscribed-circle curvature per vertex, 3-point smoothed."""
    n = len(points)
    kappa = np.zeros(n)
    idx = range(n) if closed else range(1, n - 1)
    for i in idx:
        a = points[(i - 1) % n]
        b = points[i]
        c = points[(i + 1) % n]
        ab = b - a
        bc = c - b
        ac = c - a
        cross = ab[0] * bc[1] - ab[1] * bc[0]
        denom = np.linalg.norm(ab) * np.linalg.norm(bc) * np.linalg.norm(ac)
        kappa[i] = 2.0 * cross / denom if denom > 0 else 0.0
    if not closed and n >= 3:
        kappa[0] = kappa[1]
        kappa[-1] = kappa[-2]
    smoothed = kappa.copy()
    for i in range(n):
        if closed:
            smoothed[i] = (kappa[(i - 1) % n] + kappa[i] + kappa[(i + 1) % n]) / 3.0
        elif 0 < i < n - 1:
            smoothed[i] = (kappa[i - 1] + kappa[i] + kappa[i + 1]) / 3.0
    return smoothed


class GlobalPolyline:
    """A track given by waypoints, with per-vertex tangent and curvature.

    Closed tracks implicitly connect the last waypoint back to the
    first; the waypoint list must not repeat it.
    """

    def __init__(self, waypoints, closed: bool = False, name: str = "track"):
        pts = np.asarray(waypoints, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 8:
            raise TrackFormatError("waypoints must be an (n, 2) array with n >= 8")
        self.points = pts
        self.closed = bool(closed)
        self.name = name

        if self.closed:
            seg_vec = np.vstack([pts[1:] - pts[:-1], pts[:1] - pts[-1:]])
        else:
            seg_vec = pts[1:] - pts[:-1]
        seg_len = np.linalg.norm(seg_vec, axis=1)
        if np.any(seg_len <= 0):
            raise TrackFormatError("duplicate consecutive waypoints")
        self.seg_vec = seg_vec
        self.seg_len = seg_len
        self.cum_s = np.concatenate([[0.0], np.cumsum(seg_len)])
        self.length = float(self.cum_s[-1])

        n = len(pts)
        alpha = np.zeros(n)
        for i in range(n):
            if self.closed:
                forward = pts[(i + 1) % n] - pts[i]
                backward = pts[i] - pts[(i - 1) % n]
                v = forward / np.linalg.norm(forward) + backward / np.linalg.norm(backward)
            elif i == 0:
                v = pts[1] - pts[0]
            elif i == n - 1:
                v = pts[-1] - pts[-2]
            else:
                forward = pts[i + 1] - pts[i]
                backward = pts[i] - pts[i - 1]
                v = forward / np.linalg.norm(forward) + backward / np.linalg.norm(backward)
            alpha[i] = math.atan2(v[1], v[0])
        self.alpha = alpha
        self.kappa = _vertex_curvature(pts, self.closed)

    @property
    def n_segments(self) -> int:
        return len(self.seg_len)

    def _vertex_pair(self, seg: int) -> tuple[int, int]:
        n = len(self.points)
        return seg, (seg + 1) % n

    def project(self, p) -> Projection:
        p = np.asarray(p, dtype=float)
        starts = self.points if self.closed else self.points[:-1]
        w = p - starts
        t = np.clip(
            (w * self.seg_vec).sum(axis=1) / (self.seg_len**2),
            0.0,
            1.0,
        )
        closest = starts + t[:, None] * self.seg_vec
        dist2 = ((p - closest) ** 2).sum(axis=1)
        seg = int(np.argmin(dist2))
        frac = float(t[seg])
        point = closest[seg]
        i0, i1 = self._vertex_pair(seg)

        tangent = self.seg_vec[seg] / self.seg_len[seg]
        offset = p - point
        d = float(tangent[0] * offset[1] - tangent[1] * offset[0])
        a0 = self.alpha[i0]
        a1 = a0 + wrap_angle(self.alpha[i1] - a0)
        alpha = wrap_angle(a0 + frac * (a1 - a0))
        kappa = float((1.0 - frac) * self.kappa[i0] + frac * self.kappa[i1])
        s = float(self.cum_s[seg] + frac * self.seg_len[seg])
        return Projection(point, d, alpha, kappa, s)

    def arc_length_between(self, s0: float, s1: float) -> float:
        delta = s1 - s0
        if self.closed:
            delta = math.fmod(delta, self.length)
            if delta < 0:
                delta += self.length
            if delta > self.length / 2.0:
                delta -= self.length
        return delta

    def point_at(self, s: float) -> np.ndarray:
        if self.closed:
            s = math.fmod(s, self.length)
            if s < 0:
                s += self.length
        seg = int(np.searchsorted(self.cum_s, s, side="right") - 1)
        seg = min(max(seg, 0), self.n_segments - 1)
        frac = (s - self.cum_s[seg]) / self.seg_len[seg]
        starts = self.points if self.closed else self.points[:-1]
        return starts[seg] + frac * self.seg_vec[seg]


Track = Line | Arc | GlobalPolyline


def project_to_track(track: Track, p) -> Projection:
    return track.project(p)


def arc_length_between(track: Track, s0: float, s1: float) -> float:
    return track.arc_length_between(s0, s1)


def se2_apply_track(g: Se2Action, track: Track) -> Track:
    """Rotate and translate a whole track."""
    if isinstance(track, Line):
        return Line(tuple(g.apply_point(track.anchor)), track.phi + g.delta_theta)
    if isinstance(track, Arc):
        return Arc(track.kappa, tuple(g.apply_point(track.anchor)), track.phi + g.delta_theta)
    return GlobalPolyline(g.apply_points(track.points), track.closed, track.name)


def load_track(path) -> GlobalPolyline:
    """Read a track.json file: {name, closed, waypoints: [[x, y], ...]}."""
    raw = json.loads(Path(path).read_text())
    try:
        waypoints = raw["waypoints"]
        closed = bool(raw["closed"])
        name = str(raw.get("name", Path(path).stem))
    except (KeyError, TypeError) as exc:
        raise TrackFormatError(f"track file {path} is missing fields: {exc}") from exc
    return GlobalPolyline(waypoints, closed, name)


def save_track(track: GlobalPolyline, path) -> None:
    doc = {
        "name": track.name,
        "closed": track.closed,
        "waypoints": [[float(x), float(y)] for x, y in track.points],
    }
    Path(path).write_text(json.dumps(doc, indent=1))
