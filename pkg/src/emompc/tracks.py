"""Generators for the bundled tracks.

The reference track is a stadium: two straights joined by semicircles of
curvature well inside the library's range.  The wavy variant superposes
a smooth lateral ripple so both curvature signs occur along a lap.  All
bundled files are produced by :func:`write_bundled_tracks`, so they can
be regenerated bit for bit.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .track import GlobalPolyline, save_track

DATA_DIR = Path(__file__).parent / "data" / "tracks"


def stadium_track(
    straight: float = 150.0,
    radius: float = 100.0,
    spacing: float = 1.5,
    name: str = "stadium",
) -> GlobalPolyline:
    """Closed stadium: straights along x, semicircular ends, CCW."""
    pts: list[tuple[float, float]] = []
    n_straight = max(int(round(straight / spacing)), 8)
    n_arc = max(int(round(math.pi * radius / spacing)), 8)
    # bottom straight, left to right
    for i in range(n_straight):
        pts.append((i * straight / n_straight, 0.0))
    # right semicircle, bottom to top
    for i in range(n_arc):
        a = -math.pi / 2.0 + math.pi * i / n_arc
        pts.append((straight + radius * math.cos(a), radius + radius * math.sin(a)))
    # top straight, right to left
    for i in range(n_straight):
        pts.append((straight - i * straight / n_straight, 2.0 * radius))
    # left semicircle, top to bottom
    for i in range(n_arc):
        a = math.pi / 2.0 + math.pi * i / n_arc
        pts.append((radius * math.cos(a), radius + radius * math.sin(a)))
    return GlobalPolyline(np.array(pts), closed=True, name=name)


def wavy_track(
    straight: float = 150.0,
    radius: float = 100.0,
    amplitude: float = 3.0,
    waves: int = 5,
    spacing: float = 1.5,
    name: str = "wavy",
) -> GlobalPolyline:
    """Stadium with a smooth lateral ripple; curvature changes sign."""
    base = stadium_track(straight, radius, spacing, name="base")
    pts = base.points
    length = base.length
    out = []
    s = 0.0
    for i in range(len(pts)):
        proj = base.alpha[i]
        normal = np.array([-math.sin(proj), math.cos(proj)])
        offset = amplitude * math.sin(2.0 * math.pi * waves * s / length)
        out.append(pts[i] + offset * normal)
        if i + 1 < len(pts):
            s += float(np.linalg.norm(pts[i + 1] - pts[i]))
    return GlobalPolyline(np.array(out), closed=True, name=name)


def straight_track(length: float = 150.0, spacing: float = 1.0, name: str = "straight_150") -> GlobalPolyline:
    n = max(int(round(length / spacing)) + 1, 8)
    xs = np.linspace(0.0, length, n)
    pts = np.column_stack([xs, np.zeros_like(xs)])
    return GlobalPolyline(pts, closed=False, name=name)


BUILDERS = {
    "stadium": stadium_track,
    "wavy": wavy_track,
    "straight_150": straight_track,
}


def write_bundled_tracks(directory: Path | str = DATA_DIR) -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    for name, builder in BUILDERS.items():
        path = directory / f"{name}.json"
        save_track(builder(), path)
        written.append(path)
    return written


def bundled_track(name: str) -> GlobalPolyline:
    from .track import load_track

    path = DATA_DIR / f"{name}.json"
    if not path.exists():
        if name in BUILDERS:
            return BUILDERS[name]()
        raise FileNotFoundError(f"no bundled track named {name!r}")
    return load_track(path)


def bundled_track_names() -> list[str]:
    return sorted(BUILDERS)
