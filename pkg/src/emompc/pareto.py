"""Dominance relations and set-level operations on Pareto data.

All comparisons are in minimization orientation.  A front with two
objectives is kept sorted by the first objective; mutual nondominance
then makes the second objective strictly decreasing, which the selection
and trimming operations below rely on.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatchError, EmptySetError


@dataclass(frozen=True)
class ParetoEntry:
    """One optimal compromise: a flattened control sequence and its objectives."""

    control: np.ndarray
    objectives: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "control", np.asarray(self.control, dtype=float))
        object.__setattr__(self, "objectives", np.asarray(self.objectives, dtype=float))


@dataclass
class ParetoSet:
    """An ordered collection of mutually nondominated entries.

    Entries are sorted ascending by the first objective.  ``validate``
    raises if the invariants do not hold; construction through
    :func:`nondominated_filter` guarantees them.
    """

    entries: list[ParetoEntry] = field(default_factory=list)

    def __len__(self):
        return len(self.entries)

    def __getitem__(self, i):
        return self.entries[i]

    def __iter__(self):
        return iter(self.entries)

    def objectives_array(self) -> np.ndarray:
        if not self.entries:
            return np.zeros((0, 0))
        return np.array([e.objectives for e in self.entries])

    def controls_array(self) -> np.ndarray:
        if not self.entries:
            return np.zeros((0, 0))
        return np.array([e.control for e in self.entries])

    def validate(self):
        objs = self.objectives_array()
        for i in range(len(objs)):
            for j in range(len(objs)):
                if i != j and dominates(objs[i], objs[j]):
                    raise ValueError(f"entry {j} is dominated by entry {i}")
        if objs.shape[1] >= 2 and len(objs) >= 2:
            if not np.all(np.diff(objs[:, 0]) > 0):
                raise ValueError("first objective is not strictly increasing")
        return self


def dominates(a, b) -> bool:
    """True iff ``a <= b`` componentwise and ``a != b`` (minimization)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise DimensionMismatchError(f"objective shapes differ: {a.shape} vs {b.shape}")
    return bool(np.all(a <= b) and np.any(a < b))


def nondominated_filter(points) -> ParetoSet:
    """Keep exactly the entries not dominated by any other.

    Duplicates in objective space collapse to the first occurrence.  The
    result is sorted ascending by the first objective.
    """
    entries = list(points)
    if not entries:
        raise EmptySetError("nondominated_filter needs at least one point")
    objs = np.array([np.asarray(e.objectives, dtype=float) for e in entries])
    if objs.ndim != 2:
        raise DimensionMismatchError("entries have inconsistent objective lengths")

    # drop exact duplicates, keeping the earliest entry
    seen: dict[tuple, int] = {}
    keep_idx = []
    for i, row in enumerate(objs):
        key = tuple(row.tolist())
        if key not in seen:
            seen[key] = i
            keep_idx.append(i)
    objs = objs[keep_idx]
    entries = [entries[i] for i in keep_idx]

    n = len(entries)
    # pairwise dominance via broadcasting: d[i, j] = i dominates j
    le = np.all(objs[:, None, :] <= objs[None, :, :], axis=2)
    lt = np.any(objs[:, None, :] < objs[None, :, :], axis=2)
    dominated = np.any(le & lt, axis=0)
    survivors = [entries[i] for i in range(n) if not dominated[i]]

    order = np.argsort([e.objectives[0] for e in survivors], kind="stable")
    return ParetoSet([survivors[i] for i in order])


def hausdorff(a, b) -> float:
    """Symmetric Hausdorff distance between two finite point sets (Euclidean)."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    if a.size == 0 or b.size == 0:
        raise EmptySetError("hausdorff needs two nonempty sets")
    if a.shape[1] != b.shape[1]:
        raise DimensionMismatchError(f"point dimensions differ: {a.shape[1]} vs {b.shape[1]}")
    d = np.linalg.norm(a[:, None, :] - b[None, :, :], axis=2)
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))


def _point_to_polyline(points: np.ndarray, vertices: np.ndarray) -> np.ndarray:
    """Distance from each point to a polyline through ``vertices`` (in order)."""
    if len(vertices) == 1:
        return np.linalg.norm(points - vertices[0], axis=1)
    starts = vertices[:-1]
    ends = vertices[1:]
    seg = ends - starts
    seg_len2 = np.maximum((seg * seg).sum(axis=1), 1e-300)
    w = points[:, None, :] - starts[None, :, :]
    t = np.clip((w * seg[None, :, :]).sum(axis=2) / seg_len2[None, :], 0.0, 1.0)
    closest = starts[None, :, :] + t[:, :, None] * seg[None, :, :]
    d = np.linalg.norm(points[:, None, :] - closest, axis=2)
    return d.min(axis=1)


def hausdorff_curve(a, b) -> float:
    """Hausdorff distance between two sets read as polylines through their points.

    Vertices of each set are measured against the segments of the other,
    which compares the curves the samples approximate rather than the
    sample placement along them.
    """
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    if a.size == 0 or b.size == 0:
        raise EmptySetError("hausdorff_curve needs two nonempty sets")
    if a.shape[1] != b.shape[1]:
        raise DimensionMismatchError(f"point dimensions differ: {a.shape[1]} vs {b.shape[1]}")
    return float(max(_point_to_polyline(a, b).max(), _point_to_polyline(b, a).max()))


def proper_filter(front: ParetoSet, eps: float = 0.05) -> ParetoSet:
    """Trim front tails whose trade-off is negligible (two objectives only).

    Repeatedly removes the max-J1 endpoint while its J2 gain over its
    neighbor is below ``eps`` times the J2 range of the original front,
    and symmetrically the min-J1 endpoint against the J1 range.  At least
    two points are always retained.
    """
    if not 0.0 < eps < 0.5:
        raise ValueError(f"eps must be in (0, 0.5), got {eps}")
    if len(front) < 2:
        return front
    objs = front.objectives_array()
    if objs.shape[1] != 2:
        raise DimensionMismatchError("proper_filter requires exactly two objectives")

    j1_range = float(objs[-1, 0] - objs[0, 0])
    j2_range = float(objs[0, 1] - objs[-1, 1])
    entries = list(front.entries)

    # upper tail: last point barely improves J2 over its neighbor
    while len(entries) > 2:
        gain = entries[-2].objectives[1] - entries[-1].objectives[1]
        if gain < eps * j2_range:
            entries.pop()
        else:
            break
    # lower tail: first point barely improves J1 over its neighbor
    while len(entries) > 2:
        gain = entries[1].objectives[0] - entries[0].objectives[0]
        if gain < eps * j1_range:
            entries.pop(0)
        else:
            break
    return ParetoSet(entries)


def select_by_weight(front: ParetoSet, rho: float) -> ParetoEntry:
    """Pick the entry at index ``round(rho * (len - 1))``, rounding half up.

    ``rho = 0`` selects the min-J1 entry (safest), ``rho = 1`` the min-J2
    entry (fastest).  Out-of-range weights are clamped with a warning.
    """
    if len(front) == 0:
        raise EmptySetError("cannot select from an empty front")
    objs = front.objectives_array()
    if objs.shape[1] != 2:
        raise DimensionMismatchError("select_by_weight requires exactly two objectives")
    if rho < 0.0 or rho > 1.0:
        warnings.warn(f"preference {rho} outside [0, 1]; clamping", stacklevel=2)
        rho = min(max(rho, 0.0), 1.0)
    index = int(math.floor(rho * (len(front) - 1) + 0.5))
    return front[index]


def select_index(front_size: int, rho: float) -> int:
    """Index picked by :func:`select_by_weight` for a front of given size."""
    rho = min(max(rho, 0.0), 1.0)
    return int(math.floor(rho * (front_size - 1) + 0.5))
