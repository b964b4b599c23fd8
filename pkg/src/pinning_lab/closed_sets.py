"""Finite-resolution closed subsets of the real line.

A set is stored as its sorted array of resolved points together with the
resolution it was generated at; dyadic samplers at level n carry resolution
2^-n. The module provides the last-point / next-point maps g_t and d_t, the
Fell-Matheron metric (Hausdorff distance after arctan compactification),
restricted finite-dimensional extraction of (g, d) pairs, and the fractal
diagnostics used downstream: dyadic box counts and covering sums.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ClosedSetR:
    """Closed subset of the line, resolved to finitely many points."""

    points: np.ndarray
    resolution: float = 1.0
    contains_minus_inf: bool = False
    contains_plus_inf: bool = False

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        object.__setattr__(self, "points", pts)
        if pts.size and np.any(np.diff(pts) <= 0):
            raise ValueError("points must be strictly increasing")
        if not self.resolution > 0:
            raise ValueError("resolution must be positive")

    def __len__(self) -> int:
        return len(self.points)

    def shift(self, c: float) -> "ClosedSetR":
        return ClosedSetR(self.points + c, self.resolution,
                          self.contains_minus_inf, self.contains_plus_inf)


def from_points(points, resolution: float = 1.0) -> ClosedSetR:
    pts = np.unique(np.asarray(points, dtype=float))
    return ClosedSetR(pts, resolution)


EMPTY = ClosedSetR(np.empty(0), 1.0)


@dataclass(frozen=True)
class GDRecord:
    """g = last point <= t, d = first point > t (with -inf / +inf defaults)."""

    t: float
    g: float
    d: float

    def __post_init__(self):
        if not (self.g <= self.t < self.d):
            raise ValueError("need g <= t < d")


def g_map(C: ClosedSetR, t: float) -> float:
    """sup{x in C : x <= t}, with sup of the empty set = -inf."""
    i = np.searchsorted(C.points, t, side="right")
    return float(C.points[i - 1]) if i > 0 else -np.inf


def d_map(C: ClosedSetR, t: float) -> float:
    """inf{x in C : x > t}, with inf of the empty set = +inf."""
    i = np.searchsorted(C.points, t, side="right")
    return float(C.points[i]) if i < len(C.points) else np.inf


def gd_record(C: ClosedSetR, t: float) -> GDRecord:
    return GDRecord(t=t, g=g_map(C, t), d=d_map(C, t))


# ---------------------------------------------------------------------------
# Fell-Matheron metric


def _compactified(C: ClosedSetR) -> np.ndarray:
    """arctan image of C together with the two marks at +-pi/2."""
    return np.concatenate([[-np.pi / 2], np.arctan(C.points), [np.pi / 2]])


def _directed_hausdorff_sorted(a: np.ndarray, b: np.ndarray) -> float:
    """max over x in a of the distance to the nearest point of b; both sorted."""
    idx = np.searchsorted(b, a)
    left = np.abs(a - b[np.clip(idx - 1, 0, len(b) - 1)])
    right = np.abs(b[np.clip(idx, 0, len(b) - 1)] - a)
    return float(np.max(np.minimum(left, right)))


def fm_distance(C1: ClosedSetR, C2: ClosedSetR) -> float:
    """Hausdorff distance between C1 and C2 after adjoining the marks at
    +-infinity and mapping through arctan. Sorted sweeps, O((n1+n2) log)."""
    a, b = _compactified(C1), _compactified(C2)
    return max(_directed_hausdorff_sorted(a, b),
               _directed_hausdorff_sorted(b, a))


# ---------------------------------------------------------------------------
# restricted finite-dimensional extraction


@dataclass(frozen=True)
class RestrictedFdd:
    times: np.ndarray
    pairs: np.ndarray  # shape (k, 2): rows (g_i, d_i)
    on_event: bool


def restricted_fdd_extract(C: ClosedSetR, times) -> RestrictedFdd:
    """(g_{t_i}, d_{t_i}) pairs plus the restriction event.

    on_event is true iff the set meets every inter-time gap (t_i, t_{i+1}]
    for i = 1..k-1, which is exactly when the pair vector satisfies the
    interleaving constraints d_i <= g_{i+1} ... realized here directly on
    the point array.
    """
    ts = np.asarray(times, dtype=float)
    if ts.size > 1 and np.any(np.diff(ts) <= 0):
        raise ValueError("times must be strictly increasing")
    pairs = np.array([[g_map(C, t), d_map(C, t)] for t in ts])
    on = True
    for i in range(len(ts) - 1):
        lo = np.searchsorted(C.points, ts[i], side="right")
        hi = np.searchsorted(C.points, ts[i + 1], side="right")
        if hi == lo:
            on = False
            break
    return RestrictedFdd(times=ts, pairs=pairs, on_event=on)


# ---------------------------------------------------------------------------
# fractal diagnostics


def _check_level(C: ClosedSetR, n: int, T: float) -> None:
    if T * 2.0 ** (-n) < C.resolution:
        raise ValueError("resolution too coarse for the requested dyadic level")


def box_count(C: ClosedSetR, n: int, T: float) -> int:
    """Number of level-n dyadic blocks [(j-1)T/2^n, jT/2^n] meeting C."""
    _check_level(C, n, T)
    pts = C.points[(C.points >= 0) & (C.points <= T)]
    if pts.size == 0:
        return 0
    w = T * 2.0 ** (-n)
    # a point on a block boundary belongs to the block it closes (left-open
    # blocks except the first)
    j = np.ceil(pts / w).astype(np.int64)
    j[pts == 0.0] = 1
    return int(len(np.unique(j)))


def dyadic_blocks(C: ClosedSetR, n: int, T: float) -> np.ndarray:
    """Per occupied level-n dyadic block, the extreme points (a_j, b_j) of C
    inside it. Returns an array of (a, b) rows, ordered left to right."""
    _check_level(C, n, T)
    pts = C.points[(C.points >= 0) & (C.points <= T)]
    if pts.size == 0 or pts[0] != 0.0 or pts[-1] != T:
        raise ValueError("block decomposition requires 0 and T in the set")
    w = T * 2.0 ** (-n)
    j = np.ceil(pts / w).astype(np.int64)
    j[pts == 0.0] = 1
    starts = np.flatnonzero(np.concatenate([[True], np.diff(j) != 0]))
    ends = np.concatenate([starts[1:], [len(pts)]])
    return np.column_stack([pts[starts], pts[ends - 1]])


def covering_sum(C: ClosedSetR, n: int, exponent: float, T: float) -> float:
    """Sum over occupied dyadic blocks of (b_j - a_j)^exponent, where a_j and
    b_j are the extreme points of C inside block j. Singleton blocks
    contribute 0 (0^exponent := 0 by convention)."""
    blocks = dyadic_blocks(C, n, T)
    spans = blocks[:, 1] - blocks[:, 0]
    spans = spans[spans > 0]
    return float(np.sum(spans ** exponent))


def box_count_slope(counts: dict[int, int]) -> float:
    """log2(count) vs level regression slope, the box-dimension estimate."""
    ns = np.array(sorted(counts))
    ys = np.log2([counts[n] for n in ns])
    slope, _ = np.polyfit(ns, ys, 1)
    return float(slope)


# ---------------------------------------------------------------------------
# serialization


def write_csv(path, C: ClosedSetR) -> None:
    """Point list with a resolution header line."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["resolution", repr(C.resolution)])
        w.writerow(["x"])
        for x in C.points:
            w.writerow([repr(float(x))])


def read_csv(path) -> ClosedSetR:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][0] != "resolution":
        raise ValueError("missing resolution header")
    res = float(rows[0][1])
    pts = np.array([float(r[0]) for r in rows[2:]])
    return ClosedSetR(pts, res)
