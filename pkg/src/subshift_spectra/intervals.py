"""Sorted disjoint closed real intervals with exact sweep-line set algebra.

The canonical form merges touching or overlapping intervals (touching up to
``MERGE_TOL``, so eigenvalue bands that meet at a point report the exact
joint measure).  All operations work on endpoints only; no sampling.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

#: endpoints closer than this are considered touching and merged
MERGE_TOL = 1e-12


@dataclass(frozen=True)
class IntervalSet:
    """Finite union of closed intervals in canonical (sorted, disjoint) form."""

    intervals: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        prev_hi = None
        for lo, hi in self.intervals:
            if not lo <= hi:
                raise ValueError(f"invalid interval [{lo}, {hi}]")
            if prev_hi is not None and lo <= prev_hi:
                raise ValueError("intervals must be strictly increasing and disjoint")
            prev_hi = hi

    # -- construction ------------------------------------------------------

    @classmethod
    def empty(cls) -> "IntervalSet":
        return cls(())

    @classmethod
    def single(cls, lo: float, hi: float) -> "IntervalSet":
        return cls(((float(lo), float(hi)),))

    @classmethod
    def from_pairs(
        cls, pairs: Iterable[Sequence[float]], merge_tol: float = MERGE_TOL
    ) -> "IntervalSet":
        """Canonicalize arbitrary [lo, hi] pairs: sort and merge touching ones."""
        items = sorted((float(lo), float(hi)) for lo, hi in pairs)
        for lo, hi in items:
            if not lo <= hi:
                raise ValueError(f"invalid interval [{lo}, {hi}]")
        merged: list[list[float]] = []
        for lo, hi in items:
            if merged and lo <= merged[-1][1] + merge_tol:
                merged[-1][1] = max(merged[-1][1], hi)
            else:
                merged.append([lo, hi])
        return cls(tuple((lo, hi) for lo, hi in merged))

    # -- queries -----------------------------------------------------------

    def __len__(self) -> int:
        return len(self.intervals)

    def __iter__(self):
        return iter(self.intervals)

    def __bool__(self) -> bool:
        return bool(self.intervals)

    @property
    def measure(self) -> float:
        return sum(hi - lo for lo, hi in self.intervals)

    @property
    def span(self) -> tuple[float, float] | None:
        if not self.intervals:
            return None
        return self.intervals[0][0], self.intervals[-1][1]

    def contains_point(self, x: float) -> bool:
        return any(lo <= x <= hi for lo, hi in self.intervals)

    def subset_of(self, other: "IntervalSet") -> bool:
        """Exact endpoint containment: every interval fits inside one of ``other``."""
        return all(
            any(olo <= lo and hi <= ohi for olo, ohi in other.intervals)
            for lo, hi in self.intervals
        )

    # -- algebra -----------------------------------------------------------

    def union(self, other: "IntervalSet") -> "IntervalSet":
        return IntervalSet.from_pairs(list(self.intervals) + list(other.intervals))

    def intersect(self, other: "IntervalSet") -> "IntervalSet":
        out = []
        i = j = 0
        a, b = self.intervals, other.intervals
        while i < len(a) and j < len(b):
            lo = max(a[i][0], b[j][0])
            hi = min(a[i][1], b[j][1])
            if lo <= hi:
                out.append((lo, hi))
            if a[i][1] < b[j][1]:
                i += 1
            else:
                j += 1
        # zero-tolerance merge: adjacent outputs can share an endpoint
        return IntervalSet.from_pairs(out, merge_tol=0.0)

    def difference(self, other: "IntervalSet") -> "IntervalSet":
        """Closure of the set difference (kept as closed intervals)."""
        out = []
        for lo, hi in self.intervals:
            cursor = lo
            for olo, ohi in other.intervals:
                if ohi < cursor or olo > hi:
                    continue
                if olo > cursor:
                    out.append((cursor, olo))
                cursor = max(cursor, ohi)
                if cursor >= hi:
                    break
            if cursor < hi:
                out.append((cursor, hi))
        return IntervalSet.from_pairs(out, merge_tol=0.0)

    def dilate(self, radius: float) -> "IntervalSet":
        """Expand every interval by ``radius`` on both sides and re-merge."""
        if radius < 0:
            raise ValueError("dilation radius must be >= 0")
        return IntervalSet.from_pairs(
            [(lo - radius, hi + radius) for lo, hi in self.intervals]
        )

    def clip(self, lo: float, hi: float) -> "IntervalSet":
        return self.intersect(IntervalSet.single(lo, hi))


def interval_algebra(op: str, x: IntervalSet, y):
    """Dispatch the named set operation; mirrors the CLI surface.

    ``union | intersect | difference`` take two sets, ``dilate`` a set and a
    radius, ``subset`` returns a bool, ``measure`` a real.
    """
    if op == "union":
        return x.union(y)
    if op == "intersect":
        return x.intersect(y)
    if op == "difference":
        return x.difference(y)
    if op == "dilate":
        return x.dilate(float(y))
    if op == "subset":
        return x.subset_of(y)
    if op == "measure":
        return x.measure
    raise ValueError(f"unknown interval operation {op!r}")
