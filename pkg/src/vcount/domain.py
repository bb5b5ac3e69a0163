"""Discretized hyperrectangles: the precondition P as a finite grid.

Grid indices are the canonical representation. A point with index ``k`` on an
axis has coordinate ``axis.lo + k * axis.step``; sub-boxes only narrow the index
range, so the global origin and pitch never change under splitting and every
count is an exact integer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence

import numpy as np

from .errors import InputError, NotSplittableError

# Slack when deciding how many steps fit in [lo, hi]: 1/0.01 is 100.00000000000001.
_FIT_SLACK = 1e-9


@dataclass(frozen=True)
class GridAxis:
    lo: float
    hi: float
    step: float
    index_lo: int
    index_hi: int

    def __post_init__(self) -> None:
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise InputError("axis bounds must be finite", lo=self.lo, hi=self.hi)
        if self.lo > self.hi:
            raise InputError(f"axis lower bound {self.lo} exceeds upper bound {self.hi}")
        if not (self.step > 0 and math.isfinite(self.step)):
            raise InputError(f"discretization step must be positive, got {self.step}")
        if self.index_lo > self.index_hi:
            raise InputError("empty index range", index_lo=self.index_lo, index_hi=self.index_hi)

    @classmethod
    def from_bounds(cls, lo: float, hi: float, step: float) -> GridAxis:
        lo, hi, step = float(lo), float(hi), float(step)
        if not step > 0:
            raise InputError(f"discretization step must be positive, got {step}")
        if lo > hi:
            raise InputError(f"axis lower bound {lo} exceeds upper bound {hi}")
        n_steps = math.floor((hi - lo) / step + _FIT_SLACK)
        return cls(lo, hi, step, 0, n_steps)

    @property
    def point_count(self) -> int:
        return self.index_hi - self.index_lo + 1

    def coord(self, k: int) -> float:
        return self.lo + k * self.step

    @property
    def coord_lo(self) -> float:
        return self.coord(self.index_lo)

    @property
    def coord_hi(self) -> float:
        return self.coord(self.index_hi)

    def snap(self, v: float) -> int:
        """Nearest grid index to coordinate ``v`` (ties go toward lo), clamped to the range."""
        k = math.ceil((float(v) - self.lo) / self.step - 0.5)
        return min(max(k, self.index_lo), self.index_hi)

    def with_range(self, index_lo: int, index_hi: int) -> GridAxis:
        return GridAxis(self.lo, self.hi, self.step, index_lo, index_hi)


@dataclass(frozen=True)
class SplitResult:
    left: InputDomain
    right: InputDomain
    alpha_left: Fraction
    alpha_right: Fraction

    def side(self, bit: int) -> tuple[InputDomain, Fraction]:
        return (self.left, self.alpha_left) if bit == 0 else (self.right, self.alpha_right)


@dataclass(frozen=True)
class InputDomain:
    axes: tuple[GridAxis, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "axes", tuple(self.axes))
        if not self.axes:
            raise InputError("a domain needs at least one axis")

    @classmethod
    def from_bounds(cls, bounds: Sequence[tuple[float, float]], step: float) -> InputDomain:
        return cls(tuple(GridAxis.from_bounds(lo, hi, step) for lo, hi in bounds))

    @property
    def dim(self) -> int:
        return len(self.axes)

    @property
    def total_points(self) -> int:
        return math.prod(ax.point_count for ax in self.axes)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(ax.point_count for ax in self.axes)

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        lo = np.array([ax.coord_lo for ax in self.axes])
        hi = np.array([ax.coord_hi for ax in self.axes])
        return lo, hi

    def splittable_axes(self) -> list[int]:
        return [i for i, ax in enumerate(self.axes) if ax.point_count >= 2]

    def widest_axis(self) -> int:
        """Axis with the most grid points; ties go to the lowest index."""
        counts = self.shape
        return max(range(self.dim), key=lambda i: (counts[i], -i))

    def _replace_axis(self, axis: int, index_lo: int, index_hi: int) -> InputDomain:
        axes = list(self.axes)
        axes[axis] = axes[axis].with_range(index_lo, index_hi)
        return InputDomain(tuple(axes))

    def split_at_index(self, axis: int, m: int) -> SplitResult:
        """Split into ``[i0..m]`` and ``[m+1..i1]``; ``m`` is clamped so both sides are nonempty."""
        ax = self.axes[axis]
        if ax.point_count < 2:
            raise NotSplittableError(f"axis {axis} holds a single grid point", axis=axis)
        m = min(max(m, ax.index_lo), ax.index_hi - 1)
        left = self._replace_axis(axis, ax.index_lo, m)
        right = self._replace_axis(axis, m + 1, ax.index_hi)
        n = ax.point_count
        return SplitResult(
            left, right, Fraction(m - ax.index_lo + 1, n), Fraction(ax.index_hi - m, n)
        )

    def split_equal(self, axis: int) -> tuple[InputDomain, InputDomain]:
        ax = self.axes[axis]
        res = self.split_at_index(axis, (ax.index_lo + ax.index_hi) // 2)
        return res.left, res.right

    def split_at_value(self, axis: int, v: float) -> SplitResult:
        ax = self.axes[axis]
        if ax.point_count < 2:
            raise NotSplittableError(f"axis {axis} holds a single grid point", axis=axis)
        return self.split_at_index(axis, ax.snap(v))

    def coords(self, indices: np.ndarray) -> np.ndarray:
        """Map an ``(n, d)`` integer index array to coordinates."""
        lo = np.array([ax.lo for ax in self.axes])
        step = np.array([ax.step for ax in self.axes])
        return lo + indices.astype(np.float64) * step

    def sample_indices(self, rng: np.random.Generator, n: int) -> np.ndarray:
        cols = [rng.integers(ax.index_lo, ax.index_hi + 1, size=n) for ax in self.axes]
        return np.stack(cols, axis=1) if n else np.empty((0, self.dim), dtype=np.int64)

    def sample_uniform(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """``n`` independent grid points, each equiprobable."""
        return self.coords(self.sample_indices(rng, n))

    def grid_indices(self, start: int = 0, stop: int | None = None) -> np.ndarray:
        """Index array for flat positions ``start..stop`` in lexicographic order."""
        total = self.total_points
        stop = total if stop is None else min(stop, total)
        flat = np.arange(start, stop, dtype=np.int64)
        offsets = np.stack(np.unravel_index(flat, self.shape), axis=1) if flat.size else np.empty(
            (0, self.dim), dtype=np.int64
        )
        base = np.array([ax.index_lo for ax in self.axes], dtype=np.int64)
        return offsets + base

    def grid_points(self) -> np.ndarray:
        return self.coords(self.grid_indices())

    def iter_blocks(self, block: int = 1 << 16) -> Iterator[np.ndarray]:
        """Coordinates in lexicographic order, ``block`` points at a time."""
        total = self.total_points
        for start in range(0, total, block):
            yield self.coords(self.grid_indices(start, start + block))

    def enumerate_points(self) -> Iterator[tuple[float, ...]]:
        for block in self.iter_blocks():
            for row in block:
                yield tuple(float(c) for c in row)

    def first_point(self) -> np.ndarray:
        return np.array([ax.coord_lo for ax in self.axes])

    def center_point(self) -> np.ndarray:
        return np.array([ax.coord((ax.index_lo + ax.index_hi) // 2) for ax in self.axes])

    def contains(self, point: Sequence[float]) -> bool:
        """True when ``point`` is exactly one of this box's grid points."""
        if len(point) != self.dim:
            return False
        for ax, v in zip(self.axes, point):
            k = math.floor((float(v) - ax.lo) / ax.step + 0.5)
            if not (ax.index_lo <= k <= ax.index_hi and ax.coord(k) == float(v)):
                return False
        return True

    def to_dict(self) -> dict:
        return {
            "axes": [
                {"lo": ax.lo, "hi": ax.hi, "step": ax.step, "index_lo": ax.index_lo, "index_hi": ax.index_hi}
                for ax in self.axes
            ]
        }


def total_points(d: InputDomain) -> int:
    return d.total_points
