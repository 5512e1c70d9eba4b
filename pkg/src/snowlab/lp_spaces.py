"""Discretised l_p / L_p elements and their metrics.

For ``0 < p <= 1`` the metric is the p-th power sum (no root); for
``p >= 1`` it is the norm distance. ``p = 1`` is served by the norm branch and
the two readings agree there.

Sums use :func:`math.fsum` over a fixed ordering, so they are correctly
rounded and reproducible bit-for-bit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import SnowlabError


@dataclass(frozen=True)
class PExponent:
    p: float

    def __post_init__(self):
        if not (self.p > 0 and math.isfinite(self.p)):
            raise SnowlabError(f"exponent must be positive and finite, got {self.p!r}")

    @property
    def regime(self) -> str:
        return "fspace" if self.p < 1 else "banach"

    def finish(self, power_sum: float) -> float:
        """Turn ``sum |diff|^p`` into the distance of this regime."""
        return power_sum if self.p < 1 else power_sum ** (1.0 / self.p)


def as_exponent(p) -> PExponent:
    return p if isinstance(p, PExponent) else PExponent(float(p))


# --------------------------------------------------------------------------
# sequences
# --------------------------------------------------------------------------


class SparseSeq:
    """Finitely supported real sequence.

    Indices are Python ints (embedding coordinates can exceed 64 bits);
    entries are kept sorted with zeros dropped.
    """

    __slots__ = ("indices", "values")

    def __init__(self, entries: Iterable[tuple[int, float]] = ()):
        acc: dict[int, float] = {}
        for idx, val in entries:
            idx = int(idx)
            if idx < 0:
                raise SnowlabError(f"sequence index must be nonnegative, got {idx}")
            if idx in acc:
                raise SnowlabError(f"duplicate sequence index {idx}")
            acc[idx] = float(val)
        keys = sorted(k for k, v in acc.items() if v != 0.0)
        self.indices: tuple[int, ...] = tuple(keys)
        self.values: tuple[float, ...] = tuple(acc[k] for k in keys)

    @classmethod
    def from_dense(cls, values) -> "SparseSeq":
        return cls(enumerate(np.asarray(values, dtype=np.float64).tolist()))

    @classmethod
    def zero(cls) -> "SparseSeq":
        return cls()

    def items(self):
        return zip(self.indices, self.values)

    def as_dict(self) -> dict[int, float]:
        return dict(self.items())

    def __len__(self) -> int:
        return len(self.indices)

    def __eq__(self, other) -> bool:
        return isinstance(other, SparseSeq) and self.indices == other.indices and self.values == other.values

    def __hash__(self):
        return hash((self.indices, self.values))

    def __repr__(self) -> str:
        body = ", ".join(f"{i}: {v!r}" for i, v in list(self.items())[:6])
        more = ", ..." if len(self) > 6 else ""
        return f"SparseSeq({{{body}{more}}})"

    def to_json(self) -> dict:
        return {"entries": [[i, v] for i, v in self.items()]}

    @classmethod
    def from_json(cls, obj) -> "SparseSeq":
        return cls((int(i), float(v)) for i, v in obj["entries"])


def _diff_terms(x: SparseSeq, y: SparseSeq):
    xd, yd = x.as_dict(), y.as_dict()
    for idx in sorted(set(xd) | set(yd)):
        yield xd.get(idx, 0.0) - yd.get(idx, 0.0)


def power_sum_lp(x: SparseSeq, y: SparseSeq, p: float) -> float:
    """``sum_n |x_n - y_n|^p`` over the union of supports."""
    return math.fsum(abs(v) ** p for v in _diff_terms(x, y))


def dist_lp(x: SparseSeq, y: SparseSeq, p) -> float:
    """Distance in ``(l_p, d_p)``: power sum for ``p < 1``, norm distance for ``p >= 1``.

    >>> e1, e2 = SparseSeq([(1, 1.0)]), SparseSeq([(2, 1.0)])
    >>> dist_lp(e1, e2, 0.5)
    2.0
    """
    pe = as_exponent(p)
    return pe.finish(power_sum_lp(x, y, pe.p))


# --------------------------------------------------------------------------
# step functions on [0, 1]
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class StepFunction:
    """Piecewise constant on ``[breaks[i], breaks[i+1])``; breaks run from 0 to 1."""

    breaks: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        b = np.array(self.breaks, dtype=np.float64)
        v = np.array(self.values, dtype=np.float64)
        if b.ndim != 1 or b.size < 2 or b[0] != 0.0 or b[-1] != 1.0:
            raise SnowlabError("breaks must start at 0 and end at 1")
        if np.any(np.diff(b) <= 0):
            raise SnowlabError("breaks must be strictly increasing")
        if v.shape != (b.size - 1,):
            raise SnowlabError("need exactly one value per cell")
        if not np.all(np.isfinite(v)):
            raise SnowlabError("step values must be finite")
        b.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "breaks", b)
        object.__setattr__(self, "values", v)

    @classmethod
    def constant(cls, value: float) -> "StepFunction":
        return cls(np.array([0.0, 1.0]), np.array([float(value)]))

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.breaks)

    def refine(self, grid: np.ndarray) -> np.ndarray:
        """Values on the cells of ``grid`` (a refinement of ``self.breaks``)."""
        cell = np.searchsorted(self.breaks, grid[:-1], side="right") - 1
        return self.values[cell]

    def canonical(self) -> "StepFunction":
        """Merge neighbouring cells that carry the same value."""
        keep = np.flatnonzero(np.diff(self.values) != 0) + 1
        b = np.concatenate(([0.0], self.breaks[keep], [1.0]))
        v = self.values[np.concatenate(([0], keep))]
        return StepFunction(b, v)

    def __call__(self, s):
        s = np.asarray(s, dtype=np.float64)
        cell = np.clip(np.searchsorted(self.breaks, s, side="right") - 1, 0, self.values.size - 1)
        return self.values[cell]

    def to_json(self) -> dict:
        return {"breaks": self.breaks.tolist(), "values": self.values.tolist()}

    @classmethod
    def from_json(cls, obj) -> "StepFunction":
        return cls(np.asarray(obj["breaks"]), np.asarray(obj["values"]))


def common_grid(f: StepFunction, g: StepFunction):
    """Shared breakpoints and both functions' values on them."""
    grid = np.union1d(f.breaks, g.breaks)
    return grid, f.refine(grid), g.refine(grid)


def power_integral_Lp(f: StepFunction, g: StepFunction, p: float) -> float:
    """``int_0^1 |f - g|^p``, exact for step functions."""
    grid, fv, gv = common_grid(f, g)
    w = np.diff(grid)
    return math.fsum((w * np.abs(fv - gv) ** p).tolist())


def dist_Lp(f: StepFunction, g: StepFunction, p) -> float:
    pe = as_exponent(p)
    return pe.finish(power_integral_Lp(f, g, pe.p))


# --------------------------------------------------------------------------
# the {-1, 0, 1}-valued embedding of L_1 into L_2
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class StepFunction2D:
    """Piecewise constant on the rectangles ``s_breaks x t_breaks``."""

    s_breaks: np.ndarray
    t_breaks: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values)
        if vals.shape != (len(self.s_breaks) - 1, len(self.t_breaks) - 1):
            raise SnowlabError("values must have one entry per rectangle")

    def refine(self, s_grid, t_grid) -> np.ndarray:
        si = np.searchsorted(self.s_breaks, s_grid[:-1], side="right") - 1
        ti = np.searchsorted(self.t_breaks, t_grid[:-1], side="right") - 1
        inside = (ti >= 0) & (ti < len(self.t_breaks) - 1)
        out = self.values[np.ix_(si, np.clip(ti, 0, len(self.t_breaks) - 2))]
        return np.where(inside[None, :], out, 0)


def indicator_embed(f: StepFunction) -> StepFunction2D:
    """``T f(s, t) = 1`` if ``0 <= t <= f(s)``, ``-1`` if ``f(s) < t < 0``, else ``0``.

    The t-axis is cut to ``[min(0, f), max(0, f)]``; outside it ``T f`` vanishes.
    """
    t_breaks = np.union1d([0.0], f.values)
    lo, hi = t_breaks[:-1], t_breaks[1:]
    fv = f.values[:, None]
    pos = (lo[None, :] >= 0) & (hi[None, :] <= fv)
    neg = (lo[None, :] >= fv) & (hi[None, :] <= 0)
    values = pos.astype(np.int8) - neg.astype(np.int8)
    if t_breaks.size == 1:
        t_breaks = np.array([0.0, 0.0])
        values = np.zeros((f.values.size, 1), dtype=np.int8)
    return StepFunction2D(f.breaks, t_breaks, values)


def l2_distance_sq(F: StepFunction2D, G: StepFunction2D) -> float:
    """``||F - G||_{L_2}^2`` computed cell by cell on the common refinement."""
    s_grid = np.union1d(F.s_breaks, G.s_breaks)
    t_grid = np.union1d(F.t_breaks, G.t_breaks)
    if t_grid.size < 2:
        return 0.0
    diff = F.refine(s_grid, t_grid).astype(np.float64) - G.refine(s_grid, t_grid)
    area = np.diff(s_grid)[:, None] * np.diff(t_grid)[None, :]
    return math.fsum((area * diff * diff).ravel().tolist())
