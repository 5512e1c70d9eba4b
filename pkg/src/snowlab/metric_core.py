"""Finite metric spaces, snowflaking, and distortion of point maps."""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _kernels
from .errors import (
    DegenerateSpace,
    EmptyThresholds,
    MatrixFormatError,
    NegativeEntry,
    NonSymmetric,
    NonzeroDiagonal,
    SnowlabError,
    SOutOfRange,
    TriangleViolation,
    UltrametricViolation,
)

#: relative slack for (strong) triangle checks, scaled by the largest entry
TRIANGLE_RTOL = 1e-9


class Validity(enum.IntEnum):
    SEMIMETRIC = 0
    METRIC = 1
    ULTRAMETRIC = 2

    @classmethod
    def parse(cls, value) -> "Validity":
        if isinstance(value, cls):
            return value
        try:
            return cls[str(value).upper()]
        except KeyError:
            raise SnowlabError(f"unknown validity level {value!r}") from None

    @property
    def label(self) -> str:
        return self.name.lower()


@dataclass(frozen=True, eq=False)
class FiniteMetricSpace:
    """Dense symmetric distance matrix tagged with the strongest axiom it satisfies.

    Build instances with :func:`validate`; the matrix is stored read-only.
    """

    dist: np.ndarray
    validity: Validity

    @property
    def n(self) -> int:
        return int(self.dist.shape[0])

    def to_json(self) -> dict:
        return {"n": self.n, "dist": self.dist.tolist()}

    def __repr__(self) -> str:
        return f"FiniteMetricSpace(n={self.n}, validity={self.validity.label})"


def triangle_tolerance(dist: np.ndarray) -> float:
    return TRIANGLE_RTOL * float(dist.max()) if dist.size else 0.0


def validate(dist, level=Validity.SEMIMETRIC) -> FiniteMetricSpace:
    """Check the axioms and return the space at the highest level it satisfies.

    Raises the specific violation when the matrix does not reach ``level``.
    """
    level = Validity.parse(level)
    try:
        d = np.array(dist, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise MatrixFormatError(f"distance matrix is not numeric: {exc}") from None
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise MatrixFormatError(f"distance matrix must be square, got shape {d.shape}")
    if not np.all(np.isfinite(d)):
        raise MatrixFormatError("distance matrix has non-finite entries")

    neg = np.argwhere(d < 0)
    if len(neg):
        raise NegativeEntry(neg[0])
    diag = np.flatnonzero(np.diag(d) != 0)
    if len(diag):
        raise NonzeroDiagonal(diag[0])
    asym = np.argwhere(d != d.T)
    if len(asym):
        raise NonSymmetric(asym[0])

    tau = triangle_tolerance(d)
    validity = Validity.SEMIMETRIC
    i, k, j = _kernels.first_violation(d, tau, ultra=False)
    if i < 0:
        validity = Validity.METRIC
        ui, uk, uj = _kernels.first_violation(d, tau, ultra=True)
        if ui < 0:
            validity = Validity.ULTRAMETRIC
        elif level == Validity.ULTRAMETRIC:
            raise UltrametricViolation((ui, uk, uj), d[ui, uk] - max(d[ui, uj], d[uj, uk]))
    elif level >= Validity.METRIC:
        raise TriangleViolation((i, k, j), d[i, k] - d[i, j] - d[j, k])

    d.setflags(write=False)
    return FiniteMetricSpace(d, validity)


def snowflake(space: FiniteMetricSpace, s: float) -> FiniteMetricSpace:
    """The ``s``-snowflake: every distance raised to the power ``s``."""
    s = float(s)
    if not 0.0 < s <= 1.0:
        raise SOutOfRange(f"snowflake exponent must lie in (0, 1], got {s!r}")
    if s == 1.0:
        return space
    return validate(space.dist ** s, level=min(space.validity, Validity.METRIC))


# --------------------------------------------------------------------------
# point maps
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PointMap:
    source: FiniteMetricSpace
    target: FiniteMetricSpace
    image: np.ndarray

    def __post_init__(self):
        img = np.asarray(self.image, dtype=np.int64)
        if img.shape != (self.source.n,):
            raise SnowlabError(f"image must have length {self.source.n}")
        if img.size and (img.min() < 0 or img.max() >= self.target.n):
            raise SnowlabError("image index out of range for the target space")
        img.setflags(write=False)
        object.__setattr__(self, "image", img)

    @property
    def injective(self) -> bool:
        return len(np.unique(self.image)) == len(self.image)

    @classmethod
    def identity(cls, space: FiniteMetricSpace, target: FiniteMetricSpace | None = None) -> "PointMap":
        """Index-identity map, e.g. from a space to its snowflake."""
        return cls(space, space if target is None else target, np.arange(space.n))

    def then(self, other: "PointMap") -> "PointMap":
        """Composition ``other ∘ self``."""
        if other.source is not self.target and not np.array_equal(other.source.dist, self.target.dist):
            raise SnowlabError("maps are not composable")
        return PointMap(self.source, other.target, other.image[self.image])

    def image_distances(self) -> np.ndarray:
        return self.target.dist[np.ix_(self.image, self.image)]


@dataclass(frozen=True)
class DistortionReport:
    """Optimal constants with ``A^-1 d1 <= d2 <= B d1``; ``A`` is ``inf`` when points collapse."""

    A: float
    B: float
    product: float
    witness_lower: tuple[int, int]
    witness_upper: tuple[int, int]
    injective: bool


def _pairs(n):
    return np.triu_indices(n, k=1)


def distortion(pmap: PointMap) -> DistortionReport:
    n = pmap.source.n
    if n < 2:
        raise DegenerateSpace("distortion needs at least two points")
    iu, ju = _pairs(n)
    d1 = pmap.source.dist[iu, ju]
    d2 = pmap.image_distances()[iu, ju]
    live = (d1 > 0) | (d2 > 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        lower = np.where(live, np.where(d2 > 0, d1 / d2, math.inf), -math.inf)
        upper = np.where(live, np.where(d1 > 0, d2 / d1, math.inf), -math.inf)
    if not live.any():
        raise DegenerateSpace("all pairwise distances vanish")
    a = int(np.argmax(lower))
    b = int(np.argmax(upper))
    A = float(lower[a])
    B = float(upper[b])
    collapsed = bool(np.any((d2 == 0) & (d1 > 0)))
    return DistortionReport(
        A=A,
        B=B,
        product=A * B,
        witness_lower=(int(iu[a]), int(ju[a])),
        witness_upper=(int(iu[b]), int(ju[b])),
        injective=not collapsed,
    )


@dataclass(frozen=True)
class ModulusProfile:
    thresholds: tuple[float, ...]
    rho: tuple[float, ...]
    omega: tuple[float, ...]


def moduli(pmap: PointMap, thresholds) -> ModulusProfile:
    """Compression ``rho(t)`` and expansion ``omega(t)`` by an exhaustive pair scan.

    Empty infimum is ``inf``, empty supremum is ``0``.
    """
    t = np.asarray(list(thresholds), dtype=np.float64)
    if t.size == 0:
        raise EmptyThresholds("at least one threshold is required")
    if np.any(t <= 0) or np.any(np.diff(t) < 0):
        raise SnowlabError("thresholds must be positive and sorted ascending")
    iu, ju = _pairs(pmap.source.n)
    d1 = pmap.source.dist[iu, ju]
    d2 = pmap.image_distances()[iu, ju]
    order = np.argsort(d1, kind="stable")
    d1s, d2s = d1[order], d2[order]
    # suffix minimum / prefix maximum of image distances along sorted source distances
    suffix_min = np.append(np.minimum.accumulate(d2s[::-1])[::-1], math.inf)
    prefix_max = np.insert(np.maximum.accumulate(d2s), 0, 0.0)
    rho = suffix_min[np.searchsorted(d1s, t, side="left")]
    omega = prefix_max[np.searchsorted(d1s, t, side="right")]
    return ModulusProfile(tuple(t.tolist()), tuple(rho.tolist()), tuple(omega.tolist()))


# --------------------------------------------------------------------------
# ingestion
# --------------------------------------------------------------------------


def parse_matrix_json(obj) -> np.ndarray:
    if not isinstance(obj, dict) or "dist" not in obj:
        raise MatrixFormatError('matrix JSON must be an object with a "dist" field')
    try:
        d = np.array(obj["dist"], dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise MatrixFormatError(f"bad dist array: {exc}") from None
    if "n" in obj and (d.ndim != 2 or int(obj["n"]) != d.shape[0]):
        raise MatrixFormatError(f'"n" = {obj["n"]} does not match the dist array shape {d.shape}')
    return d


def parse_matrix_csv(text: str) -> np.ndarray:
    rows = [line for line in text.splitlines() if line.strip()]
    try:
        data = [[float(v) for v in line.split(",")] for line in rows]
    except ValueError as exc:
        raise MatrixFormatError(f"bad CSV entry: {exc}") from None
    if not data or any(len(r) != len(data) for r in data):
        raise MatrixFormatError("CSV matrix must have n rows of n values")
    return np.array(data, dtype=np.float64)


def load_matrix(path, level=Validity.SEMIMETRIC) -> FiniteMetricSpace:
    """Read a JSON (``{"n", "dist"}``) or CSV distance matrix and validate it."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise MatrixFormatError(f"cannot read {path}: {exc}") from None
    if path.suffix.lower() == ".csv":
        d = parse_matrix_csv(text)
    else:
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise MatrixFormatError(f"invalid JSON in {path}: {exc}") from None
        d = parse_matrix_json(obj)
    return validate(d, level=level)
