"""Enflo-type and roundness defects, per-witness critical exponents and space scans.

A witness is either a combinatorial cube (``2^n`` possibly repeated points) or
an ordered quadruple. Both reduce to two lists of distances, "diagonals" and
"edges", and a defect ``sum diag^p - K^p sum edge^p``. Space-level scans run
every witness through one batched grid-plus-bisection search.

Cube vertices are indexed by bitmask: bit ``i`` of ``b`` set means ``u_i = +1``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import _kernels
from .errors import InvalidCube, SanityFailure, SnowlabError
from .metric_core import FiniteMetricSpace, PointMap, Validity, distortion, snowflake

#: a defect counts as positive only above this fraction of its term mass
ETA = 1e-12
#: relative slack on the transfer conclusion (one rounding per side)
TRANSFER_RTOL = 1e-12
#: witnesses per batch in space scans
CHUNK = 4096


# --------------------------------------------------------------------------
# witnesses
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class CubeAssignment:
    """Points ``x_u`` for ``u`` in ``{-1, 1}^n``, stored by vertex bitmask."""

    n: int
    vertex: tuple[int, ...]

    def __post_init__(self):
        if int(self.n) < 1:
            raise InvalidCube(f"cube dimension must be >= 1, got {self.n}")
        verts = tuple(int(v) for v in self.vertex)
        if len(verts) != 2 ** int(self.n):
            raise InvalidCube(f"a {self.n}-cube needs {2 ** int(self.n)} vertices, got {len(verts)}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "vertex", verts)

    @classmethod
    def from_signs(cls, n: int, points: dict) -> "CubeAssignment":
        """Build from ``{(u_1, ..., u_n): index}`` with ``u_i`` in ``{-1, 1}``."""
        verts = [0] * 2 ** n
        for u, idx in points.items():
            verts[sum(1 << i for i, ui in enumerate(u) if ui > 0)] = idx
        return cls(n, tuple(verts))

    def at(self, u: Sequence[int]) -> int:
        return self.vertex[sum(1 << i for i, ui in enumerate(u) if ui > 0)]

    def check(self, space: FiniteMetricSpace) -> None:
        if any(v < 0 or v >= space.n for v in self.vertex):
            raise InvalidCube(f"cube vertex index out of range for a {space.n}-point space")

    def to_json(self) -> dict:
        return {"kind": "cube", "n": self.n, "vertices": list(self.vertex)}


def cube_pairs(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Vertex-bitmask pairs of the ``2^(n-1)`` diagonals and ``n 2^(n-1)`` edges."""
    full = (1 << n) - 1
    half = np.arange(1 << (n - 1))
    diag = np.stack([half, full ^ half], axis=1)
    edges = []
    for i in range(n):
        low = np.array([b for b in range(1 << n) if not b >> i & 1])
        edges.append(np.stack([low, low | (1 << i)], axis=1))
    return diag, np.concatenate(edges)


# a1 a3, a2 a4 against a1 a2, a2 a3, a3 a4, a4 a1
QUAD_DIAG = np.array([[0, 2], [1, 3]])
QUAD_EDGE = np.array([[0, 1], [1, 2], [2, 3], [3, 0]])


def _witness_distances(dist, points, diag_pairs, edge_pairs):
    """``points`` is ``(W, slots)``; returns ``(W, n_diag)`` and ``(W, n_edge)`` distances."""
    pts = np.asarray(points, dtype=np.int64)
    dg = dist[pts[:, diag_pairs[:, 0]], pts[:, diag_pairs[:, 1]]]
    ed = dist[pts[:, edge_pairs[:, 0]], pts[:, edge_pairs[:, 1]]]
    return dg, ed


@dataclass(frozen=True)
class CubeSums:
    diagonals: np.ndarray
    edges: np.ndarray

    def diag_sum(self, p: float) -> float:
        return math.fsum((self.diagonals ** p).tolist())

    def edge_sum(self, p: float) -> float:
        return math.fsum((self.edges ** p).tolist())


def cube_sums(space: FiniteMetricSpace, cube: CubeAssignment) -> CubeSums:
    cube.check(space)
    dp, ep = cube_pairs(cube.n)
    dg, ed = _witness_distances(space.dist, [cube.vertex], dp, ep)
    return CubeSums(dg[0], ed[0])


def enflo_defect(space: FiniteMetricSpace, cube: CubeAssignment, p: float, K: float = 1.0) -> float:
    """``sum_D d^p - K^p sum_E d^p``; nonpositive means the cube obeys type ``p`` with ``K``."""
    if not p >= 1:
        raise SnowlabError(f"Enflo defect needs p >= 1, got {p!r}")
    if not K > 0:
        raise SnowlabError(f"K must be positive, got {K!r}")
    s = cube_sums(space, cube)
    return s.diag_sum(p) - K ** p * s.edge_sum(p)


def roundness_defect(space: FiniteMetricSpace, quad: Sequence[int], p: float) -> float:
    """``d13^p + d24^p - (d12^p + d23^p + d34^p + d41^p)``."""
    if not p >= 1:
        raise SnowlabError(f"roundness defect needs p >= 1, got {p!r}")
    if len(quad) != 4:
        raise SnowlabError("a roundness witness has exactly four points")
    d = space.dist
    a1, a2, a3, a4 = (int(v) for v in quad)
    lhs = math.fsum([d[a1, a3] ** p, d[a2, a4] ** p])
    rhs = math.fsum([d[a1, a2] ** p, d[a2, a3] ** p, d[a3, a4] ** p, d[a4, a1] ** p])
    return lhs - rhs


def square_as_quadruple(cube: CubeAssignment) -> tuple[int, int, int, int]:
    """The quadruple whose roundness defect equals this 2-cube's Enflo defect (K = 1).

    Going round the square ``x(-,-), x(+,-), x(+,+), x(-,+)`` puts the two cube
    diagonals in the ``a1 a3`` / ``a2 a4`` slots and the four edges in the
    rest. The reverse orientation ``x(-,-), x(-,+), x(+,+), x(+,-)`` has the
    same defect, so the cube defect is also half the sum of the two.
    """
    if cube.n != 2:
        raise InvalidCube("only 2-cubes are squares")
    v = cube.vertex
    return v[0], v[1], v[3], v[2]


# --------------------------------------------------------------------------
# critical exponents
# --------------------------------------------------------------------------


def p_grid(p_cap: float, grid: int) -> np.ndarray:
    return np.geomspace(1.0, p_cap, grid)


@dataclass
class _Scan:
    critical: np.ndarray                 # first upward crossing per witness, inf if none
    crossings: list                      # sorted crossing points per witness


def _scan(evaluate: Callable, count: int, p_cap: float, grid: int, tol: float) -> _Scan:
    """Grid search plus bisection for ``count`` witnesses at once.

    ``evaluate(rows, ps)`` returns ``(defect, mass)`` arrays shaped like
    ``ps`` (one row of exponents per witness in ``rows``). A witness is
    "positive" at ``p`` when ``defect > ETA * mass``.
    """
    if not p_cap > 1:
        raise SnowlabError(f"p_cap must exceed 1, got {p_cap!r}")
    if grid < 16:
        raise SnowlabError(f"grid needs at least 16 points, got {grid}")
    if not tol > 0:
        raise SnowlabError(f"tol must be positive, got {tol!r}")
    ps = p_grid(p_cap, grid)
    rows_all = np.arange(count)
    defect, mass = evaluate(rows_all, np.broadcast_to(ps, (count, grid)))
    insane = np.flatnonzero(defect[:, 0] > tol * np.maximum(mass[:, 0], 1.0))
    if insane.size:
        w = int(insane[0])
        raise SanityFailure(
            f"defect at p = 1 is {defect[w, 0]!r} > 0; the distances break the triangle law",
            witness=w,
        )
    state = defect > ETA * mass
    state[:, 0] = False  # at p = 1 the triangle law holds; positives there are noise
    rows, cols = np.nonzero(state[:, 1:] != state[:, :-1])
    lo, hi = ps[cols].copy(), ps[cols + 1].copy()
    lo_state = state[rows, cols]

    for _ in range(200):
        live = np.flatnonzero(hi - lo > tol)
        if live.size == 0:
            break
        mid = 0.5 * (lo[live] + hi[live])
        stuck = (mid <= lo[live]) | (mid >= hi[live])
        if stuck.all():
            break
        d, m = evaluate(rows[live], mid[:, None])
        same = (d[:, 0] > ETA * m[:, 0]) == lo_state[live]
        lo[live] = np.where(same, mid, lo[live])
        hi[live] = np.where(same, hi[live], mid)

    points = 0.5 * (lo + hi)
    crossings = [[] for _ in range(count)]
    critical = np.full(count, math.inf)
    for r, x, up in zip(rows.tolist(), points.tolist(), (~lo_state).tolist()):
        crossings[r].append(x)
        if up and critical[r] == math.inf:
            critical[r] = x
    return _Scan(critical, crossings)


def _distance_evaluator(diag: np.ndarray, edge: np.ndarray, K: float = 1.0):
    scale = float(K)

    def evaluate(rows, ps):
        ps = np.ascontiguousarray(ps, dtype=np.float64)
        e = edge[rows] * scale if scale != 1.0 else edge[rows]
        return _kernels.defect_grid(diag[rows], e, ps)

    return evaluate


@dataclass(frozen=True)
class CriticalExponentReport:
    """Per-witness or space-level critical exponent.

    ``critical`` is ``inf`` (the sentinel) when no positive defect was found on
    ``[1, p_cap]``; for a space scan it is an upper bound on the invariant,
    certified by ``witness``.
    """

    witness: object
    crossings: tuple[float, ...]
    critical: float
    p_cap: float
    tol: float
    examined: int = 1
    exhaustive: bool = True
    note: str = ""
    per_dimension: tuple = field(default=())

    @property
    def found(self) -> bool:
        return math.isfinite(self.critical)

    def to_json(self) -> dict:
        w = self.witness
        if hasattr(w, "to_json"):
            w = w.to_json()
        elif w is not None:
            w = {"kind": "quadruple", "points": [int(v) for v in w]}
        out = {
            "critical": self.critical,
            "found": self.found,
            "bound": "upper",
            "p_cap": self.p_cap,
            "tol": self.tol,
            "witness": w,
            "crossings": list(self.crossings),
            "examined": self.examined,
            "exhaustive": self.exhaustive,
        }
        if self.per_dimension:
            out["per_dimension"] = [dict(d) for d in self.per_dimension]
        if self.note:
            out["note"] = self.note
        return out


def critical_exponent(defect_fn: Callable, p_cap: float = 64.0, grid: int = 64, tol: float = 1e-9,
                      witness=None) -> CriticalExponentReport:
    """Critical exponent of one defect function on ``[1, p_cap]``.

    ``defect_fn(p)`` returns the defect, or ``(defect, mass)`` where ``mass``
    is the total size of the terms (used to tell rounding noise from a
    genuine sign). Without a mass the sign is taken literally.
    """
    def evaluate(rows, ps):
        flat = np.asarray(ps, dtype=np.float64).ravel()
        vals = [defect_fn(float(p)) for p in flat]
        if vals and isinstance(vals[0], tuple):
            d = np.array([v[0] for v in vals], dtype=np.float64)
            m = np.array([v[1] for v in vals], dtype=np.float64)
        else:
            d = np.array(vals, dtype=np.float64)
            m = np.zeros_like(d)
        shape = np.shape(ps)
        return d.reshape(shape), m.reshape(shape)

    res = _scan(evaluate, 1, p_cap, grid, tol)
    return CriticalExponentReport(witness, tuple(res.crossings[0]), float(res.critical[0]), p_cap, tol)


def witness_critical(space: FiniteMetricSpace, witness, p_cap=64.0, grid=64, tol=1e-9) -> CriticalExponentReport:
    """Critical exponent of a single cube (``CubeAssignment``) or quadruple at ``K = 1``."""
    if isinstance(witness, CubeAssignment):
        witness.check(space)
        dp, ep = cube_pairs(witness.n)
        pts = [witness.vertex]
    else:
        dp, ep = QUAD_DIAG, QUAD_EDGE
        pts = [tuple(int(v) for v in witness)]
    dg, ed = _witness_distances(space.dist, pts, dp, ep)
    res = _scan(_distance_evaluator(dg, ed), 1, p_cap, grid, tol)
    return CriticalExponentReport(witness, tuple(res.crossings[0]), float(res.critical[0]), p_cap, tol)


def scan_witnesses(space: FiniteMetricSpace, points: np.ndarray, diag_pairs, edge_pairs,
                   p_cap=64.0, grid=64, tol=1e-9) -> _Scan:
    """Batched critical exponents for the witnesses in the rows of ``points``."""
    points = np.asarray(points, dtype=np.int64)
    crit = np.empty(len(points))
    crossings: list = []
    for start in range(0, len(points), CHUNK):
        dg, ed = _witness_distances(space.dist, points[start:start + CHUNK], diag_pairs, edge_pairs)
        res = _scan(_distance_evaluator(dg, ed), len(dg), p_cap, grid, tol)
        crit[start:start + len(dg)] = res.critical
        crossings.extend(res.crossings)
    return _Scan(crit, crossings)


def all_quadruples(n: int) -> np.ndarray:
    """Every ordered quadruple of ``range(n)``, repeats allowed, in lexicographic order."""
    return np.array(list(itertools.product(range(n), repeat=4)), dtype=np.int64).reshape(-1, 4)


def _best(scan: _Scan):
    """Index of the smallest critical exponent; ties go to the first witness."""
    i = int(np.argmin(scan.critical))
    return i, float(scan.critical[i])


def space_roundness(space: FiniteMetricSpace, p_cap=64.0, tol=1e-9, grid=64) -> CriticalExponentReport:
    """Smallest critical exponent over all ordered quadruples, with its witness."""
    if space.n < 2:
        raise SnowlabError("roundness scan needs at least two points")
    quads = all_quadruples(space.n)
    scan = scan_witnesses(space, quads, QUAD_DIAG, QUAD_EDGE, p_cap, grid, tol)
    i, crit = _best(scan)
    note = ""
    if space.validity == Validity.ULTRAMETRIC:
        note = "ultrametric: roundness holds for every p"
    if not math.isfinite(crit):
        return CriticalExponentReport(None, (), math.inf, p_cap, tol, len(quads), True, note)
    return CriticalExponentReport(tuple(int(v) for v in quads[i]), tuple(scan.crossings[i]), crit,
                                  p_cap, tol, len(quads), True, note)


def _cube_rng(seed: int, n: int) -> np.random.Generator:
    """Counter-based stream keyed by ``(seed, n)``; sample ``i`` uses block ``i``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed) & (2**64 - 1), n])))


def space_enflo(space: FiniteMetricSpace, n_max: int = 2, p_cap=64.0, tol=1e-9, budget: int = 100_000,
                seed: int = 0, grid: int = 64) -> CriticalExponentReport:
    """Smallest critical exponent at ``K = 1`` over cubes of dimension ``1..n_max``.

    A dimension is scanned exhaustively when its ``|M|^(2^n)`` assignments fit
    in ``budget``; otherwise ``budget`` cubes are sampled and the report is
    flagged non-exhaustive.
    """
    if n_max < 1:
        raise SnowlabError(f"n_max must be >= 1, got {n_max}")
    if budget < 1:
        raise SnowlabError(f"budget must be >= 1, got {budget}")
    best = (math.inf, None, ())
    examined = 0
    exhaustive = True
    dims = []
    for n in range(1, n_max + 1):
        slots = 1 << n
        count = space.n ** slots
        if count <= budget:
            verts = np.array(list(itertools.product(range(space.n), repeat=slots)), dtype=np.int64)
            verts = verts.reshape(-1, slots)
            full = True
        else:
            verts = _cube_rng(seed, n).integers(0, space.n, size=(budget, slots))
            full = False
        dp, ep = cube_pairs(n)
        scan = scan_witnesses(space, verts, dp, ep, p_cap, grid, tol)
        i, crit = _best(scan)
        dims.append({"n": n, "examined": len(verts), "exhaustive": full, "critical": crit})
        examined += len(verts)
        exhaustive &= full
        if crit < best[0]:
            best = (crit, CubeAssignment(n, tuple(verts[i].tolist())), tuple(scan.crossings[i]))
    crit, witness, crossings = best
    note = "" if exhaustive else "sampled: critical is an estimate from random cubes"
    return CriticalExponentReport(witness, crossings, crit, p_cap, tol, examined, exhaustive, note,
                                  tuple(dims))


# --------------------------------------------------------------------------
# Lipschitz transfer and snowflake scaling
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class TransferResult:
    premise: bool
    conclusion: bool
    K: float
    A: float
    B: float

    @property
    def holds(self) -> bool:
        return self.conclusion or not self.premise


def transfer_check(pmap: PointMap, cube: CubeAssignment, p: float, K: float | None = None) -> TransferResult:
    """If the image cube has type ``p`` with constant ``K``, the source cube has it with ``K A B``.

    ``K=None`` uses the smallest constant the image cube admits, so the
    premise holds by construction and only the conclusion is tested.
    """
    if not pmap.injective:
        raise SnowlabError("transfer needs an injective map")
    cube.check(pmap.source)
    rep = distortion(pmap)
    A, B = rep.A, rep.B
    dp, ep = cube_pairs(cube.n)
    src = CubeSums(*(a[0] for a in _witness_distances(pmap.source.dist, [cube.vertex], dp, ep)))
    img_space = pmap.target.dist[np.ix_(pmap.image, pmap.image)]
    img = CubeSums(*(a[0] for a in _witness_distances(img_space, [cube.vertex], dp, ep)))
    diag_img, edge_img = img.diag_sum(p), img.edge_sum(p)
    if K is None:
        K = (diag_img / edge_img) ** (1.0 / p) if edge_img > 0 else 1.0
        premise = True
    else:
        premise = diag_img <= K ** p * edge_img
    bound = (K * A * B) ** p * src.edge_sum(p)
    conclusion = src.diag_sum(p) <= bound * (1.0 + TRANSFER_RTOL)
    return TransferResult(premise, conclusion, float(K), A, B)


@dataclass(frozen=True)
class ScalingReport:
    s: float
    witnesses: int
    compared: int
    max_rel_err: float
    max_abs_err: float
    worst_witness: tuple | None
    finiteness_mismatch: int
    space_critical: float
    space_critical_scaled: float

    def to_json(self) -> dict:
        return {
            "s": self.s,
            "witnesses": self.witnesses,
            "compared": self.compared,
            "max_rel_err": self.max_rel_err,
            "max_abs_err": self.max_abs_err,
            "worst_witness": None if self.worst_witness is None else list(self.worst_witness),
            "finiteness_mismatch": self.finiteness_mismatch,
            "space_critical": self.space_critical,
            "space_critical_snowflaked": self.space_critical_scaled,
        }


def scaling_law_check(space: FiniteMetricSpace, s: float, p_cap=64.0, tol=1e-9, grid=64) -> ScalingReport:
    """Compare every quadruple's critical exponent in ``M^(s)`` with its value in ``M`` over ``s``.

    A mismatch in finiteness only counts when the predicted value
    ``critical / s`` lies inside ``[1, p_cap]`` with room for the bisection.
    """
    quads = all_quadruples(space.n)
    base = scan_witnesses(space, quads, QUAD_DIAG, QUAD_EDGE, p_cap, grid, tol).critical
    flaked = scan_witnesses(snowflake(space, s), quads, QUAD_DIAG, QUAD_EDGE, p_cap, grid, tol).critical
    predicted = base / s
    both = np.isfinite(base) & np.isfinite(flaked)
    in_range = predicted < p_cap - tol
    mismatch = int(np.sum(np.isfinite(flaked) != (np.isfinite(base) & in_range)))
    gap = np.zeros_like(base)
    gap[both] = np.abs(flaked[both] - predicted[both])
    rel = np.zeros_like(base)
    rel[both] = gap[both] / predicted[both]
    worst = int(np.argmax(rel)) if both.any() else None
    return ScalingReport(
        s=float(s),
        witnesses=len(quads),
        compared=int(both.sum()),
        max_rel_err=float(rel.max()) if both.any() else 0.0,
        max_abs_err=float(gap.max()) if both.any() else 0.0,
        worst_witness=None if worst is None else tuple(int(v) for v in quads[worst]),
        finiteness_mismatch=mismatch,
        space_critical=float(base.min()),
        space_critical_scaled=float(flaked.min()),
    )
