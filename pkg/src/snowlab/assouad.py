"""Multiscale tent-function embedding of ``(R, |.|^p)`` and ``(l_p, d_p)`` into ``l_q``.

The coordinate maps are dilated, translated tents

    psi(t)       = max(0, 2 - |t|)
    psi_jk(t)    = 2^(k*beta - 1) * psi(2^k t - j),      beta = -p/q,

and for ``0 < p < q`` the sum ``S(x, y) = sum_{j,k} |psi_jk(x) - psi_jk(y)|^q``
is pinched between ``A |x-y|^p`` and ``B |x-y|^p`` with

    A = 2^(-2q),    B = 8 * (1/(2^q - 2^p) + 2^(p+q)/(2^p - 1)).

The infinite family is truncated to a finite window of scales
``k_min..k_max`` certified against a range of pair distances; see
:func:`certify_window`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import _kernels
from .errors import BadExponents, InfeasibleWindow, OutOfDomain
from .lp_spaces import SparseSeq

#: scales beyond this would push 2^(k*beta) or 2^k * R outside double range
MAX_ABS_SCALE = 900


@dataclass(frozen=True)
class BoundConstants:
    A: float
    B: float


def _check_exponents(p: float, q: float) -> None:
    if not (p > 0 and q > p and math.isfinite(q)):
        raise BadExponents(f"need 0 < p < q < inf, got p={p!r}, q={q!r}")


def bound_constants(p: float, q: float) -> BoundConstants:
    p, q = float(p), float(q)
    _check_exponents(p, q)
    A = 2.0 ** (-2.0 * q)
    B = 8.0 * (1.0 / (2.0 ** q - 2.0 ** p) + 2.0 ** (p + q) / (2.0 ** p - 1.0))
    return BoundConstants(A, B)


@dataclass(frozen=True)
class PsiFamily:
    p: float
    q: float

    def __post_init__(self):
        object.__setattr__(self, "p", float(self.p))
        object.__setattr__(self, "q", float(self.q))
        _check_exponents(self.p, self.q)

    @property
    def beta(self) -> float:
        return -self.p / self.q

    @cached_property
    def constants(self) -> BoundConstants:
        return bound_constants(self.p, self.q)

    def coefficient(self, k):
        """``2^(k*beta - 1)``, the amplitude at scale ``k`` (half the tent peak)."""
        return np.exp2(np.asarray(k, dtype=np.float64) * self.beta - 1.0)


def psi(t):
    """Tent of height 2 supported on ``[-2, 2]``; 1-Lipschitz."""
    t = np.asarray(t, dtype=np.float64)
    out = np.maximum(0.0, 2.0 - np.abs(t))
    return float(out) if out.ndim == 0 else out


def psi_jk(fam: PsiFamily, j, k, t):
    """``2^(k*beta - 1) * psi(2^k t - j)``, vectorised over ``j``, ``k``, ``t``."""
    j = np.asarray(j)
    k = np.asarray(k, dtype=np.int64)
    u = np.ldexp(np.asarray(t, dtype=np.float64), k)
    val = fam.coefficient(k) * psi(u - j)
    return float(val) if np.ndim(val) == 0 else val


# --------------------------------------------------------------------------
# truncation windows
# --------------------------------------------------------------------------


def dyadic_scale(d: float) -> int:
    """The ``K`` with ``2^-(K+1) <= d <= 2^-K`` (the smaller one at exact powers of 2)."""
    m, e = math.frexp(d)
    return 1 - e if m == 0.5 else -e


def _low_tail(fam: PsiFamily, k_min: int, K: int) -> float:
    """Bound on ``sum_{k < k_min}`` in units of ``|s-t|^p`` (Lipschitz estimate per term)."""
    p, q = fam.p, fam.q
    r = 2.0 ** (-(q - p))
    return 8.0 * 2.0 ** (-q) * 2.0 ** ((q - p) * (k_min - 1 - K)) / (1.0 - r)


def _high_tail(fam: PsiFamily, k_max: int, K: int) -> float:
    """Bound on ``sum_{k > k_max}`` in units of ``|s-t|^p`` (amplitude estimate per term)."""
    p, q = fam.p, fam.q
    return 8.0 * 2.0 ** (p + q) * 2.0 ** (p * (K - k_max)) / (2.0 ** p - 1.0)


@dataclass(frozen=True)
class EmbeddingWindow:
    """Scales ``k_min..k_max`` serving pairs in ``[-R, R]`` at distance ``>= min_gap``.

    ``tail_bound`` is the certified truncation error relative to ``A |x-y|^p``.
    """

    k_min: int
    k_max: int
    radius: float
    min_gap: float
    tail_bound: float

    @property
    def scales(self) -> np.ndarray:
        return np.arange(self.k_min, self.k_max + 1, dtype=np.int64)

    def j_range(self, k: int) -> tuple[int, int]:
        """Inclusive range of ``j`` whose support meets ``[-R, R]``."""
        reach = math.ldexp(self.radius, k)
        return math.ceil(-reach) - 2, math.floor(reach) + 2

    @cached_property
    def offsets(self) -> dict[int, int]:
        """Flat index of ``(j_lo(k), k)`` under the k-major, j-minor enumeration."""
        out, pos = {}, 0
        for k in range(self.k_min, self.k_max + 1):
            lo, hi = self.j_range(k)
            out[k] = pos
            pos += hi - lo + 1
        return out

    @cached_property
    def size(self) -> int:
        lo, hi = self.j_range(self.k_max)
        return self.offsets[self.k_max] + hi - lo + 1

    def flat_index(self, j: int, k: int) -> int:
        return self.offsets[k] + j - self.j_range(k)[0]

    def unflatten(self, index: int) -> tuple[int, int]:
        for k in range(self.k_max, self.k_min - 1, -1):
            if index >= self.offsets[k]:
                return index - self.offsets[k] + self.j_range(k)[0], k
        raise IndexError(index)

    def to_json(self) -> dict:
        return {
            "k_min": self.k_min,
            "k_max": self.k_max,
            "radius": self.radius,
            "min_gap": self.min_gap,
            "tail_bound": self.tail_bound,
        }


def certify_window(fam: PsiFamily, radius: float, min_gap: float, eps: float) -> EmbeddingWindow:
    """Smallest scale window whose discarded terms stay below ``eps * A * |x-y|^p``.

    Pairs covered: ``min_gap <= |x - y| <= 2 * radius``. The budget is split
    evenly between the coarse and fine tails; the scale ``K + 1`` that carries
    the lower-bound witness of every covered pair is always kept.
    """
    radius, min_gap, eps = float(radius), float(min_gap), float(eps)
    if not (radius > 0 and 0 < min_gap <= 2 * radius):
        raise InfeasibleWindow(f"need 0 < min_gap <= 2*radius, got {min_gap!r}, {radius!r}")
    if not 0 < eps < 1:
        raise InfeasibleWindow(f"eps must lie in (0, 1), got {eps!r}")
    A = fam.constants.A
    budget = 0.5 * eps * A
    K_lo = dyadic_scale(2 * radius)
    K_hi = dyadic_scale(min_gap)

    k_min = K_lo + 1
    while _low_tail(fam, k_min, K_lo) > budget:
        k_min -= 1
        if k_min < -MAX_ABS_SCALE:
            raise InfeasibleWindow(f"eps={eps!r} needs scales below {-MAX_ABS_SCALE}")
    k_max = K_hi + 1
    while _high_tail(fam, k_max, K_hi) > budget:
        k_max += 1
        if k_max > MAX_ABS_SCALE:
            raise InfeasibleWindow(f"eps={eps!r} needs scales above {MAX_ABS_SCALE}")
    if abs(max(abs(k_min), abs(k_max)) * fam.beta * math.log(2)) >= 700:
        raise InfeasibleWindow("scale amplitudes leave double range")
    if math.ldexp(radius, k_max) > 2.0 ** 1000:
        raise InfeasibleWindow("radius too large for the fine scales")

    tail = (_low_tail(fam, k_min, K_lo) + _high_tail(fam, k_max, K_hi)) / A
    return EmbeddingWindow(k_min, k_max, radius, min_gap, tail)


# --------------------------------------------------------------------------
# embeddings
# --------------------------------------------------------------------------


def _active(u: float) -> list[tuple[int, float]]:
    """``(j, psi(u - j))`` for the (at most four) ``j`` with ``|u - j| < 2``."""
    fl = math.floor(u)
    r = u - fl
    out = []
    for o in (-1, 0, 1, 2):
        v = 2.0 - abs(r - o)
        if v > 0:
            out.append((fl + o, v))
    return out


def _check_domain(win: EmbeddingWindow, x: float) -> None:
    if not abs(x) <= win.radius:
        raise OutOfDomain(f"|x| = {abs(x)!r} exceeds the window radius {win.radius!r}")


def _embed_terms(fam: PsiFamily, win: EmbeddingWindow, x: float):
    """Yield ``(flat_index, psi_jk(x) - psi_jk(0))`` in enumeration order, zeros dropped."""
    for k in range(win.k_min, win.k_max + 1):
        c = float(fam.coefficient(k))
        at_x = dict(_active(math.ldexp(x, k)))
        at_0 = dict(_active(0.0))
        for j in sorted(set(at_x) | set(at_0)):
            v = c * at_x.get(j, 0.0) - c * at_0.get(j, 0.0)
            if v != 0.0:
                yield win.flat_index(j, k), v


def embed_real(fam: PsiFamily, win: EmbeddingWindow, x: float) -> SparseSeq:
    """``(psi_jk(x) - psi_jk(0))`` over the window, k-major then j."""
    x = float(x)
    _check_domain(win, x)
    return SparseSeq(_embed_terms(fam, win, x))


def embed_seq(fam: PsiFamily, win: EmbeddingWindow, x: SparseSeq) -> SparseSeq:
    """Coordinate-wise embedding: index ``i * window.size + flat(j, k)``."""
    for _, v in x.items():
        _check_domain(win, v)
    stride = win.size
    entries = []
    for i, v in x.items():
        entries.extend((i * stride + idx, val) for idx, val in _embed_terms(fam, win, v))
    return SparseSeq(entries)


# --------------------------------------------------------------------------
# bulk evaluation and certificates
# --------------------------------------------------------------------------


def truncated_sums(fam: PsiFamily, win: EmbeddingWindow, x, y) -> np.ndarray:
    """``S(x_i, y_i)`` summed over the window, for arrays of pairs."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    ks = win.scales
    return _kernels.snowflake_sums(x, y, fam.coefficient(ks), np.ldexp(1.0, ks), fam.q)


def lower_witness(fam: PsiFamily, x, y):
    """The single coordinate that certifies the lower bound for each pair.

    With ``2^-(K+1) <= |s-t| <= 2^-K`` and ``J`` the largest index with both
    points in the support of ``psi_{J,K+1}``: if the right point sits in the
    rising half of that tent, coordinate ``(J, K+1)`` does it, otherwise
    ``(J+1, K+1)`` does. Returns ``(j, k, case, value)`` arrays with
    ``value = |psi_jk(s) - psi_jk(t)|^q``.
    """
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    y = np.atleast_1d(np.asarray(y, dtype=np.float64))
    s, t = np.minimum(x, y), np.maximum(x, y)
    K = np.array([dyadic_scale(d) for d in (t - s).tolist()], dtype=np.int64)
    u_s = np.ldexp(s, K + 1)
    u_t = np.ldexp(t, K + 1)
    J = np.floor(u_s) + 2.0
    case = np.where(u_t <= J, 1, 2)
    j = np.where(case == 1, J, J + 1.0)
    value = np.abs(psi_jk(fam, j, K + 1, s) - psi_jk(fam, j, K + 1, t)) ** fam.q
    return j, K + 1, case, value


@dataclass(frozen=True)
class BoundCheck:
    """Worst observed ratios ``S / |x-y|^p`` against the closed-form constants."""

    A: float
    B: float
    ratio_min: float
    ratio_max: float
    witness_min: tuple[float, float]
    witness_max: tuple[float, float]
    lower_violations: int
    upper_violations: int
    pairs: int

    @property
    def ok(self) -> bool:
        return self.lower_violations == 0 and self.upper_violations == 0


def check_bounds(fam: PsiFamily, win: EmbeddingWindow, S, gap_power, xs, ys) -> BoundCheck:
    """Compare sums ``S`` with ``(1 - eps) A gap_power`` and ``B gap_power``."""
    S = np.asarray(S, dtype=np.float64)
    g = np.asarray(gap_power, dtype=np.float64)
    live = g > 0
    ratio = np.full(S.shape, np.nan)
    ratio[live] = S[live] / g[live]
    A, B = fam.constants.A, fam.constants.B
    low = int(np.sum(live & (S < (1.0 - win.tail_bound) * A * g)))
    high = int(np.sum(live & (S > B * g)))
    if live.any():
        r = np.where(live, ratio, np.inf)
        i_min = int(np.argmin(r))
        r = np.where(live, ratio, -np.inf)
        i_max = int(np.argmax(r))
        rmin, rmax = float(ratio[i_min]), float(ratio[i_max])
    else:
        i_min = i_max = 0
        rmin, rmax = math.nan, math.nan
    return BoundCheck(
        A=A,
        B=B,
        ratio_min=rmin,
        ratio_max=rmax,
        witness_min=(xs[i_min], ys[i_min]),
        witness_max=(xs[i_max], ys[i_max]),
        lower_violations=low,
        upper_violations=high,
        pairs=int(live.sum()),
    )


def sample_pairs(rng: np.random.Generator, n: int, radius: float, min_gap: float):
    """``n`` uniform pairs in ``[-R, R]^2`` with ``|x - y| >= min_gap`` (rejection)."""
    xs = np.empty(n)
    ys = np.empty(n)
    filled = 0
    while filled < n:
        want = n - filled
        a = rng.uniform(-radius, radius, size=want)
        b = rng.uniform(-radius, radius, size=want)
        keep = np.abs(a - b) >= min_gap
        m = int(keep.sum())
        xs[filled:filled + m] = a[keep]
        ys[filled:filled + m] = b[keep]
        filled += m
    return xs, ys


def verify_real(fam: PsiFamily, win: EmbeddingWindow, xs, ys) -> BoundCheck:
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    S = truncated_sums(fam, win, xs, ys)
    return check_bounds(fam, win, S, np.abs(xs - ys) ** fam.p, xs.tolist(), ys.tolist())


def sample_sparse_pairs(rng, n: int, nnz: int, length: int, radius: float, min_gap: float):
    """Pairs of ``nnz``-sparse sequences on indices ``< length``.

    Every coordinate difference is either 0 or at least ``min_gap``, so the
    window certificate applies coordinate by coordinate.
    """
    pairs = []
    for _ in range(n):
        ix = np.sort(rng.choice(length, size=nnz, replace=False))
        iy = np.sort(rng.choice(length, size=nnz, replace=False))
        xd = dict(zip(ix.tolist(), rng.uniform(-radius, radius, size=nnz).tolist()))
        yd = dict(zip(iy.tolist(), rng.uniform(-radius, radius, size=nnz).tolist()))
        for idx in sorted(set(xd) | set(yd)):
            while True:
                a, b = xd.get(idx, 0.0), yd.get(idx, 0.0)
                if abs(a - b) >= min_gap:
                    break
                if idx in xd:
                    xd[idx] = float(rng.uniform(-radius, radius))
                else:
                    yd[idx] = float(rng.uniform(-radius, radius))
        pairs.append((SparseSeq(xd.items()), SparseSeq(yd.items())))
    return pairs


def seq_sums(fam: PsiFamily, win: EmbeddingWindow, pairs):
    """Per pair: the triple sum over coordinates, scales and shifts, and ``sum |x_i - y_i|^p``."""
    xs, ys, owner = [], [], []
    for n, (x, y) in enumerate(pairs):
        xd, yd = x.as_dict(), y.as_dict()
        for idx in sorted(set(xd) | set(yd)):
            a, b = xd.get(idx, 0.0), yd.get(idx, 0.0)
            _check_domain(win, a)
            _check_domain(win, b)
            xs.append(a)
            ys.append(b)
            owner.append(n)
    xs = np.asarray(xs)
    ys = np.asarray(ys)
    owner = np.asarray(owner, dtype=np.int64)
    per = truncated_sums(fam, win, xs, ys)
    S = np.zeros(len(pairs))
    G = np.zeros(len(pairs))
    np.add.at(S, owner, per)
    np.add.at(G, owner, np.abs(xs - ys) ** fam.p)
    return S, G


def verify_seq(fam: PsiFamily, win: EmbeddingWindow, pairs) -> BoundCheck:
    S, G = seq_sums(fam, win, pairs)
    labels_x = [x.to_json() for x, _ in pairs]
    labels_y = [y.to_json() for _, y in pairs]
    return check_bounds(fam, win, S, G, labels_x, labels_y)
