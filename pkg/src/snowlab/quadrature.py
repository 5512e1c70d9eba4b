"""Quadrature for ``int_0^inf |sin(pi t / T)|^q t^-(p+1) dt``.

The half-line is cut at the zeros of the sine, ``t = m T``:

* ``[0, T/2]``: weight ``t^(q-p-1)`` absorbs the algebraic singularity at 0;
* ``[T/2, T]``: weight ``(T - t)^q`` absorbs the zero of the sine at ``T``;
* ``[m T, (m+1) T]`` for ``m >= 1``: weight ``tau^q (T - tau)^q`` on the local
  coordinate ``tau = t - m T``. The sine factor is the same on every period,
  so the whole tail collapses to one rule whose node values carry
  ``sum_{m >= 1} (m T + tau)^-(p+1) = T^-(p+1) zeta(p+1, 1 + tau/T)``.

Each piece is a Gauss-Jacobi rule applied to an analytic function; the node
count doubles until two consecutive rules agree to the requested relative
tolerance.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import special

from .errors import ToleranceUnreachable

START_NODES = 8
MAX_NODES = 1024
#: relative tolerances below this are swamped by rounding in the node sums
TOL_FLOOR = 4 * np.finfo(float).eps
#: absolute floor guarding underflow for very small integrals
ABS_FLOOR = 1e-300


@lru_cache(maxsize=256)
def _jacobi(n: int, alpha: float, beta: float):
    x, w = special.roots_jacobi(n, alpha, beta)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_jacobi(g, a: float, b: float, alpha: float, beta: float, n: int) -> float:
    """``int_a^b (b - t)^alpha (t - a)^beta g(t) dt`` with an ``n``-point rule."""
    x, w = _jacobi(n, float(alpha), float(beta))
    half = 0.5 * (b - a)
    t = a + half * (x + 1.0)
    return half ** (alpha + beta + 1.0) * math.fsum((w * g(t)).tolist())


def _sinc_power(s, T, q):
    """``(sin(pi s / T) / s)^q`` for ``0 < s <= T/2``."""
    return (np.sin(np.pi * s / T) / s) ** q


def _rules(p: float, q: float, T: float, n: int) -> float:
    a = p + 1.0

    def head(t):
        return _sinc_power(t, T, q)

    def panel(t):
        return _sinc_power(T - t, T, q) * t ** -a

    def periods(tau):
        near = np.minimum(tau, T - tau)
        bump = (np.sin(np.pi * near / T) / (tau * (T - tau))) ** q
        return bump * T ** -a * special.zeta(a, 1.0 + tau / T)

    return (
        gauss_jacobi(head, 0.0, 0.5 * T, 0.0, q - p - 1.0, n)
        + gauss_jacobi(panel, 0.5 * T, T, q, 0.0, n)
        + gauss_jacobi(periods, 0.0, T, q, q, n)
    )


@dataclass(frozen=True)
class QuadResult:
    value: float
    error: float  # estimated absolute error
    nodes: int


def sine_power_integral(p: float, q: float, period: float, tol: float) -> QuadResult:
    """``int_0^inf |sin(pi t / period)|^q t^-(p+1) dt`` to relative tolerance ``tol``.

    Requires ``0 < p < q``. Raises :class:`ToleranceUnreachable` when ``tol``
    is below the rounding floor or the node budget runs out.
    """
    if not tol > 0 or tol < TOL_FLOOR:
        raise ToleranceUnreachable(f"relative tolerance {tol!r} is below {TOL_FLOOR:.1e}")
    n = START_NODES
    prev = _rules(p, q, period, n)
    while n < MAX_NODES:
        n *= 2
        cur = _rules(p, q, period, n)
        err = abs(cur - prev)
        if err <= max(tol * abs(cur), ABS_FLOOR):
            return QuadResult(cur, err, n)
        prev = cur
    raise ToleranceUnreachable(
        f"no convergence to {tol!r} with {MAX_NODES} nodes per panel (last change {err!r})"
    )
