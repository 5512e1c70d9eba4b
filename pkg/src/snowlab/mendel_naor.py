"""Scalar kernel of the isometric snowflake map ``L_p -> L_q`` (``0 < p < q``).

The map sends ``f`` to ``T f(s, t) = c (1 - exp(i t f(s))) / |t|^((p+1)/q)``.
For step functions the ``s``-integral of ``|T f - T g|^q`` factors over cells,
so everything reduces to the kernel

    K(D) = c^q * int_R |1 - exp(i t D)|^q / |t|^(p+1) dt
         = c^q * 2^(q/2) * int_R (1 - cos(t D))^(q/2) / |t|^(p+1) dt,

with ``c`` normalising ``K(1) = 1``. Homogeneity gives ``K(D) = |D|^p``; the
code integrates in ``t`` directly so that identity is checked, not assumed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BadExponents, ToleranceUnreachable
from .lp_spaces import StepFunction, common_grid, dist_Lp, power_integral_Lp
from .quadrature import sine_power_integral


@dataclass(frozen=True)
class MNKernel:
    """Exponents, the normalising constant ``c`` and its certified error.

    ``c_err`` bounds the relative error of ``c^-q``; ``tol`` is the relative
    tolerance every kernel evaluation is carried to.
    """

    p: float
    q: float
    c: float
    c_err: float
    tol: float

    def to_json(self) -> dict:
        return {"p": self.p, "q": self.q, "c": self.c, "c_err": self.c_err, "tol": self.tol}


def _half_line(p: float, q: float, delta: float, tol: float):
    """``int_0^inf (1 - cos(t delta))^(q/2) t^-(p+1) dt`` and its error estimate.

    ``1 - cos x = 2 sin^2(x/2)``, so the integrand is ``2^(q/2) |sin(pi t/T)|^q``
    with period ``T = 2 pi / delta``; the panels end at multiples of ``T/2``.
    """
    res = sine_power_integral(p, q, 2.0 * math.pi / delta, tol)
    scale = 2.0 ** (0.5 * q)
    return scale * res.value, scale * res.error


def normalizer(p: float, q: float, tol: float = 1e-12) -> MNKernel:
    """Solve ``c^-q = 2^(q/2) int_R (1 - cos u)^(q/2) |u|^-(p+1) du`` for ``c``."""
    p, q, tol = float(p), float(q), float(tol)
    if not (0 < p < q and math.isfinite(q)):
        raise BadExponents(f"need 0 < p < q < inf, got p={p!r}, q={q!r}")
    if not tol > 0:
        raise ToleranceUnreachable(f"tolerance must be positive, got {tol!r}")
    half, err = _half_line(p, q, 1.0, tol)
    c_neg_q = 2.0 ** (0.5 * q) * 2.0 * half
    c = c_neg_q ** (-1.0 / q)
    return MNKernel(p=p, q=q, c=c, c_err=err / half, tol=tol)


def kernel_distance(k: MNKernel, delta: float) -> float:
    """``c^q 2^(q/2) int_R (1 - cos(t delta))^(q/2) |t|^-(p+1) dt``; equals ``|delta|^p``."""
    delta = abs(float(delta))
    if delta == 0.0:
        return 0.0
    half, _ = _half_line(k.p, k.q, delta, k.tol)
    return k.c ** k.q * 2.0 ** (0.5 * k.q) * 2.0 * half


@dataclass(frozen=True)
class IsometryCheck:
    lhs: float
    rhs: float
    rel_err: float
    rhs_metric: float

    def to_json(self) -> dict:
        return {"lhs": self.lhs, "rhs": self.rhs, "rel_err": self.rel_err, "rhs_metric": self.rhs_metric}


def mn_isometry_check(k: MNKernel, f: StepFunction, g: StepFunction) -> IsometryCheck:
    """Compare ``||T f - T g||_q^q`` with ``int |f - g|^p``.

    ``lhs`` sums ``width * kernel_distance(f - g)`` over the common cells. ``rhs``
    is ``d_{L_p}(f, g)`` for ``p <= 1`` and ``||f - g||_p^p`` for ``p > 1``, the
    quantity the map preserves in each regime; ``rhs_metric`` is the metric
    itself.
    """
    grid, fv, gv = common_grid(f, g)
    widths = np.diff(grid)
    deltas = fv - gv
    cache: dict[float, float] = {}
    terms = []
    for w, d in zip(widths.tolist(), np.abs(deltas).tolist()):
        if d not in cache:
            cache[d] = kernel_distance(k, d)
        terms.append(w * cache[d])
    lhs = math.fsum(terms)
    rhs = power_integral_Lp(f, g, k.p)
    if rhs == 0.0:
        rel = 0.0 if lhs == 0.0 else math.inf
    else:
        rel = abs(lhs - rhs) / rhs
    return IsometryCheck(lhs, rhs, rel, dist_Lp(f, g, k.p))
