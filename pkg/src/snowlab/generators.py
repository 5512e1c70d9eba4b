"""Seeded random inputs: metric spaces, ultrametrics, step functions, point maps."""
from __future__ import annotations

import numpy as np
from scipy.sparse.csgraph import shortest_path

from .lp_spaces import StepFunction
from .metric_core import FiniteMetricSpace, PointMap, Validity, validate


def rng_for(seed) -> np.random.Generator:
    return np.random.default_rng(seed)


def collinear(points) -> FiniteMetricSpace:
    """Points on the line with ``|x_i - x_j|``."""
    x = np.asarray(points, dtype=np.float64)
    return validate(np.abs(x[:, None] - x[None, :]), Validity.METRIC)


def equilateral(n: int, d: float = 1.0) -> FiniteMetricSpace:
    dist = np.full((n, n), float(d))
    np.fill_diagonal(dist, 0.0)
    return validate(dist)


def random_metric(rng: np.random.Generator, n: int, low: float = 1.0, high: float = 2.0) -> FiniteMetricSpace:
    """Shortest-path metric of the complete graph with uniform edge weights."""
    w = rng.uniform(low, high, size=(n, n))
    w = np.triu(w, 1)
    w = w + w.T
    d = shortest_path(w, method="FW", directed=False)
    # shortest paths can differ from their mirror by one rounding
    d = np.minimum(d, d.T)
    np.fill_diagonal(d, 0.0)
    return validate(d, Validity.METRIC)


def random_ultrametric(rng: np.random.Generator, n: int) -> FiniteMetricSpace:
    """Ultrametric from a random agglomerative hierarchy.

    Clusters merge two at a time at strictly increasing heights; the distance
    between two points is the height of the merge that first joins them.
    """
    clusters = [[i] for i in range(n)]
    dist = np.zeros((n, n))
    heights = np.cumsum(rng.uniform(0.1, 1.0, size=max(n - 1, 0))) + 0.5
    for h in heights:
        a, b = sorted(rng.choice(len(clusters), size=2, replace=False).tolist())
        for i in clusters[a]:
            for j in clusters[b]:
                dist[i, j] = dist[j, i] = h
        clusters[a] = clusters[a] + clusters.pop(b)
    return validate(dist, Validity.ULTRAMETRIC)


def random_step_function(rng: np.random.Generator, cells: int, low: float = -2.0, high: float = 2.0) -> StepFunction:
    inner = np.sort(rng.uniform(0.0, 1.0, size=cells - 1))
    breaks = np.concatenate(([0.0], inner, [1.0]))
    return StepFunction(breaks, rng.uniform(low, high, size=cells))


def random_injection(rng: np.random.Generator, source: FiniteMetricSpace, target: FiniteMetricSpace) -> PointMap:
    image = rng.choice(target.n, size=source.n, replace=False)
    return PointMap(source, target, image)
