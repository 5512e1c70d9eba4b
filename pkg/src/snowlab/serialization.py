"""JSON with an explicit infinity sentinel.

Floats are written with ``repr`` (shortest round-trip form), so
``loads(dumps(x)) == x`` bit for bit. ``+inf`` becomes the string ``"+inf"``.
"""
from __future__ import annotations

import json
import math

import numpy as np

INF = "+inf"
NEG_INF = "-inf"
NAN = "nan"


def encode(obj):
    """Recursively replace non-finite floats and numpy scalars with JSON-safe values."""
    if isinstance(obj, dict):
        return {str(k): encode(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [encode(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return encode(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return NAN
        if math.isinf(x):
            return INF if x > 0 else NEG_INF
        return x
    return obj


def decode(obj):
    """Inverse of :func:`encode` for the sentinels."""
    if isinstance(obj, dict):
        return {k: decode(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [decode(v) for v in obj]
    if obj == INF:
        return math.inf
    if obj == NEG_INF:
        return -math.inf
    if obj == NAN:
        return math.nan
    return obj


def dumps(obj) -> str:
    return json.dumps(encode(obj), indent=2, allow_nan=False) + "\n"


def loads(text: str):
    return decode(json.loads(text))
