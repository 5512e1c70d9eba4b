"""The numba and numpy kernel variants must agree."""
import os
import subprocess
import sys

import numpy as np
import pytest

from snowlab import _kernels
from snowlab._backend import HAVE_NUMBA, configure_threads
from snowlab.assouad import PsiFamily, certify_window
from snowlab.generators import random_metric

pytestmark = pytest.mark.skipif(not HAVE_NUMBA, reason="numba not installed")


def both(name):
    return _kernels.KERNELS[name]


@pytest.mark.parametrize("ultra", [False, True])
@pytest.mark.parametrize("seed", range(6))
def test_first_violation(seed, ultra):
    g = np.random.default_rng(seed)
    d = random_metric(g, 7).dist.copy()
    if seed % 2:
        i, k = g.choice(7, 2, replace=False)
        d[i, k] = d[k, i] = 10.0
    np_fn, jit_fn = both("first_violation")
    assert tuple(np_fn(d, 1e-9, ultra)) == tuple(int(v) for v in jit_fn(d, 1e-9, ultra))


@pytest.mark.parametrize("pq", [(1.0, 2.0), (0.5, 1.0), (0.7, 2.5)])
def test_snowflake_sums(pq, rng):
    fam = PsiFamily(*pq)
    win = certify_window(fam, 10.0, 2.0**-10, 1e-6)
    x = rng.uniform(-10, 10, 500)
    y = rng.uniform(-10, 10, 500)
    y[:10] = x[:10]  # coincident points give zero
    ks = win.scales
    args = (x, y, fam.coefficient(ks), np.ldexp(1.0, ks), fam.q)
    a, b = (fn(*args) for fn in both("snowflake_sums"))
    assert np.all(a[:10] == 0) and np.all(b[:10] == 0)
    np.testing.assert_allclose(a, b, rtol=1e-13)


def test_defect_grid(rng):
    diag = rng.uniform(0, 3, (50, 2))
    edge = rng.uniform(0, 3, (50, 4))
    edge[0] = 0.0
    ps = np.broadcast_to(np.geomspace(1, 64, 20), (50, 20)).copy()
    (d1, m1), (d2, m2) = (fn(diag, edge, ps) for fn in both("defect_grid"))
    np.testing.assert_allclose(d1, d2, rtol=1e-13, atol=1e-300)
    np.testing.assert_allclose(m1, m2, rtol=1e-13)


def test_threads_clamped():
    import numba

    assert configure_threads(10**6) == numba.config.NUMBA_NUM_THREADS
    assert configure_threads(1) == 1
    configure_threads()


@pytest.mark.parametrize("flag, expected", [("0", "numpy"), ("off", "numpy"), ("1", "numba")])
def test_env_flag_selects_backend(flag, expected):
    code = "from snowlab._backend import backend_name; print(backend_name())"
    env = {**os.environ, "SNOWLAB_NUMBA": flag}
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == expected


def test_numpy_backend_end_to_end():
    code = (
        "import math; from snowlab.generators import collinear; from snowlab.invariants import space_roundness;"
        "print(repr(space_roundness(collinear([0, 1, 2])).critical))"
    )
    env = {**os.environ, "SNOWLAB_NUMBA": "0"}
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert abs(float(out.stdout) - 2.0) <= 1e-9
