import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import brentq

from snowlab.errors import InvalidCube, SanityFailure
from snowlab.generators import collinear, equilateral, random_injection, random_metric, random_ultrametric
from snowlab.invariants import (
    CubeAssignment,
    critical_exponent,
    cube_pairs,
    cube_sums,
    enflo_defect,
    roundness_defect,
    scaling_law_check,
    space_enflo,
    space_roundness,
    square_as_quadruple,
    transfer_check,
    witness_critical,
)
from snowlab.metric_core import PointMap, snowflake, validate

COLLINEAR_SQUARE = CubeAssignment.from_signs(2, {(-1, -1): 0, (1, 1): 2, (-1, 1): 1, (1, -1): 1})


class TestCubes:
    @pytest.mark.parametrize("n", [1, 2, 3, 4])
    def test_counts(self, n):
        diag, edges = cube_pairs(n)
        assert len(diag) == 2 ** (n - 1)
        assert len(edges) == n * 2 ** (n - 1)
        # diagonals join antipodes, edges differ in exactly one sign
        assert all(a ^ b == 2**n - 1 for a, b in diag)
        assert all(bin(a ^ b).count("1") == 1 for a, b in edges)
        assert len({frozenset(e) for e in edges.tolist()}) == len(edges)

    def test_invalid(self, line3):
        with pytest.raises(InvalidCube):
            CubeAssignment(2, (0, 1, 2))
        with pytest.raises(InvalidCube):
            CubeAssignment(0, (0,))
        with pytest.raises(InvalidCube):
            enflo_defect(line3, CubeAssignment(1, (0, 5)), 2.0)

    def test_sign_lookup(self):
        assert COLLINEAR_SQUARE.vertex == (0, 1, 1, 2)
        assert COLLINEAR_SQUARE.at((1, 1)) == 2


class TestDefects:
    @pytest.mark.parametrize("p", [1.0, 2.0, 3.5])
    def test_pair_cube(self, line3, p):
        cube = CubeAssignment(1, (0, 2))
        assert enflo_defect(line3, cube, p, 1.0) == 0.0
        assert enflo_defect(line3, cube, p, 1.5) == pytest.approx((1 - 1.5**p) * 2.0**p)

    @pytest.mark.parametrize("p", [1.0, 2.0, 7.0])
    def test_equilateral_square(self, p):
        sp = equilateral(4)
        assert enflo_defect(sp, CubeAssignment(2, (0, 1, 2, 3)), p) == -2.0
        assert roundness_defect(sp, (0, 1, 2, 3), p) == -2.0

    @pytest.mark.parametrize("p", [1.0, 1.5, 2.0, 3.0])
    def test_collinear_square(self, line3, p):
        assert enflo_defect(line3, COLLINEAR_SQUARE, p) == pytest.approx(2.0**p - 4)
        assert roundness_defect(line3, (0, 1, 2, 1), p) == pytest.approx(2.0**p - 4)

    def test_degenerate_quadruple(self, rng):
        sp = random_metric(rng, 5)
        for a, b in itertools.product(range(5), repeat=2):
            assert roundness_defect(sp, (a, b, a, b), 2.3) <= 0

    @pytest.mark.parametrize("seed", range(5))
    def test_square_is_one_quadruple(self, seed):
        g = np.random.default_rng(seed)
        sp = random_metric(g, 6)
        for _ in range(50):
            cube = CubeAssignment(2, tuple(g.integers(0, 6, 4).tolist()))
            v = cube.vertex
            p = float(g.uniform(1, 5))
            e = enflo_defect(sp, cube, p)
            r1 = roundness_defect(sp, square_as_quadruple(cube), p)
            r2 = roundness_defect(sp, (v[0], v[2], v[3], v[1]), p)
            assert e == pytest.approx(r1, abs=1e-12)
            assert e == pytest.approx(0.5 * (r1 + r2), abs=1e-12)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(1, 3))
    def test_triangle_law_at_one(self, seed, n):
        g = np.random.default_rng(seed)
        sp = random_metric(g, 5)
        cube = CubeAssignment(n, tuple(g.integers(0, 5, 2**n).tolist()))
        assert enflo_defect(sp, cube, 1.0) <= 1e-12
        assert roundness_defect(sp, tuple(g.integers(0, 5, 4).tolist()), 1.0) <= 1e-12

    def test_cube_sums(self, line3):
        s = cube_sums(line3, COLLINEAR_SQUARE)
        assert s.diag_sum(2.0) == 4.0 and s.edge_sum(2.0) == 4.0


def _brute_space_roundness(sp, p_cap=64.0):
    """Exhaustive oracle: root-find each quadruple's defect on a fine grid."""
    best, arg = math.inf, None
    ps = np.geomspace(1, p_cap, 400)
    for quad in itertools.product(range(sp.n), repeat=4):
        f = lambda p: roundness_defect(sp, quad, p)  # noqa: E731
        vals = [f(p) for p in ps]
        for a, b, fa, fb in zip(ps, ps[1:], vals, vals[1:]):
            if fa <= 0 < fb:
                root = brentq(f, a, b, xtol=1e-14)
                if root < best:
                    best, arg = root, quad
                break
    return best, arg


class TestCriticalExponent:
    def test_collinear_quadruple(self, line3):
        rep = witness_critical(line3, (0, 1, 2, 1))
        assert abs(rep.critical - 2.0) <= 1e-9
        assert rep.crossings == (rep.critical,)

    def test_generic_callable(self):
        rep = critical_exponent(lambda p: 2.0**p - 4.0, p_cap=64, grid=32, tol=1e-10)
        assert abs(rep.critical - 2.0) <= 1e-10

    def test_multiple_crossings(self):
        # positive on (2, 3), negative elsewhere on [1, 64]
        rep = critical_exponent(lambda p: -(p - 2) * (p - 3), p_cap=64, grid=64, tol=1e-10)
        assert rep.crossings == pytest.approx((2.0, 3.0), abs=1e-10)
        assert rep.critical == pytest.approx(2.0, abs=1e-10)

    def test_sentinel(self):
        rep = critical_exponent(lambda p: -1.0)
        assert rep.critical == math.inf and not rep.found and rep.crossings == ()

    def test_sanity_failure(self):
        with pytest.raises(SanityFailure):
            critical_exponent(lambda p: 1.0)

    def test_snowflaked_collinear(self, line3):
        rep = witness_critical(snowflake(line3, 0.5), (0, 1, 2, 1))
        assert abs(rep.critical - 4.0) <= 1e-9

    def test_report_json(self, line3):
        js = witness_critical(line3, COLLINEAR_SQUARE).to_json()
        assert js["witness"] == {"kind": "cube", "n": 2, "vertices": [0, 1, 1, 2]}
        assert js["bound"] == "upper"


class TestSpaceScans:
    def test_collinear_roundness(self, line3):
        rep = space_roundness(line3)
        assert abs(rep.critical - 2.0) <= 1e-9
        assert rep.witness == (0, 1, 2, 1)
        assert rep.examined == 81

    def test_against_root_finding_oracle(self):
        sp = random_metric(np.random.default_rng(11), 4)
        best, arg = _brute_space_roundness(sp)
        rep = space_roundness(sp, tol=1e-11)
        assert rep.critical == pytest.approx(best, abs=1e-10)
        assert roundness_defect(sp, rep.witness, rep.critical + 1e-6) > 0

    @pytest.mark.parametrize("space", [equilateral(3), validate([[0, 1], [1, 0]])])
    def test_sentinels(self, space):
        rep = space_roundness(space)
        assert rep.critical == math.inf and rep.witness is None

    @pytest.mark.parametrize("seed", range(3))
    def test_ultrametric_sentinel(self, seed):
        sp = random_ultrametric(np.random.default_rng(seed), 6)
        rep = space_roundness(sp)
        assert rep.critical == math.inf
        assert "ultrametric" in rep.note

    def test_enflo_pairs_only(self, line3):
        assert space_enflo(line3, n_max=1).critical == math.inf

    def test_enflo_collinear(self, line3):
        rep = space_enflo(line3, n_max=2)
        assert abs(rep.critical - 2.0) <= 1e-9
        assert rep.exhaustive and rep.examined == 9 + 81
        assert enflo_defect(line3, rep.witness, rep.critical + 1e-6) > 0

    def test_enflo_snowflaked(self, line3):
        assert abs(space_enflo(snowflake(line3, 0.5), n_max=2).critical - 4.0) <= 1e-9

    def test_enflo_sampling_is_seeded(self):
        sp = random_metric(np.random.default_rng(2), 6)
        a = space_enflo(sp, n_max=3, budget=3000, seed=5)
        b = space_enflo(sp, n_max=3, budget=3000, seed=5)
        assert not a.exhaustive and a.note
        assert a.to_json() == b.to_json()
        assert a.per_dimension[1]["exhaustive"] and not a.per_dimension[2]["exhaustive"]

    def test_roundness_bounds_enflo_at_dimension_two(self):
        sp = random_metric(np.random.default_rng(4), 4)
        # every square is a quadruple, so the exhaustive square scan cannot beat the quadruple scan
        assert space_enflo(sp, 2).critical == pytest.approx(space_roundness(sp).critical, abs=1e-9)


class TestScaling:
    @pytest.mark.parametrize("s", [0.5, 0.25])
    def test_collinear(self, line3, s):
        rep = scaling_law_check(line3, s, tol=1e-11)
        assert rep.finiteness_mismatch == 0
        assert rep.max_rel_err <= 1e-9
        assert rep.space_critical_scaled == pytest.approx(2.0 / s, abs=1e-9)

    @pytest.mark.parametrize("seed", range(3))
    def test_cube_witnesses(self, seed):
        g = np.random.default_rng(seed)
        sp = random_metric(g, 5)
        for _ in range(20):
            cube = CubeAssignment(3, tuple(g.integers(0, 5, 8).tolist()))
            for s in (0.5, 0.25):
                p = float(g.uniform(1, 6))
                # s * p may drop below 1, where only the raw sums are defined
                base = cube_sums(sp, cube)
                expect = base.diag_sum(s * p) - base.edge_sum(s * p)
                assert enflo_defect(snowflake(sp, s), cube, p) == pytest.approx(expect, rel=1e-12, abs=1e-12)


class TestTransfer:
    def test_identity(self, line3):
        res = transfer_check(PointMap.identity(line3), COLLINEAR_SQUARE, 2.0, K=1.0)
        assert (res.A, res.B) == (1.0, 1.0)
        assert res.premise and res.conclusion

    @pytest.mark.parametrize("p", [1.0, 1.5, 2.0])
    def test_random_maps_all_squares(self, p):
        g = np.random.default_rng(int(p * 10))
        src, tgt = random_metric(g, 6), random_metric(g, 6)
        pmap = random_injection(g, src, tgt)
        for v in itertools.product(range(6), repeat=4):
            cube = CubeAssignment(2, v)
            assert transfer_check(pmap, cube, p).holds
            assert transfer_check(pmap, cube, p, K=1.0).holds

    def test_snowflake_map(self, rng):
        sp = random_metric(rng, 6)
        pmap = PointMap.identity(sp, snowflake(sp, 0.5))
        for _ in range(200):
            cube = CubeAssignment(2, tuple(rng.integers(0, 6, 4).tolist()))
            assert transfer_check(pmap, cube, float(rng.uniform(1, 3))).holds

    def test_non_injective(self, line3):
        with pytest.raises(Exception):
            transfer_check(PointMap(line3, line3, [0, 0, 1]), COLLINEAR_SQUARE, 2.0)
