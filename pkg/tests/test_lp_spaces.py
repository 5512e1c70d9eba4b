import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from snowlab.errors import SnowlabError
from snowlab.generators import random_step_function
from snowlab.lp_spaces import (
    PExponent,
    SparseSeq,
    StepFunction,
    dist_Lp,
    dist_lp,
    indicator_embed,
    l2_distance_sq,
)

E1 = SparseSeq([(1, 1.0)])
E2 = SparseSeq([(2, 1.0)])
EXPONENTS = [0.3, 0.5, 1.0, 1.7, 2.0, 3.0]


def test_regimes():
    assert PExponent(0.5).regime == "fspace"
    assert PExponent(1.0).regime == "banach"
    assert PExponent(2.5).regime == "banach"
    with pytest.raises(SnowlabError):
        PExponent(0.0)


class TestSparseSeq:
    def test_zeros_dropped_and_sorted(self):
        x = SparseSeq([(5, 2.0), (1, 0.0), (3, -1.0)])
        assert x.indices == (3, 5)
        assert x.values == (-1.0, 2.0)

    def test_big_indices(self):
        big = 2**80 + 7
        x = SparseSeq([(big, 1.5)])
        assert SparseSeq.from_json(x.to_json()) == x
        assert dist_lp(x, SparseSeq(), 1.0) == 1.5

    def test_duplicate_rejected(self):
        with pytest.raises(SnowlabError):
            SparseSeq([(1, 1.0), (1, 2.0)])


class TestDistlp:
    def test_unit_vectors(self):
        assert dist_lp(E1, E2, 0.5) == 2.0
        assert dist_lp(E1, E2, 2.0) == math.sqrt(2)
        assert dist_lp(E1, E1, 0.7) == 0.0

    @pytest.mark.parametrize("p", EXPONENTS)
    def test_metric_axioms(self, p, rng):
        seqs = [SparseSeq.from_dense(rng.normal(size=6) * (rng.random(6) < 0.6)) for _ in range(5)]
        for x, y, z in itertools.product(seqs, repeat=3):
            dxy = dist_lp(x, y, p)
            assert dxy == dist_lp(y, x, p)
            assert (dxy == 0) == (x == y)
            assert dist_lp(x, z, p) <= dxy + dist_lp(y, z, p) + 1e-12

    @settings(max_examples=100, deadline=None)
    @given(st.floats(-100, 100), st.floats(-100, 100), st.floats(0.05, 1.0), st.floats(0.05, 1.0))
    def test_scalar_snowflake_relation(self, a, b, q, r):
        q, p = sorted((q, r))
        x, y = SparseSeq([(0, a)]), SparseSeq([(0, b)])
        if p == 1.0:
            return
        assert dist_lp(x, y, p) == pytest.approx(dist_lp(x, y, q) ** (p / q), rel=1e-12, abs=1e-300)


def _riemann(f, g, p, m=10**6):
    s = (np.arange(m) + 0.5) / m
    val = np.mean(np.abs(f(s) - g(s)) ** p)
    return val if p < 1 else val ** (1 / p)


class TestDistLp:
    def test_constant(self):
        one, zero = StepFunction.constant(1.0), StepFunction.constant(0.0)
        for p in EXPONENTS:
            assert dist_Lp(one, zero, p) == 1.0

    def test_half_interval(self):
        f = StepFunction([0, 0.5, 1], [1.0, 0.0])
        assert dist_Lp(f, StepFunction.constant(0.0), 0.5) == 0.5

    @pytest.mark.parametrize("p", [0.5, 1.0, 2.0])
    def test_riemann_oracle(self, p, rng):
        f, g = random_step_function(rng, 4), random_step_function(rng, 4)
        assert dist_Lp(f, g, p) == pytest.approx(_riemann(f, g, p), abs=1e-6)

    @pytest.mark.parametrize("p", EXPONENTS)
    def test_metric_axioms(self, p, rng):
        fs = [random_step_function(rng, 3) for _ in range(4)]
        for f, g, h in itertools.product(fs, repeat=3):
            assert dist_Lp(f, g, p) == dist_Lp(g, f, p)
            assert dist_Lp(f, h, p) <= dist_Lp(f, g, p) + dist_Lp(g, h, p) + 1e-12
        f = fs[0]
        assert dist_Lp(f, f, p) == 0.0

    def test_zero_iff_equal_on_canonical_form(self):
        f = StepFunction([0, 0.25, 0.5, 1], [1.0, 1.0, 2.0])
        g = StepFunction([0, 0.5, 1], [1.0, 2.0])
        assert dist_Lp(f, g, 0.5) == 0.0
        assert f.canonical().breaks.tolist() == g.breaks.tolist()

    def test_uniform_grid_matches_sequence_metric(self, rng):
        m = 8
        breaks = np.linspace(0, 1, m + 1)
        fv, gv = rng.normal(size=m), rng.normal(size=m)
        f, g = StepFunction(breaks, fv), StepFunction(breaks, gv)
        cells = SparseSeq.from_dense(fv / m), SparseSeq.from_dense(gv / m)
        assert dist_Lp(f, g, 1.0) == pytest.approx(dist_lp(*cells, 1.0), rel=1e-14)

    @pytest.mark.parametrize(
        "breaks, values",
        [([0.1, 1], [1.0]), ([0, 0.9], [1.0]), ([0, 0.5, 0.5, 1], [1, 2, 3]), ([0, 1], [1.0, 2.0]), ([0, 1], [math.nan])],
    )
    def test_invalid(self, breaks, values):
        with pytest.raises(SnowlabError):
            StepFunction(breaks, values)

    def test_json_round_trip(self, rng):
        f = random_step_function(rng, 5)
        g = StepFunction.from_json(f.to_json())
        assert np.array_equal(f.breaks, g.breaks) and np.array_equal(f.values, g.values)

    def test_reproducible_bits(self, rng):
        f, g = random_step_function(rng, 50), random_step_function(rng, 50)
        assert dist_Lp(f, g, 0.3) == dist_Lp(f, g, 0.3)


class TestIndicator:
    def test_unit(self):
        one, zero = StepFunction.constant(1.0), StepFunction.constant(0.0)
        assert l2_distance_sq(indicator_embed(one), indicator_embed(zero)) == 1.0

    def test_zero_function(self):
        T = indicator_embed(StepFunction.constant(0.0))
        assert not np.any(T.values)

    def test_values_and_signs(self):
        f = StepFunction([0, 0.5, 1], [-1.0, 2.0])
        T = indicator_embed(f)
        assert T.t_breaks.tolist() == [-1.0, 0.0, 2.0]
        assert T.values.tolist() == [[-1, 0], [0, 1]]

    @pytest.mark.parametrize("seed", range(20))
    def test_isometry(self, seed):
        g_ = np.random.default_rng(seed)
        f, g = random_step_function(g_, 5), random_step_function(g_, 5)
        lhs = l2_distance_sq(indicator_embed(f), indicator_embed(g))
        assert abs(lhs - dist_Lp(f, g, 1.0)) <= 1e-12
