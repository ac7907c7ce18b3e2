import math
from decimal import Decimal, getcontext

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fastcm.model_core import (
    ContractViolationError,
    EdgeList,
    InvalidArgumentError,
    ParamsUBCM,
    ParamsUECM,
    chung_lu_rate,
    degree_sequence,
    strength_sequence,
    ubcm_edge_prob,
    uecm_edge_prob,
    uecm_expected_weight,
    uecm_upper_bound_prob,
    uecm_weight_pmf,
)
from fastcm.samplers import RngStream

getcontext().prec = 50
LN2 = math.log(2.0)


def _dec_uecm(ai, aj, bi, bj, bmin=None):
    # independent 50-digit evaluation of the edge probability / upper bound
    ai, aj, bi, bj = (Decimal(repr(v)) for v in (ai, aj, bi, bj))
    b = bi + bj
    bm = b if bmin is None else Decimal(repr(bmin))
    num = (-(ai + aj + b)).exp()
    return float(num / (1 - (-bm).exp() + num))


finite = st.floats(-30, 30, allow_nan=False)
pos = st.floats(0.01, 10, allow_nan=False)


class TestChungLuRate:
    def test_examples(self):
        assert chung_lu_rate(10, 10, 50) == 1.0
        assert chung_lu_rate(0, 7, 50) == 0.0
        assert chung_lu_rate(3, 4, 6) == 1.0

    def test_not_clamped(self):
        assert chung_lu_rate(20, 20, 50) == 4.0

    @pytest.mark.parametrize("args", [(np.nan, 1, 1), (1, np.inf, 1), (1, 1, 0), (-1, 1, 1)])
    def test_rejects(self, args):
        with pytest.raises(InvalidArgumentError):
            chung_lu_rate(*args)


class TestUBCMProb:
    def test_examples(self):
        assert ubcm_edge_prob(0, 0) == 0.5
        assert ubcm_edge_prob(math.log(3), 0) == pytest.approx(0.25, abs=1e-15)
        assert abs(ubcm_edge_prob(-50, -50) - 1.0) < 1e-12

    def test_no_overflow(self):
        with np.errstate(over="raise", invalid="raise", divide="raise"):
            assert ubcm_edge_prob(800, 800) == 0.0
            assert ubcm_edge_prob(-800, -800) == 1.0

    def test_inf_sentinel(self):
        assert ubcm_edge_prob(np.inf, -3.0) == 0.0

    def test_vectorised(self):
        a = np.linspace(-5, 5, 11)
        np.testing.assert_allclose(ubcm_edge_prob(a, 0.0), 1 / (1 + np.exp(a)), rtol=1e-14)

    @given(finite, finite)
    def test_range_and_symmetry(self, a, b):
        p = ubcm_edge_prob(a, b)
        assert 0.0 <= p <= 1.0
        assert p == ubcm_edge_prob(b, a)

    def test_monotone_in_alpha_j(self):
        aj = np.sort(np.random.default_rng(0).uniform(-20, 20, 200))
        p = ubcm_edge_prob(0.3, aj)
        assert np.all(np.diff(p) < 0)


class TestUECMProb:
    def test_examples(self):
        assert uecm_edge_prob(0, 0, LN2 / 2, LN2 / 2) == pytest.approx(0.5, abs=1e-15)
        assert uecm_edge_prob(50, 50, 1, 1) < 1e-12

    def test_against_high_precision(self):
        assert uecm_edge_prob(0.3, 0.7, 0.2, 0.5) == pytest.approx(
            _dec_uecm(0.3, 0.7, 0.2, 0.5), rel=1e-14)

    def test_rejects_nonpositive_beta_sum(self):
        with pytest.raises(InvalidArgumentError):
            uecm_edge_prob(0, 0, 0.1, -0.1)

    def test_stable_extremes(self):
        with np.errstate(over="raise", invalid="raise", divide="raise"):
            assert uecm_edge_prob(-400, -400, 1, 1) == pytest.approx(1.0)
            assert uecm_edge_prob(400, 400, 1e-9, 1e-9) == 0.0

    @given(finite, finite, pos, pos)
    def test_range_symmetry(self, ai, aj, bi, bj):
        p = uecm_edge_prob(ai, aj, bi, bj)
        assert 0.0 <= p <= 1.0
        assert p == uecm_edge_prob(aj, ai, bj, bi)


class TestWeightPmf:
    def test_examples(self):
        assert uecm_weight_pmf(1, LN2 / 2, LN2 / 2) == pytest.approx(0.5)
        assert uecm_weight_pmf(3, LN2 / 2, LN2 / 2) == pytest.approx(0.125)

    def test_partial_sum(self):
        w = np.arange(1, 201)
        assert abs(uecm_weight_pmf(w, 0.05, 0.05).sum() - (1 - math.exp(-0.1 * 200))) < 1e-12
        # the tail beyond 200 at ratio exp(-0.1) is exp(-20)
        assert abs(uecm_weight_pmf(w, 0.05, 0.05).sum() - 1.0) < 1e-8

    @pytest.mark.parametrize("w", [0, -1, 1.5])
    def test_rejects(self, w):
        with pytest.raises(InvalidArgumentError):
            uecm_weight_pmf(w, 1, 1)


class TestUpperBound:
    def test_tight(self):
        assert uecm_upper_bound_prob(0.3, 0.7, 0.2, 0.5, 0.7) == uecm_edge_prob(0.3, 0.7, 0.2, 0.5)

    def test_dominates(self):
        assert uecm_upper_bound_prob(0, 0, 1, 1, 0.5) >= uecm_edge_prob(0, 0, 1, 1)

    def test_high_precision(self):
        assert uecm_upper_bound_prob(0.3, 0.7, 0.2, 0.5, 0.3) == pytest.approx(
            _dec_uecm(0.3, 0.7, 0.2, 0.5, 0.3), rel=1e-14)

    def test_contract(self):
        with pytest.raises(ContractViolationError):
            uecm_upper_bound_prob(0, 0, 0.1, 0.1, 0.5)
        with pytest.raises(InvalidArgumentError):
            uecm_upper_bound_prob(0, 0, 0.1, 0.1, 0.0)

    @given(finite, finite, pos, pos, st.floats(0.001, 1.0))
    def test_dominance_property(self, ai, aj, bi, bj, frac):
        bmin = frac * (bi + bj)
        assert uecm_upper_bound_prob(ai, aj, bi, bj, bmin) >= uecm_edge_prob(ai, aj, bi, bj)

    def test_monotone_in_key(self):
        gen = np.random.default_rng(1)
        key = np.sort(gen.uniform(-10, 10, 300))
        bj = gen.uniform(0.5, 2.0, 300)
        q = uecm_upper_bound_prob(0.2, key - bj, 0.4, bj, 0.4)
        assert np.all(np.diff(q) < 0)


class TestExpectedWeight:
    def test_examples(self):
        assert uecm_expected_weight(0, 0, LN2 / 2, LN2 / 2) == pytest.approx(1.0)
        assert uecm_expected_weight(50, 50, 1, 1) < 1e-12

    @pytest.mark.parametrize("args", [(0.3, 0.7, 0.2, 0.5), (-1.0, 0.2, 0.05, 0.1), (2.0, 1.0, 1.0, 3.0)])
    def test_series_oracle(self, args):
        w = np.arange(1, 10_001)
        series = np.sum(w * uecm_edge_prob(*args) * uecm_weight_pmf(w, args[2], args[3]))
        assert abs(uecm_expected_weight(*args) - series) < 1e-8


class TestFactorisation:
    def test_joint_law_by_simulation(self):
        # draw (edge, weight) directly from the joint law by inverse transform
        ai, aj, bi, bj = 0.1, -0.4, 0.3, 0.2
        p = uecm_edge_prob(ai, aj, bi, bj)
        gen = RngStream(5).generator()
        n = 200_000
        edge = gen.random(n) < p
        r = math.exp(-(bi + bj))
        w = 1 + np.floor(np.log(gen.random(n)) / math.log(r)).astype(int)
        for k in range(1, 8):
            expect = p * uecm_weight_pmf(k, bi, bj)
            freq = np.mean(edge & (w == k))
            assert abs(freq - expect) < 4 * math.sqrt(expect * (1 - expect) / n)


class TestParams:
    def test_ubcm_validation(self):
        with pytest.raises(InvalidArgumentError):
            ParamsUBCM([0.0])
        with pytest.raises(InvalidArgumentError):
            ParamsUBCM([0.0, np.nan])
        with pytest.raises(InvalidArgumentError):
            ParamsUBCM([0.0, -np.inf])
        p = ParamsUBCM([0.0, np.inf])
        assert p.n_nodes == 2
        with pytest.raises(ValueError):
            p.alpha[0] = 1.0

    def test_uecm_validation(self):
        with pytest.raises(InvalidArgumentError):
            ParamsUECM([0, 0], [1.0])
        with pytest.raises(InvalidArgumentError):
            ParamsUECM([0, 0], [1.0, 0.0])
        with pytest.raises(InvalidArgumentError):
            ParamsUECM([0, 0], [1.0, np.inf])
        p = ParamsUECM([1, 2], [0.5, 0.25])
        np.testing.assert_array_equal(p.sort_key(), [1.5, 2.25])

    def test_sequences(self):
        with pytest.raises(InvalidArgumentError):
            degree_sequence([1, 0, 0])
        with pytest.raises(InvalidArgumentError):
            degree_sequence([1, -1, 2])
        with pytest.raises(InvalidArgumentError):
            strength_sequence([1, 1], [2, 1])
        np.testing.assert_array_equal(strength_sequence([2, 1], [1, 1]), [2.0, 1.0])


class TestEdgeList:
    def test_invariants(self):
        with pytest.raises(ContractViolationError):
            EdgeList(3, [1], [0]).check()
        with pytest.raises(ContractViolationError):
            EdgeList(3, [0], [0]).check()
        with pytest.raises(ContractViolationError):
            EdgeList(3, [0, 0], [1, 1]).check()
        with pytest.raises(ContractViolationError):
            EdgeList(3, [0], [5]).check()
        with pytest.raises(ContractViolationError):
            EdgeList(3, [0], [1], [0], weighted=True).check()
        EdgeList(3, [0, 1], [1, 2]).check()

    def test_equality_ignores_order(self):
        a = EdgeList(4, [0, 2], [1, 3])
        b = EdgeList(4, [2, 0], [3, 1])
        assert a == b
        assert a != EdgeList(4, [0], [1])
        assert len(a) == 2 == a.n_edges
