import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from logical_zne.zne import (DataPoint, DegenerateDesignError, ZneError,
                             bias, extrap_coeffs, extrapolate,
                             sampling_overhead, sampling_overhead_measured,
                             scan_delta_eta)


class TestCoeffs:
    def test_linear_two_point(self):
        assert extrap_coeffs((1, 2), d=1) == pytest.approx([2.0, -1.0])

    def test_d3_r13(self):
        assert extrap_coeffs((1, 3), d=3) == pytest.approx([9 / 8, -1 / 8])

    def test_d7_r12(self):
        assert extrap_coeffs((1, 2), d=7) == pytest.approx([16 / 15, -1 / 15])

    def test_duplicate_points(self):
        with pytest.raises(DegenerateDesignError):
            extrap_coeffs((1, 1), d=1)

    def test_wrong_count(self):
        with pytest.raises(ZneError):
            extrap_coeffs((1, 2, 3), d=1, K=1)

    @settings(max_examples=300, deadline=None)
    @given(st.integers(1, 9), st.integers(1, 4), st.integers(0, 10 ** 6))
    def test_sum_to_one(self, d, K, seed):
        rng = random.Random(seed)
        rs = [1.0]
        while len(rs) < K + 1:
            r = round(rng.uniform(1.01, 4.0), 3)
            if all(abs(r - x) > 1e-3 for x in rs):
                rs.append(r)
        b = extrap_coeffs(rs, d)
        assert abs(b.sum() - 1.0) < 1e-10

    def test_matches_adjugate_direction(self):
        rs, d = (1.0, 1.7, 2.4), 5
        b = extrap_coeffs(rs, d)
        m = math.ceil(d / 2)
        v = np.array([[1.0, r ** m, r ** (m + 1)] for r in rs])
        adj_row = np.array([((-1) ** j) * np.linalg.det(np.delete(np.delete(v, j, 0), 0, 1))
                            for j in range(3)])
        assert np.allclose(adj_row / adj_row.sum(), b, atol=1e-12)


class TestExtrapolate:
    def test_exact_model_recovery(self):
        pts = [DataPoint(r, 0.9 - 0.02 * r ** 2) for r in (1.0, 2.5)]
        assert extrapolate(pts, d=3) == pytest.approx(0.9, abs=1e-12)

    def test_constant_data(self):
        pts = [DataPoint(r, 0.5) for r in (1.0, 1.5, 2.0)]
        assert extrapolate(pts, d=5) == pytest.approx(0.5, abs=1e-12)

    def test_requires_r0(self):
        with pytest.raises(ZneError):
            extrapolate([DataPoint(1.5, 0.2), DataPoint(2.0, 0.1)], d=1)

    def test_exactness_on_family_100_random_designs(self):
        rng = random.Random(11)
        for _ in range(100):
            d = rng.choice([1, 3, 5, 7, 9])
            K = rng.randint(1, 3)
            m = math.ceil(d / 2)
            coef = {m + j: rng.uniform(-0.05, 0.05) for j in range(K)}
            c = rng.uniform(-1, 1)
            rs = [1.0]
            while len(rs) < K + 1:
                r = rng.uniform(1.05, 3.5)
                if all(abs(r - x) > 0.04 for x in rs):
                    rs.append(r)
            pts = [DataPoint(r, c + sum(a * r ** k for k, a in coef.items()))
                   for r in rs]
            b = extrap_coeffs([p.r for p in pts], d)
            assert abs(b.sum() - 1.0) < 1e-10
            assert bias(extrapolate(pts, d), c) < 1e-10


class TestOverhead:
    def test_worked_example(self):
        eta = sampling_overhead([0.9, 0.8], [2.0, -1.0])
        assert eta == pytest.approx((4 * (0.19 * 3 / 2) + 0.36 * 3) / 0.19)
        assert eta == pytest.approx(11.684210526315789)

    def test_degenerate_k0(self):
        assert sampling_overhead([0.7], [1.0]) == pytest.approx(1.0)

    def test_zero_values_closed_form(self):
        assert sampling_overhead([0.0, 0.0], [2.0, -1.0]) == pytest.approx(9.0)

    def test_saturated_point_contributes_nothing(self):
        eta = sampling_overhead([0.5, 1.0], [2.0, -1.0])
        assert eta == pytest.approx(3 * (2 * 0.75) / 0.75)

    def test_invariant_to_budget(self):
        for n in (100, 10_000, 12345):
            assert sampling_overhead([0.9, 0.7], [1.5, -0.5], n_total=n) == \
                pytest.approx(sampling_overhead([0.9, 0.7], [1.5, -0.5]))

    def test_eta_monotone_as_r1_approaches_1(self):
        # Fixed measured values, K=1, d=3: pulling the amplified point toward
        # r0 never cheapens the scheme.
        values = [0.9, 0.8]
        last = 0.0
        for r1 in (3.0, 2.5, 2.0, 1.5, 1.2, 1.05):
            eta = sampling_overhead(values, extrap_coeffs((1.0, r1), d=3))
            assert eta >= last - 1e-12
            last = eta

    def test_measured_variant(self):
        eta = sampling_overhead_measured([0.01, 0.02], [1000, 1000], [2.0, -1.0])
        assert eta == pytest.approx(3 * (2 * 0.1 + 1 * 0.4) / 0.1)


class TestScan:
    def test_combinatorics(self):
        pts = [DataPoint(1.0, 0.9), DataPoint(2.0, 0.8), DataPoint(3.0, 0.6)]
        entries = scan_delta_eta(pts, d=3, K=1, ideal=1.0)
        assert len(entries) == 2
        assert all(e.delta0 == pytest.approx(0.1) for e in entries)
        assert {e.rs for e in entries} == {(1.0, 2.0), (1.0, 3.0)}

    def test_k2_single_choice(self):
        pts = [DataPoint(1.0, 0.9), DataPoint(2.0, 0.8), DataPoint(3.0, 0.6)]
        entries = scan_delta_eta(pts, d=3, K=2, ideal=1.0)
        assert len(entries) == 1

    def test_missing_r0(self):
        with pytest.raises(ZneError):
            scan_delta_eta([DataPoint(2.0, 0.5)], d=1, K=1, ideal=1.0)
