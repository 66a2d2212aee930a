import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from packdim import analysis as an
from packdim import apollonian as ap
from packdim import carpets as cp
from packdim import geometry as geo

SQRT2 = math.sqrt(2.0)
LOG8_3 = math.log(8.0) / math.log(3.0)
LOG24_5 = math.log(24.0) / math.log(5.0)


def s3_table(levels):
    return cp.sigma_count_table(cp.SigmaSpec([(3, None)]), max_levels=levels)


class TestCurvatureCount:
    def test_first_hole_only(self):
        dist = an.CurvatureDistribution.from_count_table(s3_table(10))
        assert dist.count(3.0 / SQRT2) == 1
        assert dist.count(3.0 / SQRT2 * (1 - 1e-12)) == 0

    def test_geometric_series_levels(self):
        table = s3_table(20)
        dist = an.CurvatureDistribution.from_count_table(table)
        for m in (1, 5, 12, 20):
            x = 1.0 / table.rows[m - 1][0]  # exact step position
            assert dist.count(x) == (8**m - 1) // 7
            assert dist.count(x * (1 - 1e-12)) == (8 ** (m - 1) - 1) // 7

    def test_apollonian_with_outer(self):
        q = ap.root_quadruple(-10.0, 18.0, 23.0, 27.0)
        packing = ap.generate_apollonian(q, 50.0)
        dist = an.CurvatureDistribution.from_packing(packing, include_outer=True)
        assert dist.count(50.0) == 6  # outer counted through its own radius
        assert dist.count(9.0) == 0
        assert dist.count(10.0) == 1

    def test_monotone(self):
        dist = an.CurvatureDistribution.from_count_table(s3_table(15))
        xs = np.geomspace(1.0, 3.0**15, 60)
        counts = [dist.count(float(x)) for x in xs]
        assert all(a <= b for a, b in zip(counts, counts[1:]))

    def test_symbolic_equals_enumerated_everywhere(self):
        # identical answers for every x at the shared truncation
        for blocks, depth in ([(3, None)], 6), ([(3, 2), (5, None)], 5):
            spec = cp.SigmaSpec(blocks)
            table = cp.sigma_count_table(spec, max_levels=depth)
            sym = an.CurvatureDistribution.from_count_table(table)
            packing = cp.generate_sigma_carpet(spec, depth)
            enum = an.CurvatureDistribution.from_packing(packing, include_outer=False)
            xs = [1.0 / d for d, _ in table.rows]
            probe = []
            for x in xs:
                probe += [x * (1 - 1e-12), x, x * (1 + 1e-12)]
            probe += np.geomspace(0.5, 2.0 / table.rows[-1][0], 50).tolist()
            for x in probe:
                assert sym.count(x) == enum.count(x)


class TestPartialSum:
    def test_s3_square_sum_is_two(self):
        # sum of 8^(n-1) * (sqrt2 3^-n)^2 = 2, in closed form
        dist = an.CurvatureDistribution.from_count_table(s3_table(10))
        res = an.partial_sum(dist, 2.0)
        assert not res.truncated and not res.infinite
        assert res.value == pytest.approx(2.0, abs=1e-12)

    def test_zeroth_power_counts(self):
        dist = an.CurvatureDistribution.from_count_table(s3_table(10))
        assert an.partial_sum(dist, 0.0, m=5).value == 5.0

    def test_divergence_at_exponent(self):
        dist = an.CurvatureDistribution.from_count_table(s3_table(10))
        res = an.partial_sum(dist, LOG8_3)
        assert res.infinite

    def test_enumerated_truncation_flag(self):
        dist = an.CurvatureDistribution(sizes=np.array([0.5, 0.25, 0.125]))
        res = an.partial_sum(dist, 1.0)
        assert res.truncated
        assert res.value == pytest.approx(0.875)

    def test_finite_m_on_table(self):
        dist = an.CurvatureDistribution.from_count_table(s3_table(5))
        v = an.partial_sum(dist, 1.0, m=9).value
        expected = SQRT2 / 3.0 + 8 * SQRT2 / 9.0
        assert v == pytest.approx(expected, rel=1e-12)

    @given(st.floats(0.0, 3.0), st.floats(0.0, 3.0))
    @settings(max_examples=40, deadline=None)
    def test_monotone_in_t(self, t1, t2):
        # all sizes <= 1, so larger exponents give smaller sums
        dist = an.CurvatureDistribution.from_count_table(s3_table(8))
        lo, hi = sorted((t1, t2))
        a = an.partial_sum(dist, hi, m=100).value
        b = an.partial_sum(dist, lo, m=100).value
        assert a <= b * (1 + 1e-12)


class TestExponentEstimate:
    def test_s3_level_20(self):
        dist = an.CurvatureDistribution.from_count_table(s3_table(20))
        fit = an.exponent_estimate(dist)
        assert fit.slope == pytest.approx(LOG8_3, abs=0.01)

    def test_s5_level_15(self):
        table = cp.sigma_count_table(cp.SigmaSpec([(5, None)]), max_levels=15)
        dist = an.CurvatureDistribution.from_count_table(table)
        fit = an.exponent_estimate(dist)
        assert fit.slope == pytest.approx(LOG24_5, abs=0.01)

    def test_single_base_identity_generic(self):
        for p in (3, 5, 7, 9):
            table = cp.sigma_count_table(cp.SigmaSpec([(p, None)]), max_levels=18)
            fit = an.exponent_estimate(an.CurvatureDistribution.from_count_table(table))
            assert fit.slope == pytest.approx(math.log(p * p - 1) / math.log(p), abs=0.01)

    def test_geometric_toy_slope_decays(self):
        # a_k = 2^-k: countable exponential decay has exponent 0
        slopes = []
        for n in (60, 90, 120):
            dist = an.CurvatureDistribution(sizes=2.0 ** -np.arange(1.0, n + 1.0))
            slopes.append(an.exponent_estimate(dist).slope)
        assert slopes[-1] < 0.05
        assert slopes[2] < slopes[1] < slopes[0]

    def test_needs_data(self):
        with pytest.raises(an.InsufficientDataError):
            an.exponent_estimate(an.CurvatureDistribution(sizes=np.geomspace(1, 0.01, 20)))

    def test_scaling_invariance(self):
        packing = cp.generate_carpet(3, 5)
        d1 = an.CurvatureDistribution.from_packing(packing, include_outer=False)
        scaled = an.CurvatureDistribution(sizes=d1.sizes * 3.7)
        f1 = an.exponent_estimate(d1)
        f2 = an.exponent_estimate(scaled)
        assert f2.slope == pytest.approx(f1.slope, abs=1e-6)


class TestBoxCount:
    def test_single_point(self):
        s = geo.ResidualSample(np.array([[0.3, 0.4]]), 0.01)
        assert an.box_count(s, 0.5) == 1
        assert an.box_count(s, 0.05) == 1

    def test_unit_square_boundary_perimeter_law(self):
        sq = geo.Packing(outer=geo.Square(0, 0, 1), elements=[])
        pts = geo.boundary_points(geo.Square(0, 0, 1), 5e-5)
        s = geo.ResidualSample(pts, 1e-4, anchor=(0.0, 0.0))
        for k in (5, 10, 20):
            n = an.box_count(s, 1.0 / k)
            assert abs(n - 4 * k) <= 8  # 4k + O(1) cells along the perimeter

    def test_resolution_guard(self):
        s = geo.ResidualSample(np.array([[0.0, 0.0], [1.0, 1.0]]), 0.01)
        with pytest.raises(an.ResolutionError):
            an.box_count(s, 0.005)

    def test_monotone_in_eps(self):
        sample = cp.carpet_corner_sample(3, 5)
        eps = np.geomspace(0.3, 2.5 * sample.resolution, 12)
        counts = [an.box_count(sample, float(e)) for e in eps]
        assert all(a <= b for a, b in zip(counts, counts[1:]))

    def test_s3_window_slope(self):
        sample = cp.carpet_corner_sample(3, 7)
        counts = [(3.0**-m, an.box_count(sample, 3.0**-m)) for m in range(2, 7)]
        fit = an.dimension_fit(counts)
        assert fit.slope == pytest.approx(LOG8_3, abs=0.05)


class TestDimensionFit:
    def test_exact_power_law(self):
        eps = np.geomspace(1.0, 1e-3, 10)
        counts = [(float(e), int(round(e**-1.5))) for e in eps]
        fit = an.dimension_fit(counts)
        assert fit.slope == pytest.approx(1.5, abs=5e-3)
        assert fit.upper == pytest.approx(1.5, abs=3e-2)
        assert fit.lower == pytest.approx(1.5, abs=3e-2)

    def test_preconditions(self):
        with pytest.raises(an.InsufficientDataError):
            an.dimension_fit([(1.0, 1), (0.5, 2), (0.25, 4), (0.125, 8)])
        with pytest.raises(an.InsufficientDataError):
            an.dimension_fit([(1.0, 1), (0.8, 2), (0.6, 3), (0.4, 4), (0.2, 5)])

    def test_oscillation_bounds(self):
        # mixed-base table: windowed two-point slopes reach both carpet rates
        spec = cp.SigmaSpec([(3, 6), (5, 20), (3, None)])
        table = cp.sigma_count_table(spec, max_levels=40)
        dist = an.CurvatureDistribution.from_count_table(table)
        xs = [1.0 / d for d, _ in table.rows]
        slopes = [(x, dist.window_slope(x)) for x in xs]
        slopes = [(x, s) for x, s in slopes if s is not None]
        x_low = next(x for x, s in slopes if s <= 1.90)
        assert any(s >= 1.96 for x, s in slopes if x > x_low)


class TestBoydTable:
    def test_s3_terminal_estimates(self):
        dist = an.CurvatureDistribution.from_count_table(s3_table(20))
        xs = np.geomspace(2.0, 3.0**20 / SQRT2, 30)
        table = an.boyd_table(dist, xs)
        assert table.terminal_slope() == pytest.approx(LOG8_3, abs=0.01)
        # the raw quotient is biased low by the constant deficit at any
        # finite scale; it is reported but converges only slowly
        assert table.terminal_ratio() < table.terminal_slope()

    def test_below_first_element(self):
        dist = an.CurvatureDistribution.from_count_table(s3_table(5))
        table = an.boyd_table(dist, [1.5])
        assert table.rows[0].n == 0
        assert table.rows[0].ratio is None

    def test_suppression_beyond_completeness(self):
        tab = s3_table(5)
        dist = an.CurvatureDistribution.from_count_table(tab)
        x_complete = 1.0 / tab.rows[-1][0]
        table = an.boyd_table(dist, [x_complete, 3.0**9])
        assert table.rows[0].complete
        assert not table.rows[1].complete
        assert table.rows[1].ratio is None

    def test_xs_validation(self):
        dist = an.CurvatureDistribution.from_count_table(s3_table(5))
        with pytest.raises(an.AnalysisError):
            an.boyd_table(dist, [0.5, 10.0])


class TestFlatness:
    def test_exact_power_law_cv_zero(self):
        E = 1.3057
        ks = np.arange(1.0, 400002.0)
        dist = an.CurvatureDistribution(sizes=(1.0 / ks) ** (1.0 / E))
        rep = an.flatness_probe(dist, E, (1e2, 1e4))
        assert rep.cv < 0.01

    def test_s3_lattice_oscillation_reported(self):
        dist = an.CurvatureDistribution.from_count_table(s3_table(25))
        rep = an.flatness_probe(dist, LOG8_3, (1e2, 1e6))
        assert rep.cv > 0.0
        assert math.isfinite(rep.cv)

    def test_window_validation(self):
        dist = an.CurvatureDistribution.from_count_table(s3_table(10))
        with pytest.raises(an.WindowError):
            an.flatness_probe(dist, LOG8_3, (100.0, 500.0))
        with pytest.raises(an.WindowError):
            an.flatness_probe(dist, LOG8_3, (1e2, 1e12))


class TestMaxDisjointDiscs:
    def test_disjoint_and_maximal(self):
        rng = np.random.default_rng(3)
        pts = rng.random((4000, 2))
        sample = geo.ResidualSample(pts, 1e-3)
        centers = an.max_disjoint_discs(sample, 0.05, seed=1)
        d2 = np.sum((centers[:, None, :] - centers[None, :, :]) ** 2, axis=-1)
        np.fill_diagonal(d2, np.inf)
        assert d2.min() >= (2 * 0.05) ** 2 * (1 - 1e-12)
        # maximality: every sample point is within 2r of an accepted center
        from scipy.spatial import cKDTree

        dist, _ = cKDTree(centers).query(pts)
        assert dist.max() < 2 * 0.05

    def test_deterministic(self):
        rng = np.random.default_rng(4)
        pts = rng.random((2000, 2))
        sample = geo.ResidualSample(pts, 1e-3)
        a = an.max_disjoint_discs(sample, 0.03, seed=9)
        b = an.max_disjoint_discs(sample, 0.03, seed=9)
        assert np.array_equal(a, b)


class TestDuality:
    def test_synthetic_line_agreement(self):
        # one-dimensional set with matching synthetic distribution
        ks = np.arange(1.0, 20001.0)
        dist = an.CurvatureDistribution(sizes=1.0 / ks)
        pts = np.column_stack([np.linspace(0.0, 1.0, 20001), np.zeros(20001)])
        sample = geo.ResidualSample(pts, 5e-5, anchor=(0.0, 0.0))
        rep = an.duality_check(dist, sample, eps_max=0.05)
        assert rep.gap <= 0.01

    def test_s3_small(self):
        packing = cp.generate_carpet(3, 6)
        dist = an.CurvatureDistribution.from_packing(packing)
        sample = cp.carpet_corner_sample(3, 6)
        rep = an.duality_check(dist, sample)
        assert rep.gap <= 0.07
        assert rep.gamma1_hat is not None and rep.gamma2_hat is not None

    def test_gasket(self):
        packing = cp.generate_gasket(10)
        dist = an.CurvatureDistribution.from_packing(packing)
        sample = cp.gasket_corner_sample(10)
        rep = an.duality_check(dist, sample)
        assert rep.gap <= 0.07

    def test_incompatible_resolution(self):
        pts = np.random.default_rng(0).random((500, 2))
        sample = geo.ResidualSample(pts, 0.05)
        dist = an.CurvatureDistribution(sizes=np.geomspace(1, 1e-4, 200))
        with pytest.raises(an.MismatchError):
            an.duality_check(dist, sample)


class TestMoreInvariants:
    def test_s5_duality(self):
        # the sparse base-5 step ladder needs five levels inside the
        # matched window, hence the deeper truncation and wider eps range
        packing = cp.generate_carpet(5, 5)
        dist = an.CurvatureDistribution.from_packing(packing)
        sample = cp.carpet_corner_sample(5, 5)
        pts = sample.points
        ext = float(max(pts[:, 0].max() - pts[:, 0].min(), pts[:, 1].max() - pts[:, 1].min()))
        rep = an.duality_check(dist, sample, eps_max=ext / 3.0)
        assert rep.gap <= 0.07

    def test_box_count_scale_invariance(self):
        # scales chosen incommensurate with the sample lattice: points
        # exactly on cell boundaries may legitimately flip cells
        sample = cp.carpet_corner_sample(3, 7)
        s = 3.7
        scaled = geo.ResidualSample(sample.points * s, sample.resolution * s,
                                    anchor=(0.0, 0.0))
        eps_grid = np.geomspace(0.3, 7e-4, 7)
        c1 = [(float(e), an.box_count(sample, float(e))) for e in eps_grid]
        c2 = [(float(e * s), an.box_count(scaled, float(e * s))) for e in eps_grid]
        assert [n for _, n in c1] == [n for _, n in c2]
        f1 = an.dimension_fit(c1)
        f2 = an.dimension_fit(c2)
        assert f2.slope == pytest.approx(f1.slope, abs=1e-9)
