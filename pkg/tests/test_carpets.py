import math
from collections import Counter

import numpy as np
import pytest
from scipy.spatial import cKDTree

from packdim import carpets as cp
from packdim import geometry as geo

SQRT2 = math.sqrt(2.0)


def side_histogram(packing):
    return Counter(round(e.side, 12) for e in packing.elements)


class TestStandardCarpet:
    def test_depth_two(self):
        packing = cp.generate_carpet(3, 2)
        hist = side_histogram(packing)
        assert hist == {round(1 / 3, 12): 1, round(1 / 9, 12): 8}
        assert len(packing.elements) == 9

    def test_depth_one_centered(self):
        packing = cp.generate_carpet(3, 1)
        (hole,) = packing.elements
        assert (hole.x, hole.y, hole.side) == (1 / 3, 1 / 3, 1 / 3)

    def test_base_five(self):
        packing = cp.generate_carpet(5, 2)
        hist = side_histogram(packing)
        assert hist == {round(1 / 5, 12): 1, round(1 / 25, 12): 24}

    def test_level_counts(self):
        packing = cp.generate_carpet(3, 5)
        per_level = Counter(e.level for e in packing.elements)
        assert per_level == {n: 8 ** (n - 1) for n in range(1, 6)}

    def test_even_base_rejected(self):
        with pytest.raises(cp.InvalidBaseError):
            cp.generate_carpet(4, 2)
        with pytest.raises(cp.InvalidBaseError):
            cp.generate_carpet(1, 2)

    def test_disjoint_and_contained(self):
        cp.generate_carpet(3, 3).validate()


class TestSigmaCarpet:
    def test_three_then_five(self):
        packing = cp.generate_sigma_carpet(cp.SigmaSpec([(3, 1), (5, 1)]), 2)
        hist = side_histogram(packing)
        assert hist == {round(1 / 3, 12): 1, round(1 / 15, 12): 8}

    def test_five_then_three(self):
        packing = cp.generate_sigma_carpet(cp.SigmaSpec([(5, 1), (3, 1)]), 2)
        hist = side_histogram(packing)
        assert hist == {round(1 / 5, 12): 1, round(1 / 15, 12): 24}

    def test_degenerate_matches_standard(self, tmp_path):
        a = cp.generate_sigma_carpet(cp.SigmaSpec([(3, None)]), 3)
        b = cp.generate_carpet(3, 3)
        pa, pb = tmp_path / "a.csv", tmp_path / "b.csv"
        geo.dump_packing(a, pa)
        geo.dump_packing(b, pb)
        assert pa.read_text().splitlines()[1:] == pb.read_text().splitlines()[1:]

    def test_spec_validation(self):
        with pytest.raises(cp.CarpetError):
            cp.SigmaSpec([])
        with pytest.raises(cp.CarpetError):
            cp.SigmaSpec([(3, None), (5, 1)])
        with pytest.raises(cp.CarpetError):
            cp.SigmaSpec([(3, 0)])
        with pytest.raises(cp.InvalidBaseError):
            cp.SigmaSpec([(4, 2)])

    def test_parse(self):
        spec = cp.SigmaSpec.parse("3:6,5:20,3:inf")
        assert spec.blocks == [(3, 6), (5, 20), (3, None)]

    def test_exhausted_spec_raises(self):
        with pytest.raises(cp.CarpetError):
            cp.generate_sigma_carpet(cp.SigmaSpec([(3, 2)]), 5)


class TestGasket:
    def test_depth_one(self):
        packing = cp.generate_gasket(1)
        (hole,) = packing.elements
        assert geo.diameter(hole) == pytest.approx(0.5, rel=1e-12)

    def test_depth_three_count(self):
        packing = cp.generate_gasket(3)
        assert len(packing.elements) == 13  # 1 + 3 + 9
        per_level = Counter(e.level for e in packing.elements)
        assert per_level == {1: 1, 2: 3, 3: 9}

    def test_holes_touch(self):
        # adjacent holes share vertices: some pair at distance zero
        packing = cp.generate_gasket(3)
        els = packing.elements
        dmin = min(
            geo.set_distance(els[i], els[j])
            for i in range(len(els))
            for j in range(i + 1, len(els))
        )
        assert dmin == 0.0

    def test_sides_halve(self):
        packing = cp.generate_gasket(4)
        for e in packing.elements:
            assert geo.diameter(e) == pytest.approx(2.0 ** -e.level, rel=1e-12)


class TestCountTables:
    def test_s3_cumulative_geometric_series(self):
        table = cp.sigma_count_table(cp.SigmaSpec([(3, None)]), max_levels=25)
        cum = table.cumulative
        for m in range(1, 26):
            assert cum[m - 1] == (8**m - 1) // 7  # exact big integers

    def test_s5_first_row(self):
        table = cp.sigma_count_table(cp.SigmaSpec([(5, None)]), max_levels=1)
        (row,) = table.rows
        assert row[1] == 1
        assert row[0] == pytest.approx(SQRT2 / 5.0, rel=1e-15)

    def test_block_recursion_row(self):
        table = cp.sigma_count_table(cp.SigmaSpec([(3, 2), (5, None)]), max_levels=3)
        diam, count = table.rows[2]
        assert count == 64  # 8^2 survivors entering the base-5 block
        gen = cp.generate_sigma_carpet(cp.SigmaSpec([(3, 2), (5, None)]), 3)
        gen_diams = sorted({geo.diameter(e) for e in gen.elements}, reverse=True)
        assert diam == gen_diams[2]  # bitwise equal by construction

    def test_table_matches_generation_exactly(self):
        for blocks, depth in ([(3, None)], 5), ([(3, 2), (5, None)], 4), ([(5, None)], 3):
            spec = cp.SigmaSpec(blocks)
            table = cp.sigma_count_table(spec, max_levels=depth)
            gen = cp.generate_sigma_carpet(spec, depth)
            gen_hist = Counter(geo.diameter(e) for e in gen.elements)
            table_hist = {d: c for d, c in table.rows}
            assert gen_hist == table_hist

    def test_min_diameter_truncation(self):
        table = cp.sigma_count_table(cp.SigmaSpec([(3, None)]), min_diameter=SQRT2 / 100.0)
        assert len(table.rows) == 4  # sqrt(2)/81 >= sqrt(2)/100 > sqrt(2)/243

    def test_needs_truncation(self):
        with pytest.raises(cp.CarpetError):
            cp.sigma_count_table(cp.SigmaSpec([(3, None)]))

    def test_gasket_table(self):
        table = cp.gasket_count_table(10)
        assert [c for _, c in table.rows] == [3**n for n in range(10)]
        assert table.rows[0][0] == 0.5

    def test_validation(self):
        with pytest.raises(cp.CarpetError):
            cp.CarpetCountTable(rows=[(0.5, 1), (0.6, 2)], meta={})
        with pytest.raises(cp.CarpetError):
            cp.CarpetCountTable(rows=[(0.5, 0)], meta={})

    def test_dump_load_round_trip(self, tmp_path):
        table = cp.sigma_count_table(cp.SigmaSpec([(3, None)]), max_levels=30)
        path = tmp_path / "counts.csv"
        cp.dump_count_table(table, path)
        loaded = cp.load_count_table(path)
        assert loaded.rows == table.rows  # exact, including 8^29 counts
        head = path.read_text().splitlines()[0]
        assert head.startswith("# packdim-counts-v1,")


class TestCornerSamples:
    def test_carpet_points_on_residual_set(self):
        sample = cp.carpet_corner_sample(3, 3)
        packing = cp.generate_carpet(3, 6)
        for hole in packing.elements:
            inside = geo.contains_points(hole, sample.points)
            for p in sample.points[inside]:
                assert geo.boundary_distance(hole, p) < 1e-12

    def test_carpet_covering_radius(self):
        # every surviving-cell point sits within `resolution` of a sample point
        sample = cp.carpet_corner_sample(3, 4)
        rng = np.random.default_rng(7)
        packing = cp.generate_carpet(3, 4)
        holes = packing.elements
        tree = cKDTree(sample.points)
        pts = rng.random((4000, 2))
        keep = np.ones(len(pts), dtype=bool)
        for h in holes:
            keep &= ~(
                (pts[:, 0] > h.x) & (pts[:, 0] < h.x + h.side)
                & (pts[:, 1] > h.y) & (pts[:, 1] < h.y + h.side)
            )
        d, _ = tree.query(pts[keep])
        assert d.max() <= sample.resolution * (1 + 1e-9)

    def test_gasket_sample(self):
        sample = cp.gasket_corner_sample(5)
        assert sample.resolution == pytest.approx(2.0**-5 / math.sqrt(3.0))
        outer = cp.generate_gasket(1).outer
        inside = geo.contains_points(outer, sample.points)
        d = np.array([geo.boundary_distance(outer, p) for p in sample.points])
        assert np.all(inside | (d < 1e-9))
