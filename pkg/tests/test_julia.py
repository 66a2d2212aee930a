import json
import math

import numpy as np
import pytest

from packdim import geometry as geo
from packdim import julia as jl


def square_map(max_iter=12, attractor=True):
    """z^2 with the origin as a finite attractor."""
    attractors = [(0j, 0.25)] if attractor else []
    return jl.RationalMap(
        num=np.array([0.0, 0.0, 1.0], dtype=complex),
        den=np.array([1.0], dtype=complex),
        escape_radius=4.0,
        max_iterations=max_iter,
        attractors=attractors,
    )


class TestIterate:
    def test_power_map(self):
        res = jl.iterate(square_map(), 2.0, 3)
        assert not res.diverged or res.iterations <= 3
        # |2|^(2^k) crosses the escape radius at the first step
        res = jl.iterate(jl.RationalMap(num=[0, 0, 1], den=[1], escape_radius=300.0), 2.0, 3)
        assert res.z == 256.0

    def test_shipped_map_value(self):
        rmap = jl.shipped_map()
        res = jl.iterate(rmap, 1.0, 1)
        assert res.z == pytest.approx(0.9375)  # 1 - 1/16

    def test_pole_diverges(self):
        rmap = jl.shipped_map()
        res = jl.iterate(rmap, 0.0, 5)
        assert res.diverged
        assert res.iterations == 1

    def test_never_crashes_on_overflow(self):
        rmap = jl.RationalMap(num=[0, 0, 1], den=[1], escape_radius=1e300, max_iterations=500)
        res = jl.iterate(rmap, 1e200, 10)
        assert res.diverged


class TestParser:
    def test_shipped_expression(self):
        rmap = jl.parse_map("z^2 - 1/(16z^2)")
        ref = jl.shipped_map()
        for z in (1.0 + 0.2j, -0.7 + 0.9j, 0.3 - 1.1j):
            assert rmap(z) == pytest.approx(ref(z), rel=1e-12)

    def test_coefficients_proportional(self):
        rmap = jl.parse_map("z^2 - 1/(16z^2)")
        num = rmap.num / rmap.num[-1] * 16.0
        den = rmap.den / rmap.den[-1] * 16.0
        assert np.allclose(num, [-1, 0, 0, 0, 16])
        assert np.allclose(den, [0, 0, 16])

    def test_power_and_parens(self):
        rmap = jl.parse_map("(z+1)^2 / z")
        assert rmap(2.0) == pytest.approx(4.5)

    def test_complex_literals(self):
        rmap = jl.parse_map("z^2 + 0.5i")
        assert rmap(0.0) == pytest.approx(0.5j)

    def test_errors(self):
        with pytest.raises(jl.ExprError):
            jl.parse_map("z^2 +")
        with pytest.raises(jl.ExprError):
            jl.parse_map("z^(1/2)")
        with pytest.raises(jl.ExprError):
            jl.parse_map("w + 1")


class TestRationalMapValidation:
    def test_degree_requirement(self):
        with pytest.raises(jl.InvalidMapError):
            jl.RationalMap(num=[0.0, 1.0], den=[1.0])

    def test_zero_denominator(self):
        with pytest.raises(jl.InvalidMapError):
            jl.RationalMap(num=[0, 0, 1], den=[0.0])

    def test_escape_radius_check(self):
        square_map().check_escape_radius()
        bad = jl.RationalMap(num=[0, 0, 1], den=[1], escape_radius=1.5)
        with pytest.raises(jl.InvalidMapError):
            bad.check_escape_radius()

    def test_config_round_trip(self):
        rmap = jl.shipped_map(1024)
        cfg = rmap.to_config(box=jl.SHIPPED_BOX, grid=1024)
        back = jl.RationalMap.from_config(cfg)
        assert np.array_equal(back.num, rmap.num)
        assert np.array_equal(back.den, rmap.den)
        assert back.max_iterations == rmap.max_iterations


class TestClassifyGrid:
    def test_power_map_two_components(self):
        # the unit circle splits the plane into exactly two basins
        fcs = jl.classify_grid(square_map(), (-2.0, -2.0, 2.0, 2.0), 512)
        resolved = [c for c in fcs.components if not c.under_resolved]
        assert len(resolved) == 2
        basins = sorted(c.basin for c in resolved)
        assert basins == [0, 1]

    def test_power_map_julia_cells_on_circle(self):
        fcs = jl.classify_grid(square_map(max_iter=10), (-2.0, -2.0, 2.0, 2.0), 512)
        pts = fcs.julia_points()
        assert len(pts) > 0
        radii = np.hypot(pts[:, 0], pts[:, 1])
        assert np.max(np.abs(radii - 1.0)) <= 2.0 * fcs.cell

    def test_determinism(self):
        a = jl.classify_grid(square_map(), (-2.0, -2.0, 2.0, 2.0), 256)
        b = jl.classify_grid(square_map(), (-2.0, -2.0, 2.0, 2.0), 256)
        assert np.array_equal(a.labels, b.labels)
        assert np.array_equal(a.escape_iters, b.escape_iters)

    def test_grid_floor(self):
        with pytest.raises(jl.JuliaError):
            jl.classify_grid(square_map(), (-2.0, -2.0, 2.0, 2.0), 128)

    def test_bad_box(self):
        rmap = jl.shipped_map(256)
        with pytest.raises(jl.BadBoxError):
            jl.classify_grid(rmap, (-0.5, -0.5, 0.5, 0.5), 256)

    def test_quartic_component_count(self):
        rmap = jl.shipped_map(512)
        fcs = jl.classify_grid(rmap, jl.SHIPPED_BOX, 512)
        bounded = [c for c in fcs.components if not c.unbounded and not c.under_resolved]
        assert len(bounded) >= 50

    def test_julia_fraction_decreases_on_refinement(self):
        fracs = []
        for n in (256, 512):
            rmap = jl.shipped_map(n)
            fcs = jl.classify_grid(rmap, jl.SHIPPED_BOX, n)
            fracs.append(fcs.julia_fraction())
        assert 0.0 < fracs[1] < fracs[0]

    def test_refinement_diameter_stability(self):
        # matched large components move by at most a few coarse cells
        coarse = jl.classify_grid(jl.shipped_map(256), jl.SHIPPED_BOX, 256)
        fine = jl.classify_grid(jl.shipped_map(512), jl.SHIPPED_BOX, 512)

        def top(fcs, k=5):
            cs = [c for c in fcs.components if not c.unbounded and not c.under_resolved]
            cs.sort(key=lambda c: -c.diameter)
            return cs[:k]

        for c in top(coarse):
            center = c.hull.mean(axis=0)
            partner = min(
                top(fine, 40),
                key=lambda f: np.sum((f.hull.mean(axis=0) - center) ** 2),
            )
            assert abs(partner.diameter - c.diameter) <= 4.0 * coarse.cell

    def test_complete_invariance_proxy(self):
        # image cells of resolved Fatou cells stay Fatou (or leave the box);
        # cells within two iterations of the marker threshold are the
        # grid-scale boundary band where leakage into the thickened marker
        # is expected, so the proxy samples away from it
        rmap = jl.shipped_map(512)
        fcs = jl.classify_grid(rmap, jl.SHIPPED_BOX, 512)
        labels = fcs.labels
        n = fcs.grid
        x0, y0, x1, y1 = fcs.box
        rng = np.random.default_rng(0)
        interior = (labels > 0) & (fcs.escape_iters <= rmap.max_iterations - 2)
        ix, iy = np.nonzero(interior)
        take = rng.choice(len(ix), size=5000, replace=False)
        ok = 0
        for k in take:
            z = complex(x0 + (ix[k] + 0.5) * fcs.cell, y0 + (iy[k] + 0.5) * fcs.cell)
            w = rmap(z)
            if not (x0 <= w.real < x1 and y0 <= w.imag < y1):
                ok += 1
                continue
            jx = int((w.real - x0) / fcs.cell)
            jy = int((w.imag - y0) / fcs.cell)
            if labels[min(jx, n - 1), min(jy, n - 1)] > 0:
                ok += 1
        assert ok / len(take) >= 0.999


class TestComponentsToPacking:
    def test_power_map_single_element(self):
        fcs = jl.classify_grid(square_map(), (-2.0, -2.0, 2.0, 2.0), 512)
        packing = jl.components_to_packing(fcs)
        assert len(packing.elements) == 1
        # inner element approximates the unit disc, outer its complement edge
        assert geo.diameter(packing.elements[0]) == pytest.approx(2.0, abs=4 * fcs.cell)
        hull = packing.outer.vertices
        radii = np.hypot(hull[:, 0], hull[:, 1])
        assert np.all(radii >= 1.0 - 2 * fcs.cell)
        assert np.min(radii) <= 1.0 + 4 * fcs.cell

    def test_elements_within_outer(self):
        rmap = jl.shipped_map(512)
        fcs = jl.classify_grid(rmap, jl.SHIPPED_BOX, 512)
        packing = jl.components_to_packing(fcs)
        douter = geo.diameter(packing.outer)
        assert all(geo.diameter(e) <= douter for e in packing.elements)
        assert packing.meta["complete_x"] == pytest.approx(1.0 / (6.0 * fcs.cell))

    def test_coarse_grid_fewer_elements(self):
        a = jl.components_to_packing(jl.classify_grid(jl.shipped_map(256), jl.SHIPPED_BOX, 256))
        b = jl.components_to_packing(jl.classify_grid(jl.shipped_map(512), jl.SHIPPED_BOX, 512))
        assert len(a.elements) < len(b.elements)


class TestArtifacts:
    def test_pgm(self, tmp_path):
        fcs = jl.classify_grid(square_map(), (-2.0, -2.0, 2.0, 2.0), 256)
        path = tmp_path / "img.pgm"
        jl.write_pgm(fcs, path)
        data = path.read_bytes()
        assert data.startswith(b"P5\n256 256\n255\n")
        assert len(data) == len(b"P5\n256 256\n255\n") + 256 * 256

    def test_load_config(self, tmp_path):
        cfg = jl.shipped_map(512).to_config(box=jl.SHIPPED_BOX, grid=512)
        path = tmp_path / "map.json"
        path.write_text(json.dumps(cfg))
        rmap, box, grid = jl.load_config(path)
        assert grid == 512
        assert box == jl.SHIPPED_BOX
        assert rmap.max_iterations == jl.shipped_map(512).max_iterations

    def test_residual_sample(self):
        fcs = jl.classify_grid(jl.shipped_map(256), jl.SHIPPED_BOX, 256)
        sample = jl.julia_residual_sample(fcs)
        assert sample.resolution == pytest.approx(math.sqrt(2.0) * fcs.cell)
        assert len(sample.points) == int((fcs.labels == 0).sum())
