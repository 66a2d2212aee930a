"""Apollonian circle packing generation via Descartes quadruples.

Four mutually tangent circles with curvatures (k1..k4) satisfy
(k1+k2+k3+k4)^2 = 2(k1^2+k2^2+k3^2+k4^2); the bounding circle carries
negative curvature.  Replacing one circle of a quadruple by the second
tangent solution is a linear (Vieta) reflection both in curvature and in
curvature*center, so breadth-first search over reflections enumerates the
packing without any square roots past the root construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import Circle, Packing

IDENTITY_RTOL = 1e-6  # relative tolerance on the quadruple identity
TANGENCY_TOL = 1e-9  # absolute tolerance on pairwise tangency
QUANT = 1e-9  # dedup quantum for curvatures and centers


class ApollonianError(ValueError):
    pass


class NoTangentCircleError(ApollonianError):
    """The three input curvatures admit no real tangent circle."""


class InvalidRootError(ApollonianError):
    """Root quadruple violates the Descartes identity or tangency."""


def descartes_fourth(k1: float, k2: float, k3: float) -> tuple[float, float]:
    """Both curvatures tangent to three mutually tangent circles, larger first.

    k4 = k1 + k2 + k3 +- 2*sqrt(k1 k2 + k2 k3 + k3 k1); a negative radicand
    means no tangent circle exists for these inputs.
    """
    rad = k1 * k2 + k2 * k3 + k3 * k1
    if rad < 0.0:
        scale = max(abs(k1), abs(k2), abs(k3), 1.0)
        if rad < -IDENTITY_RTOL * scale * scale:
            raise NoTangentCircleError(f"negative radicand {rad} for ({k1}, {k2}, {k3})")
        rad = 0.0
    s = k1 + k2 + k3
    root = 2.0 * math.sqrt(rad)
    return (s + root, s - root)


def _identity_residual(ks) -> float:
    s = sum(ks)
    q = sum(k * k for k in ks)
    scale = max(q, 1e-300)
    return abs(s * s - 2.0 * q) / (2.0 * scale)


def _tangency_gap(k1: float, z1: complex, k2: float, z2: complex) -> float:
    # tangency distance between circles of curvature k1, k2 is |(k1+k2)/(k1*k2)|
    # (sum of radii when both interiors are disjoint, difference when nested)
    t = abs((k1 + k2) / (k1 * k2))
    return abs(abs(z1 - z2) - t)


@dataclass(slots=True)
class DescartesQuadruple:
    """Four mutually tangent circles: curvatures plus centers as complex numbers."""

    curvatures: tuple[float, float, float, float]
    centers: tuple[complex, complex, complex, complex]

    def validate(self) -> None:
        ks = self.curvatures
        if any(k == 0.0 or not math.isfinite(k) for k in ks):
            raise InvalidRootError("zero or non-finite curvature (straight lines unsupported)")
        if _identity_residual(ks) > IDENTITY_RTOL:
            raise InvalidRootError(f"Descartes identity violated: {ks}")
        for i in range(4):
            for j in range(i + 1, 4):
                gap = _tangency_gap(ks[i], self.centers[i], ks[j], self.centers[j])
                if gap > TANGENCY_TOL * max(1.0, 1.0 / min(abs(k) for k in ks)):
                    raise InvalidRootError(f"circles {i},{j} are not tangent (gap {gap:.3g})")


def root_quadruple(k0: float, k1: float, k2: float, k3: float) -> DescartesQuadruple:
    """Realize curvatures as circles in a canonical pose.

    The bounding circle (exactly one curvature must be negative) is centered
    at the origin; the first inner circle sits on the positive x-axis and the
    third has positive imaginary part.
    """
    ks = (k0, k1, k2, k3)
    if _identity_residual(ks) > IDENTITY_RTOL:
        raise InvalidRootError(f"Descartes identity violated: {ks}")
    if sum(1 for k in ks if k < 0.0) != 1 or any(k == 0.0 for k in ks):
        raise InvalidRootError("expected exactly one negative (bounding) curvature")
    order = sorted(range(4), key=lambda i: ks[i])
    ka, kb, kc, kd = (ks[order[i]] for i in range(4))

    def t(ki, kj):
        return abs((ki + kj) / (ki * kj))

    za = 0.0 + 0.0j
    zb = complex(t(ka, kb), 0.0)
    zc = _third_center(za, zb, t(ka, kc), t(kb, kc))
    # two mirror placements for the last circle; keep the tangent one
    for sign in (1.0, -1.0):
        zd = _third_center(za, zb, t(ka, kd), t(kb, kd), sign)
        if abs(abs(zd - zc) - t(kc, kd)) <= 1e-7 * max(1.0, abs(1.0 / ka)):
            quad = _reorder(ks, (ka, kb, kc, kd), (za, zb, zc, zd))
            quad.validate()
            return quad
    raise InvalidRootError(f"curvatures {ks} are not realizable as tangent circles")


def _third_center(za: complex, zb: complex, ra: float, rb: float, sign: float = 1.0) -> complex:
    """Intersection of circles of radius ra about za and rb about zb."""
    d = abs(zb - za)
    x = (d * d + ra * ra - rb * rb) / (2.0 * d)
    y2 = ra * ra - x * x
    if y2 < 0.0:
        if y2 < -1e-9 * ra * ra:
            raise InvalidRootError("tangency constraints are inconsistent")
        y2 = 0.0
    u = (zb - za) / d
    return za + u * x + u * 1j * (sign * math.sqrt(y2))


def _reorder(original, sorted_ks, sorted_zs) -> DescartesQuadruple:
    pool = list(zip(sorted_ks, sorted_zs))
    ks, zs = [], []
    for k in original:
        for idx, (kk, zz) in enumerate(pool):
            if kk == k:
                ks.append(kk)
                zs.append(zz)
                pool.pop(idx)
                break
    return DescartesQuadruple(tuple(ks), tuple(zs))


def reflect(ks, kzs, i: int) -> tuple[float, complex]:
    """Vieta reflection of circle i: new curvature and curvature*center."""
    k_new = 2.0 * (ks[0] + ks[1] + ks[2] + ks[3] - ks[i]) - ks[i]
    kz_new = 2.0 * (kzs[0] + kzs[1] + kzs[2] + kzs[3] - kzs[i]) - kzs[i]
    return k_new, kz_new


def _key(k: float, kz: complex) -> tuple[int, int, int]:
    # curvature quantized at 1e-6, center at 1e-9: distinct tangent circles
    # differ by O(1/k) in center and O(1) in curvature*center, so both quanta
    # sit far below real gaps and far above reflection round-off
    z = kz / k
    return (round(k / 1e-6), round(z.real / QUANT), round(z.imag / QUANT))


def generate_apollonian(root: DescartesQuadruple, max_curvature: float) -> Packing:
    """All circles of the packing with curvature <= max_curvature, each once.

    BFS over quadruple reflections, deduplicated by the sorted, quantized
    (curvature, curvature*center) form.  Every circle with curvature below
    the bound is a member of some quadruple whose curvatures all lie below
    the bound, so pruning reflections above it loses nothing.
    """
    root.validate()
    if max_curvature < max(root.curvatures):
        raise ApollonianError("max_curvature must cover the root curvatures")
    ks0 = root.curvatures
    kzs0 = tuple(k * z for k, z in zip(ks0, root.centers))

    def qkey(ks, kzs):
        return tuple(sorted(_key(k, kz) for k, kz in zip(ks, kzs)))

    seen = {qkey(ks0, kzs0)}
    circles: dict[tuple[int, int, int], tuple[float, complex]] = {}
    for k, kz in zip(ks0, kzs0):
        circles[_key(k, kz)] = (k, kz)
    frontier = [(ks0, kzs0)]
    while frontier:
        nxt = []
        for ks, kzs in frontier:
            for i in range(4):
                k_new, kz_new = reflect(ks, kzs, i)
                if k_new > max_curvature:
                    continue
                ks2 = ks[:i] + (k_new,) + ks[i + 1 :]
                kzs2 = kzs[:i] + (kz_new,) + kzs[i + 1 :]
                key = qkey(ks2, kzs2)
                if key in seen:
                    continue
                seen.add(key)
                circles.setdefault(_key(k_new, kz_new), (k_new, kz_new))
                nxt.append((ks2, kzs2))
        frontier = nxt

    outer_items = [(k, kz) for k, kz in circles.values() if k < 0.0]
    if len(outer_items) != 1:
        raise InvalidRootError("expected exactly one bounding circle")
    k_out, kz_out = outer_items[0]
    z_out = kz_out / k_out
    outer = Circle(z_out.real, z_out.imag, 1.0 / abs(k_out), level=0, id=-1)

    inner = sorted(
        ((k, kz / k) for k, kz in circles.values() if k > 0.0),
        key=lambda t: (t[0], t[1].real, t[1].imag),
    )
    elements = [
        Circle(z.real, z.imag, 1.0 / k, level=0, id=i) for i, (k, z) in enumerate(inner)
    ]
    meta = {
        "generator": "apollonian",
        "params": f"root={tuple(root.curvatures)};max_curvature={max_curvature:.17g}",
        "root": tuple(root.curvatures),
        "max_curvature": float(max_curvature),
        "truncation": ("max_curvature", float(max_curvature)),
    }
    return Packing(outer=outer, elements=elements, meta=meta)


def curvatures(packing: Packing) -> np.ndarray:
    """Inner-circle curvatures of an Apollonian packing, ascending."""
    return np.array([1.0 / e.r for e in packing.elements])
