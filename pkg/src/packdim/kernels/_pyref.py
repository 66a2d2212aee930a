"""Pure-Python (numpy) reference implementations of the hot kernels.

These are the semantics of record: the compiled extension mirrors the
exact arithmetic (same operation order, division only by real values,
no fused multiply-adds) so both paths classify identically.
"""

from __future__ import annotations

import numpy as np

BACKEND = "python"

_POLE_EPS2 = 1e-300


def escape_grid(
    num: np.ndarray,
    den: np.ndarray,
    x0: float,
    y0: float,
    dx: float,
    dy: float,
    nx: int,
    ny: int,
    max_iter: int,
    escape_radius: float,
) -> np.ndarray:
    """Escape iteration counts for z -> num(z)/den(z) on cell centers.

    Grid cell (i, j) starts at x0 + (i+0.5)dx + i(y0 + (j+0.5)dy); the
    result is the first iteration with |z| > escape_radius (0 means the
    start point already escaped), or -1 if the orbit stays bounded for
    max_iter steps.  A denominator with |den(z)|^2 < 1e-300 counts as
    divergence to infinity at that step.
    """
    num = np.asarray(num, dtype=complex)
    den = np.asarray(den, dtype=complex)
    xs = x0 + (np.arange(nx) + 0.5) * dx
    ys = y0 + (np.arange(ny) + 0.5) * dy
    z = (xs[:, None] + 1j * ys[None, :]).ravel()
    out = np.full(z.shape, -1, dtype=np.int32)
    esc2 = escape_radius * escape_radius
    active = np.arange(z.size)
    zs = z
    for it in range(max_iter + 1):
        az2 = zs.real * zs.real + zs.imag * zs.imag
        esc = az2 > esc2
        if np.any(esc):
            out[active[esc]] = it
            keep = ~esc
            active = active[keep]
            zs = zs[keep]
        if it == max_iter or active.size == 0:
            break
        p = _horner(num, zs)
        q = _horner(den, zs)
        q2 = q.real * q.real + q.imag * q.imag
        pole = q2 < _POLE_EPS2
        if np.any(pole):
            out[active[pole]] = it + 1
            keep = ~pole
            active = active[keep]
            zs = p[keep] * np.conj(q[keep]) / q2[keep]
        else:
            zs = p * np.conj(q) / q2
    return out.reshape(nx, ny)


def _horner(coeffs: np.ndarray, z: np.ndarray) -> np.ndarray:
    acc = np.full(z.shape, coeffs[-1], dtype=complex)
    for c in coeffs[-2::-1]:
        acc = acc * z + c
    return acc


def greedy_disc_pack(points: np.ndarray, r: float) -> np.ndarray:
    """Indices of a greedy maximal family of disjoint open discs of radius r.

    Points are scanned in the given order; one is accepted when its center
    is at least 2r from every previously accepted center.  A uniform grid
    of cell size 2r limits each test to the 3x3 neighborhood.
    """
    pts = np.asarray(points, dtype=float)
    cell = 2.0 * r
    four_r2 = 4.0 * r * r
    grid: dict[tuple[int, int], list[int]] = {}
    accepted: list[int] = []
    X = pts[:, 0]
    Y = pts[:, 1]
    for i in range(len(pts)):
        x = X[i]
        y = Y[i]
        cx = int(np.floor(x / cell))
        cy = int(np.floor(y / cell))
        ok = True
        for gx in (cx - 1, cx, cx + 1):
            for gy in (cy - 1, cy, cy + 1):
                for j in grid.get((gx, gy), ()):
                    ddx = x - X[j]
                    ddy = y - Y[j]
                    if ddx * ddx + ddy * ddy < four_r2:
                        ok = False
                        break
                if not ok:
                    break
            if not ok:
                break
        if ok:
            grid.setdefault((cx, cy), []).append(i)
            accepted.append(i)
    return np.asarray(accepted, dtype=np.int64)
