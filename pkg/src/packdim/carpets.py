"""Square-carpet and gasket generators plus exact hole-count tables.

The p-carpet subdivides the unit square into p^2 cells and removes the
interior of the middle one, recursing on the survivors; mixed carpets
apply blocks of steps with different bases following a block sequence
like {n1 steps of base 3, n2 steps of base 5, ...}.  Count tables give
the exact (diameter, count) ladder with big-integer counts, which makes
counting queries possible far beyond what geometry can materialize.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import Packing, Square, Triangle

SQRT2 = math.sqrt(2.0)


class CarpetError(ValueError):
    pass


class InvalidBaseError(CarpetError):
    """Carpet base must be an odd integer >= 3."""


def _check_base(p: int) -> None:
    if not isinstance(p, (int, np.integer)) or p < 3 or p % 2 == 0:
        raise InvalidBaseError(f"base must be an odd integer >= 3, got {p!r}")


@dataclass(slots=True)
class SigmaSpec:
    """Block sequence for mixed carpets: [(base, steps), ...].

    Steps may be None (infinity) only in the final block.  Bases beyond
    {3, 5} are accepted; blocks of equal bases are allowed.
    """

    blocks: list[tuple[int, int | None]]

    def __post_init__(self):
        if not self.blocks:
            raise CarpetError("sigma spec needs at least one block")
        for i, (p, n) in enumerate(self.blocks):
            _check_base(p)
            if n is None:
                if i != len(self.blocks) - 1:
                    raise CarpetError("only the final block may be infinite")
            elif not isinstance(n, (int, np.integer)) or n < 1:
                raise CarpetError(f"block length must be a positive integer, got {n!r}")

    def base_for_levels(self, max_level: int) -> list[int]:
        """Subdivision base at each global level 1..max_level."""
        out: list[int] = []
        for p, n in self.blocks:
            take = max_level - len(out) if n is None else min(n, max_level - len(out))
            out.extend([p] * take)
            if len(out) >= max_level:
                break
        if len(out) < max_level:
            raise CarpetError(f"sigma spec is exhausted before level {max_level}")
        return out

    @classmethod
    def parse(cls, text: str) -> "SigmaSpec":
        """Parse 'p:n,p:n,...' with 'inf' allowed as the last n."""
        blocks = []
        for tok in text.split(","):
            p_str, _, n_str = tok.partition(":")
            n = None if n_str.strip().lower() in ("inf", "infinity") else int(n_str)
            blocks.append((int(p_str), n))
        return cls(blocks)


def _subdivide(cells: np.ndarray, size: float, p: int) -> tuple[np.ndarray, np.ndarray, float]:
    """Split cells (n, 2 lower-left corners) into survivors and middle holes."""
    s = size / p
    mid = (p - 1) // 2
    offs = np.array(
        [(i, j) for i in range(p) for j in range(p) if not (i == mid and j == mid)],
        dtype=float,
    )
    survivors = (cells[:, None, :] + offs[None, :, :] * s).reshape(-1, 2)
    holes = cells + mid * s
    return survivors, holes, s


def generate_carpet(p: int, depth: int) -> Packing:
    """Holes of levels 1..depth of the p-carpet on the unit square.

    Level n contributes (p^2-1)^(n-1) holes of side p^-n.
    """
    _check_base(p)
    return generate_sigma_carpet(SigmaSpec([(p, None)]), depth)


def generate_sigma_carpet(spec: SigmaSpec, max_level: int) -> Packing:
    if max_level < 1:
        raise CarpetError("max_level must be >= 1")
    bases = spec.base_for_levels(max_level)
    elements = []
    cells = np.zeros((1, 2))
    size = 1.0
    next_id = 0
    for level, p in enumerate(bases, start=1):
        cells, holes, size = _subdivide(cells, size, p)
        for hx, hy in holes:
            elements.append(Square(float(hx), float(hy), size, level=level, id=next_id))
            next_id += 1
    blocks_str = ",".join(f"{p}:{'inf' if n is None else n}" for p, n in spec.blocks)
    meta = {
        "generator": "sigma" if len(spec.blocks) > 1 else "carpet",
        "params": f"blocks={blocks_str};max_level={max_level}",
        "blocks": list(spec.blocks),
        "max_level": int(max_level),
        "truncation": ("max_level", int(max_level)),
    }
    return Packing(outer=Square(0.0, 0.0, 1.0, level=0, id=-1), elements=elements, meta=meta)


def generate_gasket(depth: int) -> Packing:
    """Downward middle-triangle holes of levels 1..depth in a unit triangle.

    Level n contributes 3^(n-1) holes of side 2^-n; adjacent holes share
    vertices, so the family is touching by construction.
    """
    if depth < 1:
        raise CarpetError("depth must be >= 1")
    h = math.sqrt(3.0) / 2.0
    outer = Triangle((0.0, 0.0), (1.0, 0.0), (0.5, h), level=0, id=-1)
    elements = []
    next_id = 0
    # upward triangles tracked by lower-left vertex and side
    ups = np.array([[0.0, 0.0]])
    side = 1.0
    for level in range(1, depth + 1):
        side /= 2.0
        new_ups = []
        for x, y in ups:
            m01 = (x + side, y)
            m02 = (x + side / 2.0, y + side * h)
            m12 = (x + 1.5 * side, y + side * h)
            elements.append(Triangle(m01, m12, m02, level=level, id=next_id))
            next_id += 1
            new_ups.extend([(x, y), m01, m02])
        ups = np.array(new_ups)
    meta = {
        "generator": "gasket",
        "params": f"depth={depth}",
        "depth": int(depth),
        "truncation": ("max_level", int(depth)),
    }
    return Packing(outer=outer, elements=elements, meta=meta)


# ---------------------------------------------------------------------------
# Exact counting


@dataclass(slots=True)
class CarpetCountTable:
    """Exact (hole diameter, hole count) rows, descending diameter.

    Counts are exact Python integers; diameters are float64 computed by the
    same sequential side division the geometric generator performs, so the
    two agree bit-for-bit where both exist.  `cumulative[i]` is the number
    of holes with diameter >= rows[i] diameter.
    """

    rows: list[tuple[float, int]]
    meta: dict

    def __post_init__(self):
        diams = [d for d, _ in self.rows]
        if any(c <= 0 for _, c in self.rows):
            raise CarpetError("hole counts must be positive")
        if any(b >= a for a, b in zip(diams, diams[1:])):
            raise CarpetError("diameters must be strictly decreasing")

    @property
    def cumulative(self) -> list[int]:
        out = []
        total = 0
        for _, c in self.rows:
            total += c
            out.append(total)
        return out

    def count_leq_inverse(self, x: float) -> int:
        """Exact number of holes with 1/diameter <= x."""
        total = 0
        for d, c in self.rows:
            if 1.0 / d <= x:
                total += c
            else:
                break
        return total

    def diameters_counts(self) -> tuple[np.ndarray, list[int]]:
        return np.array([d for d, _ in self.rows]), [c for _, c in self.rows]


def sigma_count_table(
    spec: SigmaSpec,
    min_diameter: float | None = None,
    max_levels: int | None = None,
) -> CarpetCountTable:
    """Exact count ladder for the mixed carpet of `spec`.

    Within block i at sub-level j the hole count is
    (prod of previous block survivor factors) * (p_i^2-1)^(j-1) and the
    hole diameter is sqrt(2) * (prod of previous side factors) * p_i^-j.
    Generation stops at min_diameter and/or max_levels (at least one must
    be given for an infinite final block).
    """
    if min_diameter is None and max_levels is None:
        raise CarpetError("need min_diameter or max_levels to truncate the table")
    rows: list[tuple[float, int]] = []
    side = 1.0
    survivors = 1  # exact number of surviving cells before the current level
    level = 0
    for p, n in spec.blocks:
        j = 0
        while n is None or j < n:
            if max_levels is not None and level >= max_levels:
                break
            side_next = side / p
            diam = SQRT2 * side_next
            if min_diameter is not None and diam < min_diameter:
                break
            rows.append((diam, survivors))
            survivors *= p * p - 1
            side = side_next
            level += 1
            j += 1
        else:
            continue
        break
    blocks_str = ",".join(f"{q}:{'inf' if m is None else m}" for q, m in spec.blocks)
    meta = {
        "generator": "sigma-counts",
        "params": f"blocks={blocks_str};levels={level}",
        "blocks": list(spec.blocks),
        "levels": level,
    }
    return CarpetCountTable(rows=rows, meta=meta)


def gasket_count_table(max_levels: int) -> CarpetCountTable:
    """Exact (diameter, count) ladder for the gasket: 3^(n-1) holes of side 2^-n."""
    rows = []
    side = 1.0
    count = 1
    for _ in range(max_levels):
        side /= 2.0
        rows.append((side, count))
        count *= 3
    return CarpetCountTable(rows=rows, meta={"generator": "gasket-counts", "params": f"levels={max_levels}"})


def carpet_corner_sample(spec_or_p, depth: int):
    """Residual-set sample from surviving-cell corners at `depth`.

    Corners of surviving cells belong to the carpet at every deeper level,
    so the points lie exactly on the residual set; the covering radius is
    half the cell diagonal.
    """
    from .geometry import ResidualSample

    spec = SigmaSpec([(spec_or_p, None)]) if isinstance(spec_or_p, int) else spec_or_p
    bases = spec.base_for_levels(depth)
    cells = np.zeros((1, 2), dtype=np.int64)
    denom = 1
    for p in bases:
        mid = (p - 1) // 2
        offs = np.array(
            [(i, j) for i in range(p) for j in range(p) if not (i == mid and j == mid)],
            dtype=np.int64,
        )
        cells = (cells[:, None, :] * p + offs[None, :, :]).reshape(-1, 2)
        denom *= p
    corners = np.concatenate(
        [cells, cells + [1, 0], cells + [0, 1], cells + [1, 1]], axis=0
    )
    keys = corners[:, 0] * (denom + 1) + corners[:, 1]
    uniq = np.unique(keys)
    pts = np.column_stack([uniq // (denom + 1), uniq % (denom + 1)]).astype(float) / denom
    resolution = SQRT2 / (2.0 * denom)
    return ResidualSample(pts, resolution, anchor=(0.0, 0.0))


def gasket_corner_sample(depth: int):
    """Residual sample from corners of surviving upward triangles at `depth`.

    Triangle corners survive all deeper subdivision steps, so the points lie
    on the residual set; every point of the depth-`depth` truncation is
    within the triangle circumradius of a corner: resolution 2^-depth/sqrt(3).
    """
    from .geometry import ResidualSample

    h = math.sqrt(3.0) / 2.0
    ups = np.array([[0.0, 0.0]])
    side = 1.0
    for _ in range(depth):
        side /= 2.0
        m01 = ups + [side, 0.0]
        m02 = ups + [side / 2.0, side * h]
        ups = np.vstack([ups, m01, m02])
    corners = np.vstack([ups, ups + [side, 0.0], ups + [side / 2.0, side * h]])
    # corner coordinates are exact multiples of side/2 and side*h
    kx = np.round(corners[:, 0] / (side / 2.0)).astype(np.int64)
    ky = np.round(corners[:, 1] / (side * h)).astype(np.int64)
    _, idx = np.unique(kx * (1 << 32) + ky, return_index=True)
    return ResidualSample(corners[idx], side / math.sqrt(3.0), anchor=(0.0, 0.0))


def dump_count_table(table: CarpetCountTable, path) -> None:
    """CSV 'diameter,count' with decimal big-integer counts ("packdim-counts-v1")."""
    with open(path, "w") as f:
        f.write(f"# packdim-counts-v1,{table.meta.get('generator', '')},{table.meta.get('params', '')}\n")
        f.write("diameter,count\n")
        for d, c in table.rows:
            f.write(f"{format(d, '.17g')},{c}\n")


def load_count_table(path) -> CarpetCountTable:
    with open(path) as f:
        header = f.readline().rstrip("\n")
        if not header.startswith("# packdim-counts-v1,"):
            raise CarpetError(f"{path}: not a packdim-counts-v1 dump")
        rest = header[len("# packdim-counts-v1,") :]
        gen, _, params = rest.partition(",")
        f.readline()  # column header
        rows = []
        for line in f:
            line = line.strip()
            if line:
                d_str, _, c_str = line.partition(",")
                rows.append((float(d_str), int(c_str)))
    return CarpetCountTable(rows=rows, meta={"generator": gen, "params": params})
