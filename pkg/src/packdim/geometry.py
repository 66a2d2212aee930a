"""Geometric primitives shared by all generators and analyzers.

A packing is an outer boundary curve plus a family of complementary
components ("holes") with pairwise disjoint interiors.  Elements are
circles, axis-aligned squares, triangles, or simple polygons.  All
coordinates are plain float64; tolerances are documented per function
and are relative to the outer element's diameter where they have units.

Everything here is a pure function of immutable values and safe to call
from any number of workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# Degeneracy tests (zero radius, collinear vertices, self-intersection)
# use DEGENERACY_TOL; containment checks use CONTAINMENT_TOL scaled by
# the outer diameter, which keeps both scale-free.
DEGENERACY_TOL = 1e-12
CONTAINMENT_TOL = 1e-9


class GeometryError(ValueError):
    """Base class for geometry failures."""


class InvalidShapeError(GeometryError):
    """Degenerate shape: zero radius/side, too few vertices, self-intersection."""


@dataclass(slots=True)
class Circle:
    cx: float
    cy: float
    r: float
    level: int = 0
    id: int = -1

    def __post_init__(self):
        if not (self.r > 0.0 and math.isfinite(self.r)):
            raise InvalidShapeError(f"circle radius must be positive, got {self.r}")


@dataclass(slots=True)
class Square:
    """Axis-aligned square; (x, y) is the lower-left corner."""

    x: float
    y: float
    side: float
    level: int = 0
    id: int = -1

    def __post_init__(self):
        if not (self.side > 0.0 and math.isfinite(self.side)):
            raise InvalidShapeError(f"square side must be positive, got {self.side}")


class Polygon:
    """Simple closed polygon given by its ordered vertices, shape (n, 2)."""

    __slots__ = ("vertices", "level", "id")

    def __init__(self, vertices, level: int = 0, id: int = -1):
        v = np.asarray(vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or v.shape[0] < 3:
            raise InvalidShapeError("polygon needs at least 3 two-dimensional vertices")
        if not np.all(np.isfinite(v)):
            raise InvalidShapeError("polygon vertices must be finite")
        self.vertices = v
        self.level = level
        self.id = id

    def __repr__(self):
        return f"{type(self).__name__}({len(self.vertices)} vertices, level={self.level}, id={self.id})"


class Triangle(Polygon):
    def __init__(self, v0, v1, v2, level: int = 0, id: int = -1):
        super().__init__([v0, v1, v2], level=level, id=id)


PackingElement = Circle | Square | Polygon


# ---------------------------------------------------------------------------
# Per-shape measurements


def diameter(e: PackingElement) -> float:
    """Euclidean diameter of the boundary curve.

    Exact: 2r for circles, side*sqrt(2) for squares, max pairwise vertex
    distance for triangles/polygons (exact when the vertex list is convex;
    callers pass convex hulls for irregular boundaries).
    """
    if isinstance(e, Circle):
        return 2.0 * e.r
    if isinstance(e, Square):
        return e.side * math.sqrt(2.0)
    v = e.vertices
    if len(v) > 8:
        v = convex_hull(v)
    d2 = 0.0
    for i in range(len(v) - 1):
        diff = v[i + 1 :] - v[i]
        m = float(np.max(np.einsum("ij,ij->i", diff, diff)))
        if m > d2:
            d2 = m
    return math.sqrt(d2)


def centroid(e: PackingElement) -> tuple[float, float]:
    if isinstance(e, Circle):
        return (e.cx, e.cy)
    if isinstance(e, Square):
        h = e.side / 2.0
        return (e.x + h, e.y + h)
    # area centroid of a simple polygon (shoelace); falls back to the
    # vertex mean for (numerically) zero-area rings
    v = e.vertices
    x, y = v[:, 0], v[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    a = 0.5 * float(np.sum(cross))
    if abs(a) < DEGENERACY_TOL * max(1.0, float(np.max(np.abs(v)))) ** 2:
        return (float(np.mean(x)), float(np.mean(y)))
    cx = float(np.sum((x + xn) * cross) / (6.0 * a))
    cy = float(np.sum((y + yn) * cross) / (6.0 * a))
    return (cx, cy)


def inscribed_circumscribed(e: PackingElement) -> tuple[float, float, tuple[float, float]]:
    """Concentric inscribed/circumscribed radii (r, R) and their center.

    Circles: (r, r); squares: (s/2, s*sqrt(2)/2).  For triangles/polygons
    the pair is anchored at the centroid: r = min distance to the boundary,
    R = max vertex distance.  The centroid anchor can be suboptimal for the
    ratio R/r, which is fine for upper-bound roundness checks.
    """
    if isinstance(e, Circle):
        return (e.r, e.r, (e.cx, e.cy))
    if isinstance(e, Square):
        h = e.side / 2.0
        return (h, h * math.sqrt(2.0), (e.x + h, e.y + h))
    c = centroid(e)
    v = e.vertices
    R = math.sqrt(float(np.max((v[:, 0] - c[0]) ** 2 + (v[:, 1] - c[1]) ** 2)))
    r = boundary_distance(e, c)
    if r <= 0.0:
        raise InvalidShapeError("polygon centroid lies on/outside its boundary")
    return (r, R, c)


def bounding_box(e: PackingElement) -> tuple[float, float, float, float]:
    if isinstance(e, Circle):
        return (e.cx - e.r, e.cy - e.r, e.cx + e.r, e.cy + e.r)
    if isinstance(e, Square):
        return (e.x, e.y, e.x + e.side, e.y + e.side)
    v = e.vertices
    return (float(v[:, 0].min()), float(v[:, 1].min()), float(v[:, 0].max()), float(v[:, 1].max()))


def _edges(e: PackingElement) -> np.ndarray:
    """Boundary edges as an (n, 4) array of segments (x0, y0, x1, y1)."""
    if isinstance(e, Square):
        x0, y0 = e.x, e.y
        x1, y1 = e.x + e.side, e.y + e.side
        v = np.array([[x0, y0], [x1, y0], [x1, y1], [x0, y1]])
    else:
        v = e.vertices
    w = np.roll(v, -1, axis=0)
    return np.hstack([v, w])


def _point_segments_distance(px, py, segs) -> float:
    """Min distance from the point to a batch of segments (n, 4)."""
    ax, ay, bx, by = segs[:, 0], segs[:, 1], segs[:, 2], segs[:, 3]
    dx, dy = bx - ax, by - ay
    L2 = dx * dx + dy * dy
    t = np.where(L2 > 0.0, ((px - ax) * dx + (py - ay) * dy) / np.where(L2 > 0.0, L2, 1.0), 0.0)
    t = np.clip(t, 0.0, 1.0)
    qx, qy = ax + t * dx, ay + t * dy
    return float(np.sqrt(np.min((px - qx) ** 2 + (py - qy) ** 2)))


def boundary_distance(e: PackingElement, p) -> float:
    """Distance from the point p to the boundary curve of e."""
    px, py = float(p[0]), float(p[1])
    if isinstance(e, Circle):
        return abs(math.hypot(px - e.cx, py - e.cy) - e.r)
    return _point_segments_distance(px, py, _edges(e))


def contains_points(e: PackingElement, pts: np.ndarray) -> np.ndarray:
    """Boolean mask: which points lie in the closed region bounded by e.

    Polygon test is the crossing-number rule; points exactly on an edge
    may land on either side at float precision.
    """
    pts = np.asarray(pts, dtype=float)
    x, y = pts[:, 0], pts[:, 1]
    if isinstance(e, Circle):
        return (x - e.cx) ** 2 + (y - e.cy) ** 2 <= e.r * e.r
    if isinstance(e, Square):
        return (x >= e.x) & (x <= e.x + e.side) & (y >= e.y) & (y <= e.y + e.side)
    v = e.vertices
    n = len(v)
    inside = np.zeros(len(pts), dtype=bool)
    j = n - 1
    for i in range(n):
        xi, yi = v[i]
        xj, yj = v[j]
        crosses = ((yi > y) != (yj > y)) & (x < (xj - xi) * (y - yi) / (yj - yi + ((yj - yi) == 0.0)) + xi)
        inside ^= crosses
        j = i
    return inside


def boundary_points(e: PackingElement, pitch: float, min_points: int = 4) -> np.ndarray:
    """Sample the boundary curve at roughly `pitch` spacing, (m, 2).

    Vertices/corners are always included; at least `min_points` samples
    are returned regardless of pitch.
    """
    if pitch <= 0.0:
        raise GeometryError("pitch must be positive")
    if isinstance(e, Circle):
        m = max(min_points, int(math.ceil(2.0 * math.pi * e.r / pitch)))
        th = np.arange(m) * (2.0 * math.pi / m)
        return np.column_stack([e.cx + e.r * np.cos(th), e.cy + e.r * np.sin(th)])
    segs = _edges(e)
    out = []
    for ax, ay, bx, by in segs:
        L = math.hypot(bx - ax, by - ay)
        m = max(1, int(math.ceil(L / pitch)))
        t = np.arange(m) / m
        out.append(np.column_stack([ax + t * (bx - ax), ay + t * (by - ay)]))
    pts = np.vstack(out)
    if len(pts) < min_points:
        # repeat-subdivide edges until the floor is met
        return boundary_points(e, pitch / 2.0, min_points)
    return pts


# ---------------------------------------------------------------------------
# Pairwise distance between boundary curves


def _circle_circle(a: Circle, b: Circle) -> float:
    # parenthesized so the result is exactly symmetric in the two operands
    d = math.hypot(a.cx - b.cx, a.cy - b.cy)
    m = max(d - (a.r + b.r), (a.r - b.r) - d, (b.r - a.r) - d)
    return max(m, 0.0)


def _square_square(a: Square, b: Square) -> float:
    ax0, ay0, ax1, ay1 = a.x, a.y, a.x + a.side, a.y + a.side
    bx0, by0, bx1, by1 = b.x, b.y, b.x + b.side, b.y + b.side
    dx = max(bx0 - ax1, ax0 - bx1, 0.0)
    dy = max(by0 - ay1, ay0 - by1, 0.0)
    if dx > 0.0 or dy > 0.0:
        return math.hypot(dx, dy)
    # rectangles meet as sets: either the boundaries cross (distance 0) or
    # one square is nested in the other (distance = smallest side gap)
    if ax0 >= bx0 and ax1 <= bx1 and ay0 >= by0 and ay1 <= by1:
        return max(0.0, min(ax0 - bx0, bx1 - ax1, ay0 - by0, by1 - ay1))
    if bx0 >= ax0 and bx1 <= ax1 and by0 >= ay0 and by1 <= ay1:
        return max(0.0, min(bx0 - ax0, ax1 - bx1, by0 - ay0, ay1 - by1))
    return 0.0


def _circle_segments(c: Circle, segs: np.ndarray) -> float:
    # distance from segment to circle boundary: 0 if the segment's distance
    # range to the center straddles r, else gap to the nearer side
    ax, ay, bx, by = segs[:, 0], segs[:, 1], segs[:, 2], segs[:, 3]
    dx, dy = bx - ax, by - ay
    L2 = dx * dx + dy * dy
    t = np.where(L2 > 0.0, ((c.cx - ax) * dx + (c.cy - ay) * dy) / np.where(L2 > 0.0, L2, 1.0), 0.0)
    t = np.clip(t, 0.0, 1.0)
    qx, qy = ax + t * dx, ay + t * dy
    dmin = np.sqrt((c.cx - qx) ** 2 + (c.cy - qy) ** 2)
    da = np.sqrt((c.cx - ax) ** 2 + (c.cy - ay) ** 2)
    db = np.sqrt((c.cx - bx) ** 2 + (c.cy - by) ** 2)
    dmax = np.maximum(da, db)
    gap = np.where(dmin > c.r, dmin - c.r, np.where(dmax < c.r, c.r - dmax, 0.0))
    return float(np.min(gap))


def _points_to_segments(pts: np.ndarray, segs: np.ndarray) -> np.ndarray:
    """Distances from k points to m segments, shape (k, m)."""
    px = pts[:, 0:1]
    py = pts[:, 1:2]
    ax, ay, bx, by = segs[:, 0], segs[:, 1], segs[:, 2], segs[:, 3]
    dx, dy = bx - ax, by - ay
    L2 = dx * dx + dy * dy
    L2s = np.where(L2 > 0.0, L2, 1.0)
    t = np.clip(((px - ax) * dx + (py - ay) * dy) / L2s, 0.0, 1.0)
    qx, qy = ax + t * dx, ay + t * dy
    return np.sqrt((px - qx) ** 2 + (py - qy) ** 2)


def _segments_segments(sa: np.ndarray, sb: np.ndarray) -> float:
    """Min distance between two segment batches; 0 if any pair crosses."""
    # proper crossings (strict sign changes both ways), broadcast (n, m)
    ax, ay, bx, by = (sa[:, k : k + 1] for k in range(4))
    cx, cy, dx, dy = sb[:, 0], sb[:, 1], sb[:, 2], sb[:, 3]
    d1 = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
    d2 = (bx - ax) * (dy - ay) - (by - ay) * (dx - ax)
    d3 = (dx - cx) * (ay - cy) - (dy - cy) * (ax - cx)
    d4 = (dx - cx) * (by - cy) - (dy - cy) * (bx - cx)
    if np.any(((d1 > 0) != (d2 > 0)) & ((d3 > 0) != (d4 > 0))):
        return 0.0
    ea = np.vstack([sa[:, :2], sa[:, 2:]])
    eb = np.vstack([sb[:, :2], sb[:, 2:]])
    m = min(float(np.min(_points_to_segments(ea, sb))), float(np.min(_points_to_segments(eb, sa))))
    return m


def set_distance(e1: PackingElement, e2: PackingElement) -> float:
    """Euclidean distance between the two boundary curves (0 on contact).

    Closed forms for circle-circle and square-square; circle-polygon via
    per-segment annulus gaps; polygon-polygon via segment pairs.
    """
    if isinstance(e1, Circle) and isinstance(e2, Circle):
        return _circle_circle(e1, e2)
    if isinstance(e1, Square) and isinstance(e2, Square):
        return _square_square(e1, e2)
    if isinstance(e1, Circle):
        return _circle_segments(e1, _edges(e2))
    if isinstance(e2, Circle):
        return _circle_segments(e2, _edges(e1))
    return _segments_segments(_edges(e1), _edges(e2))


def convex_hull(points: np.ndarray) -> np.ndarray:
    """Convex hull (CCW, no duplicate endpoint) via Andrew's monotone chain."""
    pts = np.unique(np.asarray(points, dtype=float), axis=0)
    if len(pts) <= 2:
        return pts
    # lexicographic order
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    pts = pts[order]

    def half(seq):
        out = []
        for p in seq:
            while len(out) >= 2:
                ox, oy = out[-2]
                ax, ay = out[-1]
                if (ax - ox) * (p[1] - oy) - (ay - oy) * (p[0] - ox) <= 0.0:
                    out.pop()
                else:
                    break
            out.append((p[0], p[1]))
        return out

    lower = half(pts)
    upper = half(pts[::-1])
    hull = lower[:-1] + upper[:-1]
    return np.asarray(hull)


# ---------------------------------------------------------------------------
# Containers


@dataclass(slots=True)
class Packing:
    """Outer boundary element plus the family of complementary components.

    `meta` records the generator name, its parameters, and the truncation
    (max depth / min diameter / max curvature) that produced the instance.
    """

    outer: PackingElement
    elements: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def diameters(self) -> np.ndarray:
        return np.array([diameter(e) for e in self.elements], dtype=float)

    def validate(self, max_pairs: int = 2_000_000) -> None:
        """Check containment in the outer region and pairwise disjointness.

        Meant for desk-scale instances; raises GeometryError on violation.
        Containment tolerance is CONTAINMENT_TOL * diam(outer); disjointness
        is checked pairwise up to `max_pairs` element pairs.
        """
        tol = CONTAINMENT_TOL * diameter(self.outer)
        ox0, oy0, ox1, oy1 = bounding_box(self.outer)
        for e in self.elements:
            x0, y0, x1, y1 = bounding_box(e)
            if x0 < ox0 - tol or y0 < oy0 - tol or x1 > ox1 + tol or y1 > oy1 + tol:
                raise GeometryError(f"element id={e.id} leaves the outer bounding box")
            if isinstance(self.outer, Circle):
                if isinstance(e, Circle):
                    far = math.hypot(e.cx - self.outer.cx, e.cy - self.outer.cy) + e.r
                else:
                    pts = _edges(e)[:, :2]
                    far = math.sqrt(
                        float(np.max((pts[:, 0] - self.outer.cx) ** 2 + (pts[:, 1] - self.outer.cy) ** 2))
                    )
                if far > self.outer.r + tol:
                    raise GeometryError(f"element id={e.id} leaves the outer circle")
            elif isinstance(self.outer, Polygon) and not isinstance(e, Circle):
                pts = _edges(e)[:, :2]
                inside = contains_points(self.outer, pts)
                for p in pts[~inside]:
                    if boundary_distance(self.outer, p) > tol:
                        raise GeometryError(f"element id={e.id} leaves the outer polygon")
        n = len(self.elements)
        if n * (n - 1) // 2 > max_pairs:
            raise GeometryError("too many elements for a pairwise disjointness scan")
        for i in range(n):
            for j in range(i + 1, n):
                if _interiors_overlap(self.elements[i], self.elements[j], tol):
                    raise GeometryError(
                        f"elements id={self.elements[i].id} and id={self.elements[j].id} overlap"
                    )


def _probe_points(e: PackingElement) -> np.ndarray:
    if isinstance(e, Circle):
        th = np.arange(8) * (math.pi / 4.0)
        pts = np.column_stack([e.cx + e.r * np.cos(th), e.cy + e.r * np.sin(th)])
    elif isinstance(e, Square):
        pts = _edges(e)[:, :2]
    else:
        pts = e.vertices
    return np.vstack([pts, [centroid(e)]])


def _interiors_overlap(a: PackingElement, b: PackingElement, tol: float) -> bool:
    if isinstance(a, Circle) and isinstance(b, Circle):
        d = math.hypot(a.cx - b.cx, a.cy - b.cy)
        return d < a.r + b.r - tol
    if isinstance(a, Square) and isinstance(b, Square):
        return (
            a.x + a.side > b.x + tol
            and b.x + b.side > a.x + tol
            and a.y + a.side > b.y + tol
            and b.y + b.side > a.y + tol
        )
    # tangency is allowed, so a probe point of one shape must lie strictly
    # inside the other (farther than tol from its boundary) to count
    for e1, e2 in ((a, b), (b, a)):
        probes = _probe_points(e1)
        inside = contains_points(e2, probes)
        for p in probes[inside]:
            if boundary_distance(e2, p) > tol:
                return True
    return False


@dataclass(slots=True)
class ResidualSample:
    """Point cloud approximating the residual set of a packing.

    `resolution` is the guaranteed covering radius: every point of the
    truncated residual set lies within `resolution` of some sample point.
    `anchor` is the lower-left corner of the outer bounding box; grid-based
    counting is anchored there.
    """

    points: np.ndarray
    resolution: float
    anchor: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float)
        if self.points.ndim != 2 or self.points.shape[1] != 2 or len(self.points) == 0:
            raise GeometryError("sample needs a nonempty (n, 2) point array")
        if not self.resolution > 0.0:
            raise GeometryError("resolution must be positive")


def residual_boundary_sample(packing: Packing, pitch: float, min_points: int = 4) -> ResidualSample:
    """Sample every boundary curve (outer included) at `pitch` spacing.

    Boundary curves of the complementary components belong to the residual
    set, so the cloud sits on it exactly; the covering radius is limited by
    the truncation depth: max(pitch, smallest element diameter).
    """
    chunks = [boundary_points(packing.outer, pitch, min_points)]
    min_diam = math.inf
    for e in packing.elements:
        chunks.append(boundary_points(e, pitch, min_points))
        d = diameter(e)
        if d < min_diam:
            min_diam = d
    pts = np.vstack(chunks)
    res = max(pitch, min_diam if math.isfinite(min_diam) else pitch)
    bb = bounding_box(packing.outer)
    return ResidualSample(pts, res, anchor=(bb[0], bb[1]))


# ---------------------------------------------------------------------------
# CSV dump format ("packdim-v1"): one element per line, outer first.
#   circle,cx,cy,r | square,x,y,s | poly,n,x1,y1,...,xn,yn
# Floats always use 17 significant digits so a dump->load->dump round trip
# is byte-identical.


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _element_line(e: PackingElement) -> str:
    if isinstance(e, Circle):
        return f"circle,{_fmt(e.cx)},{_fmt(e.cy)},{_fmt(e.r)}"
    if isinstance(e, Square):
        return f"square,{_fmt(e.x)},{_fmt(e.y)},{_fmt(e.side)}"
    v = e.vertices
    coords = ",".join(_fmt(c) for c in v.ravel())
    return f"poly,{len(v)},{coords}"


def dump_packing(packing: Packing, path) -> None:
    gen = packing.meta.get("generator", "unknown")
    params = packing.meta.get("params", "")
    with open(path, "w") as f:
        f.write(f"# packdim-v1,{gen},{params}\n")
        f.write(_element_line(packing.outer) + "\n")
        for e in packing.elements:
            f.write(_element_line(e) + "\n")


def _parse_element(line: str, level: int, id: int) -> PackingElement:
    parts = line.split(",")
    kind = parts[0]
    if kind == "circle":
        return Circle(float(parts[1]), float(parts[2]), float(parts[3]), level, id)
    if kind == "square":
        return Square(float(parts[1]), float(parts[2]), float(parts[3]), level, id)
    if kind == "poly":
        n = int(parts[1])
        coords = np.array([float(t) for t in parts[2 : 2 + 2 * n]]).reshape(n, 2)
        return Polygon(coords, level, id)
    raise GeometryError(f"unknown element kind {kind!r}")


def load_packing(path) -> Packing:
    with open(path) as f:
        header = f.readline().rstrip("\n")
        if not header.startswith("# packdim-v1,"):
            raise GeometryError(f"{path}: not a packdim-v1 dump")
        rest = header[len("# packdim-v1,") :]
        gen, _, params = rest.partition(",")
        outer = _parse_element(f.readline().rstrip("\n"), 0, -1)
        elements = []
        for i, line in enumerate(f):
            line = line.strip()
            if line:
                elements.append(_parse_element(line, 0, i))
    return Packing(outer=outer, elements=elements, meta={"generator": gen, "params": params})
