"""Fatou/Julia grid classification for rational maps, as packings.

A rational map is iterated on an n x n grid of cell centers; a cell is
resolved once its orbit exceeds the escape radius (basin of infinity) or
enters one of the configured attractor balls, and cells left unresolved
after max_iterations are the Julia marker, a thickening of the Julia set
at grid scale.  Resolved cells are labeled into 4-connected components
per basin class; bounded components become the packing elements, via
convex hulls of their cells, and the inner boundary of the unbounded
component bounds the packing.

max_iterations must track the grid: walls between components are marked
only while the escape-time threshold stays below the wall escape times
at cell distance (about log2(n) for the shipped quartic map).  Too large
a cap dissolves the walls and components merge.  The shipped recipes use
max_iterations = log2(n) - 1.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .geometry import Packing, Polygon, ResidualSample, convex_hull

JULIA = -1  # class marker for unresolved cells
UNDER_RESOLVED_SPAN = 3  # cells per axis below which a component is flagged
COMPLETENESS_SPAN = 6  # cells; component counting is complete above this


class JuliaError(ValueError):
    pass


class BadBoxError(JuliaError):
    """Grid box does not enclose the dynamics (non-escaping edge cells)."""


class InvalidMapError(JuliaError):
    pass


class Diverged:
    """Sentinel for orbits that left every bounded region."""

    def __repr__(self):
        return "DIVERGED"


DIVERGED = Diverged()


@dataclass(slots=True)
class RationalMap:
    """num(z)/den(z) with coefficients in ascending degree order."""

    num: np.ndarray
    den: np.ndarray
    escape_radius: float = 4.0
    max_iterations: int = 200
    attractors: list = field(default_factory=list)  # [(complex point, radius)]

    def __post_init__(self):
        self.num = np.asarray(self.num, dtype=complex)
        self.den = np.asarray(self.den, dtype=complex)
        self.num = np.trim_zeros(self.num, "b")
        self.den = np.trim_zeros(self.den, "b")
        if len(self.den) == 0:
            raise InvalidMapError("denominator is identically zero")
        if len(self.num) == 0:
            raise InvalidMapError("numerator is identically zero")
        if self.degree() < 2:
            raise InvalidMapError("degree must be >= 2 for a nonempty Julia set")
        if self.escape_radius <= 0 or self.max_iterations < 1:
            raise InvalidMapError("escape_radius and max_iterations must be positive")

    def degree(self) -> int:
        return max(len(self.num), len(self.den)) - 1

    def __call__(self, z: complex) -> complex:
        p = _horner(self.num, z)
        q = _horner(self.den, z)
        return p * q.conjugate() / (q.real * q.real + q.imag * q.imag)

    def check_escape_radius(self, samples: int = 64) -> None:
        """|f(z)| > 2|z| on a circle of the escape radius (numeric check)."""
        R = self.escape_radius
        for k in range(samples):
            z = R * complex(math.cos(2 * math.pi * k / samples), math.sin(2 * math.pi * k / samples))
            if abs(self(z)) <= 2 * abs(z):
                raise InvalidMapError(
                    f"escape radius {R} too small: |f| <= 2|z| at z={z:.3f}"
                )

    # -- config plumbing

    @classmethod
    def from_config(cls, cfg: dict) -> "RationalMap":
        def cplx(pair):
            return complex(pair[0], pair[1])

        return cls(
            num=np.array([cplx(c) for c in cfg["num"]]),
            den=np.array([cplx(c) for c in cfg["den"]]),
            escape_radius=float(cfg.get("escape_radius", 4.0)),
            max_iterations=int(cfg.get("max_iter", 200)),
            attractors=[(cplx(a[0]), float(a[1])) for a in cfg.get("attractors", [])],
        )

    def to_config(self, box=None, grid=None) -> dict:
        cfg = {
            "num": [[c.real, c.imag] for c in self.num],
            "den": [[c.real, c.imag] for c in self.den],
            "max_iter": self.max_iterations,
            "escape_radius": self.escape_radius,
        }
        if self.attractors:
            cfg["attractors"] = [[[a.real, a.imag], r] for a, r in self.attractors]
        if box is not None:
            cfg["box"] = list(box)
        if grid is not None:
            cfg["grid"] = grid
        return cfg


def _horner(coeffs, z):
    acc = coeffs[-1]
    for c in coeffs[-2::-1]:
        acc = acc * z + c
    return acc


def shipped_map(grid: int = 2048) -> RationalMap:
    """z^2 - 1/(16 z^2) with the escape cap tuned to the grid."""
    return RationalMap(
        num=np.array([-1.0, 0.0, 0.0, 0.0, 16.0], dtype=complex),
        den=np.array([0.0, 0.0, 16.0], dtype=complex),
        escape_radius=4.0,
        max_iterations=max(4, int(math.log2(grid)) - 1),
    )


SHIPPED_BOX = (-1.5, -1.5, 1.5, 1.5)


@dataclass(slots=True)
class IterationResult:
    z: complex | Diverged
    diverged: bool
    iterations: int


def iterate(rmap: RationalMap, z: complex, n: int) -> IterationResult:
    """f^n(z) with early divergence exit; never raises on overflow or poles.

    A denominator modulus below 1e-150 counts as hitting a pole, which for
    maps fixing infinity means divergence.
    """
    z = complex(z)
    esc2 = rmap.escape_radius * rmap.escape_radius
    with np.errstate(over="ignore", invalid="ignore"):
        for it in range(n):
            if z.real * z.real + z.imag * z.imag > esc2:
                return IterationResult(DIVERGED, True, it)
            q = _horner(rmap.den, z)
            q2 = q.real * q.real + q.imag * q.imag
            if q2 < 1e-300 or not math.isfinite(q2):
                return IterationResult(DIVERGED, True, it + 1)
            p = _horner(rmap.num, z)
            z = complex(p * q.conjugate() / q2)
            if not (math.isfinite(z.real) and math.isfinite(z.imag)):
                return IterationResult(DIVERGED, True, it + 1)
    return IterationResult(z, False, n)


# ---------------------------------------------------------------------------
# Grid classification


@dataclass(slots=True)
class FatouComponent:
    id: int
    cells: int
    span: tuple[int, int]  # bbox extent in cells
    hull: np.ndarray
    diameter: float
    unbounded: bool
    under_resolved: bool
    basin: int  # 0 = infinity, 1.. = attractor index


@dataclass(slots=True)
class FatouComponentSet:
    box: tuple[float, float, float, float]
    grid: int
    cell: float
    escape_iters: np.ndarray  # (n, n) int32, -1 where unresolved
    labels: np.ndarray  # (n, n) int32, 0 = Julia marker, 1.. component ids
    components: list
    meta: dict = field(default_factory=dict)

    def julia_fraction(self) -> float:
        return float((self.labels == 0).mean())

    def julia_points(self) -> np.ndarray:
        """Centers of Julia-marked cells."""
        ix, iy = np.nonzero(self.labels == 0)
        x0, y0 = self.box[0], self.box[1]
        return np.column_stack([x0 + (ix + 0.5) * self.cell, y0 + (iy + 0.5) * self.cell])


def _escape_classes(rmap: RationalMap, box, n: int, jobs: int = 1):
    """Escape iteration grid and basin class grid (-1 unresolved)."""
    x0, y0, x1, y1 = box
    dx = (x1 - x0) / n
    dy = (y1 - y0) / n
    if abs(dx - dy) > 1e-12 * max(dx, dy):
        raise JuliaError("classification box must be square")
    iters = _run_kernel(rmap, x0, y0, dx, dy, n, jobs)
    classes = np.where(iters >= 0, 0, JULIA).astype(np.int32)
    if rmap.attractors:
        # attractor capture runs in numpy; cells that neither escaped nor
        # got captured stay unresolved
        xs = x0 + (np.arange(n) + 0.5) * dx
        ys = y0 + (np.arange(n) + 0.5) * dy
        z = (xs[:, None] + 1j * ys[None, :]).ravel()
        state = np.full(z.shape, JULIA, dtype=np.int32)
        when = np.full(z.shape, -1, dtype=np.int32)
        active = np.arange(z.size)
        zs = z
        esc2 = rmap.escape_radius**2
        for it in range(rmap.max_iterations + 1):
            az2 = zs.real**2 + zs.imag**2
            done = az2 > esc2
            lab = np.zeros(zs.shape, dtype=np.int32)
            for j, (a, r) in enumerate(rmap.attractors, start=1):
                captured = (np.abs(zs - a) < r) & ~done
                lab = np.where(captured & (lab == 0), j, lab)
            resolved = done | (lab > 0)
            if np.any(resolved):
                state[active[resolved]] = np.where(done[resolved], 0, lab[resolved])
                when[active[resolved]] = it
                active = active[~resolved]
                zs = zs[~resolved]
            if it == rmap.max_iterations or active.size == 0:
                break
            p = _np_horner(rmap.num, zs)
            q = _np_horner(rmap.den, zs)
            q2 = q.real**2 + q.imag**2
            pole = q2 < 1e-300
            if np.any(pole):
                state[active[pole]] = 0
                when[active[pole]] = it + 1
                active = active[~pole]
                zs = (p[~pole] * np.conj(q[~pole])) / q2[~pole]
            else:
                zs = p * np.conj(q) / q2
        classes = state.reshape(n, n)
        iters = when.reshape(n, n)
    return iters, classes


def _np_horner(coeffs, z):
    acc = np.full(z.shape, coeffs[-1], dtype=complex)
    for c in coeffs[-2::-1]:
        acc = acc * z + c
    return acc


def _run_kernel(rmap, x0, y0, dx, dy, n, jobs):
    from . import kernels

    if jobs > 1 and kernels.HAVE_EXT:
        bounds = np.linspace(0, n, jobs + 1).astype(int)
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            parts = list(
                pool.map(
                    lambda ab: kernels.escape_grid(
                        rmap.num, rmap.den, x0, y0, dx, dy, n, n,
                        rmap.max_iterations, rmap.escape_radius,
                        row_start=int(ab[0]), row_stop=int(ab[1]),
                    ),
                    zip(bounds[:-1], bounds[1:]),
                )
            )
        return np.vstack(parts)
    return kernels.escape_grid(
        rmap.num, rmap.den, x0, y0, dx, dy, n, n, rmap.max_iterations, rmap.escape_radius
    )


def classify_grid(rmap: RationalMap, box=SHIPPED_BOX, n: int = 1024, jobs: int = 1) -> FatouComponentSet:
    """Classify cell centers and label resolved cells into components.

    Components are 4-connected regions of cells sharing a basin class;
    distinct basin classes never join even when adjacent.  Components
    spanning fewer than 3 cells on either axis are flagged under-resolved.
    Raises BadBoxError unless every border cell escapes to infinity.
    """
    if n < 256:
        raise JuliaError("grid must be at least 256")
    x0, y0, x1, y1 = box
    cell = (x1 - x0) / n
    iters, classes = _escape_classes(rmap, box, n, jobs)

    border = np.concatenate([classes[0, :], classes[-1, :], classes[:, 0], classes[:, -1]])
    if np.any(border != 0):
        raise BadBoxError("non-escaping cells on the box edge: enlarge the box")

    labels = np.zeros((n, n), dtype=np.int32)
    next_label = 1
    class_of_label = {}
    for cls in sorted(set(classes.ravel().tolist()) - {JULIA}):
        mask = classes == cls
        lab, count = ndimage.label(mask)
        labels[mask] = lab[mask] + (next_label - 1)
        for k in range(1, count + 1):
            class_of_label[next_label - 1 + k] = cls
        next_label += count

    edge_labels = set(
        np.unique(np.concatenate([labels[0, :], labels[-1, :], labels[:, 0], labels[:, -1]])).tolist()
    ) - {0}

    objects = ndimage.find_objects(labels)
    order = np.argsort(labels.ravel(), kind="stable")
    sorted_labels = labels.ravel()[order]
    starts = np.searchsorted(sorted_labels, np.arange(1, next_label))
    ends = np.append(starts[1:], len(sorted_labels))

    components = []
    for lab in range(1, next_label):
        sl = objects[lab - 1]
        if sl is None:
            continue
        h = sl[0].stop - sl[0].start
        w = sl[1].stop - sl[1].start
        flat = order[starts[lab - 1] : ends[lab - 1]]
        ix = flat // n
        iy = flat % n
        pts = np.column_stack([x0 + (ix + 0.5) * cell, y0 + (iy + 0.5) * cell])
        hull = convex_hull(pts)
        diam = _hull_diameter(hull) + cell  # half-cell padding on both sides
        components.append(
            FatouComponent(
                id=lab,
                cells=len(flat),
                span=(h, w),
                hull=hull,
                diameter=diam,
                unbounded=lab in edge_labels,
                under_resolved=(h < UNDER_RESOLVED_SPAN or w < UNDER_RESOLVED_SPAN),
                basin=class_of_label[lab],
            )
        )
    meta = {
        "generator": "julia",
        "params": json.dumps(rmap.to_config(box=box, grid=n), separators=(",", ":")),
        "grid": n,
        "box": tuple(box),
        "cell": cell,
    }
    return FatouComponentSet(
        box=tuple(box), grid=n, cell=cell, escape_iters=iters, labels=labels,
        components=components, meta=meta,
    )


def _hull_diameter(hull: np.ndarray) -> float:
    if len(hull) == 1:
        return 0.0
    best = 0.0
    for i in range(len(hull) - 1):
        d = np.max(np.sum((hull[i + 1 :] - hull[i]) ** 2, axis=1))
        if d > best:
            best = float(d)
    return math.sqrt(best)


def components_to_packing(fcs: FatouComponentSet) -> Packing:
    """Bounded resolved components as polygon elements; the outer element is
    the hull of the unbounded component's inner boundary cells.

    Counting is complete only down to diameters of about 6 cells (walls eat
    a share of the smallest components), recorded as meta['complete_x'].
    """
    unbounded = [c for c in fcs.components if c.unbounded and c.basin == 0]
    if len(unbounded) != 1:
        raise BadBoxError(f"expected one unbounded component, found {len(unbounded)}")
    outer_comp = unbounded[0]

    mask = fcs.labels == outer_comp.id
    inner = mask & _adjacent_to(fcs.labels != outer_comp.id)
    inner[0, :] = inner[-1, :] = inner[:, 0] = inner[:, -1] = False
    ix, iy = np.nonzero(inner)
    if len(ix) == 0:
        raise BadBoxError("unbounded component has no inner boundary")
    x0, y0 = fcs.box[0], fcs.box[1]
    pts = np.column_stack([x0 + (ix + 0.5) * fcs.cell, y0 + (iy + 0.5) * fcs.cell])
    outer = Polygon(convex_hull(pts), level=0, id=-1)

    bounded = [c for c in fcs.components if not c.unbounded and not c.under_resolved]
    bounded.sort(key=lambda c: -c.diameter)
    elements = [Polygon(c.hull, level=0, id=i) for i, c in enumerate(bounded)]
    meta = dict(fcs.meta)
    meta["complete_x"] = 1.0 / (COMPLETENESS_SPAN * fcs.cell)
    meta["truncation"] = ("min_diameter", COMPLETENESS_SPAN * fcs.cell)
    # component diameters carry one cell of padding (cell-center hulls
    # under-cover the true component by half a cell on each side); counting
    # uses these, geometry probes use the raw hull polygons
    meta["diameters"] = np.array([c.diameter for c in bounded])
    return Packing(outer=outer, elements=elements, meta=meta)


def _adjacent_to(mask: np.ndarray) -> np.ndarray:
    nb = np.zeros_like(mask)
    nb[1:, :] |= mask[:-1, :]
    nb[:-1, :] |= mask[1:, :]
    nb[:, 1:] |= mask[:, :-1]
    nb[:, :-1] |= mask[:, 1:]
    return nb


def component_separation(fcs: FatouComponentSet) -> tuple[float, tuple[int, int]]:
    """Grid-scale relative separation between bounded resolved components.

    Convex hulls of neighboring components can overlap even though the true
    components are disjoint, so separation is measured between the cell sets:
    distance = nearest foreign boundary-cell center distance minus one cell
    (each boundary curve lies within half a cell of its boundary centers).
    Distinct components are never 4-adjacent, so the estimate stays positive.
    """
    from scipy.spatial import cKDTree

    keep = [c for c in fcs.components if not c.unbounded and not c.under_resolved]
    if len(keep) < 2:
        raise JuliaError("need at least two resolved bounded components")
    ids = {c.id for c in keep}
    diam_of = {c.id: c.diameter for c in keep}
    lab = fcs.labels
    boundary = (lab > 0) & _adjacent_to(lab <= 0)
    ix, iy = np.nonzero(boundary)
    owner = lab[ix, iy]
    sel = np.isin(owner, list(ids))
    ix, iy, owner = ix[sel], iy[sel], owner[sel]
    x0, y0 = fcs.box[0], fcs.box[1]
    pts = np.column_stack([x0 + (ix + 0.5) * fcs.cell, y0 + (iy + 0.5) * fcs.cell])
    tree = cKDTree(pts)
    best = math.inf
    pair = (keep[0].id, keep[1].id)
    k = min(24, len(pts))
    dists, idxs = tree.query(pts, k=k)
    for row in range(len(pts)):
        me = owner[row]
        for d, j in zip(dists[row], idxs[row]):
            other = owner[j]
            if other != me:
                gap = max(d - fcs.cell, 0.25 * fcs.cell)
                delta = gap / min(diam_of[int(me)], diam_of[int(other)])
                if delta < best:
                    best = delta
                    pair = (int(me), int(other))
                break
    return best, pair


def julia_residual_sample(fcs: FatouComponentSet) -> ResidualSample:
    """Julia-marked cell centers as a residual-set sample.

    The covering radius is approximate (sqrt(2) cells): a Julia point's own
    cell is marked unless its center escapes late, and empirically the
    marker thickens rather than thins the set.
    """
    pts = fcs.julia_points()
    if len(pts) == 0:
        raise JuliaError("no Julia-marked cells; raise max_iterations")
    return ResidualSample(pts, math.sqrt(2.0) * fcs.cell, anchor=(fcs.box[0], fcs.box[1]))


def write_pgm(fcs: FatouComponentSet, path) -> None:
    """Grayscale classification image: Julia cells black, basins by escape time."""
    it = fcs.escape_iters
    img = np.where(it < 0, 0, 40 + (215 * np.minimum(it, 50)) // 50).astype(np.uint8)
    with open(path, "wb") as f:
        f.write(f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode())
        f.write(np.flipud(img.T).tobytes())


def load_config(path) -> tuple[RationalMap, tuple, int]:
    with open(path) as f:
        cfg = json.load(f)
    rmap = RationalMap.from_config(cfg)
    box = tuple(cfg.get("box", SHIPPED_BOX))
    grid = int(cfg.get("grid", 1024))
    return rmap, box, grid


# ---------------------------------------------------------------------------
# Expression parser: complex literals, z, + - * / ^, parentheses, implicit
# multiplication ("16z^2").  Compiles to numerator/denominator coefficients.


class ExprError(JuliaError):
    pass


def parse_map(text: str, **kwargs) -> RationalMap:
    num, den = _parse_rational(text)
    return RationalMap(num=num, den=den, **kwargs)


def _parse_rational(text: str):
    tokens = _tokenize(text)
    parser = _Parser(tokens)
    num, den = parser.parse_expr()
    if parser.pos != len(tokens):
        raise ExprError(f"unexpected token {tokens[parser.pos]!r}")
    return np.trim_zeros(num, "b"), np.trim_zeros(den, "b")


def _tokenize(text: str):
    tokens = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch.isspace():
            i += 1
        elif ch in "+-*/^()":
            tokens.append(ch)
            i += 1
        elif ch in "zZ":
            tokens.append("z")
            i += 1
        elif ch.isdigit() or ch == ".":
            j = i
            while j < len(text) and (text[j].isdigit() or text[j] in ".eE" or (text[j] in "+-" and text[j - 1] in "eE")):
                j += 1
            lit = text[i:j]
            if j < len(text) and text[j] in "ij":
                tokens.append(complex(0.0, float(lit)))
                j += 1
            else:
                tokens.append(complex(float(lit), 0.0))
            i = j
        elif ch in "ij":
            tokens.append(complex(0.0, 1.0))
            i += 1
        else:
            raise ExprError(f"bad character {ch!r} in map expression")
    return tokens


class _Parser:
    """Rational-function arithmetic on (num, den) coefficient pairs."""

    def __init__(self, tokens):
        self.tokens = tokens
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self):
        tok = self.peek()
        self.pos += 1
        return tok

    def parse_expr(self):
        sign = 1.0
        while self.peek() in ("+", "-"):
            if self.take() == "-":
                sign = -sign
        acc = self.parse_term()
        if sign < 0:
            acc = (-acc[0], acc[1])
        while self.peek() in ("+", "-"):
            op = self.take()
            rhs = self.parse_term()
            acc = _radd(acc, rhs) if op == "+" else _rsub(acc, rhs)
        return acc

    def parse_term(self):
        acc = self.parse_power()
        while True:
            tok = self.peek()
            if tok in ("*", "/"):
                op = self.take()
                rhs = self.parse_power()
                acc = _rmul(acc, rhs) if op == "*" else _rdiv(acc, rhs)
            elif tok == "z" or tok == "(" or isinstance(tok, complex):
                acc = _rmul(acc, self.parse_power())  # implicit multiplication
            else:
                return acc

    def parse_power(self):
        base = self.parse_atom()
        if self.peek() == "^":
            self.take()
            exp = self.take()
            if not isinstance(exp, complex) or exp.imag != 0 or exp.real != int(exp.real) or exp.real < 0:
                raise ExprError("exponent must be a nonnegative integer")
            return _rpow(base, int(exp.real))
        return base

    def parse_atom(self):
        tok = self.take()
        if tok == "(":
            inner = self.parse_expr()
            if self.take() != ")":
                raise ExprError("missing closing parenthesis")
            return inner
        if tok == "z":
            return (np.array([0.0, 1.0], dtype=complex), np.array([1.0], dtype=complex))
        if isinstance(tok, complex):
            return (np.array([tok], dtype=complex), np.array([1.0], dtype=complex))
        if tok == "-":
            inner = self.parse_atom()
            return (-inner[0], inner[1])
        raise ExprError(f"unexpected token {tok!r}")


def _pmul(a, b):
    return np.convolve(a, b)


def _padd(a, b):
    n = max(len(a), len(b))
    out = np.zeros(n, dtype=complex)
    out[: len(a)] += a
    out[: len(b)] += b
    return out


def _radd(x, y):
    return (_padd(_pmul(x[0], y[1]), _pmul(y[0], x[1])), _pmul(x[1], y[1]))


def _rsub(x, y):
    return (_padd(_pmul(x[0], y[1]), -_pmul(y[0], x[1])), _pmul(x[1], y[1]))


def _rmul(x, y):
    return (_pmul(x[0], y[0]), _pmul(x[1], y[1]))


def _rdiv(x, y):
    if not np.any(y[0]):
        raise ExprError("division by the zero function")
    return (_pmul(x[0], y[1]), _pmul(x[1], y[0]))


def _rpow(x, k):
    num = np.array([1.0 + 0.0j])
    den = np.array([1.0 + 0.0j])
    for _ in range(k):
        num = _pmul(num, x[0])
        den = _pmul(den, x[1])
    return (num, den)
