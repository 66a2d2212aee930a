"""Counting functions, exponent estimation, and box-counting dimensions.

The central object is the size distribution of a packing: the sorted
element sizes a_k, answering exact counting queries
N(x) = #{k : 1/a_k <= x}.  Circle packings are counted by radius
(1/a_k is then the curvature) and everything else by diameter; log-log
slopes are unaffected by the choice, and completeness under curvature
truncation holds exactly in the radius convention.

Finite truncations cannot realize the limits the counting function
converges to: the raw quotient log N(x)/log x carries an O(1/log x)
bias from the multiplicative constant of N.  Tables therefore report
both the raw quotient and a window slope over the trailing decade with
both endpoints snapped to the distribution's own steps, which is the
desk-scale estimator all recipes and checks consume.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .carpets import CarpetCountTable
from .geometry import Packing, ResidualSample, diameter

SLOPE_WINDOW_RATIO = 10.0
# two-decade span floor, with slack for base-3 scale ladders like [3^-6, 3^-2]
MIN_WINDOW_SPAN = 80.0


class AnalysisError(ValueError):
    pass


class InsufficientDataError(AnalysisError):
    pass


class ResolutionError(AnalysisError):
    pass


class MismatchError(AnalysisError):
    pass


class WindowError(AnalysisError):
    pass


# ---------------------------------------------------------------------------
# Size distribution


class CurvatureDistribution:
    """Exact counting over element sizes, enumerated or table-backed.

    `include_outer` counts the outer boundary through its own size once
    1/outer_size <= x; table-backed distributions have no outer row and
    count holes only.
    """

    def __init__(
        self,
        sizes: np.ndarray | None = None,
        table: CarpetCountTable | None = None,
        include_outer: bool = False,
        outer_size: float | None = None,
        complete_x: float | None = None,
        meta: dict | None = None,
    ):
        if (sizes is None) == (table is None):
            raise AnalysisError("provide exactly one of sizes or table")
        self.table = table
        self.include_outer = include_outer and outer_size is not None
        self.outer_size = outer_size
        self.meta = meta or {}
        if table is not None:
            diams, _ = table.diameters_counts()
            # rows descend in diameter, so 1/diameter ascends and stays
            # aligned with the cumulative counts
            self._step_x = 1.0 / diams
            self._step_cum = table.cumulative
            self.sizes = None
        else:
            s = np.asarray(sizes, dtype=float)
            if len(s) == 0:
                raise AnalysisError("empty distribution")
            if np.any(s <= 0.0) or not np.all(np.isfinite(s)):
                raise AnalysisError("sizes must be positive finite")
            self.sizes = np.sort(s)[::-1]  # descending
            inv = np.sort(1.0 / self.sizes)
            steps, counts = np.unique(inv, return_counts=True)
            self._raw_x = steps
            self._raw_cum = np.cumsum(counts)
            # lattice families reach equal sizes through different float
            # roundings; merge steps closer than a relative 1e-9 so slope
            # estimators never see partial counts at split positions
            last = np.append(np.diff(steps) > steps[:-1] * 1e-9, True)
            self._step_x = steps[last]
            self._step_cum = self._raw_cum[last].tolist()
        if complete_x is None:
            complete_x = float(self._step_x[-1])
        self.complete_x = float(complete_x)

    # -- construction helpers

    @classmethod
    def from_packing(cls, packing: Packing, include_outer: bool = True, size_mode: str = "auto"):
        from .geometry import Circle

        if size_mode == "auto":
            size_mode = "radius" if packing.meta.get("generator") == "apollonian" else "diameter"
        if size_mode == "radius":
            if not all(isinstance(e, Circle) for e in packing.elements):
                raise AnalysisError("radius counting needs circle elements")
            sizes = np.array([e.r for e in packing.elements])
            outer_size = packing.outer.r if isinstance(packing.outer, Circle) else None
        elif size_mode == "diameter":
            recorded = packing.meta.get("diameters")
            sizes = np.asarray(recorded, dtype=float) if recorded is not None else packing.diameters()
            outer_size = diameter(packing.outer)
        else:
            raise AnalysisError(f"unknown size_mode {size_mode!r}")
        complete_x = packing.meta.get("complete_x")
        if complete_x is None and packing.meta.get("generator") == "apollonian":
            complete_x = packing.meta.get("max_curvature")
        return cls(
            sizes=sizes,
            include_outer=include_outer,
            outer_size=outer_size,
            complete_x=complete_x,
            meta=dict(packing.meta),
        )

    @classmethod
    def from_count_table(cls, table: CarpetCountTable):
        return cls(table=table, meta=dict(table.meta))

    # -- queries

    def count(self, x: float) -> int:
        """Exact N(x): number of elements with 1/size <= x (big integer)."""
        if x <= 0.0:
            return 0
        if self.table is not None:
            n = self.table.count_leq_inverse(x)
        else:
            i = int(np.searchsorted(self._raw_x, x, side="right"))
            n = int(self._raw_cum[i - 1]) if i > 0 else 0
        if self.include_outer and self.outer_size is not None and 1.0 / self.outer_size <= x:
            n += 1
        return n

    def steps(self) -> tuple[np.ndarray, list[int]]:
        """Ascending step positions x_i = 1/size and exact N at each step."""
        if self.include_outer and self.outer_size is not None:
            return self._step_x, [self.count(float(x)) for x in self._step_x]
        return self._step_x, list(self._step_cum)

    def min_size(self) -> float:
        return 1.0 / float(self._step_x[-1])

    def max_size(self) -> float:
        return 1.0 / float(self._step_x[0])

    def window_slope(self, x: float, ratio: float = SLOPE_WINDOW_RATIO) -> float | None:
        """Trailing window slope of log N over [x/ratio, x], step-snapped.

        The endpoint snaps to the largest distribution step <= x and the
        window is anchored at the largest step <= endpoint/ratio, so the
        window always spans at least `ratio`; the slope is the least-squares
        fit over the steps inside (the plain two-point slope when only the
        endpoints are present).  Returns None when no anchor exists.
        """
        xs = self._step_x
        hi = int(np.searchsorted(xs, x * (1.0 + 1e-15), side="right")) - 1
        if hi < 0:
            return None
        lo = int(np.searchsorted(xs, xs[hi] / ratio * (1.0 + 1e-15), side="right")) - 1
        if lo < 0 or lo == hi:
            return None
        pts_x = xs[lo : hi + 1]
        pts_n = [self.count(float(xx)) for xx in pts_x]
        if pts_n[0] < 1:
            return None
        logx = np.log(pts_x)
        logn = np.array([math.log(v) for v in pts_n])
        if len(pts_x) == 2:
            return float((logn[1] - logn[0]) / (logx[1] - logx[0]))
        return _lsq(logx, logn)[0]


def partial_sum(dist: CurvatureDistribution, t: float, m: int | None = None):
    """M(t, m) = sum of the m largest sizes^t; m=None means the full family.

    Table-backed distributions evaluate the infinite sum in closed form
    (geometric series per block), returning inf when it diverges.
    Enumerated distributions return the truncated sum with truncated=True
    for m=None.  The outer element is never part of the sum.
    """
    if m is not None and m < 0:
        raise AnalysisError("m must be nonnegative")
    if dist.table is None:
        sizes = dist.sizes
        if m is None:
            return PartialSum(float(np.sum(sizes**t)), truncated=True)
        mm = min(m, len(sizes))
        return PartialSum(float(np.sum(sizes[:mm] ** t)), truncated=m > len(sizes))
    # table-backed
    if m is not None:
        total = 0.0
        left = m
        for d, c in dist.table.rows:
            take = min(left, c)
            total += take * d**t
            left -= take
            if left == 0:
                break
        return PartialSum(total, truncated=left > 0)
    blocks = dist.table.meta.get("blocks")
    if blocks is None:
        # plain rows: truncated sum
        return PartialSum(float(sum(c * d**t for d, c in dist.table.rows)), truncated=True)
    total = 0.0
    side = 1.0
    pref = 1.0
    sqrt2 = math.sqrt(2.0)
    for p, n in blocks:
        a = p ** (-t)
        rho = (p * p - 1) * a
        if n is None:
            if rho >= 1.0 - 1e-12:
                return PartialSum(math.inf, truncated=False)
            total += pref * (sqrt2 * side) ** t * a / (1.0 - rho)
            return PartialSum(total, truncated=False)
        if abs(rho - 1.0) < 1e-15:
            series = a * n
        else:
            series = a * (1.0 - rho**n) / (1.0 - rho)
        total += pref * (sqrt2 * side) ** t * series
        pref *= float(p * p - 1) ** n
        side *= float(p) ** (-n)
    return PartialSum(total, truncated=False)


@dataclass(slots=True)
class PartialSum:
    value: float
    truncated: bool

    @property
    def infinite(self) -> bool:
        return math.isinf(self.value)


# ---------------------------------------------------------------------------
# Fits


@dataclass(slots=True)
class DimensionFit:
    """Least-squares log-log fit over a recorded scale window."""

    slope: float
    intercept: float
    residual: float
    window: tuple[float, float]
    npoints: int
    upper: float | None = None  # max windowed two-point slope
    lower: float | None = None  # min windowed two-point slope

    def __post_init__(self):
        if self.npoints < 5:
            raise InsufficientDataError(f"fit needs >= 5 points, got {self.npoints}")
        lo, hi = self.window
        if not (lo > 0.0 and hi > 0.0 and hi / lo >= MIN_WINDOW_SPAN * (1.0 - 1e-9)):
            raise InsufficientDataError(f"fit window must span ~2 decades, got {self.window}")

    def to_dict(self) -> dict:
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "residual": self.residual,
            "window": list(self.window),
            "npoints": self.npoints,
            "upper": self.upper,
            "lower": self.lower,
        }


def _lsq(logx: np.ndarray, logy: np.ndarray) -> tuple[float, float, float]:
    A = np.column_stack([logx, np.ones_like(logx)])
    coef, res, _, _ = np.linalg.lstsq(A, logy, rcond=None)
    residual = float(res[0]) if len(res) else float(np.sum((A @ coef - logy) ** 2))
    return float(coef[0]), float(coef[1]), residual


def exponent_estimate(dist: CurvatureDistribution, window: tuple[float, float] | None = None) -> DimensionFit:
    """Slope of log N(x) against log x over a truncation-aware window.

    The default window drops the coarsest decade of sizes (truncation bias
    from the handful of largest elements) and ends at the completeness
    bound; if that leaves less than two decades, the drop shrinks to keep
    the mandatory two-decade span.
    """
    if dist.table is None and dist.sizes is not None and len(dist.sizes) < 50:
        raise InsufficientDataError("need >= 50 elements or a symbolic table")
    xs, ns = dist.steps()
    if window is None:
        x_hi = dist.complete_x
        x_lo = 10.0 * float(xs[0])
        if x_hi / x_lo < 100.0:
            # not enough depth to drop the full coarsest decade; keep the
            # mandatory two-decade span instead
            x_lo = x_hi / 100.0
    else:
        x_lo, x_hi = window
    mask = (xs >= x_lo * (1 - 1e-12)) & (xs <= x_hi * (1 + 1e-12))
    pts_x = xs[mask]
    pts_n = [n for n, m in zip(ns, mask) if m]
    if len(pts_x) < 5:
        raise InsufficientDataError(f"only {len(pts_x)} steps in window [{x_lo:g}, {x_hi:g}]")
    logx = np.log(pts_x)
    logn = np.array([math.log(n) for n in pts_n])
    slope, intercept, residual = _lsq(logx, logn)
    # the recorded window is the scanned range; steps inside it can be
    # sparser than the declared span
    return DimensionFit(
        slope=slope,
        intercept=intercept,
        residual=residual,
        window=(float(x_lo), float(x_hi)),
        npoints=len(pts_x),
    )


def box_count(sample: ResidualSample, eps: float) -> int:
    """Occupied cells of the eps-grid anchored at the outer bounding box."""
    if eps < 2.0 * sample.resolution * (1.0 - 1e-12):
        raise ResolutionError(
            f"eps={eps:g} below twice the sample resolution {sample.resolution:g}"
        )
    ax, ay = sample.anchor
    ix = np.floor((sample.points[:, 0] - ax) / eps).astype(np.int64)
    iy = np.floor((sample.points[:, 1] - ay) / eps).astype(np.int64)
    span = int(iy.max() - iy.min()) + 2
    keys = ix * span + (iy - iy.min())
    return int(np.unique(keys).size)


def dimension_fit(counts: list[tuple[float, int]]) -> DimensionFit:
    """Fit log n(eps) vs log(1/eps); also min/max decade-windowed slopes.

    The windowed two-point slopes (window ratio 10) act as desk-scale
    proxies for the upper/lower box dimensions.
    """
    if len(counts) < 5:
        raise InsufficientDataError("need >= 5 scales")
    pts = sorted(counts, key=lambda t: -t[0])  # descending eps
    eps = np.array([e for e, _ in pts])
    n = np.array([c for _, c in pts], dtype=float)
    if eps[0] / eps[-1] < MIN_WINDOW_SPAN * (1.0 - 1e-9):
        raise InsufficientDataError("scales must span ~2 decades")
    logx = np.log(1.0 / eps)
    logn = np.log(n)
    slope, intercept, residual = _lsq(logx, logn)
    two_point = []
    for i in range(len(eps)):
        target = eps[i] / SLOPE_WINDOW_RATIO
        js = np.nonzero(eps <= target * (1.0 + 1e-12))[0]
        if len(js) == 0:
            continue
        j = js[0]
        two_point.append((logn[j] - logn[i]) / (logx[j] - logx[i]))
    return DimensionFit(
        slope=slope,
        intercept=intercept,
        residual=residual,
        window=(float(eps[-1]), float(eps[0])),
        npoints=len(eps),
        upper=max(two_point) if two_point else None,
        lower=min(two_point) if two_point else None,
    )


# ---------------------------------------------------------------------------
# Boyd tables


@dataclass(slots=True)
class BoydRow:
    x: float
    n: int
    ratio: float | None  # raw quotient log N / log x (None when suppressed)
    slope10: float | None  # trailing-decade window slope (limit estimator)
    complete: bool


@dataclass(slots=True)
class BoydTable:
    rows: list[BoydRow]
    meta: dict = field(default_factory=dict)

    def terminal_slope(self) -> float:
        """Window slope at the largest complete x; the limit estimate."""
        for row in reversed(self.rows):
            if row.complete and row.slope10 is not None:
                return row.slope10
        raise InsufficientDataError("no complete row with a full trailing window")

    def terminal_ratio(self) -> float:
        for row in reversed(self.rows):
            if row.complete and row.ratio is not None:
                return row.ratio
        raise InsufficientDataError("no complete row with a defined ratio")


def boyd_table(dist: CurvatureDistribution, xs) -> BoydTable:
    """Exact N(x) ladder with the raw quotient and the window-slope estimate.

    Rows beyond the completeness bound keep their counts but have both
    estimators suppressed; so do rows with N = 0.
    """
    xs = sorted(float(x) for x in xs)
    if any(x <= 1.0 for x in xs):
        raise AnalysisError("xs must be > 1")
    rows = []
    for x in xs:
        n = dist.count(x)
        complete = x <= dist.complete_x * (1.0 + 1e-12)
        ratio = None
        slope = None
        if complete and n >= 1:
            ratio = math.log(n) / math.log(x)
            slope = dist.window_slope(x)
        rows.append(BoydRow(x=x, n=n, ratio=ratio, slope10=slope, complete=complete))
    return BoydTable(rows=rows, meta=dict(dist.meta))


def flatness_probe(dist: CurvatureDistribution, exponent: float, window: tuple[float, float]):
    """Coefficient of variation of N(x)/x^E over 20 log-spaced x; diagnostic."""
    x0, x1 = window
    if not (0.0 < x0 < x1) or x1 / x0 < 10.0:
        raise WindowError("window must satisfy x1/x0 >= 10")
    if x1 > dist.complete_x * (1.0 + 1e-12):
        raise WindowError("window exceeds the truncation-complete range")
    xs = np.geomspace(x0, x1, 20)
    vals = np.array([dist.count(float(x)) / float(x) ** exponent for x in xs])
    if np.any(vals <= 0.0):
        raise WindowError("window contains x with N(x) = 0")
    cv = float(np.std(vals) / np.mean(vals))
    return FlatnessReport(cv=cv, xs=xs, values=vals, exponent=exponent)


@dataclass(slots=True)
class FlatnessReport:
    cv: float
    xs: np.ndarray
    values: np.ndarray
    exponent: float


# ---------------------------------------------------------------------------
# Maximal disjoint disc families and the packing/box-count duality


def max_disjoint_discs(sample: ResidualSample, r: float, seed: int = 0) -> np.ndarray:
    """Greedy maximal family of disjoint open discs of radius r centered on
    the sample; returns the accepted centers.  Deterministic for a fixed seed.
    """
    from .kernels import greedy_disc_pack

    pts = sample.points
    order = np.random.default_rng(seed).permutation(len(pts))
    accepted = greedy_disc_pack(np.ascontiguousarray(pts[order]), float(r))
    return pts[order][accepted]


@dataclass(slots=True)
class DualityReport:
    n_fit: DimensionFit
    box_fit: DimensionFit
    gap: float
    eps_values: list[float]
    counts: list[int]
    beta: float
    gamma1_hat: float | None
    gamma2_hat: float | None
    meta: dict = field(default_factory=dict)


def duality_check(
    source: CurvatureDistribution | Packing,
    sample: ResidualSample,
    beta: float = 3.0,
    n_scales: int = 9,
    seed: int = 0,
    eps_max: float | None = None,
) -> DualityReport:
    """Compare the counting slope with the box-counting slope on matched
    scale windows, plus measured constants for the two-sided sandwich
    n(eps) <= g1 N(beta/eps) and N(beta/eps) <= g2 n(eps).
    """
    dist = source if isinstance(source, CurvatureDistribution) else CurvatureDistribution.from_packing(source)
    pts = sample.points
    ext = float(max(pts[:, 0].max() - pts[:, 0].min(), pts[:, 1].max() - pts[:, 1].min()))
    eps_min = 2.0 * sample.resolution
    if eps_max is None:
        eps_max = ext / 4.0
    if eps_max / eps_min < 100.0:
        raise MismatchError(
            f"sample resolution {sample.resolution:g} too coarse for extent {ext:g}: "
            "cannot span two decades"
        )
    eps_values = np.geomspace(eps_max, eps_min, n_scales)
    counts = [box_count(sample, float(e)) for e in eps_values]
    box_fit = dimension_fit(list(zip(eps_values.tolist(), counts)))
    # matched counting window: same scales as the box grid, clipped to the
    # distribution's completeness, declared at two decades
    x_hi = min(1.0 / float(eps_values[-1]), dist.complete_x)
    x_lo = min(1.0 / float(eps_values[0]), x_hi / 100.0)
    if x_hi / x_lo < 100.0:
        raise MismatchError("packing truncation and sample resolution are incompatible")
    n_fit = exponent_estimate(dist, window=(x_lo, x_hi))
    gap = abs(n_fit.slope - box_fit.slope)

    g1 = None
    g2 = None
    for e in eps_values[len(eps_values) // 2 : len(eps_values) // 2 + 2]:
        centers = max_disjoint_discs(sample, float(e), seed=seed)
        nd = len(centers)
        nx = dist.count(beta / float(e))
        if nx >= 1 and nd >= 1:
            g1 = max(g1 or 0.0, nd / nx)
            g2 = max(g2 or 0.0, nx / nd)
    return DualityReport(
        n_fit=n_fit,
        box_fit=box_fit,
        gap=gap,
        eps_values=[float(e) for e in eps_values],
        counts=counts,
        beta=beta,
        gamma1_hat=g1,
        gamma2_hat=g2,
        meta=dict(dist.meta),
    )
