"""Empirical certificates for the four packing homogeneity conditions.

The four measured constants:

* roundness alpha_hat: worst ratio of circumscribed to inscribed
  concentric radii over the elements;
* location-scale beta_hat: smallest factor such that every probed ball
  B(p, r) centered on the residual set meets an element with diameter
  within [r/beta, beta*r];
* relative separation delta_hat: minimum over element pairs of
  dist(C_j, C_k) / min(diam C_j, diam C_k);
* co-fatness tau_hat: minimum over probed (element, ball) pairs of
  area(element ∩ ball) / r^2 for balls centered on the element that do
  not contain it.

All probes are deterministic: low-discrepancy point sets with a recorded
seed.  Verdicts are statements about the truncated packing at the probed
scales, never about the infinite object.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree
from scipy.stats import qmc

from . import geometry as geo
from .geometry import Circle, Packing, ResidualSample, Square

SEPARATION_PASS = 1e-3
COFATNESS_PASS = 1e-3
BETA_DRIFT_PASS = 0.25
DEFAULT_BETA_CANDIDATES = (1.5, 2.0, 3.0, 4.0, 6.0, 8.0, 12.0, 16.0, 24.0, 32.0)


class HomogeneityError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Element directory: flat arrays for fast spatial queries over mixed shapes


class _Directory:
    """Centroids, enclosing radii, bboxes, and per-size-octave KD trees."""

    def __init__(self, packing: Packing):
        self.elements = packing.elements
        n = len(self.elements)
        self.centroids = np.empty((n, 2))
        self.radii = np.empty(n)  # element is contained in B(centroid, radius)
        self.diams = np.empty(n)
        self.bbox = np.empty((n, 4))
        for i, e in enumerate(self.elements):
            c = geo.centroid(e)
            self.centroids[i] = c
            self.diams[i] = geo.diameter(e)
            self.bbox[i] = geo.bounding_box(e)
            if isinstance(e, Circle):
                self.radii[i] = e.r
            elif isinstance(e, Square):
                self.radii[i] = e.side * math.sqrt(2.0) / 2.0
            else:
                v = e.vertices
                self.radii[i] = math.sqrt(np.max((v[:, 0] - c[0]) ** 2 + (v[:, 1] - c[1]) ** 2))
        self.octave = np.floor(np.log2(self.diams)).astype(int)
        self.groups = {}
        for b in np.unique(self.octave):
            idx = np.nonzero(self.octave == b)[0]
            self.groups[int(b)] = (
                idx,
                cKDTree(self.centroids[idx]),
                float(self.radii[idx].max()),
                float(self.diams[idx].min()),
                float(self.diams[idx].max()),
            )

    def bbox_gap(self, i: int, J: np.ndarray) -> np.ndarray:
        """Lower bound on boundary distance from element i to elements J."""
        b = self.bbox
        dx = np.maximum(np.maximum(b[J, 0] - b[i, 2], b[i, 0] - b[J, 2]), 0.0)
        dy = np.maximum(np.maximum(b[J, 1] - b[i, 3], b[i, 1] - b[J, 3]), 0.0)
        return np.sqrt(dx * dx + dy * dy)

    def boundary_dist(self, i: int, p) -> float:
        return geo.boundary_distance(self.elements[i], p)

    def candidates_near(self, p, r: float, dmin: float, dmax: float):
        """Element indices with diam in [dmin, dmax] whose boundary might
        come within r of p (superset, by enclosing-ball pruning)."""
        out = []
        for b, (idx, tree, rmax, gdmin, gdmax) in self.groups.items():
            if gdmax < dmin or gdmin > dmax:
                continue
            hits = tree.query_ball_point(p, r + rmax)
            if hits:
                cand = idx[np.asarray(hits, dtype=int)]
                sel = (self.diams[cand] >= dmin) & (self.diams[cand] <= dmax)
                out.extend(cand[sel].tolist())
        return out


# ---------------------------------------------------------------------------
# Roundness


def roundness(packing: Packing) -> tuple[float, int]:
    """Max circumscribed/inscribed concentric ratio and its element id.

    Circles score 1 and axis-aligned squares sqrt(2) exactly; polygons are
    measured about their centroid.
    """
    if not packing.elements:
        raise HomogeneityError("empty packing")
    best = 0.0
    witness = packing.elements[0].id
    sqrt2 = math.sqrt(2.0)
    for e in packing.elements:
        if isinstance(e, Circle):
            ratio = 1.0
        elif isinstance(e, Square):
            ratio = sqrt2
        else:
            r, R, _ = geo.inscribed_circumscribed(e)
            ratio = R / r
        if ratio > best:
            best = ratio
            witness = e.id
    return best, witness


# ---------------------------------------------------------------------------
# Relative separation


def separation(packing: Packing, pair_budget: int = 20_000_000, seed: int = 0) -> tuple[float, tuple[int, int]]:
    """Minimum relative separation over element pairs with its witness pair.

    All pairs are scanned when their number fits the budget; otherwise a
    two-phase pruned search runs: a cheap nearest-neighbor pass produces an
    upper bound U, then every pair that could possibly beat U (enclosing
    balls within U * min-diameter) is checked exactly, so the result equals
    the brute-force minimum.
    """
    els = packing.elements
    n = len(els)
    if n < 2:
        raise HomogeneityError("separation needs at least two elements")
    d = _Directory(packing)
    if n * (n - 1) // 2 <= pair_budget:
        return _separation_exact_pairs(d, np.arange(n), np.arange(n))
    return _separation_pruned(d)


def _pair_distance(d: _Directory, i: int, j: int) -> float:
    return geo.set_distance(d.elements[i], d.elements[j])


def _separation_exact_pairs(d: _Directory, I, J) -> tuple[float, tuple[int, int]]:
    els = d.elements
    n = len(els)
    all_sq = all(isinstance(e, Square) for e in els)
    all_ci = all(isinstance(e, Circle) for e in els)
    best = math.inf
    pair = (els[0].id, els[1].id)
    if all_sq or all_ci:
        if all_sq:
            x = np.array([e.x for e in els])
            y = np.array([e.y for e in els])
            s = np.array([e.side for e in els])
        else:
            x = np.array([e.cx for e in els])
            y = np.array([e.cy for e in els])
            s = np.array([e.r for e in els])
        diam = d.diams
        for i in range(n - 1):
            if all_sq:
                dx = np.maximum(np.maximum(x[i + 1 :] - x[i] - s[i], x[i] - x[i + 1 :] - s[i + 1 :]), 0.0)
                dy = np.maximum(np.maximum(y[i + 1 :] - y[i] - s[i], y[i] - y[i + 1 :] - s[i + 1 :]), 0.0)
                dist = np.sqrt(dx * dx + dy * dy)
            else:
                cd = np.sqrt((x[i + 1 :] - x[i]) ** 2 + (y[i + 1 :] - y[i]) ** 2)
                dist = np.maximum(cd - s[i] - s[i + 1 :], 0.0)
            delta = dist / np.minimum(diam[i], diam[i + 1 :])
            k = int(np.argmin(delta))
            if delta[k] < best:
                best = float(delta[k])
                pair = (els[i].id, els[i + 1 + k].id)
        return best, pair
    # generic shapes: order pairs by the bbox-gap lower bound on delta and
    # evaluate exactly until the bound alone rules the rest out
    lbs = []
    for i in range(n - 1):
        J = np.arange(i + 1, n)
        lb = d.bbox_gap(i, J) / np.minimum(d.diams[i], d.diams[J])
        lbs.append(np.column_stack([lb, np.full(len(J), i), J]))
    flat = np.vstack(lbs)
    flat = flat[np.argsort(flat[:, 0], kind="stable")]
    for lb, fi, fj in flat:
        if lb >= best:
            break
        i, j = int(fi), int(fj)
        dist = _pair_distance(d, i, j)
        delta = dist / min(d.diams[i], d.diams[j])
        if delta < best:
            best = delta
            pair = (els[i].id, els[j].id)
        if best == 0.0:
            break
    return best, pair


def _separation_pruned(d: _Directory) -> tuple[float, tuple[int, int]]:
    els = d.elements
    n = len(els)
    # phase 1: nearest same-octave neighbor of a strided subsample
    best = math.inf
    pair = (els[0].id, els[1].id)
    for b, (idx, tree, rmax, gdmin, gdmax) in d.groups.items():
        take = idx if len(idx) <= 512 else idx[:: max(1, len(idx) // 512)]
        if len(idx) < 2:
            continue
        _, nb = tree.query(d.centroids[take], k=2)
        for ii, row in zip(take, nb):
            jj = idx[row[1]]
            if ii == jj:
                continue
            dist = _pair_distance(d, int(ii), int(jj))
            delta = dist / min(d.diams[ii], d.diams[jj])
            if delta < best:
                best = delta
                pair = (els[ii].id, els[jj].id)
    if best == 0.0:
        return 0.0, pair
    # phase 2: exhaustive over every pair that could beat the bound
    U = best * (1.0 + 1e-9)
    for b, (idx, tree, rmax, gdmin, gdmax) in d.groups.items():
        for b2, (idx2, tree2, rmax2, g2dmin, g2dmax) in d.groups.items():
            if g2dmax < gdmin:
                continue  # partner group strictly smaller: roles swap elsewhere
            radii = d.radii[idx] + U * d.diams[idx] + rmax2 + 1e-12
            hits = tree2.query_ball_point(d.centroids[idx], radii)
            pi, pj = [], []
            for k, row in enumerate(hits):
                i = idx[k]
                for jj in row:
                    j = idx2[jj]
                    if j == i:
                        continue
                    if d.diams[j] > d.diams[i] or (d.diams[j] == d.diams[i] and j > i):
                        pi.append(i)
                        pj.append(j)
            if not pi:
                continue
            pi = np.asarray(pi)
            pj = np.asarray(pj)
            b = d.bbox
            gx = np.maximum(np.maximum(b[pj, 0] - b[pi, 2], b[pi, 0] - b[pj, 2]), 0.0)
            gy = np.maximum(np.maximum(b[pj, 1] - b[pi, 3], b[pi, 1] - b[pj, 3]), 0.0)
            lb = np.sqrt(gx * gx + gy * gy) / np.minimum(d.diams[pi], d.diams[pj])
            for k in np.argsort(lb, kind="stable"):
                if lb[k] >= best:
                    break
                i, j = int(pi[k]), int(pj[k])
                dist = _pair_distance(d, i, j)
                delta = dist / min(d.diams[i], d.diams[j])
                if delta < best:
                    best = float(delta)
                    pair = (els[i].id, els[j].id)
                if best == 0.0:
                    return best, pair
    return best, pair


# ---------------------------------------------------------------------------
# Co-fatness


def cofatness(
    packing: Packing,
    max_elements: int = 200,
    n_centers: int = 8,
    n_radii: int = 6,
    subgrid: int = 256,
    seed: int = 0,
) -> tuple[float, tuple[int, tuple[float, float], float]]:
    """Minimum of area(D ∩ B(p, r)) / r^2 over probed balls centered on D.

    Centers are boundary samples plus the centroid; radii are log-spaced up
    to the diameter; balls containing the whole element are skipped per the
    condition.  Area by deterministic subgrid integration (error ~1/subgrid).
    """
    els = packing.elements
    if not els:
        raise HomogeneityError("empty packing")
    order = np.argsort([-geo.diameter(e) for e in els])
    stride = max(1, len(order) // max_elements)
    chosen = order[::stride][:max_elements]
    best = math.inf
    witness = (els[0].id, (0.0, 0.0), 0.0)
    for i in chosen:
        e = els[int(i)]
        diam = geo.diameter(e)
        perim_pitch = diam * 4.0 / n_centers
        centers = geo.boundary_points(e, perim_pitch, min_points=4)[:n_centers]
        centers = np.vstack([centers, [geo.centroid(e)]])
        radii = diam * np.geomspace(0.05, 1.0, n_radii)
        for p in centers:
            far = _farthest_distance(e, p)
            for r in radii:
                if far <= r * (1.0 + 1e-9):
                    continue  # ball contains the element (open-set reading)
                ratio = _area_ratio(e, p, float(r), subgrid)
                if ratio < best:
                    best = ratio
                    witness = (e.id, (float(p[0]), float(p[1])), float(r))
    return best, witness


def _farthest_distance(e, p) -> float:
    if isinstance(e, Circle):
        return math.hypot(p[0] - e.cx, p[1] - e.cy) + e.r
    if isinstance(e, Square):
        corners = geo._edges(e)[:, :2]
    else:
        corners = e.vertices
    return math.sqrt(float(np.max((corners[:, 0] - p[0]) ** 2 + (corners[:, 1] - p[1]) ** 2)))


def _area_ratio(e, p, r: float, subgrid: int) -> float:
    ticks = (np.arange(subgrid) + 0.5) / subgrid * (2.0 * r)
    gx = p[0] - r + ticks
    gy = p[1] - r + ticks
    X, Y = np.meshgrid(gx, gy, indexing="ij")
    pts = np.column_stack([X.ravel(), Y.ravel()])
    inside = geo.contains_points(e, pts)
    d2 = (pts[:, 0] - p[0]) ** 2 + (pts[:, 1] - p[1]) ** 2
    count = int(np.count_nonzero(inside & (d2 <= r * r)))
    return 4.0 * count / (subgrid * subgrid)


# ---------------------------------------------------------------------------
# All locations, all scales


def location_scale_probe(
    packing: Packing,
    sample: ResidualSample,
    beta_candidates=DEFAULT_BETA_CANDIDATES,
    n_points: int = 48,
    n_radii: int = 8,
    extra_points=(),
    seed: int = 0,
):
    """Smallest candidate beta passing every probed (p, r); inf if none.

    Probe points are Halton points snapped to the nearest sample point
    (so they lie on the residual set), plus any caller-supplied points;
    radii are log-spaced in [20 * resolution, diam of the outer element].
    Returns (beta_hat, worst (p, r) witness).
    """
    d = _Directory(packing)
    pts = sample.points
    halton = qmc.Halton(d=2, seed=seed).random(n_points)
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    targets = lo + halton * (hi - lo)
    snap = cKDTree(pts)
    _, nearest = snap.query(targets)
    # caller-supplied points (contact witnesses) come first so a failure
    # there is the recorded witness
    probes = [tuple(q) for q in extra_points]
    probes.extend(tuple(q) for q in pts[nearest])
    r_lo = 20.0 * sample.resolution
    r_hi = geo.diameter(packing.outer)
    if r_lo >= r_hi:
        raise HomogeneityError("sample resolution too coarse for scale probing")
    radii = np.geomspace(r_lo, r_hi, n_radii)
    cands = sorted(beta_candidates)
    beta_hat = 0.0
    worst = (probes[0], float(radii[0]))
    for p in probes:
        for r in radii:
            ok_beta = None
            for b in cands:
                if _probe_passes(d, p, float(r), b):
                    ok_beta = b
                    break
            if ok_beta is None:
                return math.inf, (p, float(r))
            if ok_beta > beta_hat:
                beta_hat = ok_beta
                worst = (p, float(r))
    return beta_hat, worst


def _probe_passes(d: _Directory, p, r: float, beta: float) -> bool:
    for i in d.candidates_near(p, r, r / beta, beta * r):
        if d.boundary_dist(i, p) < r:
            return True
    return False


# ---------------------------------------------------------------------------
# Counting-bound verification


@dataclass(slots=True)
class LemmaBoundsReport:
    beta: float
    r: float
    small_bound: float  # cap on discs meeting one small element
    small_max: int
    small_checked: int
    small_violations: int
    large_bound: float | None  # cap on large elements meeting one doubled disc
    large_max: int | None
    large_checked: int
    large_violations: int
    large_skipped_reason: str | None
    alpha_hat: float
    delta_hat: float

    def passed(self) -> bool:
        return self.small_violations == 0 and self.large_violations == 0

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def lemma_bounds_check(
    packing: Packing,
    sample: ResidualSample,
    beta: float,
    r: float,
    trials: int = 1000,
    seed: int = 0,
    alpha_hat: float | None = None,
    delta_hat: float | None = None,
) -> LemmaBoundsReport:
    """Verify the two counting bounds against a maximal disjoint disc family.

    Small side: no element with diam <= beta*r meets more than (beta+2)^2
    discs of radius r.  Large side: no disc of radius 2r meets more than
    (2*alpha*beta*(2 + alpha*beta'))^2 elements with diam >= r/beta, where
    beta' = 4/delta.  The large side is skipped when delta_hat is zero
    (touching elements make beta' undefined).
    """
    from .analysis import max_disjoint_discs

    d = _Directory(packing)
    if alpha_hat is None:
        alpha_hat, _ = roundness(packing)
    if delta_hat is None:
        delta_hat, _ = separation(packing)
    centers = max_disjoint_discs(sample, r, seed=seed)
    disc_tree = cKDTree(centers)

    small_bound = (beta + 2.0) ** 2
    small_idx = np.nonzero(d.diams <= beta * r)[0]
    stride = max(1, len(small_idx) // trials)
    small_idx = small_idx[::stride][:trials]
    small_max = 0
    small_viol = 0
    for i in small_idx:
        e = d.elements[int(i)]
        cand = disc_tree.query_ball_point(d.centroids[i], r + d.radii[i] + 1e-12)
        count = sum(1 for k in cand if geo.boundary_distance(e, centers[k]) < r)
        small_max = max(small_max, count)
        if count > small_bound:
            small_viol += 1

    if delta_hat < 1e-9:
        return LemmaBoundsReport(
            beta=beta, r=r, small_bound=small_bound, small_max=small_max,
            small_checked=len(small_idx), small_violations=small_viol,
            large_bound=None, large_max=None, large_checked=0, large_violations=0,
            large_skipped_reason="relative separation is zero: 4/delta undefined",
            alpha_hat=alpha_hat, delta_hat=delta_hat,
        )
    beta_prime = 4.0 / delta_hat
    large_bound = (2.0 * alpha_hat * beta * (2.0 + alpha_hat * beta_prime)) ** 2
    stride = max(1, len(centers) // trials)
    probe_centers = centers[::stride][:trials]
    large_max = 0
    large_viol = 0
    for c in probe_centers:
        cand = d.candidates_near(c, 2.0 * r, r / beta, math.inf)
        count = sum(1 for i in cand if geo.boundary_distance(d.elements[i], c) < 2.0 * r)
        large_max = max(large_max, count)
        if count > large_bound:
            large_viol += 1
    return LemmaBoundsReport(
        beta=beta, r=r, small_bound=small_bound, small_max=small_max,
        small_checked=len(small_idx), small_violations=small_viol,
        large_bound=large_bound, large_max=large_max,
        large_checked=len(probe_centers), large_violations=large_viol,
        large_skipped_reason=None, alpha_hat=alpha_hat, delta_hat=delta_hat,
    )


# ---------------------------------------------------------------------------
# Full certificate


@dataclass(slots=True)
class CertifyConfig:
    seed: int = 0
    pair_budget: int = 20_000_000
    beta_candidates: tuple = DEFAULT_BETA_CANDIDATES
    probe_points: int = 48
    probe_radii: int = 8
    cofat_elements: int = 120
    cofat_centers: int = 8
    cofat_radii: int = 6
    lemma_beta: float = 2.0
    lemma_r: float | None = None  # default: 8 * sample resolution
    lemma_trials: int = 1000


@dataclass(slots=True)
class HomogeneityReport:
    alpha_hat: float
    alpha_witness: int
    beta_hat: float
    beta_witness: tuple
    delta_hat: float
    delta_witness: tuple[int, int]
    tau_hat: float
    tau_witness: tuple
    verdicts: dict
    homogeneous: bool
    via: list
    beta_refined: float | None
    alpha_refined: float | None
    lemma: LemmaBoundsReport | None
    probe_config: dict
    seed: int
    meta: dict = field(default_factory=dict)

    def verdict_line(self) -> str:
        if self.homogeneous:
            return "homogeneous via " + " and ".join(self.via)
        failed = [k for k, v in self.verdicts.items() if not v]
        return "not homogeneous (failed: " + ", ".join(failed) + ")"

    def to_json(self) -> str:
        data = {
            "alpha_hat": self.alpha_hat,
            "alpha_witness": self.alpha_witness,
            "beta_hat": self.beta_hat,
            "beta_witness": _jsonable(self.beta_witness),
            "delta_hat": self.delta_hat,
            "delta_witness": list(self.delta_witness),
            "tau_hat": self.tau_hat,
            "tau_witness": _jsonable(self.tau_witness),
            "verdicts": self.verdicts,
            "homogeneous": self.homogeneous,
            "via": self.via,
            "verdict": self.verdict_line(),
            "beta_refined": self.beta_refined,
            "alpha_refined": self.alpha_refined,
            "lemma": self.lemma.to_dict() if self.lemma else None,
            "probe_config": self.probe_config,
            "seed": self.seed,
            "meta": {k: v for k, v in self.meta.items() if isinstance(v, (str, int, float))},
        }
        return json.dumps(data, indent=2)


def _jsonable(obj):
    if isinstance(obj, tuple):
        return [_jsonable(o) for o in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return float(obj)
    return obj


def certify(
    packing: Packing,
    sample: ResidualSample,
    config: CertifyConfig = CertifyConfig(),
    refined: tuple[Packing, ResidualSample] | None = None,
) -> HomogeneityReport:
    """Run all probes and issue the homogeneity verdict for this truncation.

    Homogeneity = roundness and all-locations-all-scales together with
    either relative separation or co-fatness.  The scale probe additionally
    requires stability (<= 25% drift) under the provided refinement; with
    no refinement, finiteness alone decides and the report says so.
    """
    alpha_hat, alpha_wit = roundness(packing)
    delta_hat, delta_wit = separation(packing, pair_budget=config.pair_budget, seed=config.seed)
    tau_hat, tau_wit = cofatness(
        packing,
        max_elements=config.cofat_elements,
        n_centers=config.cofat_centers,
        n_radii=config.cofat_radii,
        seed=config.seed,
    )
    extra = []
    if delta_hat < 1e-6:
        extra.append(_large_contact_point(packing, delta_wit))
    beta_hat, beta_wit = location_scale_probe(
        packing,
        sample,
        beta_candidates=config.beta_candidates,
        n_points=config.probe_points,
        n_radii=config.probe_radii,
        extra_points=extra,
        seed=config.seed,
    )
    beta_refined = None
    alpha_refined = None
    if refined is not None:
        rp, rs = refined
        alpha_refined, _ = roundness(rp)
        beta_refined, _ = location_scale_probe(
            rp, rs,
            beta_candidates=config.beta_candidates,
            n_points=config.probe_points,
            n_radii=config.probe_radii,
            extra_points=extra,
            seed=config.seed,
        )
    scale_ok = math.isfinite(beta_hat)
    if scale_ok and beta_refined is not None:
        scale_ok = math.isfinite(beta_refined) and abs(beta_refined - beta_hat) <= BETA_DRIFT_PASS * beta_hat
    verdicts = {
        "roundness": math.isfinite(alpha_hat),
        "all_locations_scales": scale_ok,
        "relative_separation": delta_hat >= SEPARATION_PASS,
        "cofatness": tau_hat >= COFATNESS_PASS,
    }
    lemma = None
    if verdicts["roundness"]:
        r = config.lemma_r if config.lemma_r is not None else 8.0 * sample.resolution
        lemma = lemma_bounds_check(
            packing, sample, beta=config.lemma_beta, r=r,
            trials=config.lemma_trials, seed=config.seed,
            alpha_hat=alpha_hat, delta_hat=delta_hat,
        )
    via = []
    if verdicts["roundness"] and verdicts["all_locations_scales"]:
        if verdicts["relative_separation"]:
            via.append("relative-separation")
        if verdicts["cofatness"]:
            via.append("co-fatness")
    homogeneous = bool(via)
    return HomogeneityReport(
        alpha_hat=alpha_hat, alpha_witness=alpha_wit,
        beta_hat=beta_hat, beta_witness=beta_wit,
        delta_hat=delta_hat, delta_witness=delta_wit,
        tau_hat=tau_hat, tau_witness=tau_wit,
        verdicts=verdicts, homogeneous=homogeneous, via=via,
        beta_refined=beta_refined, alpha_refined=alpha_refined,
        lemma=lemma,
        probe_config={
            "pair_budget": config.pair_budget,
            "beta_candidates": list(config.beta_candidates),
            "probe_points": config.probe_points,
            "probe_radii": config.probe_radii,
            "cofat": [config.cofat_elements, config.cofat_centers, config.cofat_radii],
            "lemma": [config.lemma_beta, config.lemma_r, config.lemma_trials],
            "refined": refined is not None,
        },
        seed=config.seed,
        meta=dict(packing.meta),
    )


def _large_contact_point(packing: Packing, fallback_pair: tuple[int, int]):
    """Contact point of a touching pair, preferring the largest elements.

    When elements touch, the scale probe fails hardest at a contact of two
    large elements (nearby elements shrink quadratically toward the contact
    point, so small probe radii find nothing in their diameter window).
    """
    els = sorted(packing.elements, key=lambda e: -geo.diameter(e))[:32]
    best = None
    for i in range(len(els) - 1):
        for j in range(i + 1, len(els)):
            if geo.set_distance(els[i], els[j]) <= 1e-9 * geo.diameter(els[i]):
                best = (els[i], els[j])
                break
        if best:
            break
    if best is None:
        by_id = {e.id: e for e in packing.elements}
        best = (by_id[fallback_pair[0]], by_id[fallback_pair[1]])
    a, b = best
    if isinstance(a, Circle) and isinstance(b, Circle):
        ca = np.array([a.cx, a.cy])
        cb = np.array([b.cx, b.cy])
        u = (cb - ca) / np.linalg.norm(cb - ca)
        return tuple(ca + u * a.r)
    pa = geo.boundary_points(a, geo.diameter(a) / 64.0)
    d = [geo.boundary_distance(b, p) for p in pa]
    return tuple(pa[int(np.argmin(d))])
