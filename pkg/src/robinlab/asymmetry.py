"""Fraenkel asymmetry, interior perimeter and the rearrangement comparisons.

Sets live inside a model domain Ω and come either as polygon loops (exact
geometry, clipping through shapely) or as an occupancy raster.  The
quantitative isoperimetric check compares the interior perimeter of a small
set with (1-ε)(1 + C1 Ã²) 2√π |E|^{1/2}, where Ã is an upper bound for the
modified asymmetry over a finite family of admissible sets U.
"""

from __future__ import annotations

import base64
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
import shapely
from scipy.optimize import brentq, minimize
from shapely.geometry import MultiPolygon, Polygon
from skimage.measure import find_contours

from . import fem
from .geometry import DomainSpec, ball_volume, boundary_polyline

DEFAULT_C1 = 1e-4
RASTER_DEFAULT = 1024
RASTER_PERIMETER_ERROR = 0.08
SNAP_REL = 1e-9


# ---------------------------------------------------------------------------
# planar sets
# ---------------------------------------------------------------------------


def omega_polygon(spec: DomainSpec, spacing: Optional[float] = None) -> Polygon:
    """Shapely polygon through boundary points of Ω (exact at the vertices)."""
    if spacing is None:
        spacing = 1e-3 * _diameter(spec)
    pts, _ = boundary_polyline(spec, spacing)
    return Polygon(pts)


def _diameter(spec: DomainSpec) -> float:
    if spec.kind == "disk":
        return 2.0 * spec.radius
    v = spec.polygon()
    return float(np.max(np.linalg.norm(v[:, None, :] - v[None, :, :], axis=2)))


@dataclass
class PlanarSet:
    """A set E ⊂ Ω given by polygon loops or by an occupancy raster.

    Polygon loops are simple, pairwise disjoint outer boundaries.  The raster
    has cell (i, j) covering [x0 + j c, x0 + (j+1) c] × [y0 + i c, y0 + (i+1) c].
    """

    ambient: DomainSpec
    loops: Optional[list] = None
    origin: Optional[tuple] = None
    cell: Optional[float] = None
    bitmap: Optional[np.ndarray] = None

    def __post_init__(self):
        if (self.loops is None) == (self.bitmap is None):
            raise ValueError("give exactly one of loops or bitmap")
        if self.loops is not None:
            self.loops = [np.asarray(l, dtype=float) for l in self.loops]
            geom = self.geometry()
            if not geom.is_valid:
                raise ValueError(f"polygon loops invalid: {shapely.is_valid_reason(geom)}")
        else:
            if self.cell is None or self.cell <= 0:
                raise ValueError("raster cell size must be positive")
            self.bitmap = np.asarray(self.bitmap, dtype=bool)
            if self.bitmap.ndim != 2:
                raise ValueError("bitmap must be 2-D")
            self.origin = tuple(float(x) for x in self.origin)

    @property
    def kind(self) -> str:
        return "polygon" if self.loops is not None else "raster"

    @classmethod
    def from_geometry(cls, geom, ambient: DomainSpec) -> "PlanarSet":
        polys = [geom] if isinstance(geom, Polygon) else list(getattr(geom, "geoms", []))
        loops = []
        for p in polys:
            if not isinstance(p, Polygon) or p.is_empty:
                continue
            if len(p.interiors):
                raise ValueError("sets with holes are not supported")
            loops.append(np.asarray(shapely.geometry.polygon.orient(p).exterior.coords)[:-1])
        if not loops:
            raise ValueError("empty set")
        return cls(ambient, loops=loops)

    def geometry(self):
        if self.loops is None:
            raise ValueError("raster sets have no polygon geometry")
        polys = [Polygon(l) for l in self.loops]
        return polys[0] if len(polys) == 1 else MultiPolygon(polys)

    def area(self) -> float:
        if self.kind == "polygon":
            return float(self.geometry().area)
        return float(self.bitmap.sum()) * self.cell ** 2

    def cell_centers(self) -> np.ndarray:
        i, j = np.nonzero(self.bitmap)
        return np.column_stack([self.origin[0] + (j + 0.5) * self.cell, self.origin[1] + (i + 0.5) * self.cell])

    def centroid(self) -> np.ndarray:
        if self.kind == "polygon":
            c = self.geometry().centroid
            return np.array([c.x, c.y])
        return self.cell_centers().mean(axis=0)

    def bounds(self) -> tuple:
        if self.kind == "polygon":
            return self.geometry().bounds
        i, j = np.nonzero(self.bitmap)
        c, (x0, y0) = self.cell, self.origin
        return (x0 + j.min() * c, y0 + i.min() * c, x0 + (j.max() + 1) * c, y0 + (i.max() + 1) * c)

    def rasterize(self, cells: int = RASTER_DEFAULT, pad: int = 2) -> "PlanarSet":
        """Occupancy raster of a polygon set with ``cells`` cells across its longer side."""
        if self.kind == "raster":
            return self
        x0, y0, x1, y1 = self.bounds()
        c = max(x1 - x0, y1 - y0) / cells
        nx = int(math.ceil((x1 - x0) / c)) + 2 * pad
        ny = int(math.ceil((y1 - y0) / c)) + 2 * pad
        ox, oy = x0 - pad * c, y0 - pad * c
        xs = ox + (np.arange(nx) + 0.5) * c
        ys = oy + (np.arange(ny) + 0.5) * c
        X, Y = np.meshgrid(xs, ys)
        occ = shapely.contains_xy(self.geometry(), X, Y)
        return PlanarSet(self.ambient, origin=(ox, oy), cell=c, bitmap=occ)

    def to_dict(self) -> dict:
        if self.kind == "polygon":
            body = {"kind": "polygon", "loops": [l.tolist() for l in self.loops]}
        else:
            packed = np.packbits(self.bitmap.astype(np.uint8), axis=None)
            body = {"kind": "raster", "origin": list(self.origin), "cell": self.cell,
                    "shape": list(self.bitmap.shape), "bitmap": base64.b64encode(packed.tobytes()).decode("ascii")}
        body["ambient"] = self.ambient.to_dict()
        return body

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "PlanarSet":
        amb = DomainSpec.from_dict(d["ambient"])
        if d["kind"] == "polygon":
            return cls(amb, loops=d["loops"])
        if d["kind"] != "raster":
            raise ValueError(f"unknown set kind {d['kind']!r}")
        shape = tuple(d["shape"])
        raw = np.frombuffer(base64.b64decode(d["bitmap"]), dtype=np.uint8)
        bits = np.unpackbits(raw)[: shape[0] * shape[1]].reshape(shape).astype(bool)
        return cls(amb, origin=tuple(d["origin"]), cell=float(d["cell"]), bitmap=bits)

    @classmethod
    def from_json(cls, text: str) -> "PlanarSet":
        return cls.from_dict(json.loads(text))


def disk_set(ambient: DomainSpec, center, r: float, segments: int = 512) -> PlanarSet:
    th = 2 * np.pi * np.arange(segments) / segments
    return PlanarSet(ambient, loops=[np.column_stack([center[0] + r * np.cos(th), center[1] + r * np.sin(th)])])


# ---------------------------------------------------------------------------
# Fraenkel asymmetry
# ---------------------------------------------------------------------------


def _sector(p, q, r):
    return 0.5 * r * r * np.arctan2(p[:, 0] * q[:, 1] - p[:, 1] * q[:, 0], np.sum(p * q, axis=1))


def _cross(p, q):
    return 0.5 * (p[:, 0] * q[:, 1] - p[:, 1] * q[:, 0])


def circle_polygon_area(rings: list, center, r: float) -> float:
    """Exact |P ∩ B(center, r)| for a polygon given by oriented rings.

    Sums, edge by edge, the signed area of triangle (center, p, q) ∩ disk;
    counter-clockwise rings add and clockwise rings subtract.
    """
    c = np.asarray(center, dtype=float)
    total = 0.0
    for ring in rings:
        a = ring - c
        b = np.roll(a, -1, axis=0)
        d = b - a
        dd = np.sum(d * d, axis=1)
        ad = np.sum(a * d, axis=1)
        disc = ad * ad - dd * (np.sum(a * a, axis=1) - r * r)
        sq = np.sqrt(np.maximum(disc, 0.0))
        safe = np.where(dd > 0, dd, 1.0)
        s1 = np.where(disc > 0, np.clip((-ad - sq) / safe, 0, 1), 0.0)
        s2 = np.where(disc > 0, np.clip((-ad + sq) / safe, 0, 1), 0.0)
        p1 = a + s1[:, None] * d
        p2 = a + s2[:, None] * d
        total += float(np.sum(_sector(a, p1, r) + _cross(p1, p2) + _sector(p2, b, r)))
    return total


def _oriented_rings(geom) -> list:
    polys = [geom] if isinstance(geom, Polygon) else list(geom.geoms)
    rings = []
    for p in polys:
        p = shapely.geometry.polygon.orient(p, 1.0)
        rings.append(np.asarray(p.exterior.coords)[:-1])
        rings.extend(np.asarray(h.coords)[:-1] for h in p.interiors)
    return rings


@dataclass
class FraenkelResult:
    value: float
    center: tuple
    radius: float
    gap: float
    mode: str


def _overlap_function(E: PlanarSet, r: float):
    if E.kind == "polygon":
        rings = _oriented_rings(E.geometry())
        return lambda c: circle_polygon_area(rings, c, r)
    bm = E.bitmap
    h = E.cell
    ox, oy = E.origin
    prefix = np.concatenate([np.zeros((bm.shape[0], 1)), np.cumsum(bm, axis=1)], axis=1)
    ny, nx = bm.shape

    def overlap(c):
        # cells with d <= r - h/2 count fully (row prefix sums); the ring
        # r - h/2 < d < r + h/2 gets the linear-ramp coverage 1/2 + (r - d)/h
        cx, cy = c
        i0 = max(int(math.floor((cy - r - h - oy) / h)), 0)
        i1 = min(int(math.ceil((cy + r + h - oy) / h)), ny)
        if i1 <= i0:
            return 0.0
        rows = np.arange(i0, i1)
        dy = oy + (rows + 0.5) * h - cy
        w_in = np.sqrt(np.maximum((r - 0.5 * h) ** 2 - dy * dy, 0.0))
        w_out = np.sqrt(np.maximum((r + 0.5 * h) ** 2 - dy * dy, 0.0))
        has_in = np.abs(dy) < r - 0.5 * h
        # full cells: centres with |x - cx| <= w_in
        j_lo = np.clip(np.ceil((cx - w_in - ox) / h - 0.5).astype(int), 0, nx)
        j_hi = np.clip(np.floor((cx + w_in - ox) / h - 0.5).astype(int) + 1, 0, nx)
        j_hi = np.maximum(j_hi, j_lo)
        full = np.where(has_in, prefix[rows, j_hi] - prefix[rows, j_lo], 0.0).sum()
        # ring cells on both sides of every row
        a_lo = np.clip(np.ceil((cx - w_out - ox) / h - 0.5).astype(int), 0, nx)
        a_hi = np.clip(np.floor((cx + w_out - ox) / h - 0.5).astype(int) + 1, 0, nx)
        width = int(max((j_lo - a_lo).max(initial=0), (a_hi - j_hi).max(initial=0), 1))
        k = np.arange(width)
        parts = []
        for start, stop in ((a_lo, np.where(has_in, j_lo, a_hi)), (np.where(has_in, j_hi, a_hi), a_hi)):
            J = start[:, None] + k[None, :]
            ok = J < stop[:, None]
            Jc = np.minimum(J, nx - 1)
            R = np.broadcast_to(rows[:, None], J.shape)
            d = np.hypot(ox + (Jc + 0.5) * h - cx, oy + (R + 0.5) * h - cy)
            cov = np.clip(0.5 + (r - d) / h, 0.0, 1.0)
            parts.append(np.sum(np.where(ok & bm[R, Jc], cov, 0.0)))
        return h * h * float(full + sum(parts))

    return overlap


def fraenkel_report(E: PlanarSet, grid: int = 5) -> FraenkelResult:
    """min over centres of |E Δ B| / |B| with |B| = |E|.

    Starts local Nelder-Mead searches from the centroid and the best nodes of a
    grid over the bounding box.  ``gap`` is the Lipschitz bound 4 d / r for a
    centre offset d of half the grid diagonal.
    """
    V = E.area()
    if V <= 0:
        raise ValueError("empty set")
    r = math.sqrt(V / math.pi)
    overlap = _overlap_function(E, r)

    def objective(c):
        return 2.0 * (V - overlap(c)) / V

    x0, y0, x1, y1 = E.bounds()
    gx = np.linspace(x0, x1, grid)
    gy = np.linspace(y0, y1, grid)
    starts = [E.centroid()] + [np.array([x, y]) for y in gy for x in gx]
    vals = np.array([objective(s) for s in starts])
    order = np.argsort(vals, kind="stable")[:3]
    if 0 not in order:
        order = np.concatenate([[0], order[:2]])
    best_c, best = starts[0], vals[0]
    scale = max(x1 - x0, y1 - y0)
    for i in order:
        res = minimize(objective, starts[i], method="Nelder-Mead",
                       options={"xatol": 1e-7 * scale, "fatol": 1e-12, "maxiter": 2000,
                                "initial_simplex": np.array([starts[i], starts[i] + [0.1 * r, 0], starts[i] + [0, 0.1 * r]])})
        if res.fun < best:
            best, best_c = float(res.fun), res.x
    spacing = math.hypot(gx[1] - gx[0], gy[1] - gy[0]) if grid > 1 else scale
    gap = 4.0 * (0.5 * spacing) / r
    return FraenkelResult(float(max(best, 0.0)), (float(best_c[0]), float(best_c[1])), r, float(gap), E.kind)


def fraenkel(E: PlanarSet) -> float:
    """Fraenkel asymmetry A(E) in [0, 2); the best value found, an upper bound."""
    return fraenkel_report(E).value


# ---------------------------------------------------------------------------
# boundary layer and modified asymmetry
# ---------------------------------------------------------------------------


@dataclass
class BoundaryLayer:
    """Ω_δ = {x ∈ Ω : d(x, ∂Ω) < t0} with |Ω_δ| < delta."""

    delta: float
    t0: float
    area: float
    spec: DomainSpec = field(repr=False)

    @classmethod
    def for_domain(cls, spec: DomainSpec, delta: float, fill: float = 0.99) -> "BoundaryLayer":
        """Take t0 so that the layer area is ``fill`` times delta."""
        if not 0 < delta < spec_area(spec):
            raise ValueError("delta must lie in (0, |Ω|)")
        target = fill * delta
        r_in = _inradius(spec)
        t0 = brentq(lambda t: layer_area(spec, t) - target, 1e-12 * r_in, (1 - 1e-9) * r_in, xtol=1e-14)
        area = layer_area(spec, t0)
        if not area < delta:
            raise RuntimeError("layer area not below delta")
        return cls(delta, float(t0), float(area), spec)

    def inner(self, t: Optional[float] = None):
        """U_t = {d > t} as a polygon (t defaults to t0)."""
        return inner_parallel(self.spec, self.t0 if t is None else t)

    def contains(self, pts) -> np.ndarray:
        pts = np.atleast_2d(pts)
        return self.spec.contains(pts) & (self.spec.boundary_distance(pts) < self.t0)

    def fraction(self, E: PlanarSet) -> float:
        """|E ∩ Ω_δ| / |E|."""
        V = E.area()
        if E.kind == "polygon":
            inside = E.geometry().intersection(self.inner()).area
            return float(max(V - inside, 0.0) / V)
        return float(np.mean(self.contains(E.cell_centers())))


def spec_area(spec: DomainSpec) -> float:
    if spec.kind == "disk":
        return math.pi * spec.radius ** 2
    return float(omega_polygon(spec).area)


def _inradius(spec: DomainSpec) -> float:
    from .geometry import summarize
    return summarize(spec).inradius


_INNER_CACHE: dict = {}


def inner_parallel(spec: DomainSpec, t: float):
    """{x ∈ Ω : d(x, ∂Ω) > t} as a shapely polygon (empty when t ≥ inradius)."""
    key = (spec.to_json(), float(t))
    if key not in _INNER_CACHE:
        if len(_INNER_CACHE) > 256:
            _INNER_CACHE.clear()
        _INNER_CACHE[key] = _inner_parallel(spec, t)
    return _INNER_CACHE[key]


def _inner_parallel(spec: DomainSpec, t: float):
    if t <= 0:
        return omega_polygon(spec)
    if spec.kind == "disk":
        c = spec.offset if spec.offset is not None else (0.0, 0.0)
        if t >= spec.radius:
            return Polygon()
        return omega_polygon(DomainSpec.disk(spec.radius - t, center=c))
    return omega_polygon(spec).buffer(-t, join_style="mitre", mitre_limit=1e6)


def layer_area(spec: DomainSpec, t: float) -> float:
    if spec.kind == "disk":
        R = spec.radius
        return math.pi * (R * R - max(R - t, 0.0) ** 2)
    return spec_area(spec) - float(inner_parallel(spec, t).area)


def _intersect(E: PlanarSet, U) -> Optional[PlanarSet]:
    if E.kind == "polygon":
        g = E.geometry().intersection(U)
        g = shapely.make_valid(g)
        polys = [p for p in getattr(g, "geoms", [g]) if isinstance(p, Polygon) and p.area > 0]
        if not polys:
            return None
        return PlanarSet.from_geometry(MultiPolygon(polys) if len(polys) > 1 else polys[0], E.ambient)
    keep = shapely.contains_xy(U, *E.cell_centers().T)
    if not keep.any():
        return None
    bm = np.zeros_like(E.bitmap)
    i, j = np.nonzero(E.bitmap)
    bm[i[keep], j[keep]] = True
    return PlanarSet(E.ambient, origin=E.origin, cell=E.cell, bitmap=bm)


def candidate_levels(layer: BoundaryLayer, candidates: int) -> np.ndarray:
    """Values s with U = {d > s}: s = t0 - t for t on a grid of [0, t0]; candidates=1 gives U = Ω."""
    if candidates < 1:
        raise ValueError("need at least one candidate")
    if candidates == 1:
        return np.array([0.0])
    return layer.t0 - np.linspace(0.0, layer.t0, candidates)


def modified_fraenkel(E: PlanarSet, omega: DomainSpec, layer: BoundaryLayer, candidates: int = 8,
                      return_details: bool = False):
    """Upper bound for Ã(E) = inf_U A(E ∩ U) over U ⊇ Ω∖Ω_δ.

    The family is U_s = {d > s} for the levels of ``candidate_levels``; every
    member contains Ω∖Ω_δ and the last one is Ω itself.
    """
    core = _intersect(E, inner_parallel(omega, layer.t0))
    if core is None:
        raise ValueError("E does not meet Ω∖Ω_δ")
    rows = []
    whole = None
    V = E.area()
    for s in candidate_levels(layer, candidates):
        sub = _intersect(E, inner_parallel(omega, s))
        if sub.area() >= V * (1 - 1e-14):
            # E ⊂ U: the candidate gives A(E) itself
            whole = fraenkel(E) if whole is None else whole
            value = whole
        else:
            value = fraenkel(sub)
        rows.append({"level": float(s), "A": value})
    best = min(r["A"] for r in rows)
    if return_details:
        return best, rows
    return best


# ---------------------------------------------------------------------------
# interior perimeter
# ---------------------------------------------------------------------------


def _boundary_curvature_radius(spec: DomainSpec) -> Optional[float]:
    if spec.kind == "disk":
        return spec.radius
    if spec.kind == "smoothed_polygon":
        return spec.corner_radius
    return None


def interior_perimeter(E: PlanarSet, omega: DomainSpec, return_error: bool = False):
    """Length of ∂E inside Ω, leaving out the pieces that run along ∂Ω.

    Polygon mode drops an edge when its endpoints and midpoint all sit within
    the snap tolerance of ∂Ω.  The tolerance is 1e-9·diam(Ω) plus, on curved
    boundary, the sagitta |e|²/(8ρ) of a chord of length |e|.  Raster mode
    measures marching-squares contours and drops segments within 1.5 cells of
    ∂Ω; its relative error bound is RASTER_PERIMETER_ERROR.
    """
    if E.kind == "polygon":
        snap = SNAP_REL * _diameter(omega)
        rho = _boundary_curvature_radius(omega)
        # a piece of a split omega_polygon chord deviates from ∂Ω as much as the whole chord
        chord = 1.01e-3 * _diameter(omega)
        total = 0.0
        for loop in E.loops:
            a = loop
            b = np.roll(loop, -1, axis=0)
            L = np.linalg.norm(b - a, axis=1)
            Lref = np.maximum(L, chord)
            tol = snap + (Lref * Lref / (8.0 * rho) if rho else 0.0)
            on = np.ones(len(a), dtype=bool)
            for p in (a, b, 0.5 * (a + b)):
                on &= omega.boundary_distance(p) <= tol
            total += float(L[~on].sum())
        return (total, 0.0) if return_error else total
    bm = np.pad(E.bitmap.astype(float), 1)
    c = E.cell
    ox, oy = E.origin[0] - c, E.origin[1] - c
    total = 0.0
    for contour in find_contours(bm, 0.5):
        xy = np.column_stack([ox + (contour[:, 1] + 0.5) * c, oy + (contour[:, 0] + 0.5) * c])
        seg = np.diff(xy, axis=0)
        mid = 0.5 * (xy[1:] + xy[:-1])
        keep = omega.contains(mid) & (omega.boundary_distance(mid) > 1.5 * c)
        total += float(np.linalg.norm(seg[keep], axis=1).sum())
    return (total, RASTER_PERIMETER_ERROR * total) if return_error else total


def full_perimeter(E: PlanarSet) -> float:
    if E.kind == "polygon":
        return float(E.geometry().length)
    bm = np.pad(E.bitmap.astype(float), 1)
    return float(sum(np.linalg.norm(np.diff(cn, axis=0), axis=1).sum() for cn in find_contours(bm, 0.5))) * E.cell


# ---------------------------------------------------------------------------
# quantitative isoperimetric inequality
# ---------------------------------------------------------------------------


def default_beta(eps: float, n: int = 2) -> float:
    return (eps / 2.0) ** (n / (n - 1))


def default_alpha(t0: float, eps: float, n: int = 2) -> float:
    """t0^n n^n ω_n ε^n / 6^n."""
    return t0 ** n * n ** n * ball_volume(n) * eps ** n / 6.0 ** n


@dataclass
class IsoperimetricReport:
    applicable: bool
    volume: float
    layer_fraction: float
    alpha: float
    beta: float
    lhs: Optional[float]
    rhs: Optional[float]
    A_tilde: Optional[float]
    raw_ratio: float
    passed: Optional[bool]
    reason: str
    note: str = "Ã is an upper bound over a finite family of admissible sets"

    def to_dict(self) -> dict:
        return asdict(self)


def isoperimetric_check(E: PlanarSet, omega: DomainSpec, layer: BoundaryLayer, eps: float = 0.1,
                        alpha: Optional[float] = None, beta: Optional[float] = None, C1: float = DEFAULT_C1,
                        candidates: int = 8) -> IsoperimetricReport:
    """|∂E ∩ Ω| ≥ (1-ε)(1 + C1 Ã²) 2√π |E|^{1/2} on sets passing the volume gates.

    Sets with |E| > α or |E ∩ Ω_δ|/|E| > β are returned with applicable=False
    and no verdict.
    """
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    if C1 <= 0:
        raise ValueError("C1 must be positive")
    n = 2
    alpha = default_alpha(layer.t0, eps) if alpha is None else alpha
    beta = default_beta(eps) if beta is None else beta
    if alpha <= 0 or not 0 < beta < 1:
        raise ValueError("need alpha > 0 and beta in (0, 1)")
    V = E.area()
    frac = layer.fraction(E)
    per = interior_perimeter(E, omega)
    iso = n * ball_volume(n) ** (1.0 / n) * V ** ((n - 1) / n)
    raw = float(per / iso)
    alpha, beta = float(alpha), float(beta)
    reasons = []
    if V > alpha:
        reasons.append(f"|E| = {V:.6g} exceeds alpha = {alpha:.6g}")
    if frac > beta:
        reasons.append(f"layer fraction {frac:.6g} exceeds beta = {beta:.6g}")
    if reasons:
        return IsoperimetricReport(False, V, frac, alpha, beta, None, None, None, raw, None, "; ".join(reasons))
    At = modified_fraenkel(E, omega, layer, candidates)
    rhs = (1 - eps) * (1 + C1 * At * At) * iso
    return IsoperimetricReport(True, V, frac, alpha, beta, per, rhs, At, raw, bool(per >= rhs), "gates passed")


def largest_passing_C1(reports: list, eps: float) -> float:
    """Largest C1 for which every applicable report would still pass."""
    best = math.inf
    for r in reports:
        if not r.applicable or not r.A_tilde:
            continue
        iso = r.lhs / r.raw_ratio
        slack = r.lhs / ((1 - eps) * iso) - 1.0
        best = min(best, slack / r.A_tilde ** 2)
    return best


def random_corpus(omega: DomainSpec, layer: BoundaryLayer, count: int = 50, eps: float = 0.1,
                  seed: int = 0) -> list:
    """Ellipses, rectangles and two-blob unions sized and placed to meet both gates.

    Sets are built at unit scale, then scaled so that |E| is a random fraction
    of alpha and translated to a random point of Ω.  A quarter of them are
    pushed towards ∂Ω until they just touch the layer.
    """
    rng = np.random.default_rng(seed)
    alpha = default_alpha(layer.t0, eps)
    beta = default_beta(eps)
    core = inner_parallel(omega, layer.t0)
    out = []
    while len(out) < count:
        kind = ("ellipse", "rectangle", "blobs")[len(out) % 3]
        th = 2 * np.pi * np.arange(256) / 256
        if kind == "ellipse":
            a = rng.uniform(1.0, 3.0)
            geom = Polygon(np.column_stack([a * np.cos(th), np.sin(th) / a]))
        elif kind == "rectangle":
            a = rng.uniform(1.0, 3.0)
            geom = Polygon([(-a, -1 / a), (a, -1 / a), (a, 1 / a), (-a, 1 / a)])
        else:
            r2 = rng.uniform(0.4, 1.0)
            gap = rng.uniform(0.05, 1.0)
            d1 = Polygon(np.column_stack([np.cos(th), np.sin(th)]))
            d2 = Polygon(np.column_stack([1 + gap + r2 + r2 * np.cos(th), r2 * np.sin(th)]))
            geom = shapely.union(d1, d2)
        geom = shapely.affinity.rotate(geom, rng.uniform(0, 180), origin=(0, 0))
        geom = shapely.affinity.translate(geom, -geom.centroid.x, -geom.centroid.y)
        scale = math.sqrt(rng.uniform(0.2, 0.9) * alpha / geom.area)
        geom = shapely.affinity.scale(geom, scale, scale, origin=(0, 0))
        ext = max(geom.bounds[2] - geom.bounds[0], geom.bounds[3] - geom.bounds[1])
        if len(out) % 4 == 3:
            # seat the set so that it pokes slightly into the layer
            direction = rng.uniform(0, 2 * np.pi)
            u = np.array([math.cos(direction), math.sin(direction)])
            lo, hi = 0.0, 1.0
            x0, y0, x1, y1 = core.bounds
            reach = 0.5 * max(x1 - x0, y1 - y0) + ext
            centre = np.array(core.centroid.coords[0])
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                g = shapely.affinity.translate(geom, *(centre + mid * reach * u))
                f = 1.0 - g.intersection(core).area / g.area
                lo, hi = (mid, hi) if f < 0.5 * beta else (lo, mid)
            geom = shapely.affinity.translate(geom, *(centre + lo * reach * u))
        else:
            while True:
                p = rng.uniform(-1, 1, 2) * _diameter(omega)
                g = shapely.affinity.translate(geom, *p)
                if core.buffer(-ext).contains(g):
                    geom = g
                    break
        E = PlanarSet.from_geometry(geom, omega)
        if E.area() <= alpha and layer.fraction(E) <= beta:
            out.append(E)
    return out


# ---------------------------------------------------------------------------
# rearrangement and the Pólya-Szegő comparison
# ---------------------------------------------------------------------------


@dataclass
class P1Soup:
    """A continuous piecewise-linear function on a list of triangles."""

    points: np.ndarray  # (T, 3, 2)
    values: np.ndarray  # (T, 3)

    @classmethod
    def from_mesh(cls, m: fem.Mesh, u) -> "P1Soup":
        u = np.asarray(u, dtype=float)
        return cls(m.vertices[m.triangles], u[m.triangles])

    def absolute(self) -> "P1Soup":
        """|u| as a P1 function on the triangles split along {u = 0}."""
        p, v, _, _ = fem.split_at_level(self.points, self.values, 0.0)
        keep = fem.triangle_area(p) > 0
        return P1Soup(p[keep], np.abs(v[keep]))

    def areas(self) -> np.ndarray:
        return fem.triangle_area(self.points)

    def gradients_sq(self) -> np.ndarray:
        p, v = self.points, self.values
        d1, d2 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
        det = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
        det = np.where(det == 0, np.inf, det)
        f1, f2 = v[:, 1] - v[:, 0], v[:, 2] - v[:, 0]
        gx = (f1 * d2[:, 1] - f2 * d1[:, 1]) / det
        gy = (f2 * d1[:, 0] - f1 * d2[:, 0]) / det
        return gx * gx + gy * gy

    def square_integral(self) -> float:
        return float(fem.linear_square_integral(self.areas(), self.values).sum())


def superlevel_areas(soup: P1Soup, levels: np.ndarray) -> np.ndarray:
    """|{u > t}| for every t in ``levels``, exact for P1 functions."""
    v = np.sort(soup.values, axis=1)
    a, b, c = v[:, 0:1], v[:, 1:2], v[:, 2:3]
    A = soup.areas()[:, None]
    t = np.asarray(levels, dtype=float)[None, :]
    ca = np.where(c > a, c - a, 1.0)
    ba = np.where(b > a, b - a, 1.0)
    cb = np.where(c > b, c - b, 1.0)
    low = 1.0 - (t - a) ** 2 / (ca * ba)
    high = (c - t) ** 2 / (ca * cb)
    frac = np.where(t < a, 1.0, np.where(t < b, low, np.where(t < c, high, 0.0)))
    return (A * frac).sum(axis=0)


def _as_nonnegative(u, m: Optional[fem.Mesh]) -> P1Soup:
    soup = u if isinstance(u, P1Soup) else P1Soup.from_mesh(m, u)
    # round-off below zero (e.g. 1 - r² on a circle) is clipped
    floor = -1e-12 * float(np.abs(soup.values).max())
    if np.any(soup.values < floor):
        raise ValueError("u has negative values; pass |u| (P1Soup.absolute) or a nodal restriction")
    if not np.any(soup.values > 0):
        raise ValueError("u vanishes identically")
    return P1Soup(soup.points, np.maximum(soup.values, 0.0))


@dataclass
class Rearrangement:
    """Radial profile of u* on the ball of area |U|: u*(radii[i]) = levels[i]."""

    levels: np.ndarray
    mu: np.ndarray
    radii: np.ndarray
    total_area: float

    def value(self, r) -> np.ndarray:
        return np.interp(np.asarray(r, dtype=float), self.radii[::-1], self.levels[::-1], right=0.0)

    def square_integral(self) -> float:
        """∫ (u*)² with u* linear in r between profile nodes."""
        r, t = self.radii, self.levels
        r0, r1, t0, t1 = r[:-1], r[1:], t[:-1], t[1:]
        dr = r0 - r1
        slope = np.where(dr > 0, (t0 - t1) / np.where(dr > 0, dr, 1.0), 0.0)
        def F(x):
            # antiderivative of 2π x (t1 + slope (x - r1))² in x
            k = t1 - slope * r1
            return 2 * np.pi * (k * k * x ** 2 / 2 + 2 * k * slope * x ** 3 / 3 + slope ** 2 * x ** 4 / 4)
        return float(np.sum(F(r0) - F(r1)))

    def energy_below(self, s: float) -> float:
        """∫_{u* ≤ s} |∇u*|² with u* linear in r between nodes (s must be a level)."""
        sel = self.levels[1:] <= s * (1 + 1e-14)
        dt = np.diff(self.levels)[sel]
        dr = (self.radii[:-1] - self.radii[1:])[sel]
        dmu = (self.mu[:-1] - self.mu[1:])[sel]
        ok = dr > 0
        return float(np.sum(np.where(ok, (dt / np.where(ok, dr, 1.0)) ** 2 * dmu, 0.0)))


def decreasing_rearrangement(u, m: Optional[fem.Mesh] = None, n_levels: int = 400,
                             levels: Optional[np.ndarray] = None) -> Rearrangement:
    """Symmetric decreasing rearrangement from the exact distribution function.

    μ(t) = |{u > t}| is evaluated on a level grid over [0, max u]; the radius
    carrying level t is √(μ(t)/π), so |{u* > t}| = μ(t) on the grid.  A level
    held on a set of positive area (a plateau) gets a second node at radius
    √(|{u >= t}|/π), where u* is flat.
    """
    soup = _as_nonnegative(u, m)
    top = float(soup.values.max())
    if levels is None:
        levels = np.linspace(0.0, top, n_levels + 1)
    # a P1 function has level sets of positive area only on flat triangles
    v = soup.values
    flat = (v.max(axis=1) - v.min(axis=1) <= 1e-14 * top) & (v.min(axis=1) > 0)
    flat_vals = v[flat, 0]
    levels = np.unique(np.clip(np.concatenate([np.asarray(levels, dtype=float), flat_vals]), 0.0, top))
    mu = np.minimum.accumulate(superlevel_areas(soup, levels))
    total = float(soup.areas().sum())
    # |{u >= t}| adds the flat triangles sitting exactly at t
    pos = np.searchsorted(levels, flat_vals)
    mu_ge = mu + np.bincount(pos, weights=soup.areas()[flat], minlength=len(levels))
    lv, mm = [0.0] if mu_ge[0] < total else [], [total] if mu_ge[0] < total else []
    for t, a, b in zip(levels, mu_ge, mu):
        if a > b:
            lv.append(t)
            mm.append(min(a, mm[-1]) if mm else a)
        lv.append(t)
        mm.append(b)
    lv, mm = np.array(lv), np.minimum.accumulate(np.array(mm))
    radii = np.sqrt(mm / math.pi)
    return Rearrangement(lv, mm, radii, total)


def sublevel_energy(soup: P1Soup, s: float) -> float:
    """∫_{u ≤ s} |∇u|² by exact clipping of every triangle at the level s."""
    return float(np.sum(soup.gradients_sq() * (soup.areas() - _superlevel_each(soup, s))))


def _superlevel_each(soup: P1Soup, s: float) -> np.ndarray:
    v = np.sort(soup.values, axis=1)
    a, b, c = v[:, 0], v[:, 1], v[:, 2]
    A = soup.areas()
    ca = np.where(c > a, c - a, 1.0)
    ba = np.where(b > a, b - a, 1.0)
    cb = np.where(c > b, c - b, 1.0)
    frac = np.where(s < a, 1.0, np.where(s < b, 1.0 - (s - a) ** 2 / (ca * ba),
                                         np.where(s < c, (c - s) ** 2 / (ca * cb), 0.0)))
    return A * frac


@dataclass
class PolyaSzegoReport:
    level: float
    lhs_energy: float
    rhs_energy: float
    grid_term: float
    tolerance: float
    passed: bool
    flat_elements: int
    flat_area: float

    def to_dict(self) -> dict:
        return asdict(self)


def polya_szego_check(u, m: Optional[fem.Mesh] = None, s: Optional[float] = None, n_levels: int = 400,
                      rel_tol: float = 0.05) -> PolyaSzegoReport:
    """Compare ∫_{u≤s}|∇u|² with ∫_{u*≤s}|∇u*|².

    Passes when lhs ≥ rhs - tolerance, tolerance = rel_tol·lhs + grid term,
    where the grid term is the change in rhs between n_levels and n_levels/2.
    Elements with zero gradient inside {u > 0} are counted as flat.
    """
    soup = _as_nonnegative(u, m)
    top = float(soup.values.max())
    s = top if s is None else float(s)
    if not 0 < s <= top * (1 + 1e-12):
        raise ValueError("level s must lie in (0, max u]")
    s = min(s, top)

    def rhs_for(k):
        grid = np.union1d(np.linspace(0.0, top, k + 1), [s])
        return decreasing_rearrangement(soup, levels=grid).energy_below(s)

    rhs = rhs_for(n_levels)
    grid_term = abs(rhs - rhs_for(max(n_levels // 2, 2)))
    lhs = sublevel_energy(soup, s)
    g2 = soup.gradients_sq()
    flat = (g2 <= 1e-24 * max(g2.max(), 1e-300)) & (soup.values.max(axis=1) > 0)
    tol = rel_tol * lhs + grid_term
    return PolyaSzegoReport(s, lhs, rhs, grid_term, tol, bool(lhs >= rhs - tol), int(flat.sum()),
                            float(soup.areas()[flat].sum()))
