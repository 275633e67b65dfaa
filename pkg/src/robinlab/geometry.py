"""Planar model domains, geometric summaries, Steiner volumes and outward-field constants."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import linprog
from scipy.special import gamma as gamma_fn

KINDS = ("disk", "rectangle", "convex_polygon", "smoothed_polygon")


def ball_volume(n: int) -> float:
    """Volume of the unit ball in R^n."""
    return math.pi ** (n / 2) / gamma_fn(n / 2 + 1)


# ---------------------------------------------------------------------------
# Robin data and domain description
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RobinData:
    """Boundary parameter h: one constant, one value per boundary segment, or Dirichlet."""

    constant: Optional[float] = 0.0
    segments: Optional[tuple] = None
    dirichlet: bool = False

    def __post_init__(self):
        if self.dirichlet:
            return
        if (self.constant is None) == (self.segments is None):
            raise ValueError("give exactly one of constant or segments for h")
        vals = [self.constant] if self.segments is None else list(self.segments)
        if not all(np.isfinite(v) for v in vals):
            raise ValueError("h values must be finite")

    @property
    def is_constant(self) -> bool:
        return self.dirichlet or self.segments is None

    def values(self, n_segments: int) -> np.ndarray:
        """h on each boundary segment (raises in Dirichlet mode)."""
        if self.dirichlet:
            raise ValueError("Dirichlet mode has no finite h")
        if self.segments is None:
            return np.full(n_segments, float(self.constant))
        if len(self.segments) != n_segments:
            raise ValueError(f"h has {len(self.segments)} segment values but the domain has {n_segments} segments")
        return np.asarray(self.segments, dtype=float)

    def H(self) -> float:
        """sup of max(-h, 0) over the boundary; zero in Dirichlet mode."""
        if self.dirichlet:
            return 0.0
        vals = [self.constant] if self.segments is None else list(self.segments)
        return max(0.0, max(-float(v) for v in vals))

    def to_dict(self) -> dict:
        if self.dirichlet:
            return {"dirichlet": True}
        if self.segments is None:
            return {"constant": float(self.constant)}
        return {"segments": [float(v) for v in self.segments]}

    @classmethod
    def from_dict(cls, d) -> "RobinData":
        if d is None:
            return cls()
        if isinstance(d, (int, float)):
            return cls(constant=float(d))
        if d.get("dirichlet"):
            return cls(constant=None, dirichlet=True)
        if "segments" in d:
            return cls(constant=None, segments=tuple(float(v) for v in d["segments"]))
        if "constant" in d:
            return cls(constant=float(d["constant"]))
        raise ValueError(f"cannot read h data from {d!r}")

    def scaled(self, t: float) -> "RobinData":
        """h/t, the parameter that goes with the dilated domain tΩ."""
        if self.dirichlet:
            return self
        if self.segments is None:
            return RobinData(constant=self.constant / t)
        return RobinData(constant=None, segments=tuple(v / t for v in self.segments))


DIRICHLET = RobinData(constant=None, dirichlet=True)


@dataclass(frozen=True)
class DomainSpec:
    """A planar model domain.

    ``offset`` is the disk centre or the rectangle's lower-left corner and is
    added to polygon vertices.  Boundary segment ids: a disk has one segment;
    a rectangle has bottom, right, top, left as 0..3; a convex polygon has
    edge i from vertex i to vertex i+1; a smoothed polygon has the straight
    part of edge i as i and the corner arc at vertex i as n+i.
    """

    kind: str
    radius: float = 0.0
    a: float = 0.0
    b: float = 0.0
    vertices: tuple = ()
    corner_radius: float = 0.0
    offset: tuple = (0.0, 0.0)
    h: RobinData = field(default_factory=RobinData)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown domain kind {self.kind!r}")
        if self.kind == "disk" and not self.radius > 0:
            raise ValueError("disk radius must be positive")
        if self.kind == "rectangle" and not (self.a > 0 and self.b > 0):
            raise ValueError("rectangle sides must be positive")
        if self.kind in ("convex_polygon", "smoothed_polygon"):
            v = self.polygon()
            if len(v) < 3:
                raise ValueError("polygon needs at least 3 vertices")
            e = np.roll(v, -1, axis=0) - v
            cross = e[:, 0] * np.roll(e, -1, axis=0)[:, 1] - e[:, 1] * np.roll(e, -1, axis=0)[:, 0]
            if np.any(cross <= 0):
                i = int(np.argmin(cross))
                raise ValueError(
                    f"polygon is not strictly convex and counterclockwise at vertex {(i + 1) % len(v)}"
                )
            if _shoelace(v) <= 1e-14:
                raise ValueError("degenerate polygon with zero area")
        if self.kind == "smoothed_polygon":
            rc = self.corner_radius
            if not rc > 0:
                raise ValueError("corner radius must be positive")
            edges = np.linalg.norm(np.roll(self.polygon(), -1, axis=0) - self.polygon(), axis=1)
            if rc > 0.5 * edges.min():
                raise ValueError("corner radius exceeds half the shortest edge")
            _inner_polygon(self.polygon(), rc)  # raises when arcs would overlap
        if not self.h.is_constant and len(self.h.segments) != self.n_segments:
            raise ValueError(f"h needs {self.n_segments} segment values, got {len(self.h.segments)}")

    # -- constructors -----------------------------------------------------
    @classmethod
    def disk(cls, radius: float = 1.0, h=0.0, center=(0.0, 0.0)) -> "DomainSpec":
        return cls(kind="disk", radius=float(radius), offset=tuple(map(float, center)), h=_robin(h))

    @classmethod
    def rectangle(cls, a: float = 1.0, b: float = 1.0, h=0.0, origin=(0.0, 0.0)) -> "DomainSpec":
        return cls(kind="rectangle", a=float(a), b=float(b), offset=tuple(map(float, origin)), h=_robin(h))

    @classmethod
    def convex_polygon(cls, vertices, h=0.0) -> "DomainSpec":
        return cls(kind="convex_polygon", vertices=_vertex_tuple(vertices), h=_robin(h))

    @classmethod
    def smoothed_polygon(cls, vertices, corner_radius: float, h=0.0) -> "DomainSpec":
        return cls(
            kind="smoothed_polygon", vertices=_vertex_tuple(vertices), corner_radius=float(corner_radius), h=_robin(h)
        )

    # -- basic queries ----------------------------------------------------
    @property
    def n_segments(self) -> int:
        if self.kind == "disk":
            return 1
        if self.kind == "rectangle":
            return 4
        if self.kind == "convex_polygon":
            return len(self.vertices)
        return 2 * len(self.vertices)

    @property
    def is_convex(self) -> bool:
        return True

    @property
    def dirichlet(self) -> bool:
        return self.h.dirichlet

    def polygon(self) -> np.ndarray:
        """Corner vertices for rectangle and polygon kinds (offset applied)."""
        off = np.asarray(self.offset, dtype=float)
        if self.kind == "rectangle":
            return np.array([[0, 0], [self.a, 0], [self.a, self.b], [0, self.b]], dtype=float) + off
        if self.kind in ("convex_polygon", "smoothed_polygon"):
            return np.asarray(self.vertices, dtype=float) + off
        raise ValueError("a disk has no corner polygon")

    def with_h(self, h) -> "DomainSpec":
        return DomainSpec(**{**self._fields(), "h": _robin(h)})

    def scaled(self, t: float) -> "DomainSpec":
        """The dilated domain tΩ (about the origin) carrying h/t."""
        f = self._fields()
        f.update(
            radius=self.radius * t,
            a=self.a * t,
            b=self.b * t,
            vertices=tuple((x * t, y * t) for x, y in self.vertices),
            corner_radius=self.corner_radius * t,
            offset=(self.offset[0] * t, self.offset[1] * t),
            h=self.h.scaled(t),
        )
        return DomainSpec(**f)

    def _fields(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}

    # -- distance / membership -------------------------------------------
    def boundary_distance(self, pts) -> np.ndarray:
        """Distance to the boundary for points inside; negative outside.

        Exact inside the domain for all (convex) kinds.
        """
        p = np.atleast_2d(np.asarray(pts, dtype=float))
        if self.kind == "disk":
            return self.radius - np.linalg.norm(p - np.asarray(self.offset), axis=1)
        if self.kind in ("rectangle", "convex_polygon"):
            return _polygon_inner_distance(self.polygon(), p)
        inner = _inner_polygon(self.polygon(), self.corner_radius)
        return self.corner_radius - _polygon_signed_distance(inner, p)

    def contains(self, pts, tol: float = 0.0) -> np.ndarray:
        return self.boundary_distance(pts) > -tol

    # -- JSON ---------------------------------------------------------------
    def to_dict(self) -> dict:
        d: dict = {"kind": self.kind}
        if self.kind == "disk":
            d["radius"] = self.radius
            d["center"] = list(self.offset)
        elif self.kind == "rectangle":
            d["a"], d["b"] = self.a, self.b
            d["origin"] = list(self.offset)
        else:
            d["vertices"] = [list(v) for v in self.vertices]
            if self.kind == "smoothed_polygon":
                d["corner_radius"] = self.corner_radius
        d["h"] = self.h.to_dict()
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "DomainSpec":
        kind = d.get("kind")
        h = RobinData.from_dict(d.get("h"))
        if kind == "disk":
            return cls(kind="disk", radius=float(d["radius"]), offset=tuple(d.get("center", (0.0, 0.0))), h=h)
        if kind == "rectangle":
            return cls(kind="rectangle", a=float(d["a"]), b=float(d["b"]), offset=tuple(d.get("origin", (0.0, 0.0))), h=h)
        if kind == "convex_polygon":
            return cls(kind=kind, vertices=_vertex_tuple(d["vertices"]), h=h)
        if kind == "smoothed_polygon":
            return cls(kind=kind, vertices=_vertex_tuple(d["vertices"]), corner_radius=float(d["corner_radius"]), h=h)
        raise ValueError(f"unknown domain kind {kind!r}")

    @classmethod
    def from_json(cls, text: str) -> "DomainSpec":
        return cls.from_dict(json.loads(text))


def _robin(h) -> RobinData:
    if isinstance(h, RobinData):
        return h
    if isinstance(h, str) and h.lower() == "dirichlet":
        return DIRICHLET
    if isinstance(h, dict):
        return RobinData.from_dict(h)
    if isinstance(h, (list, tuple)):
        return RobinData(constant=None, segments=tuple(float(v) for v in h))
    return RobinData(constant=float(h))


def _vertex_tuple(vertices) -> tuple:
    return tuple((float(x), float(y)) for x, y in vertices)


# ---------------------------------------------------------------------------
# polygon helpers
# ---------------------------------------------------------------------------


def _shoelace(v: np.ndarray) -> float:
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _edge_lines(v: np.ndarray):
    """Outward unit normals n_i and offsets c_i with n_i·x <= c_i inside."""
    e = np.roll(v, -1, axis=0) - v
    n = np.stack([e[:, 1], -e[:, 0]], axis=1)
    n /= np.linalg.norm(n, axis=1, keepdims=True)
    c = np.sum(n * v, axis=1)
    return n, c


def _polygon_inner_distance(v: np.ndarray, p: np.ndarray) -> np.ndarray:
    n, c = _edge_lines(v)
    return np.min(c[None, :] - p @ n.T, axis=1)


def _segment_distance(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Distance from each point in p (P,2) to each segment a[i]b[i]; shape (P, E)."""
    d = b - a
    ap = p[:, None, :] - a[None, :, :]
    t = np.clip(np.sum(ap * d[None], axis=2) / np.sum(d * d, axis=1)[None], 0.0, 1.0)
    proj = a[None] + t[..., None] * d[None]
    return np.linalg.norm(p[:, None, :] - proj, axis=2)


def _polygon_signed_distance(v: np.ndarray, p: np.ndarray) -> np.ndarray:
    """Euclidean signed distance to a convex polygon, positive outside."""
    inside = _polygon_inner_distance(v, p)
    outside = _segment_distance(p, v, np.roll(v, -1, axis=0)).min(axis=1)
    return np.where(inside >= 0, -inside, outside)


def _inner_polygon(v: np.ndarray, r: float) -> np.ndarray:
    """Polygon whose r-neighbourhood is the smoothed polygon with corner radius r."""
    n, c = _edge_lines(v)
    c_in = c - r
    m = len(v)
    out = np.empty_like(v)
    for i in range(m):
        j = (i - 1) % m
        A = np.array([n[j], n[i]])
        out[i] = np.linalg.solve(A, np.array([c_in[j], c_in[i]]))
    e = np.roll(out, -1, axis=0) - out
    orig = np.roll(v, -1, axis=0) - v
    if np.any(np.sum(e * orig, axis=1) <= 1e-12 * np.linalg.norm(orig, axis=1) ** 2):
        raise ValueError("corner arcs overlap: corner radius too large for this polygon")
    return out


def _polygon_inradius(v: np.ndarray) -> float:
    n, c = _edge_lines(v)
    # maximise r subject to n_i·x + r <= c_i
    A = np.hstack([n, np.ones((len(v), 1))])
    res = linprog([0, 0, -1], A_ub=A, b_ub=c, bounds=[(None, None), (None, None), (0, None)], method="highs")
    if not res.success:
        raise RuntimeError(f"inradius LP failed: {res.message}")
    return float(res.x[2])


def _diameter(v: np.ndarray) -> float:
    d = v[:, None, :] - v[None, :, :]
    return float(np.sqrt(np.max(np.sum(d * d, axis=2))))


# ---------------------------------------------------------------------------
# summaries
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GeometricSummary:
    V: float
    S: float
    rho: float
    kappa_max: Optional[float]
    t_plus: Optional[float]
    delta0: float
    delta1: float
    inradius: float
    diameter: float
    n: int = 2

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @property
    def is_c2(self) -> bool:
        return self.kappa_max is not None


def summarize(spec: DomainSpec) -> GeometricSummary:
    """Area, perimeter, isoperimetric ratio, curvature data and cut distances.

    Rectangles and plain polygons have corners, so curvature data is reported
    as ``None`` and both cut distances are set to the inradius.
    """
    n = 2
    if spec.kind == "disk":
        R = spec.radius
        V, S = math.pi * R * R, 2 * math.pi * R
        kappa, tp, d0, inr, diam = 1.0 / R, R, R, R, 2 * R
    elif spec.kind in ("rectangle", "convex_polygon"):
        v = spec.polygon()
        V = _shoelace(v)
        S = float(np.sum(np.linalg.norm(np.roll(v, -1, axis=0) - v, axis=1)))
        kappa = tp = None
        inr = 0.5 * min(spec.a, spec.b) if spec.kind == "rectangle" else _polygon_inradius(v)
        d0 = inr
        diam = _diameter(v)
    else:
        rc = spec.corner_radius
        inner = _inner_polygon(spec.polygon(), rc)
        per_in = float(np.sum(np.linalg.norm(np.roll(inner, -1, axis=0) - inner, axis=1)))
        V = _shoelace(inner) + per_in * rc + math.pi * rc * rc
        S = per_in + 2 * math.pi * rc
        kappa, tp, d0 = 1.0 / rc, rc, rc
        inr = _polygon_inradius(inner) + rc
        diam = _diameter(inner) + 2 * rc
    if V <= 0:
        raise ValueError("degenerate domain with zero area")
    rho = S / V ** (1 - 1 / n)
    return GeometricSummary(V=V, S=S, rho=rho, kappa_max=kappa, t_plus=tp, delta0=d0, delta1=d0,
                            inradius=inr, diameter=diam, n=n)


def steiner_volume(spec: DomainSpec, delta: float) -> float:
    """Area of the outer parallel set Ω + δB (exact for convex planar sets)."""
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    g = summarize(spec)
    return g.V + g.S * delta + math.pi * delta * delta


# ---------------------------------------------------------------------------
# boundary sampling
# ---------------------------------------------------------------------------


def boundary_polyline(spec: DomainSpec, spacing: float):
    """Points on the exact boundary, counterclockwise, at spacing <= ``spacing``.

    Returns (points, seg) where ``seg[i]`` is the boundary segment id of the
    piece of boundary from point i to point i+1 (cyclically).
    """
    if spacing <= 0:
        raise ValueError("spacing must be positive")
    if spec.kind == "disk":
        m = max(8, int(math.ceil(2 * math.pi * spec.radius / spacing)))
        th = 2 * math.pi * np.arange(m) / m
        pts = np.asarray(spec.offset) + spec.radius * np.stack([np.cos(th), np.sin(th)], axis=1)
        return pts, np.zeros(m, dtype=int)
    if spec.kind in ("rectangle", "convex_polygon"):
        v = spec.polygon()
        chunks, segs = [], []
        for i in range(len(v)):
            a, b = v[i], v[(i + 1) % len(v)]
            k = max(1, int(math.ceil(np.linalg.norm(b - a) / spacing)))
            t = np.arange(k) / k
            chunks.append(a + t[:, None] * (b - a))
            segs.append(np.full(k, i))
        return np.concatenate(chunks), np.concatenate(segs)
    v = spec.polygon()
    m = len(v)
    rc = spec.corner_radius
    inner = _inner_polygon(v, rc)
    nrm, _ = _edge_lines(v)
    chunks, segs = [], []
    for i in range(m):
        # arc at vertex i, from the normal of edge i-1 to the normal of edge i
        a0 = math.atan2(nrm[i - 1][1], nrm[i - 1][0])
        a1 = math.atan2(nrm[i][1], nrm[i][0])
        while a1 <= a0:
            a1 += 2 * math.pi
        k = max(1, int(math.ceil(rc * (a1 - a0) / spacing)))
        th = a0 + (a1 - a0) * np.arange(k) / k
        chunks.append(inner[i] + rc * np.stack([np.cos(th), np.sin(th)], axis=1))
        segs.append(np.full(k, m + i))
        p = inner[i] + rc * nrm[i]
        q = inner[(i + 1) % m] + rc * nrm[i]
        k = max(1, int(math.ceil(np.linalg.norm(q - p) / spacing)))
        t = np.arange(k) / k
        chunks.append(p + t[:, None] * (q - p))
        segs.append(np.full(k, i))
    return np.concatenate(chunks), np.concatenate(segs)


def project_to_boundary(spec: DomainSpec, pts) -> np.ndarray:
    """Nearest-point projection onto the boundary (used to snap curved edges)."""
    p = np.atleast_2d(np.asarray(pts, dtype=float))
    if spec.kind == "disk":
        c = np.asarray(spec.offset)
        d = p - c
        return c + spec.radius * d / np.linalg.norm(d, axis=1, keepdims=True)
    if spec.kind == "smoothed_polygon":
        inner = _inner_polygon(spec.polygon(), spec.corner_radius)
        a, b = inner, np.roll(inner, -1, axis=0)
        d = b - a
        ap = p[:, None, :] - a[None]
        t = np.clip(np.sum(ap * d[None], axis=2) / np.sum(d * d, axis=1)[None], 0, 1)
        proj = a[None] + t[..., None] * d[None]
        dist = np.linalg.norm(p[:, None, :] - proj, axis=2)
        k = np.argmin(dist, axis=1)
        near = proj[np.arange(len(p)), k]
        direc = p - near
        return near + spec.corner_radius * direc / np.linalg.norm(direc, axis=1, keepdims=True)
    v = spec.polygon()
    a, b = v, np.roll(v, -1, axis=0)
    d = b - a
    ap = p[:, None, :] - a[None]
    t = np.clip(np.sum(ap * d[None], axis=2) / np.sum(d * d, axis=1)[None], 0, 1)
    proj = a[None] + t[..., None] * d[None]
    k = np.argmin(np.linalg.norm(p[:, None, :] - proj, axis=2), axis=1)
    return proj[np.arange(len(p)), k]


# ---------------------------------------------------------------------------
# outward-pointing field constants
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FieldConstants:
    gamma_F: float
    Gamma1: float
    Gamma2: float
    K1: float
    K2: float
    H: float
    strategy: str = "star"

    def to_dict(self) -> dict:
        return asdict(self)


def _star_min_exact(spec: DomainSpec, x0: np.ndarray):
    """Minimum of (x-x0)·ν over the boundary and a point attaining it."""
    if spec.kind == "disk":
        c = np.asarray(spec.offset)
        d = c - x0
        r = np.linalg.norm(d)
        nu = -d / r if r > 0 else np.array([1.0, 0.0])
        return spec.radius - r, c + spec.radius * nu
    if spec.kind in ("rectangle", "convex_polygon"):
        v = spec.polygon()
        n, c = _edge_lines(v)
        vals = c - n @ x0
        i = int(np.argmin(vals))
        return float(vals[i]), 0.5 * (v[i] + v[(i + 1) % len(v)])
    v = spec.polygon()
    rc = spec.corner_radius
    inner = _inner_polygon(v, rc)
    n, c = _edge_lines(v)
    best, where = math.inf, None
    for i in range(len(v)):
        val = c[i] - n[i] @ x0
        if val < best:
            best, where = val, inner[i] + rc * n[i]
        # arc at vertex i: (p + rc ν - x0)·ν = rc + (p - x0)·ν, ν between n[i-1] and n[i]
        a0 = math.atan2(n[i - 1][1], n[i - 1][0])
        a1 = math.atan2(n[i][1], n[i][0])
        while a1 <= a0:
            a1 += 2 * math.pi
        w = inner[i] - x0
        cands = [a0, a1]
        crit = math.atan2(w[1], w[0]) + math.pi  # minimiser of w·ν over the full circle
        for k in (-2, -1, 0, 1, 2):
            th = crit + 2 * math.pi * k
            if a0 < th < a1:
                cands.append(th)
        for th in cands:
            nu = np.array([math.cos(th), math.sin(th)])
            val = rc + w @ nu
            if val < best:
                best, where = val, inner[i] + rc * nu
    return float(best), where


def _sup_distance(spec: DomainSpec, x0: np.ndarray) -> float:
    if spec.kind == "disk":
        return float(np.linalg.norm(np.asarray(spec.offset) - x0) + spec.radius)
    if spec.kind == "smoothed_polygon":
        inner = _inner_polygon(spec.polygon(), spec.corner_radius)
        return float(np.max(np.linalg.norm(inner - x0, axis=1)) + spec.corner_radius)
    return float(np.max(np.linalg.norm(spec.polygon() - x0, axis=1)))


def star_constants_on_curve(
    curve: Callable[[np.ndarray], np.ndarray],
    tangent: Callable[[np.ndarray], np.ndarray],
    center=(0.0, 0.0),
    n: int = 2,
    rtol: float = 1e-8,
    start: int = 64,
    max_points: int = 2 ** 22,
):
    """Star-field constants for a closed curve given on the parameter range [0, 2π).

    The curve is traversed counterclockwise, so the outward normal is the
    tangent rotated by -90°.  The parameter grid is doubled until both the
    minimum of (x-x0)·ν and the maximum of |x-x0| change by less than
    ``rtol`` relatively.

    Returns (gamma_F, Gamma1, Gamma2, argmin point).
    """
    x0 = np.asarray(center, dtype=float)
    prev = None
    m = start
    while True:
        s = 2 * math.pi * np.arange(m) / m
        p = curve(s)
        t = tangent(s)
        nu = np.stack([t[:, 1], -t[:, 0]], axis=1)
        nu /= np.linalg.norm(nu, axis=1, keepdims=True)
        g = np.sum((p - x0) * nu, axis=1)
        i = int(np.argmin(g))
        if g[i] <= 0:
            raise ValueError(f"curve is not star-shaped about {tuple(x0)}: (x-x0)·ν <= 0 at {tuple(p[i])}")
        cur = (float(g[i]), float(np.max(np.linalg.norm(p - x0, axis=1))))
        if prev is not None and all(abs(c - q) <= rtol * abs(c) for c, q in zip(cur, prev)):
            break
        if m >= max_points:
            break
        prev = cur
        m *= 2
    gam, sup = cur
    return gam, n / gam, 2 * sup / gam, p[i]


def field_constants(
    spec: DomainSpec,
    strategy: str = "star",
    center: Optional[Sequence[float]] = None,
    H: Optional[float] = None,
    C1: Optional[float] = None,
    C2: float = 4.0,
) -> FieldConstants:
    """γ_F, Γ1, Γ2, K1 = Γ1, K2 = Γ2²/4 and H for an outward-pointing field.

    ``star`` uses F(x) = x - x0 with x0 = ``center`` (default: the origin of
    the domain's own offset for disks, the vertex centroid otherwise).
    ``distance_based`` uses Γ1 = C1/δ0 and Γ2 = C2 with C1 defaulting to 4n;
    γ_F is then reported as 1 because the field is normalised by construction.
    """
    n = 2
    H = spec.h.H() if H is None else float(H)
    if H < 0:
        raise ValueError("H must be nonnegative")
    if strategy == "star":
        if center is None:
            center = spec.offset if spec.kind == "disk" else _default_center(spec)
        x0 = np.asarray(center, dtype=float)
        gam, where = _star_min_exact(spec, x0)
        if gam <= 1e-14 * max(1.0, summarize(spec).diameter):
            raise ValueError(f"domain is not star-shaped about {tuple(x0)}: (x-x0)·ν <= 0 at {tuple(where)}")
        G1 = n / gam
        G2 = 2 * _sup_distance(spec, x0) / gam
    elif strategy == "distance_based":
        g = summarize(spec)
        C1 = 4.0 * n if C1 is None else float(C1)
        gam, G1, G2 = 1.0, C1 / g.delta0, float(C2)
    else:
        raise ValueError(f"unknown field strategy {strategy!r}")
    return FieldConstants(gamma_F=gam, Gamma1=G1, Gamma2=G2, K1=G1, K2=G2 * G2 / 4.0, H=H, strategy=strategy)


def _default_center(spec: DomainSpec) -> np.ndarray:
    v = spec.polygon()
    return v.mean(axis=0)
