"""Nodal domains, Courant-sharp detection, Pleijel ratios and nodal Rayleigh checks."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.sparse as sps
from scipy import ndimage
from scipy.sparse.csgraph import connected_components

from . import fem
from .bounds import rayleigh_bound, rayleigh_bound_quadratic, universal_constants
from .geometry import FieldConstants
from .spectra import CLUSTER_RTOL, Spectrum, interval_eigenvalues, nodal_count_analytic

DEFAULT_TAU = 1e-6
ROTATION_STEPS = 64


class CourantViolation(AssertionError):
    """An eigenfunction with more nodal domains than its eigenvalue index allows."""


# ---------------------------------------------------------------------------
# counting on meshes and rasters
# ---------------------------------------------------------------------------


def nodal_domains(m: fem.Mesh, u, tau: float = DEFAULT_TAU):
    """Count connected same-sign vertex sets along triangle edges.

    Vertices with |u| <= tau * max|u| are neutral and join no component.
    Returns (count, labels) with labels[i] = -1 for neutral vertices and
    components numbered in order of their smallest vertex index.
    """
    u = np.asarray(u, dtype=float)
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    top = np.max(np.abs(u))
    sign = np.where(np.abs(u) <= tau * top, 0, np.sign(u)).astype(int)
    if top == 0 or not np.any(sign):
        raise ValueError("function numerically zero")
    e = m.edges()
    keep = (sign[e[:, 0]] == sign[e[:, 1]]) & (sign[e[:, 0]] != 0)
    e = e[keep]
    n = len(u)
    g = sps.coo_matrix((np.ones(len(e)), (e[:, 0], e[:, 1])), shape=(n, n))
    _, comp = connected_components(g, directed=False)
    active = sign != 0
    roots = np.unique(comp[active])
    first = np.array([np.min(np.nonzero((comp == r) & active)[0]) for r in roots]) if len(roots) else np.empty(0, int)
    order = roots[np.argsort(first)]
    remap = -np.ones(comp.max() + 1, dtype=int)
    remap[order] = np.arange(len(order))
    labels = np.where(active, remap[comp], -1)
    return int(len(order)), labels


def raster_nodal_count(values: np.ndarray, tau: float = DEFAULT_TAU) -> int:
    """Nodal domains of a sampled function on a pixel grid (4-neighbour adjacency)."""
    top = np.max(np.abs(values))
    if top == 0:
        raise ValueError("function numerically zero")
    neutral = np.abs(values) <= tau * top
    total = 0
    for s in (1, -1):
        mask = (np.sign(values) == s) & ~neutral
        _, k = ndimage.label(mask)
        total += k
    return int(total)


# ---------------------------------------------------------------------------
# analytic eigenfunctions of the model domains
# ---------------------------------------------------------------------------


def _interval_mode(x: np.ndarray, L: float, h, n: int, mu: Optional[float] = None) -> np.ndarray:
    """1-D eigenfunction with label n on (0, L) (Robin: n zeros; Dirichlet: sin(nπx/L))."""
    if h == "dirichlet":
        return np.sin(n * np.pi * x / L)
    if mu is None:
        mu = interval_eigenvalues(L, h, h, n + 1)[n]
    if mu > 0:
        w = math.sqrt(mu)
        return np.cos(w * x) + (h / w) * np.sin(w * x)
    if mu < 0:
        k = math.sqrt(-mu)
        return np.cosh(k * x) + (h / k) * np.sinh(k * x)
    return 1.0 + h * x


class RectangleModes:
    """Sampler for tensor eigenfunctions X_i(x) Y_j(y) of a rectangle."""

    def __init__(self, a: float, b: float, h):
        self.a, self.b = a, b
        self.h = "dirichlet" if (isinstance(h, str)) else float(h)
        self._cache_a: dict = {}
        self._cache_b: dict = {}

    def _mu(self, L, n, cache):
        if self.h == "dirichlet":
            return None
        if n not in cache:
            vals = interval_eigenvalues(L, self.h, self.h, max(n + 1, 8))
            for i, v in enumerate(vals):
                cache[i] = float(v)
        return cache[n]

    def sample(self, label, resolution: int) -> np.ndarray:
        i, j = int(label[1]), int(label[2])
        xs = (np.arange(resolution) + 0.5) / resolution * self.a
        ys = (np.arange(resolution) + 0.5) / resolution * self.b
        X = _interval_mode(xs, self.a, self.h, i, self._mu(self.a, i, self._cache_a))
        Y = _interval_mode(ys, self.b, self.h, j, self._mu(self.b, j, self._cache_b))
        X = X / np.max(np.abs(X))
        Y = Y / np.max(np.abs(Y))
        return np.outer(Y, X)


def analytic_counts(spectrum: Spectrum) -> np.ndarray:
    """ν for every 1-based index (canonical separable basis)."""
    dirichlet = _is_dirichlet(spectrum)
    return np.array([nodal_count_analytic(r.label, dirichlet) for r in spectrum.records
                     for _ in range(r.multiplicity)], dtype=int)


def _is_dirichlet(spectrum: Spectrum) -> bool:
    d = spectrum.domain
    if d is None:
        return False
    if isinstance(d, dict):
        return d.get("h") == "dirichlet" or (isinstance(d.get("h"), dict) and bool(d["h"].get("dirichlet")))
    return d.dirichlet


def rectangle_rotation_counter(spectrum: Spectrum, tau: float = DEFAULT_TAU, min_resolution: int = 96):
    """combo(k_a, k_b, alpha) -> nodal count of cos α u_a + sin α u_b for a rectangle spectrum."""
    dom = spectrum.domain
    h = "dirichlet" if dom.dirichlet else float(dom.h.constant)
    modes = RectangleModes(dom.a, dom.b, h)
    rec_of = spectrum.record_of_index()

    def combo(ka: int, kb: int, alpha: float) -> int:
        la, lb = spectrum.records[rec_of[ka - 1]].label, spectrum.records[rec_of[kb - 1]].label
        top = max(la[1], la[2], lb[1], lb[2]) + 1
        res = max(min_resolution, 16 * top)
        f = math.cos(alpha) * modes.sample(la, res) + math.sin(alpha) * modes.sample(lb, res)
        return raster_nodal_count(f, tau)

    return combo


def disk_rotation_counter(spectrum: Spectrum):
    """cos α u_{m,cos} + sin α u_{m,sin} = u_m(r) cos(mθ - α): a rotated copy, same count."""
    rec_of = spectrum.record_of_index()
    dirichlet = _is_dirichlet(spectrum)

    def combo(ka: int, kb: int, alpha: float) -> int:
        ra, rb = spectrum.records[rec_of[ka - 1]], spectrum.records[rec_of[kb - 1]]
        if ra.label != rb.label:
            raise ValueError("accidental disk degeneracy across different labels is not handled")
        return nodal_count_analytic(ra.label, dirichlet)

    return combo


def fem_rotation_counter(m: fem.Mesh, X: np.ndarray, tau: float = DEFAULT_TAU):
    def combo(ka: int, kb: int, alpha: float) -> int:
        f = math.cos(alpha) * X[:, ka - 1] + math.sin(alpha) * X[:, kb - 1]
        return nodal_domains(m, f, tau)[0]

    return combo


# ---------------------------------------------------------------------------
# Courant-sharp scan
# ---------------------------------------------------------------------------


@dataclass
class ClusterScan:
    indices: list
    counts_seen: list
    note: str = ""


def scan_clusters(spectrum: Spectrum, counts: Sequence[int], eigenspace: str = "canonical",
                  steps: int = ROTATION_STEPS, combo: Optional[Callable] = None,
                  upto: Optional[int] = None, rtol: float = CLUSTER_RTOL) -> list:
    """Nodal counts seen in each eigenvalue cluster, with the Courant bound enforced.

    Every examined eigenfunction of a cluster starting at index k must have
    at most k nodal domains; a violation raises CourantViolation.  Discrete
    spectra split multiple eigenvalues slightly, so FEM callers pass a looser
    ``rtol`` for grouping clusters.
    """
    counts = np.asarray(counts, dtype=int)
    n = len(spectrum) if upto is None else min(upto, len(spectrum))
    if len(counts) < n:
        raise ValueError(f"missing nodal count for index {len(counts) + 1}")
    out = []
    for cl in spectrum.clusters(rtol):
        if cl[0] > n:
            break
        cl = [k for k in cl if k <= n] if cl[-1] > n else cl
        seen = [int(counts[k - 1]) for k in cl]
        note = ""
        if eigenspace == "rotation_grid" and len(cl) == 2:
            if combo is None:
                raise ValueError("rotation_grid needs a combination counter")
            for s in range(steps):
                seen.append(int(combo(cl[0], cl[1], math.pi * s / steps)))
        elif eigenspace == "rotation_grid" and len(cl) > 2:
            note = "canonical basis only"
        elif eigenspace not in ("canonical", "rotation_grid"):
            raise ValueError(f"unknown eigenspace handling {eigenspace!r}")
        worst = max(seen)
        if worst > cl[0]:
            raise CourantViolation(f"eigenvalue with first index {cl[0]} has an eigenfunction with {worst} nodal domains")
        out.append(ClusterScan(indices=cl, counts_seen=sorted(set(seen)), note=note))
    return out


def courant_sharp_scan(spectrum: Spectrum, counts: Sequence[int], eigenspace: str = "canonical",
                       steps: int = ROTATION_STEPS, combo: Optional[Callable] = None,
                       convention: str = "first", upto: Optional[int] = None,
                       rtol: float = CLUSTER_RTOL) -> list:
    """Sorted Courant-sharp indices.

    ``convention="first"``: a cluster occupying k..k+m-1 is sharp at k when
    some examined eigenfunction has exactly k nodal domains.
    ``convention="any"``: it is sharp at every k' in the cluster that is
    matched by some examined count.
    """
    if convention not in ("first", "any"):
        raise ValueError(f"unknown index convention {convention!r}")
    sharp = []
    for sc in scan_clusters(spectrum, counts, eigenspace, steps, combo, upto, rtol):
        if convention == "first":
            if sc.indices[0] in sc.counts_seen:
                sharp.append(sc.indices[0])
        else:
            sharp.extend(k for k in sc.indices if k in sc.counts_seen)
    return sorted(sharp)


# ---------------------------------------------------------------------------
# Pleijel ratios
# ---------------------------------------------------------------------------


@dataclass
class PleijelSeries:
    k: np.ndarray
    ratio: np.ndarray
    tail_window: tuple
    tail_max: float
    tail_argmax: int

    def to_csv(self, n: int = 2) -> str:
        gam = universal_constants(n)["gamma_n"]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "ratio"])
        for k, r in zip(self.k, self.ratio):
            w.writerow([int(k), f"{r:.12g}"])
        w.writerow(["gamma", f"{gam:.12g}"])
        return buf.getvalue()


def pleijel_series(spectrum: Spectrum, counts: Sequence[int], k_max: int) -> PleijelSeries:
    """ν(k)/k for k = 1..k_max and the tail maximum over [k_max/2, k_max]."""
    if len(spectrum) < k_max:
        raise ValueError(f"spectrum holds {len(spectrum)} eigenvalues, fewer than k_max={k_max}")
    counts = np.asarray(counts, dtype=int)
    if len(counts) < k_max:
        raise ValueError("nodal counts missing for some indices")
    k = np.arange(1, k_max + 1)
    ratio = counts[:k_max] / k
    lo = int(math.ceil(k_max / 2))
    tail = ratio[lo - 1:]
    i = int(np.argmax(tail))
    return PleijelSeries(k=k, ratio=ratio, tail_window=(lo, k_max), tail_max=float(tail[i]), tail_argmax=lo + i)


# ---------------------------------------------------------------------------
# nodal Rayleigh quotients
# ---------------------------------------------------------------------------


def nodal_piece_rayleigh(ops: fem.OperatorBundle, u, labels: np.ndarray) -> dict:
    """Rayleigh quotient of u restricted to each nodal component.

    Triangles crossing the zero set are cut exactly along {u = 0}, so each
    restriction is the continuous piecewise-linear function u·1_D and the
    quotient uses interior energy only.
    """
    m = ops.mesh
    u = np.asarray(u, dtype=float)
    uz = np.where(labels < 0, 0.0, u)
    pts = m.vertices[m.triangles]
    sp, sv, parent, side = fem.split_at_level(pts, uz[m.triangles], 0.0)
    area = fem.triangle_area(sp)
    gsq = np.sum(np.einsum("ti,tik->tk", uz[m.triangles], ops.grads) ** 2, axis=1)
    tri_lab = labels[m.triangles[parent]]
    tri_sgn = np.sign(uz[m.triangles[parent]])
    match = (tri_sgn == side[:, None]) & (tri_lab >= 0)
    has = match.any(axis=1)
    comp = np.where(has, np.take_along_axis(tri_lab, np.argmax(match, axis=1)[:, None], axis=1)[:, 0], -1)
    energy = area * gsq[parent]
    mass = fem.linear_square_integral(area, sv)
    ncomp = int(labels.max()) + 1
    E = np.bincount(comp[has], weights=energy[has], minlength=ncomp)
    Ms = np.bincount(comp[has], weights=mass[has], minlength=ncomp)
    return {c: float(E[c] / Ms[c]) for c in range(ncomp) if Ms[c] > 0}


def verify_nodal_rayleigh(ops: fem.OperatorBundle, u, mu: float, labels: np.ndarray,
                          constants: FieldConstants) -> list:
    """Per nodal component: Rayleigh quotient against (√(μ+Γ1 H) + Γ2 H)² with mesh slack.

    When μ + Γ1 H < 0 the closed form is undefined and the quadratic form
    (rayleigh_bound_quadratic) is used instead; the row records which one.
    """
    g1, g2, H = constants.Gamma1, constants.Gamma2, constants.H
    if mu + g1 * H >= 0:
        bound, form = rayleigh_bound(mu, g1, g2, H), "closed"
    else:
        bound, form = rayleigh_bound_quadratic(mu, g1, g2, H), "quadratic"
    slack = 1.0 + 5.0 * ops.mesh.target_h * math.sqrt(max(mu, 0.0))
    rq = nodal_piece_rayleigh(ops, u, labels)
    return [{"component": c, "rayleigh": q, "bound": bound, "slack": slack, "form": form,
             "pass": bool(q <= bound * slack)}
            for c, q in sorted(rq.items())]


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------


@dataclass
class NodalReport:
    mu: list
    nu: list
    sharp: list
    components: dict = field(default_factory=dict)

    def rows(self):
        for k, (m, n) in enumerate(zip(self.mu, self.nu), start=1):
            yield k, m, n, n / k, k in self.sharp

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "mu", "nu", "ratio", "sharp"])
        for k, m, n, r, s in self.rows():
            w.writerow([k, f"{m:.12g}", n, f"{r:.12g}", int(s)])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps({
            "rows": [{"k": k, "mu": float(f"{m:.12g}"), "nu": int(n), "ratio": float(f"{r:.12g}"), "sharp": bool(s)}
                     for k, m, n, r, s in self.rows()],
            "components": {str(k): v for k, v in sorted(self.components.items())},
        }, sort_keys=True)

    def plot_csv(self, n: int = 2) -> str:
        gam = universal_constants(n)["gamma_n"]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "ratio"])
        for k, _, nu, r, _ in self.rows():
            w.writerow([k, f"{r:.12g}"])
        w.writerow(["gamma", f"{gam:.12g}"])
        return buf.getvalue()
