"""P1 finite elements for the Robin Laplacian on planar model domains."""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sps
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import eigsh
from scipy.spatial import Delaunay

from .geometry import DomainSpec, boundary_polyline, summarize
from .spectra import EigenRecord, Spectrum

MIN_ANGLE_DEG = 20.0
NODAL_RESOLUTION = 0.2  # target_h * sqrt(mu) must not exceed this for nodal work


@dataclass
class Mesh:
    vertices: np.ndarray
    triangles: np.ndarray
    boundary_edges: np.ndarray
    boundary_tags: np.ndarray
    target_h: float
    spec: Optional[DomainSpec] = None

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def on_boundary(self) -> np.ndarray:
        mask = np.zeros(len(self.vertices), dtype=bool)
        mask[self.boundary_edges.ravel()] = True
        return mask

    def areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        d1, d2 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    def edges(self) -> np.ndarray:
        e = np.concatenate([self.triangles[:, [0, 1]], self.triangles[:, [1, 2]], self.triangles[:, [2, 0]]])
        return np.unique(np.sort(e, axis=1), axis=0)

    def min_angle(self) -> float:
        return float(np.degrees(_angles(self.vertices, self.triangles).min()))

    def to_json(self) -> str:
        return json.dumps({
            "vertices": self.vertices.tolist(),
            "triangles": self.triangles.tolist(),
            "boundary_edges": self.boundary_edges.tolist(),
            "boundary_tags": self.boundary_tags.tolist(),
            "target_h": self.target_h,
            "domain": None if self.spec is None else self.spec.to_dict(),
        }, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "Mesh":
        d = json.loads(text)
        return cls(
            vertices=np.asarray(d["vertices"], dtype=float).reshape(-1, 2),
            triangles=np.asarray(d["triangles"], dtype=int).reshape(-1, 3),
            boundary_edges=np.asarray(d["boundary_edges"], dtype=int).reshape(-1, 2),
            boundary_tags=np.asarray(d["boundary_tags"], dtype=int),
            target_h=float(d["target_h"]),
            spec=None if d.get("domain") is None else DomainSpec.from_dict(d["domain"]),
        )


def _angles(v: np.ndarray, t: np.ndarray) -> np.ndarray:
    p = v[t]
    out = []
    for i in range(3):
        a = p[:, (i + 1) % 3] - p[:, i]
        b = p[:, (i + 2) % 3] - p[:, i]
        cosang = np.sum(a * b, axis=1) / (np.linalg.norm(a, axis=1) * np.linalg.norm(b, axis=1))
        out.append(np.arccos(np.clip(cosang, -1, 1)))
    return np.stack(out, axis=1)


# ---------------------------------------------------------------------------
# meshing
# ---------------------------------------------------------------------------


def _disk_points(spec: DomainSpec, h: float):
    R = spec.radius
    nr = max(2, int(math.ceil(R / h)))
    pts = [np.zeros((1, 2))]
    for i in range(1, nr + 1):
        r = R * i / nr
        n = max(6, int(round(2 * math.pi * i)))
        th = 2 * math.pi * (np.arange(n) + 0.5 * (i % 2)) / n
        pts.append(r * np.stack([np.cos(th), np.sin(th)], axis=1))
    bnd = pts[-1]
    # put exact boundary points in angular order starting from the first ring point
    p = np.concatenate(pts) + np.asarray(spec.offset)
    nb = len(bnd)
    b_idx = np.arange(len(p) - nb, len(p))
    return p, b_idx, np.zeros(nb, dtype=int)


def _rectangle_mesh(spec: DomainSpec, h: float) -> Mesh:
    nx = max(2, int(math.ceil(spec.a / h - 1e-9)))
    ny = max(2, int(math.ceil(spec.b / h - 1e-9)))
    xs = np.linspace(0, spec.a, nx + 1)
    ys = np.linspace(0, spec.b, ny + 1)
    X, Y = np.meshgrid(xs, ys, indexing="xy")
    v = np.stack([X.ravel(), Y.ravel()], axis=1) + np.asarray(spec.offset)
    idx = np.arange((nx + 1) * (ny + 1)).reshape(ny + 1, nx + 1)
    a, b = idx[:-1, :-1].ravel(), idx[:-1, 1:].ravel()
    c, d = idx[1:, 1:].ravel(), idx[1:, :-1].ravel()
    tri = np.concatenate([np.stack([a, b, c], 1), np.stack([a, c, d], 1)])
    # boundary loop counterclockwise: bottom, right, top, left
    loop = np.concatenate([idx[0, :-1], idx[:-1, -1], idx[-1, :0:-1], idx[:0:-1, 0]])
    tags = np.concatenate([np.full(nx, 0), np.full(ny, 1), np.full(nx, 2), np.full(ny, 3)])
    be = np.stack([loop, np.roll(loop, -1)], axis=1)
    return Mesh(v, tri, be, tags, h, spec)


def _hex_lattice(lo, hi, h):
    dy = h * math.sqrt(3) / 2
    ys = np.arange(lo[1], hi[1] + dy, dy)
    rows = []
    for k, y in enumerate(ys):
        xs = np.arange(lo[0] + (0.5 * h if k % 2 else 0.0), hi[0] + h, h)
        rows.append(np.stack([xs, np.full_like(xs, y)], axis=1))
    return np.concatenate(rows)


def _generic_points(spec: DomainSpec, h: float, iters: int = 60):
    """Boundary samples plus relaxed interior points (a small spring-equilibrium scheme)."""
    bpts, seg = boundary_polyline(spec, h)
    lo, hi = bpts.min(axis=0), bpts.max(axis=0)
    p = _hex_lattice(lo, hi, h)
    p = p[spec.boundary_distance(p) > 0.6 * h]
    nb = len(bpts)
    eps = 1e-7 * h
    for _ in range(iters):
        allp = np.concatenate([bpts, p])
        tri = Delaunay(allp).simplices
        e = np.concatenate([tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]]])
        e = np.unique(np.sort(e, axis=1), axis=0)
        vec = allp[e[:, 0]] - allp[e[:, 1]]
        L = np.linalg.norm(vec, axis=1)
        L0 = 1.2 * h * math.sqrt(np.sum(L ** 2) / (len(L) * h * h))
        F = np.maximum(L0 - L, 0.0)
        fv = (F / L)[:, None] * vec
        tot = np.zeros_like(allp)
        np.add.at(tot, e[:, 0], fv)
        np.add.at(tot, e[:, 1], -fv)
        step = 0.2 * tot[nb:]
        p = p + step
        d = spec.boundary_distance(p)
        close = d < 0.4 * h
        if close.any():
            q = p[close]
            gx = (spec.boundary_distance(q + [eps, 0]) - spec.boundary_distance(q - [eps, 0])) / (2 * eps)
            gy = (spec.boundary_distance(q + [0, eps]) - spec.boundary_distance(q - [0, eps])) / (2 * eps)
            g = np.stack([gx, gy], axis=1)
            g /= np.maximum(np.linalg.norm(g, axis=1, keepdims=True), 1e-300)
            p[close] = q + (0.4 * h - d[close])[:, None] * g
        if np.max(np.linalg.norm(step, axis=1)) < 1e-3 * h:
            break
    allp = np.concatenate([bpts, p])
    return allp, np.arange(nb), seg


def mesh(spec: DomainSpec, target_h: float) -> Mesh:
    """Quasi-uniform triangulation with boundary vertices on the exact boundary."""
    g = summarize(spec)
    if not (0 < target_h < g.inradius / 2):
        raise ValueError(f"target_h={target_h} is too coarse: it must be below inradius/2 = {g.inradius / 2}")
    if spec.kind == "rectangle":
        m = _rectangle_mesh(spec, target_h)
    else:
        if spec.kind == "disk":
            pts, b_idx, seg = _disk_points(spec, target_h)
        else:
            pts, b_idx, seg = _generic_points(spec, target_h)
        tri = Delaunay(pts).simplices.astype(int)
        area = _signed_areas(pts, tri)
        tri[area < 0] = tri[area < 0][:, [0, 2, 1]]
        be = np.stack([b_idx, np.roll(b_idx, -1)], axis=1)
        m = Mesh(pts, tri, be, seg.astype(int), target_h, spec)
    check_mesh(m, g.V)
    return m


def _signed_areas(v, t):
    p = v[t]
    d1, d2 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
    return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])


def check_mesh(m: Mesh, V: Optional[float] = None, min_angle: float = MIN_ANGLE_DEG) -> None:
    """Raise if orientation, degeneracy, boundary, Euler or angle contracts fail."""
    area = m.areas()
    V = float(area.sum()) if V is None else V
    bad = np.nonzero(area <= 1e-14 * V)[0]
    if bad.size:
        c = m.vertices[m.triangles[bad[0]]].mean(axis=0)
        raise RuntimeError(f"degenerate or inverted triangle near {tuple(np.round(c, 6))}")
    e = np.concatenate([m.triangles[:, [0, 1]], m.triangles[:, [1, 2]], m.triangles[:, [2, 0]]])
    es = np.sort(e, axis=1)
    uniq, counts = np.unique(es, axis=0, return_counts=True)
    if np.any(counts > 2):
        raise RuntimeError("an edge is shared by more than two triangles")
    single = {tuple(x) for x in uniq[counts == 1]}
    given = {tuple(x) for x in np.sort(m.boundary_edges, axis=1)}
    if single != given:
        extra = sorted(single ^ given)[0]
        raise RuntimeError(f"boundary edge set mismatch near {tuple(np.round(m.vertices[list(extra)].mean(axis=0), 6))}")
    nV, nE, nT = len(m.vertices), len(uniq), len(m.triangles)
    used = np.unique(m.triangles)
    if len(used) != nV:
        raise RuntimeError("mesh has vertices that belong to no triangle")
    if nV - nE + nT != 1:
        raise RuntimeError(f"Euler relation fails: V-E+T = {nV - nE + nT}")
    ang = np.degrees(_angles(m.vertices, m.triangles).min(axis=1))
    if ang.min() < min_angle:
        k = int(np.argmin(ang))
        c = m.vertices[m.triangles[k]].mean(axis=0)
        raise RuntimeError(f"minimum angle {ang.min():.2f} deg below {min_angle} near {tuple(np.round(c, 6))}")


# ---------------------------------------------------------------------------
# assembly
# ---------------------------------------------------------------------------


@dataclass
class OperatorBundle:
    A: sps.csr_matrix
    M: sps.csr_matrix
    B: sps.csr_matrix
    dirichlet_mask: np.ndarray
    mesh: Mesh
    grads: np.ndarray = field(repr=False)
    areas: np.ndarray = field(repr=False)

    @property
    def free(self) -> np.ndarray:
        return np.nonzero(~self.dirichlet_mask)[0]

    def reduced(self):
        f = self.free
        K = (self.A + self.B)[f][:, f].tocsc()
        M = self.M[f][:, f].tocsc()
        return K, M


def element_data(v: np.ndarray, t: np.ndarray):
    """Triangle areas and gradients of the three hat functions, shape (T, 3, 2)."""
    p = v[t]
    x, y = p[..., 0], p[..., 1]
    area = 0.5 * ((x[:, 1] - x[:, 0]) * (y[:, 2] - y[:, 0]) - (x[:, 2] - x[:, 0]) * (y[:, 1] - y[:, 0]))
    b = np.stack([y[:, 1] - y[:, 2], y[:, 2] - y[:, 0], y[:, 0] - y[:, 1]], axis=1)
    c = np.stack([x[:, 2] - x[:, 1], x[:, 0] - x[:, 2], x[:, 1] - x[:, 0]], axis=1)
    grads = np.stack([b, c], axis=2) / (2 * area)[:, None, None]
    return area, grads


def _stiffness_mass(v, t, n):
    area, grads = element_data(v, t)
    Ke = area[:, None, None] * np.einsum("tik,tjk->tij", grads, grads)
    Me = (area / 12.0)[:, None, None] * (np.ones((3, 3)) + np.eye(3))[None]
    rows = np.repeat(t, 3, axis=1).ravel()
    cols = np.tile(t, (1, 3)).ravel()
    A = sps.coo_matrix((Ke.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    M = sps.coo_matrix((Me.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    return A, M, area, grads


def assemble(m: Mesh, h=None, dirichlet=None) -> OperatorBundle:
    """Stiffness, mass and boundary mass for q_h[u] = ∫|∇u|² + ∫_∂Ω h u².

    ``h`` defaults to the mesh's domain data and may be a number, a sequence
    indexed by boundary tag, or the string "dirichlet".  ``dirichlet`` may be
    a boolean vertex mask or an array of boundary edges whose vertices are
    eliminated.
    """
    n = m.n_vertices
    A, M, area, grads = _stiffness_mass(m.vertices, m.triangles, n)
    mask = np.zeros(n, dtype=bool)
    hvals = None
    if h is None and m.spec is not None:
        if m.spec.dirichlet:
            h = "dirichlet"
        else:
            n_seg = m.spec.n_segments
            hvals = m.spec.h.values(n_seg)
    if isinstance(h, str):
        if h.lower() != "dirichlet":
            raise ValueError(f"unknown boundary mode {h!r}")
        mask[m.boundary_edges.ravel()] = True
    elif h is not None:
        arr = np.atleast_1d(np.asarray(h, dtype=float))
        hvals = arr
    if hvals is None:
        hvals = np.zeros(1)
    tags = m.boundary_tags
    if len(hvals) == 1:
        he = np.full(len(tags), float(hvals[0]))
    else:
        if m.spec is not None and len(hvals) != m.spec.n_segments:
            raise ValueError(f"h has {len(hvals)} segment values but the domain has {m.spec.n_segments} segments")
        if tags.max(initial=0) >= len(hvals) or tags.min(initial=0) < 0:
            raise ValueError(f"boundary segment id {int(tags.max())} has no h value")
        he = hvals[tags]
    if mask.any():
        he = np.zeros(len(tags))
    e = m.boundary_edges
    ell = np.linalg.norm(m.vertices[e[:, 1]] - m.vertices[e[:, 0]], axis=1)
    w = he * ell / 6.0
    rows = np.concatenate([e[:, 0], e[:, 1], e[:, 0], e[:, 1]])
    cols = np.concatenate([e[:, 0], e[:, 1], e[:, 1], e[:, 0]])
    vals = np.concatenate([2 * w, 2 * w, w, w])
    B = sps.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    B.eliminate_zeros()
    if dirichlet is not None:
        d = np.asarray(dirichlet)
        if d.dtype == bool:
            mask |= d
        else:
            mask[d.ravel().astype(int)] = True
    return OperatorBundle(A=A, M=M, B=B, dirichlet_mask=mask, mesh=m, grads=grads, areas=area)


# ---------------------------------------------------------------------------
# eigen solver
# ---------------------------------------------------------------------------


def certified_lower_bound(K: sps.spmatrix, M: sps.spmatrix) -> float:
    """Lower bound for the smallest eigenvalue of K x = μ M x (P1 mass matrices).

    Gershgorin on L^{-1/2} K L^{-1/2} with L the lumped mass gives g with
    K >= g L, and L <= 4M, M <= L for P1 triangles, so μ >= min(g, 4g).
    """
    Lm = np.asarray(M.sum(axis=1)).ravel()
    s = 1.0 / np.sqrt(Lm)
    Ks = sps.diags(s) @ K @ sps.diags(s)
    Ks = Ks.tocsr()
    diag = Ks.diagonal()
    off = np.asarray(abs(Ks).sum(axis=1)).ravel() - np.abs(diag)
    g = float(np.min(diag - off))
    return 4.0 * g if g < 0 else g


def solve_eigens(ops: OperatorBundle, count: int, residual_tol: float = 1e-8):
    """Smallest ``count`` eigenpairs of (A + B) x = μ M x.

    Returns (Spectrum, X) with X of shape (n_vertices, count), M-orthonormal,
    zero on eliminated Dirichlet vertices.  Shift-invert Lanczos is run with a
    shift below the certified lower bound, so the pencil K - σM is positive
    definite and the eigenvalues nearest σ are the smallest ones.
    """
    K, M = ops.reduced()
    nfree = K.shape[0]
    if count > nfree - 1:
        raise ValueError(f"count={count} exceeds matrix dimension - 1 = {nfree - 1}")
    lb = certified_lower_bound(K, M)
    sigma = lb - 0.1 * (1.0 + abs(lb))
    v0 = np.ones(nfree) + 0.01 * np.cos(np.arange(nfree))
    ncv = min(nfree, max(2 * count + 1, count + 20))
    vals, vecs = eigsh(K, k=count, M=M, sigma=sigma, which="LM", v0=v0, ncv=ncv, tol=0, maxiter=50 * nfree)
    order = np.argsort(vals)
    vals, vecs = vals[order], vecs[:, order]
    # re-orthonormalise in the M inner product (Cholesky of the Gram matrix)
    G = vecs.T @ (M @ vecs)
    Lc = np.linalg.cholesky(0.5 * (G + G.T))
    vecs = np.linalg.solve(Lc, vecs.T).T
    vals = np.array([vecs[:, i] @ (K @ vecs[:, i]) for i in range(count)])
    for i in range(count):
        x = vecs[:, i]
        j = int(np.argmax(np.abs(x)))
        if x[j] < 0:
            vecs[:, i] = -x
    Mx = M @ vecs
    res = np.linalg.norm(K @ vecs - Mx * vals[None, :], axis=0)
    lim = residual_tol * np.linalg.norm(Mx, axis=0) * np.maximum(1.0, np.abs(vals))
    if np.any(res > lim):
        i = int(np.argmax(res / lim))
        raise RuntimeError(f"eigenpair {i + 1} did not converge: residual {res[i]:.3e} > {lim[i]:.3e}")
    X = np.zeros((ops.mesh.n_vertices, count))
    X[ops.free] = vecs
    recs = [EigenRecord(mu=float(vals[i]), label=("fem", i + 1), source="fem", residual=float(res[i]))
            for i in range(count)]
    spec = Spectrum(recs, ops.mesh.spec, count, float(vals[-1]),
                    meta={"target_h": ops.mesh.target_h, "n_vertices": ops.mesh.n_vertices, "shift": sigma})
    return spec, X


def require_nodal_resolution(target_h: float, mu: float) -> None:
    """Refuse eigenfunctions that are too oscillatory for the mesh."""
    if mu > 0 and target_h * math.sqrt(mu) > NODAL_RESOLUTION + 1e-12:
        raise ValueError(
            f"mesh too coarse for nodal work: target_h={target_h} > {NODAL_RESOLUTION}/sqrt(mu) = "
            f"{NODAL_RESOLUTION / math.sqrt(mu):.4g}"
        )


def nodal_target_h(mu_max: float) -> float:
    """Largest target_h that resolves eigenfunctions up to mu_max."""
    return NODAL_RESOLUTION / math.sqrt(max(mu_max, 1e-12))


# ---------------------------------------------------------------------------
# sub-domain problems
# ---------------------------------------------------------------------------


def _subset_mask(m: Mesh, subset) -> np.ndarray:
    s = np.asarray(subset)
    if s.dtype == bool:
        if s.shape != (len(m.triangles),):
            raise ValueError("boolean subset must have one entry per triangle")
        return s.copy()
    mask = np.zeros(len(m.triangles), dtype=bool)
    mask[s.astype(int)] = True
    return mask


def triangle_adjacency(m: Mesh) -> sps.csr_matrix:
    """Triangles sharing an edge."""
    T = len(m.triangles)
    e = np.concatenate([m.triangles[:, [0, 1]], m.triangles[:, [1, 2]], m.triangles[:, [2, 0]]])
    es = np.sort(e, axis=1)
    owner = np.tile(np.arange(T), 3)
    key = es[:, 0].astype(np.int64) * (len(m.vertices) + 1) + es[:, 1]
    order = np.argsort(key, kind="stable")
    k = key[order]
    same = np.nonzero(k[1:] == k[:-1])[0]
    a, b = owner[order][same], owner[order][same + 1]
    return sps.coo_matrix((np.ones(len(a)), (a, b)), shape=(T, T)).tocsr()


def mixed_dn_eigenvalue(omega_mesh: Mesh, subset, return_area: bool = False):
    """First eigenvalue of U (a union of triangles) with Dirichlet data on ∂U ∩ Ω.

    Vertices of U that also belong to a triangle outside U and do not lie on
    ∂Ω carry the Dirichlet condition; vertices on ∂Ω keep the natural
    (Neumann) condition.
    """
    mask = _subset_mask(omega_mesh, subset)
    if not mask.any():
        raise ValueError("subset touches no triangle")
    adj = triangle_adjacency(omega_mesh)
    sub_idx = np.nonzero(mask)[0]
    ncomp, _ = connected_components(adj[sub_idx][:, sub_idx], directed=False)
    if ncomp != 1:
        raise ValueError(f"subset is not connected ({ncomp} pieces)")
    tri = omega_mesh.triangles[mask]
    verts = np.unique(tri)
    outside = np.zeros(omega_mesh.n_vertices, dtype=bool)
    outside[np.unique(omega_mesh.triangles[~mask])] = True
    interface = outside & ~omega_mesh.on_boundary
    local = -np.ones(omega_mesh.n_vertices, dtype=int)
    local[verts] = np.arange(len(verts))
    A, M, area, _ = _stiffness_mass(omega_mesh.vertices[verts], local[tri], len(verts))
    free = ~interface[verts]
    f = np.nonzero(free)[0]
    K = A[f][:, f].tocsc()
    Mf = M[f][:, f].tocsc()
    if len(f) < 3:
        raise ValueError("subset too small: fewer than three free vertices")
    lb = certified_lower_bound(K, Mf)
    sigma = lb - 0.1 * (1.0 + abs(lb))
    val = eigsh(K, k=1, M=Mf, sigma=sigma, which="LM", v0=np.ones(len(f)), tol=0)[0][0]
    if return_area:
        return float(val), float(area.sum())
    return float(val)


def rayleigh_quotient(u, subset, ops: OperatorBundle) -> float:
    """∫_D |∇u|² / ∫_D u² over the triangles of D (no boundary term)."""
    mask = _subset_mask(ops.mesh, subset)
    t = ops.mesh.triangles[mask]
    ue = np.asarray(u, dtype=float)[t]
    g = np.einsum("ti,tik->tk", ue, ops.grads[mask])
    energy = float(np.sum(ops.areas[mask] * np.sum(g * g, axis=1)))
    mass = float(np.sum(ops.areas[mask] / 6.0 * (np.sum(ue * ue, axis=1)
                                                   + ue[:, 0] * ue[:, 1] + ue[:, 1] * ue[:, 2] + ue[:, 2] * ue[:, 0])))
    if mass <= 0:
        raise ValueError("u has zero mass on the subset")
    return energy / mass


# ---------------------------------------------------------------------------
# exact level-set splitting of P1 functions
# ---------------------------------------------------------------------------


def split_at_level(points: np.ndarray, values: np.ndarray, level: float = 0.0):
    """Cut linear triangles along {f = level}.

    ``points`` has shape (T, 3, 2) and ``values`` shape (T, 3).  Returns
    (pts, vals, parent, side) for the sub-triangles: side is +1 where
    f >= level on the piece and -1 where f <= level.
    """
    f = values - level
    pos = f > 0
    npos = pos.sum(axis=1)
    out_p, out_v, out_par, out_side = [], [], [], []
    whole = (npos == 0) | (npos == 3)
    if whole.any():
        out_p.append(points[whole])
        out_v.append(values[whole])
        out_par.append(np.nonzero(whole)[0])
        out_side.append(np.where(npos[whole] == 3, 1, -1))
    for lone_positive in (True, False):
        sel = (npos == 1) if lone_positive else (npos == 2)
        if not sel.any():
            continue
        P, F, V = points[sel], f[sel], values[sel]
        lone = np.argmax(pos[sel], axis=1) if lone_positive else np.argmin(pos[sel], axis=1)
        r = np.arange(len(P))
        i0, i1, i2 = lone, (lone + 1) % 3, (lone + 2) % 3
        p0, p1, p2 = P[r, i0], P[r, i1], P[r, i2]
        f0, f1, f2 = F[r, i0], F[r, i1], F[r, i2]
        v0, v1, v2 = V[r, i0], V[r, i1], V[r, i2]
        a = (f0 / (f0 - f1))[:, None]
        b = (f0 / (f0 - f2))[:, None]
        q1 = p0 + a * (p1 - p0)
        q2 = p0 + b * (p2 - p0)
        lvl = np.full(len(P), level)
        par = np.nonzero(sel)[0]
        s_lone = 1 if lone_positive else -1
        out_p.append(np.stack([p0, q1, q2], axis=1))
        out_v.append(np.stack([v0, lvl, lvl], axis=1))
        out_par.append(par)
        out_side.append(np.full(len(P), s_lone))
        out_p.append(np.stack([q1, p1, p2], axis=1))
        out_v.append(np.stack([lvl, v1, v2], axis=1))
        out_par.append(par)
        out_side.append(np.full(len(P), -s_lone))
        out_p.append(np.stack([q1, p2, q2], axis=1))
        out_v.append(np.stack([lvl, v2, lvl], axis=1))
        out_par.append(par)
        out_side.append(np.full(len(P), -s_lone))
    return (np.concatenate(out_p), np.concatenate(out_v), np.concatenate(out_par), np.concatenate(out_side))


def triangle_area(pts: np.ndarray) -> np.ndarray:
    d1, d2 = pts[:, 1] - pts[:, 0], pts[:, 2] - pts[:, 0]
    return 0.5 * np.abs(d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])


def linear_square_integral(area: np.ndarray, vals: np.ndarray) -> np.ndarray:
    """∫_T f² for f linear with vertex values ``vals``."""
    v = vals
    return area / 6.0 * (np.sum(v * v, axis=1) + v[:, 0] * v[:, 1] + v[:, 1] * v[:, 2] + v[:, 2] * v[:, 0])


# ---------------------------------------------------------------------------
# serialisation
# ---------------------------------------------------------------------------


def eigenvector_csv(x: np.ndarray, mu: float, index: int) -> str:
    buf = io.StringIO()
    buf.write(f"# index={index} mu={float(mu)!r}\n")
    buf.write("vertex,value\n")
    for i, val in enumerate(np.asarray(x, dtype=float)):
        buf.write(f"{i},{float(val)!r}\n")
    return buf.getvalue()


def read_eigenvector_csv(text: str):
    lines = text.splitlines()
    head = dict(kv.split("=") for kv in lines[0][1:].split())
    vals = np.array([float(l.split(",")[1]) for l in lines[2:] if l])
    return vals, float(head["mu"]), int(head["index"])
