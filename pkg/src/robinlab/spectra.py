"""Analytic Robin, Neumann and Dirichlet spectra of intervals, rectangles and disks.

Every eigenvalue is located inside a bracket that is known to contain exactly
one eigenvalue, so none can be skipped silently:

* intervals use the Prüfer angle, which is strictly increasing in μ, and the
  n-th eigenvalue is where it crosses ``target + nπ``;
* disks use the interlacing of Robin roots with the zeros of J_m, between
  which x J_m'/J_m is strictly decreasing;
* rectangles are tensor sums of two interval spectra.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from . import bessel
from .geometry import DomainSpec, RobinData, ball_volume

SECULAR_TOL = 1e-10
CLUSTER_RTOL = 1e-9


@dataclass(frozen=True)
class EigenRecord:
    mu: float
    label: tuple
    multiplicity: int = 1
    source: str = "analytic"
    residual: float = 0.0

    def label_str(self) -> str:
        return ":".join(str(x) for x in self.label)


@dataclass
class Spectrum:
    records: list
    domain: Union[DomainSpec, dict, None]
    count_requested: int
    complete_below: float
    meta: dict = field(default_factory=dict)

    # -- index view ---------------------------------------------------------
    def expanded(self) -> np.ndarray:
        """Eigenvalues repeated by multiplicity, μ_1 <= μ_2 <= ..."""
        return np.array([r.mu for r in self.records for _ in range(r.multiplicity)], dtype=float)

    def record_of_index(self) -> np.ndarray:
        """For every 1-based index k (stored at position k-1), the record number."""
        return np.array([i for i, r in enumerate(self.records) for _ in range(r.multiplicity)], dtype=int)

    def __len__(self) -> int:
        return sum(r.multiplicity for r in self.records)

    def clusters(self, rtol: float = CLUSTER_RTOL) -> list:
        """Groups of consecutive 1-based indices that share one eigenvalue."""
        mus = self.expanded()
        out, start = [], 0
        for i in range(1, len(mus) + 1):
            if i == len(mus) or abs(mus[i] - mus[start]) > rtol * max(1.0, abs(mus[start])):
                out.append(list(range(start + 1, i + 1)))
                start = i
        return out

    # -- serialisation --------------------------------------------------------
    def _domain_dict(self):
        if isinstance(self.domain, DomainSpec):
            return self.domain.to_dict()
        return self.domain

    def to_json(self) -> str:
        doc = {
            "domain": self._domain_dict(),
            "count_requested": self.count_requested,
            "complete_below": self.complete_below,
            "meta": self.meta,
            "records": [
                {"mu": r.mu, "label": list(r.label), "multiplicity": r.multiplicity, "source": r.source,
                 "residual": r.residual}
                for r in self.records
            ],
        }
        return json.dumps(doc, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "Spectrum":
        doc = json.loads(text)
        dom = doc["domain"]
        if isinstance(dom, dict) and dom.get("kind") in ("disk", "rectangle", "convex_polygon", "smoothed_polygon"):
            dom = DomainSpec.from_dict(dom)
        recs = [EigenRecord(mu=float(r["mu"]), label=tuple(r["label"]), multiplicity=int(r["multiplicity"]),
                            source=r["source"], residual=float(r.get("residual", 0.0))) for r in doc["records"]]
        return cls(records=recs, domain=dom, count_requested=int(doc["count_requested"]),
                   complete_below=float(doc["complete_below"]), meta=doc.get("meta", {}))

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# complete_below={self.complete_below!r}\n")
        buf.write(f"# count_requested={self.count_requested}\n")
        buf.write(f"# domain={json.dumps(self._domain_dict(), sort_keys=True)}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["index", "mu", "label", "multiplicity"])
        k = 1
        for r in self.records:
            w.writerow([k, repr(float(r.mu)), r.label_str() + f"@{r.source}", r.multiplicity])
            k += r.multiplicity
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "Spectrum":
        header = {}
        rows = []
        for line in text.splitlines():
            if line.startswith("#"):
                key, _, val = line[1:].strip().partition("=")
                header[key] = val
            elif line:
                rows.append(line)
        recs = []
        for row in list(csv.DictReader(rows)):
            lab, _, src = row["label"].partition("@")
            parts = tuple(_parse_token(p) for p in lab.split(":"))
            recs.append(EigenRecord(mu=float(row["mu"]), label=parts, multiplicity=int(row["multiplicity"]), source=src))
        dom = json.loads(header.get("domain", "null"))
        if isinstance(dom, dict) and dom.get("kind") in ("disk", "rectangle", "convex_polygon", "smoothed_polygon"):
            dom = DomainSpec.from_dict(dom)
        return cls(records=recs, domain=dom, count_requested=int(header.get("count_requested", len(recs))),
                   complete_below=float(header["complete_below"]))


def _parse_token(p: str):
    try:
        return int(p)
    except ValueError:
        return p


def _truncate(records: list, count: int, complete_below: float):
    """Keep whole records until ``count`` indices are covered."""
    records = sorted(records, key=lambda r: (r.mu, r.label))
    kept, total = [], 0
    for r in records:
        if total >= count:
            return kept, min(complete_below, r.mu)
        kept.append(r)
        total += r.multiplicity
    return kept, complete_below


# ---------------------------------------------------------------------------
# interval
# ---------------------------------------------------------------------------


def _acot(y):
    """Inverse cotangent with values in (0, π)."""
    return 0.5 * np.pi - np.arctan(y)


def prufer_angle(mu, L: float, h0: float) -> np.ndarray:
    """Prüfer angle θ(L; μ) of the solution with -u'(0) + h0 u(0) = 0.

    u = r sin θ, u' = r cos θ, θ(0) = acot(h0) in (0, π).  θ(L; μ) is
    continuous and strictly increasing in μ, tends to 0 as μ → -∞ and
    crosses kπ exactly when u has a zero at L.
    """
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    th0 = float(_acot(h0))
    s0, c0 = math.sin(th0), math.cos(th0)
    out = np.empty_like(mu)
    pos, neg, zero = mu > 0, mu < 0, mu == 0
    if pos.any():
        w = np.sqrt(mu[pos])
        c = np.arctan2(w * s0, c0)
        s = w * L + c
        k = np.floor(s / np.pi)
        r = s - k * np.pi
        out[pos] = k * np.pi + np.arctan2(np.sin(r), w * np.cos(r))
    if neg.any():
        kap = np.sqrt(-mu[neg])
        t = np.tanh(kap * L)
        # zero inside (0, L) only when cos θ0 < 0 and tanh(κ x) = -κ tan θ0 is reachable
        zeros = np.zeros_like(kap)
        if c0 < 0:
            target = kap * s0 / (-c0)
            zeros = (target < t).astype(float)
        num = kap * s0 * t + c0
        den = s0 + (c0 / kap) * t
        # cot φ = num/den with sin φ carrying the sign of u(L) = den*cosh: φ = atan2(den, num) mod π
        phi = np.arctan2(den, num)
        phi = np.where(phi <= 0, phi + np.pi, phi)
        out[neg] = zeros * np.pi + phi
    if zero.any():
        uL = s0 + L * c0
        upL = c0
        nz = 1.0 if (c0 < 0 and s0 / (-c0) < L) else 0.0
        phi = math.atan2(uL, upL)
        if phi <= 0:
            phi += math.pi
        out[zero] = nz * math.pi + phi
    return out


def _interval_secular_residual(mu: np.ndarray, L: float, h0: float, h1: float) -> np.ndarray:
    res = np.zeros_like(mu)
    pos = mu > 0
    w = np.sqrt(mu[pos])
    res[pos] = np.abs(np.sin(w * L - np.arctan(h0 / w) - np.arctan(h1 / w)))
    neg = mu < 0
    k = np.sqrt(-mu[neg])
    t = np.tanh(k * L)
    num = (h0 * h1 + k * k) * t + k * (h0 + h1)
    den = (abs(h0 * h1) + k * k) * t + k * (abs(h0) + abs(h1))
    res[neg] = np.abs(num) / np.where(den > 0, den, 1.0)
    zero = mu == 0
    res[zero] = abs(h0 * (1 + h1 * L) + h1) / (1 + abs(h0) + abs(h1) + abs(h0 * h1) * L)
    return res


def interval_eigenvalues(L: float, h0: float, h1: float, count: int) -> np.ndarray:
    """First ``count`` Robin eigenvalues of -u'' on (0, L) as an array."""
    if not L > 0:
        raise ValueError("interval length must be positive")
    if count < 1:
        raise ValueError("count must be at least 1")
    target = float(_acot(-h1)) + np.pi * np.arange(count)
    lo_val = -(1.0 + abs(h0) + abs(h1) + 1.0 / L) ** 2
    for _ in range(200):
        if prufer_angle(lo_val, L, h0)[0] < target[0]:
            break
        lo_val *= 4.0
    else:
        raise ArithmeticError(f"no lower bracket for the interval ground state below {lo_val}")
    hi_val = ((count + 1) * np.pi / L) ** 2 + (abs(h0) + abs(h1)) ** 2 + 1.0
    for _ in range(200):
        if prufer_angle(hi_val, L, h0)[0] > target[-1]:
            break
        hi_val *= 2.0
    else:
        raise ArithmeticError(f"no upper bracket for interval eigenvalue {count} above {hi_val}")
    lo = np.full(count, lo_val)
    hi = np.full(count, hi_val)
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        act = (mid > lo) & (mid < hi)
        if not act.any():
            break
        up = prufer_angle(mid, L, h0) < target
        lo = np.where(act & up, mid, lo)
        hi = np.where(act & ~up, mid, hi)
    mu = 0.5 * (lo + hi)
    # the zero eigenvalue is decided exactly: u = a + b x works iff h0(1 + h1 L) + h1 = 0
    det = h0 * (1 + h1 * L) + h1
    if abs(det) <= 1e-14 * (1 + abs(h0) + abs(h1) + abs(h0 * h1) * L):
        i = int(np.argmin(np.abs(mu)))
        mu[i] = 0.0
    res = _interval_secular_residual(mu, L, h0, h1)
    bad = res > SECULAR_TOL
    if bad.any():
        i = int(np.nonzero(bad)[0][0])
        raise ArithmeticError(f"interval root {i} at μ={mu[i]!r} has secular residual {res[i]:.2e}")
    return mu


def interval_robin_spectrum(L: float, h0: float, h1: float, count: int, dirichlet: bool = False) -> Spectrum:
    """Eigenvalues of -u'' = μu on (0, L), -u'(0) + h0 u(0) = 0, u'(L) + h1 u(L) = 0.

    Labels are ("interval", n) with n the number of interior zeros (0-based)
    in the Robin case and n >= 1 (sin(nπx/L)) in Dirichlet mode.
    """
    if dirichlet:
        n = np.arange(1, count + 1)
        mu = (n * np.pi / L) ** 2
        recs = [EigenRecord(mu=float(m), label=("interval", int(i))) for m, i in zip(mu, n)]
        cb = float(((count + 1) * np.pi / L) ** 2)
        return Spectrum(recs, {"kind": "interval", "L": L, "h": "dirichlet"}, count, cb)
    mu = interval_eigenvalues(L, h0, h1, count + 1)
    res = _interval_secular_residual(mu, L, h0, h1)
    recs = [EigenRecord(mu=float(mu[i]), label=("interval", i), residual=float(res[i])) for i in range(count)]
    return Spectrum(recs, {"kind": "interval", "L": L, "h0": h0, "h1": h1}, count, float(mu[count]))


# ---------------------------------------------------------------------------
# rectangle
# ---------------------------------------------------------------------------


def rectangle_spectrum(a: float, b: float, h, count: int) -> Spectrum:
    """Tensor-sum spectrum of the rectangle (0,a)×(0,b) with one constant h.

    ``h`` may be a float, ``"dirichlet"``, or a RobinData with a constant.
    Labels ("rect", i, j) count interior zeros along each side (0-based) in
    the Robin case and are 1-based in Dirichlet mode.
    """
    rd = h if isinstance(h, RobinData) else (RobinData(constant=None, dirichlet=True)
                                             if isinstance(h, str) and h.lower() == "dirichlet"
                                             else RobinData(constant=float(h)))
    if not rd.is_constant:
        raise ValueError("rectangle spectra need one constant h on all sides (piecewise h is not separable)")
    if count < 1:
        raise ValueError("count must be at least 1")
    dirichlet = rd.dirichlet
    hv = None if dirichlet else float(rd.constant)
    n1 = n2 = max(4, int(math.sqrt(count)) + 4)
    while True:
        if dirichlet:
            ma = ((np.arange(1, n1 + 2) * np.pi / a) ** 2)
            mb = ((np.arange(1, n2 + 2) * np.pi / b) ** 2)
            off = 1
        else:
            ma = interval_eigenvalues(a, hv, hv, n1 + 1)
            mb = interval_eigenvalues(b, hv, hv, n2 + 1)
            off = 0
        cb = min(ma[n1] + mb[0], ma[0] + mb[n2])
        S = ma[:n1, None] + mb[None, :n2]
        ii, jj = np.nonzero(S < cb)
        if len(ii) >= count:
            break
        n1 = int(n1 * 1.5) + 1
        n2 = int(n2 * 1.5) + 1
    recs = [EigenRecord(mu=float(S[i, j]), label=("rect", int(i + off), int(j + off))) for i, j in zip(ii, jj)]
    recs, cb = _truncate(recs, count, float(cb))
    dom = DomainSpec.rectangle(a, b, h=rd)
    return Spectrum(recs, dom, count, cb)


# ---------------------------------------------------------------------------
# disk
# ---------------------------------------------------------------------------


def _bisect_monotone(f, lo, hi, increasing: bool, max_iter: int = 200):
    """Root of monotone f on open brackets (lo, hi); endpoints are never evaluated."""
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    if lo.size == 0:
        return lo
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        act = (mid > lo) & (mid < hi)
        if not act.any():
            break
        fm = f(mid)
        below = fm < 0 if increasing else fm > 0
        lo = np.where(act & below, mid, lo)
        hi = np.where(act & ~below, mid, hi)
    return 0.5 * (lo + hi)


def _all_zeros(max_m: int, upper: float) -> list:
    """Zeros of J_0..J_max_m below ``upper``, with interlacing checked."""
    step = 0.4
    grid = np.arange(step, upper + step, step)
    table = bessel.jv_table(max_m, grid)
    ms, los, his = [], [], []
    for m in range(max_m + 1):
        # zeros of J_m exceed m; below that the values may underflow to 0
        start = int(np.searchsorted(grid, float(m)))
        row = table[m, start:]
        if np.any(row == 0.0):
            raise ArithmeticError(f"grid hit a zero of J_{m} exactly")
        idx = np.nonzero(np.sign(row[:-1]) != np.sign(row[1:]))[0] + start
        ms.append(np.full(len(idx), m))
        los.append(grid[idx])
        his.append(grid[idx + 1])
    m_all = np.concatenate(ms)
    roots = _bisect_sign(lambda x: bessel.jv(m_all, x), np.concatenate(los), np.concatenate(his))
    out, pos = [], 0
    for m in range(max_m + 1):
        k = len(ms[m])
        out.append(roots[pos:pos + k])
        pos += k
    for m in range(max_m):
        a, b = out[m], out[m + 1]
        # j_{m,s} < j_{m+1,s} < j_{m,s+1}
        n = min(len(a), len(b))
        if np.any(b[:n] <= a[:n]) or np.any(b[:min(n, len(a) - 1)] >= a[1:1 + min(n, len(a) - 1)]):
            raise ArithmeticError(f"zeros of J_{m} and J_{m + 1} fail to interlace below {upper}")
        if len(b) > len(a) or len(b) < len(a) - 1:
            raise ArithmeticError(f"zero counts of J_{m} ({len(a)}) and J_{m + 1} ({len(b)}) are inconsistent")
    return out


def _bisect_sign(f, lo, hi):
    return bessel.bisect_vectorized(f, lo, hi)


def _disk_residual_positive(m, k, hR):
    jm = bessel.jv(m, k)
    jlow = np.where(m == 0, -bessel.jv(1, k), bessel.jv(np.maximum(m - 1, 0), k))
    dj = jlow - (m / k) * jm
    num = np.abs(k * dj + (0.0 if hR is None else hR) * jm) if hR is not None else np.abs(jm)
    scale = np.maximum.reduce([k, np.full_like(k, abs(hR or 0.0)), np.ones_like(k)]) * np.hypot(jm, dj)
    return num / scale


def _disk_residual_negative(m, kap, hR):
    im = bessel.ive(m, kap)
    di = bessel.ive(m + 1, kap) + (m / kap) * im
    num = np.abs(kap * di + hR * im)
    scale = np.maximum.reduce([kap, np.full_like(kap, abs(hR)), np.ones_like(kap)]) * np.hypot(im, di)
    return num / scale


def disk_branch_roots(R: float, h, K: float):
    """All eigenvalues of the disk of radius R with R√|μ| < K.

    Returns a list of (mu, m, p, residual) tuples.
    """
    dirichlet = isinstance(h, str) or (isinstance(h, RobinData) and h.dirichlet)
    if isinstance(h, RobinData) and not dirichlet:
        if not h.is_constant:
            raise ValueError("disk spectra need a constant h")
        h = float(h.constant)
    hR = None if dirichlet else float(h) * R
    # how many orders are needed
    neg = 0.0 if dirichlet else max(0.0, -hR)
    m_stop = int(math.floor(K)) + 1
    if neg > 0:
        while True:
            if m_stop > K:
                qmin = m_stop - K * K / (2 * (m_stop + 1) * (1 - K * K / m_stop ** 2))
                if qmin > neg:
                    break
            m_stop += 1
    m_stop = max(m_stop, int(math.ceil(neg)) + 1)
    zeros = _all_zeros(m_stop, max(K + 12.0, m_stop + 3.0 * m_stop ** (1 / 3) + 5.0))
    for m in range(m_stop + 1):
        if len(zeros[m]) == 0 or zeros[m][-1] < K:
            raise ArithmeticError(f"zero list of J_{m} does not reach past K={K}")
    out = []
    if dirichlet:
        for m in range(m_stop + 1):
            for s, z in enumerate(zeros[m]):
                if z < K:
                    out.append((z, m, s))
        k = np.array([o[0] for o in out])
        mm = np.array([o[1] for o in out])
        res = _disk_residual_positive(mm, k, None) if len(out) else np.empty(0)
        return [((kk / R) ** 2, m, p, r) for (kk, m, p), r in zip(out, res)]
    # positive branch: one root per interval (j_{s-1}, j_s), first interval only if m + hR > 0
    ms, los, his, ps = [], [], [], []
    for m in range(m_stop + 1):
        z = zeros[m]
        edges = np.concatenate([[0.0], z])
        for s in range(1, len(edges)):
            if edges[s - 1] >= K:
                break
            if s == 1 and not (m + hR > 1e-12 * max(1.0, abs(hR))):
                continue
            ms.append(m)
            los.append(edges[s - 1])
            his.append(edges[s])
            ps.append(s - 1)
    ms = np.array(ms, dtype=int)
    f = lambda x: bessel.j_log_derivative(ms, x) + hR
    roots = _bisect_monotone(f, los, his, increasing=False)
    res = _disk_residual_positive(ms, roots, hR) if len(roots) else np.empty(0)
    for kk, m, p, r in zip(roots, ms, ps, res):
        if kk < K:
            out.append(((kk / R) ** 2, int(m), int(p), float(r)))
    # zero eigenvalue: u = r^m e^{imθ} is an eigenfunction iff m + hR = 0
    for m in range(m_stop + 1):
        if abs(m + hR) <= 1e-12 * max(1.0, abs(hR)):
            out.append((0.0, m, 0, 0.0))
    # negative branch: κ I_m'/I_m increases from m, one root when m + hR < 0
    neg_m = [m for m in range(m_stop + 1) if m + hR < -1e-12 * max(1.0, abs(hR))]
    if neg_m:
        nm = np.array(neg_m, dtype=int)
        hi = np.full(len(nm), 2.0 * abs(hR) + 2.0)
        for _ in range(100):
            ok = bessel.i_log_derivative(nm, hi) + hR > 0
            if ok.all():
                break
            hi = np.where(ok, hi, 2 * hi)
        else:
            raise ArithmeticError("no bracket for the negative disk branch")
        g = lambda x: bessel.i_log_derivative(nm, x) + hR
        kap = _bisect_monotone(g, np.zeros(len(nm)), hi, increasing=True)
        resn = _disk_residual_negative(nm, kap, hR)
        for kk, m, r in zip(kap, nm, resn):
            if kk < K:
                out.append((-(kk / R) ** 2, int(m), 0, float(r)))
            else:
                raise ArithmeticError(f"negative branch m={m} lies beyond the scan window K={K}")
    return out


def disk_robin_spectrum(R: float, h, count: int) -> Spectrum:
    """First ``count`` eigenvalues (with multiplicity) of the disk of radius R.

    Labels are ("disk", m, p): angular order m and p interior radial zeros.
    Records with m >= 1 carry multiplicity 2 (cos mθ and sin mθ).
    """
    if not R > 0:
        raise ValueError("radius must be positive")
    if count < 1:
        raise ValueError("count must be at least 1")
    dirichlet = isinstance(h, str) or (isinstance(h, RobinData) and h.dirichlet)
    rd = RobinData(constant=None, dirichlet=True) if dirichlet else (
        h if isinstance(h, RobinData) else RobinData(constant=float(h)))
    T = 1.2 * count + 10
    K = 1.0 + math.sqrt(1.0 + 4.0 * T)
    if not dirichlet:
        K = max(K, 2.0 * abs(float(rd.constant)) * R + 2.0)
    while True:
        roots = disk_branch_roots(R, rd, K)
        recs = [EigenRecord(mu=float(mu), label=("disk", m, p), multiplicity=2 if m >= 1 else 1, residual=float(r))
                for mu, m, p, r in roots]
        total = sum(r.multiplicity for r in recs)
        if total >= count:
            break
        K *= 1.3
    for r in recs:
        if r.residual > SECULAR_TOL:
            raise ArithmeticError(f"disk root {r.label} at μ={r.mu!r} has secular residual {r.residual:.2e}")
    cb = (K / R) ** 2
    recs, cb = _truncate(recs, count, cb)
    return Spectrum(recs, DomainSpec.disk(R, h=rd), count, float(cb))


# ---------------------------------------------------------------------------
# counting and Weyl remainder
# ---------------------------------------------------------------------------


def counting_function(spec: Spectrum, mu: float) -> int:
    """N(μ) = #{k : μ_k < μ} with multiplicity (strict inequality)."""
    if mu > spec.complete_below:
        raise ValueError(f"μ={mu} exceeds complete_below={spec.complete_below}; the count would only be a lower bound")
    return int(sum(r.multiplicity for r in spec.records if r.mu < mu))


def counting_function_many(spec: Spectrum, mus) -> np.ndarray:
    mus = np.asarray(mus, dtype=float)
    if np.any(mus > spec.complete_below):
        raise ValueError(f"μ={mus.max()} exceeds complete_below={spec.complete_below}")
    ev = np.sort(spec.expanded())
    return np.searchsorted(ev, mus, side="left")


def weyl_term(mu: float, V: float, n: int = 2) -> float:
    return ball_volume(n) * V * max(mu, 0.0) ** (n / 2) / (2 * math.pi) ** n


def weyl_remainder(spec: Spectrum, mu: float, V: float, n: int = 2) -> float:
    """R(μ) = ω_n V μ^{n/2} / (2π)^n - N(μ)."""
    return weyl_term(mu, V, n) - counting_function(spec, mu)


# ---------------------------------------------------------------------------
# nodal counts for separable eigenfunctions
# ---------------------------------------------------------------------------


def nodal_count_analytic(label, dirichlet: bool = False) -> int:
    """Nodal domains of the canonical separable eigenfunction with this label."""
    kind = label[0]
    if kind == "rect":
        i, j = int(label[1]), int(label[2])
        return i * j if dirichlet else (i + 1) * (j + 1)
    if kind == "interval":
        n = int(label[1])
        return n if dirichlet else n + 1
    if kind == "disk":
        m, p = int(label[1]), int(label[2])
        return p + 1 if m == 0 else 2 * m * (p + 1)
    raise ValueError(f"no analytic nodal count for label {label!r}; use the nodal module on FEM data")
