"""Closed-form constants and bounds for Robin eigenvalues and counting functions.

Unspecified dimensional constants C default to 1 and can be calibrated on
observed data with :func:`calibrate_constant`; nothing here claims to know
their true values.
"""

from __future__ import annotations

import csv
import functools
import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import comb

from . import bessel
from .geometry import DomainSpec, ball_volume, field_constants, steiner_volume, summarize

ETA_GRID = np.linspace(0.01, 0.99, 99)


# ---------------------------------------------------------------------------
# universal constants
# ---------------------------------------------------------------------------


def _spherical_jn(l: int, x: np.ndarray) -> np.ndarray:
    """Spherical Bessel j_l by upward recurrence (accurate for x > l)."""
    j0 = np.sin(x) / x
    if l == 0:
        return j0
    j1 = np.sin(x) / x ** 2 - np.cos(x) / x
    for k in range(1, l):
        j0, j1 = j1, (2 * k + 1) / x * j1 - j0
    return j1


@functools.lru_cache(maxsize=None)
def first_bessel_zero(nu2: int) -> float:
    """Smallest positive zero of J_{nu2/2} for integer nu2 >= 0."""
    if nu2 % 2 == 0:
        nu = nu2 // 2
        z = bessel.bessel_zeros(nu, nu + 4.0 * (nu + 1) ** (1 / 3) + 4.0, step=0.05)
        return float(z[0])
    l = (nu2 - 1) // 2  # J_{l+1/2} ∝ sqrt(x) j_l(x)
    grid = np.arange(max(l, 0.05), l + 4.0 * (l + 1) ** (1 / 3) + 4.0, 0.05)
    f = _spherical_jn(l, grid)
    i = int(np.nonzero(np.sign(f[:-1]) != np.sign(f[1:]))[0][0])
    return float(bessel.bisect_vectorized(lambda x: _spherical_jn(l, x), [grid[i]], [grid[i + 1]])[0])


def universal_constants(n: int) -> dict:
    """ω_n, j = first zero of J_{(n-2)/2}, γ(n) = (2π)^n / (ω_n² j^n), fk_product = j² ω_n^{2/n}."""
    if n < 2 or int(n) != n:
        raise ValueError("dimension must be an integer >= 2")
    n = int(n)
    w = ball_volume(n)
    j = first_bessel_zero(n - 2)
    return {
        "n": n,
        "omega_n": w,
        "j_bessel": j,
        "gamma_n": (2 * math.pi) ** n / (w * w * j ** n),
        "fk_product": j * j * w ** (2 / n),
    }


# ---------------------------------------------------------------------------
# Rayleigh-quotient and Robin/Neumann comparison bounds
# ---------------------------------------------------------------------------


def rayleigh_bound(mu: float, Gamma1: float, Gamma2: float, H: float) -> float:
    """(√(μ + Γ1 H) + Γ2 H)²."""
    rad = mu + Gamma1 * H
    if rad < 0:
        raise ValueError(f"μ + Γ1 H = {rad} is negative")
    return (math.sqrt(rad) + Gamma2 * H) ** 2


def rayleigh_bound_quadratic(mu: float, Gamma1: float, Gamma2: float, H: float) -> float:
    """Largest X² with X² ≤ μ + H(Γ1 + Γ2 X), the form before completing the square.

    Defined whenever μ + Γ1 H ≥ -(Γ2 H / 2)², so it also covers negative eigenvalues
    where the closed form has a negative radicand. Never exceeds rayleigh_bound.
    """
    b = 0.5 * Gamma2 * H
    disc = b * b + mu + Gamma1 * H
    if disc < 0:
        raise ValueError(f"discriminant {disc} is negative")
    return (b + math.sqrt(disc)) ** 2


def _check_eta(eta: float) -> None:
    if not 0 < eta < 1:
        raise ValueError("eta must lie in (0, 1)")


def robin_eig_lower(mu_k_neumann: float, eta: float, K1: float, K2: float, H: float) -> float:
    """(1 - η) μ_k^N - (K1 H + K2 H² / η)."""
    _check_eta(eta)
    return (1 - eta) * mu_k_neumann - (K1 * H + K2 * H * H / eta)


def _refine(fun: Callable[[float], float], grid: np.ndarray) -> tuple:
    """Minimise fun over a grid, then golden-section inside the neighbouring cells."""
    vals = np.array([fun(e) for e in grid])
    i = int(np.argmin(vals))
    best_eta, best = float(grid[i]), float(vals[i])
    if 0 < i < len(grid) - 1:
        try:
            r = minimize_scalar(fun, bracket=(grid[i - 1], grid[i], grid[i + 1]), method="golden",
                                options={"xtol": 1e-10})
            if 0 < r.x < 1 and r.fun < best:
                best_eta, best = float(r.x), float(r.fun)
        except ValueError:
            pass
    return best_eta, best


def robin_eig_lower_best(mu_k_neumann: float, K1: float, K2: float, H: float, grid=ETA_GRID) -> tuple:
    """(η, bound) maximising the lower bound over η (99-point grid + golden section)."""
    eta, neg = _refine(lambda e: -robin_eig_lower(mu_k_neumann, e, K1, K2, H), np.asarray(grid))
    return eta, -neg


def robin_count_argument(mu: float, eta: float, K1: float, K2: float, H: float) -> float:
    _check_eta(eta)
    return (mu + K1 * H + K2 * H * H / eta) / (1 - eta)


def robin_count_upper(mu: float, eta: Optional[float], K1: float, K2: float, H: float,
                      neumann_counting: Callable[[float], int], grid=ETA_GRID) -> int:
    """N^N((μ + K1 H + K2 H²/η)/(1 - η)); with eta=None the argument is minimised over η."""
    if eta is None:
        eta, _ = _refine(lambda e: robin_count_argument(mu, e, K1, K2, H), np.asarray(grid))
    return int(neumann_counting(robin_count_argument(mu, eta, K1, K2, H)))


def neumann_count_convex(mu: float, spec: DomainSpec) -> float:
    """(n^{n/2}/π^n) μ^{n/2} |Ω + (π/√μ) B| for convex Ω."""
    if not spec.is_convex:
        raise ValueError("the Steiner count bound needs a convex domain")
    if not mu > 0:
        raise ValueError("mu must be positive")
    n = 2
    return n ** (n / 2) / math.pi ** n * mu ** (n / 2) * steiner_volume(spec, math.pi / math.sqrt(mu))


def neumann_count_convex_c2(mu: float, V: float, S: float, kappa_max: Optional[float], n: int = 2) -> float:
    """(n^{n/2}/π^n) V μ^{n/2} + n^{n/2} S Σ_j binom(n-1, j) κ^j (μ/π²)^{(n-j-1)/2} / (j+1)."""
    if kappa_max is None:
        raise ValueError("this bound needs the maximal boundary curvature (C² boundary)")
    if not mu > 0:
        raise ValueError("mu must be positive")
    lead = n ** (n / 2) / math.pi ** n * V * mu ** (n / 2)
    tail = sum(comb(n - 1, j, exact=True) * kappa_max ** j * (mu / math.pi ** 2) ** ((n - j - 1) / 2) / (j + 1)
               for j in range(n))
    return lead + n ** (n / 2) * S * tail


# ---------------------------------------------------------------------------
# Courant-sharp bounds
# ---------------------------------------------------------------------------


def _positive(**kw) -> None:
    for k, v in kw.items():
        if v is None or not v > 0:
            raise ValueError(f"{k} must be positive (got {v})")


def cs_eig_bound(V: float, delta1: float, rho: float, H: float, n: int = 2, C: float = 1.0) -> float:
    """C (V^{2/n}/δ1⁴ + ρ⁴/V^{2/n} + V^{2/n} H⁴)."""
    _positive(V=V, delta1=delta1, rho=rho)
    if H < 0:
        raise ValueError("H must be nonnegative")
    v = V ** (2 / n)
    return C * (v / delta1 ** 4 + rho ** 4 / v + v * H ** 4)


def cs_count_bound(V: float, t_plus: float, rho: float, H: float, n: int = 2, C: float = 1.0) -> float:
    """C (V²/t₊^{2n} + ρ^{2n} + V² H^{2n})."""
    _positive(V=V, t_plus=t_plus, rho=rho)
    if H < 0:
        raise ValueError("H must be nonnegative")
    return C * (V * V / t_plus ** (2 * n) + rho ** (2 * n) + V * V * H ** (2 * n))


def negative_count_bound(V: float, t_plus: float, rho: float, H: float, n: int = 2, C: float = 1.0) -> float:
    """C ((V^{1/n} H)^n + ρ^n + (V^{1/n}/t₊)^n), a bound on the number of negative eigenvalues."""
    _positive(V=V, t_plus=t_plus, rho=rho)
    if H < 0:
        raise ValueError("H must be nonnegative")
    v = V ** (1 / n)
    return C * ((v * H) ** n + rho ** n + (v / t_plus) ** n)


def ball_of_eigenvalue(mu: float, n: int = 2) -> float:
    """Volume of the ball whose first Dirichlet eigenvalue is μ."""
    if not mu > 0:
        raise ValueError("mu must be positive")
    uc = universal_constants(n)
    return uc["omega_n"] * (uc["j_bessel"] ** 2 / mu) ** (n / 2)


# ---------------------------------------------------------------------------
# calibration
# ---------------------------------------------------------------------------


def distance_field_bound(delta0: float, C: float = 1.0) -> float:
    """C/δ0, the form of the Γ1 bound for distance-based fields."""
    _positive(delta0=delta0)
    return C / delta0


_FAMILIES = {
    "cs_eig": lambda d: cs_eig_bound(d["V"], d["delta1"], d["rho"], d.get("H", 0.0), d.get("n", 2), 1.0),
    "cs_count": lambda d: cs_count_bound(d["V"], d["t_plus"], d["rho"], d.get("H", 0.0), d.get("n", 2), 1.0),
    "distance_field": lambda d: distance_field_bound(d["delta0"], 1.0),
}


def calibrate_constant(observations: Sequence, family: str) -> dict:
    """Smallest C with C·bound(inputs) >= required for every (inputs, required) pair."""
    if not observations:
        raise ValueError("no observations to calibrate on")
    if family not in _FAMILIES:
        raise ValueError(f"unknown bound family {family!r}")
    f = _FAMILIES[family]
    ratios = [float(req) / f(inp) for inp, req in observations]
    i = int(np.argmax(ratios))
    return {"C": max(ratios[i], 0.0), "argmax": i, "ratios": ratios}


# ---------------------------------------------------------------------------
# report table
# ---------------------------------------------------------------------------


@dataclass
class BoundReport:
    name: str
    inputs: dict
    value: float
    scale_check: float
    notes: str = ""

    def to_dict(self) -> dict:
        return asdict(self)


def _rel(a: float, b: float) -> float:
    return abs(a - b) / max(abs(b), 1e-300)


def _neumann_counter(spec: DomainSpec, mu_max: float):
    from .spectra import counting_function, disk_robin_spectrum, rectangle_spectrum
    if spec.kind == "disk":
        count = int(mu_max * spec.radius ** 2 / 4 + 4 * math.sqrt(max(mu_max, 1)) * spec.radius + 20)
        sp = disk_robin_spectrum(spec.radius, 0.0, count)
    elif spec.kind == "rectangle":
        count = int(mu_max * spec.a * spec.b / (4 * math.pi) + math.sqrt(max(mu_max, 1)) * (spec.a + spec.b) + 20)
        sp = rectangle_spectrum(spec.a, spec.b, 0.0, count)
    else:
        return None
    return lambda mu: counting_function(sp, mu)


def bound_table(spec: DomainSpec, mu: float = 100.0, k: int = 10, eta: Optional[float] = None,
                t_check: float = 2.0, C: float = 1.0) -> list:
    """Every bound evaluated for one domain, with a rescaling self-check per row.

    ``scale_check`` is the relative deviation between the row recomputed on
    (tΩ, h/t, μ/t²) and the exact scaling law of that row.
    """
    from .spectra import disk_robin_spectrum, rectangle_spectrum

    rows = []
    t = t_check
    g, gs = summarize(spec), summarize(spec.scaled(t))
    fc, fcs = field_constants(spec), field_constants(spec.scaled(t))
    H, Hs = spec.h.H(), spec.scaled(t).h.H()
    n = g.n
    inp = {"mu": mu, "H": H}

    def add(name, fn, power, notes=""):
        try:
            v = fn(g, fc, H, mu, spec)
            vs = fn(gs, fcs, Hs, mu / t ** 2, spec.scaled(t))
            rows.append(BoundReport(name, dict(inp), float(v), _rel(vs, t ** power * v), notes))
        except ValueError as exc:
            rows.append(BoundReport(name, dict(inp), float("nan"), float("nan"), f"not applicable: {exc}"))

    add("rayleigh_bound", lambda g_, f_, H_, m_, s_: rayleigh_bound(m_, f_.Gamma1, f_.Gamma2, H_), -2,
        "star field about the domain centre")

    # μ_k^N from the analytic Neumann spectrum where available
    def muN(s_):
        if s_.kind == "disk":
            return float(disk_robin_spectrum(s_.radius, 0.0, k).expanded()[k - 1])
        if s_.kind == "rectangle":
            return float(rectangle_spectrum(s_.a, s_.b, 0.0, k).expanded()[k - 1])
        raise ValueError("no analytic Neumann spectrum for this domain kind")

    if eta is None:
        add(f"robin_eig_lower(k={k},best eta)",
            lambda g_, f_, H_, m_, s_: robin_eig_lower_best(muN(s_), f_.K1, f_.K2, H_)[1], -2)
    else:
        add(f"robin_eig_lower(k={k},eta={eta})",
            lambda g_, f_, H_, m_, s_: robin_eig_lower(muN(s_), eta, f_.K1, f_.K2, H_), -2)

    def count_upper(g_, f_, H_, m_, s_):
        e = 0.5 if eta is None else eta
        arg = robin_count_argument(m_, e, f_.K1, f_.K2, H_)
        ctr = _neumann_counter(s_, arg * 1.01 + 10 / g_.V)
        if ctr is None:
            raise ValueError("no analytic Neumann spectrum for this domain kind")
        return robin_count_upper(m_, e, f_.K1, f_.K2, H_, ctr)

    add("robin_count_upper", count_upper, 0)
    add("neumann_count_convex", lambda g_, f_, H_, m_, s_: neumann_count_convex(m_, s_), 0)
    add("neumann_count_convex_c2",
        lambda g_, f_, H_, m_, s_: neumann_count_convex_c2(m_, g_.V, g_.S, g_.kappa_max, n), 0)

    def need_c2(g_):
        if g_.t_plus is None:
            raise ValueError("needs a C² boundary (t_plus unavailable)")

    def cs_eig(g_, f_, H_, m_, s_):
        need_c2(g_)
        return cs_eig_bound(g_.V, g_.delta1, g_.rho, H_, n, C)

    def cs_count(g_, f_, H_, m_, s_):
        need_c2(g_)
        return cs_count_bound(g_.V, g_.t_plus, g_.rho, H_, n, C)

    def neg_count(g_, f_, H_, m_, s_):
        need_c2(g_)
        return negative_count_bound(g_.V, g_.t_plus, g_.rho, H_, n, C)

    add("cs_eig_bound", cs_eig, -2, f"C={C}")
    add("cs_count_bound", cs_count, 0, f"C={C}")
    add("negative_count_bound", neg_count, 0, f"C={C}")
    add("ball_of_eigenvalue", lambda g_, f_, H_, m_, s_: ball_of_eigenvalue(m_, n), 2)
    return rows


def bound_table_csv(rows: list) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["name", "value", "scale_check", "notes"])
    for r in rows:
        w.writerow([r.name, f"{r.value:.12g}", f"{r.scale_check:.3e}", r.notes])
    return buf.getvalue()


def bound_table_json(rows: list) -> str:
    def clean(x):
        return None if isinstance(x, float) and math.isnan(x) else x
    return json.dumps([{k: clean(v) for k, v in r.to_dict().items()} for r in rows], sort_keys=True)
