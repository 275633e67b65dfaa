"""The acceptance suite: twelve numerical criteria plus a determinism rerun.

Each criterion returns a CriterionResult whose ``details`` hold only
deterministic values (no timings), so that two runs serialise to identical
bytes.  Runtime budgets are reported as a boolean ``within_budget``.
"""

from __future__ import annotations

import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import asymmetry as asym
from . import bounds, fem, nodal, spectra
from .geometry import DomainSpec, field_constants, summarize

log = logging.getLogger(__name__)

WORKERS_ENV = "ROBINLAB_WORKERS"
FEM_CLUSTER_RTOL = 1e-3


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    summary: str
    details: dict = field(default_factory=dict)

    def line(self) -> str:
        return f"criterion {self.number:2d} {'PASS' if self.passed else 'FAIL'}: {self.title}: {self.summary}"

    def to_dict(self) -> dict:
        return {"number": self.number, "title": self.title, "passed": bool(self.passed),
                "summary": self.summary, "details": _clean(self.details)}


def _clean(x):
    """Round floats to 10 significant digits so outputs do not depend on the last ulp."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        v = float(x)
        if math.isnan(v) or math.isinf(v):
            return str(v)
        return float(f"{v:.10g}")
    return x


def workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


class CourantLedger:
    """Every nodal count examined by any suite, checked against ν ≤ first cluster index."""

    def __init__(self):
        self.checked = 0
        self.violations: list = []
        self.suites: dict = {}

    def scan(self, suite: str, spectrum, counts, rtol: float = spectra.CLUSTER_RTOL, **kw) -> list:
        try:
            out = nodal.scan_clusters(spectrum, counts, rtol=rtol, **kw)
        except nodal.CourantViolation as exc:
            self.violations.append(f"{suite}: {exc}")
            return []
        n = sum(len(sc.indices) for sc in out)
        self.checked += n
        self.suites[suite] = n
        return out


# ---------------------------------------------------------------------------
# criteria
# ---------------------------------------------------------------------------


def criterion_fem_vs_analytic(ctx) -> CriterionResult:
    rows, ok, budget = [], True, True
    for h in (-1.0, 0.0, 1.0):
        t = time.perf_counter()
        exact = spectra.disk_robin_spectrum(1.0, h, 10).expanded()[:10]
        m = fem.mesh(DomainSpec.disk(1.0, h=h), 0.03)
        sp, _ = fem.solve_eigens(fem.assemble(m), 10)
        approx = sp.expanded()[:10]
        elapsed = time.perf_counter() - t
        log.info("criterion 1, h=%g: %.1f s", h, elapsed)
        budget &= elapsed < 60.0
        rel = np.abs(approx - exact) / np.maximum(np.abs(exact), 1.0)
        ok &= bool(np.all(rel <= 0.02))
        rows.append({"h": h, "analytic": exact.tolist(), "fem": approx.tolist(), "max_rel": float(rel.max())})
    worst = max(r["max_rel"] for r in rows)
    return CriterionResult(1, "disk Robin eigenvalues, Bessel roots vs FEM", ok and budget,
                           f"max relative deviation {worst:.3g} (limit 0.02), within time budget: {budget}",
                           {"rows": rows, "within_budget": budget,
                            "relative_error_floor": "|mu| below 1 is compared in absolute terms"})


def criterion_courant_sharp(ctx) -> CriterionResult:
    t = time.perf_counter()
    out = {}
    disk = spectra.disk_robin_spectrum(1.0, "dirichlet", 200)
    cd = nodal.analytic_counts(disk)
    scans = ctx.ledger.scan("disk dirichlet k<=200", disk, cd, eigenspace="rotation_grid",
                            combo=nodal.disk_rotation_counter(disk), upto=200)
    out["disk"] = [sc.indices[0] for sc in scans if sc.indices[0] in sc.counts_seen]
    sq = spectra.rectangle_spectrum(1.0, 1.0, "dirichlet", 200)
    cs = nodal.analytic_counts(sq)
    combo = nodal.rectangle_rotation_counter(sq)
    scans = ctx.ledger.scan("square dirichlet k<=200", sq, cs, eigenspace="rotation_grid", combo=combo, upto=200)
    out["square"] = [sc.indices[0] for sc in scans if sc.indices[0] in sc.counts_seen]
    elapsed = time.perf_counter() - t
    log.info("criterion 3: %.1f s", elapsed)
    budget = elapsed < 30.0
    ok = out["disk"] == [1, 2, 4] and out["square"] == [1, 2, 4] and budget
    return CriterionResult(3, "Courant-sharp sets up to k=200 with a 64-angle rotation grid", ok,
                           f"disk {out['disk']}, square {out['square']}, within time budget: {budget}",
                           {"sharp": out, "within_budget": budget})


def _analytic(kind: str, h, count: int):
    if kind == "disk":
        return spectra.disk_robin_spectrum(1.0, h, count)
    return spectra.rectangle_spectrum(1.0, 1.0, h, count)


def criterion_pleijel(ctx) -> CriterionResult:
    gam = bounds.universal_constants(2)["gamma_n"]
    rows, ok = [], True
    for kind in ("disk", "square"):
        for h in (-1.0, 0.0, 1.0):
            sp = _analytic(kind, h, 2000)
            counts = nodal.analytic_counts(sp)
            ctx.ledger.scan(f"{kind} h={h:g} k<=2000", sp, counts)
            ser = nodal.pleijel_series(sp, counts, 2000)
            ok &= ser.tail_max < gam
            rows.append({"domain": kind, "h": h, "tail_max": ser.tail_max, "argmax": ser.tail_argmax})
    worst = max(r["tail_max"] for r in rows)
    return CriterionResult(4, "Pleijel ratio tail over k in [1000, 2000]", ok,
                           f"largest tail ratio {worst:.4f} < gamma(2) = {gam:.10f}: {ok}",
                           {"gamma_2": gam, "rows": rows})


def criterion_nodal_rayleigh(ctx) -> CriterionResult:
    spec = DomainSpec.disk(1.0, h=-1.0)
    exact = spectra.disk_robin_spectrum(1.0, -1.0, 20)
    th = fem.nodal_target_h(float(exact.expanded()[19]) * 1.02)
    m = fem.mesh(spec, th)
    ops = fem.assemble(m)
    sp, X = fem.solve_eigens(ops, 20)
    fc = field_constants(spec)
    mus = sp.expanded()[:20]
    for k in range(20):
        fem.require_nodal_resolution(m.target_h, max(float(mus[k]), 0.0))
    rows, ok, counts = [], True, []
    rec = exact.record_of_index()
    for k in range(20):
        cnt, lab = nodal.nodal_domains(m, X[:, k])
        counts.append(cnt)
        for r in nodal.verify_nodal_rayleigh(ops, X[:, k], float(mus[k]), lab, fc):
            ok &= r["pass"]
            rows.append({"k": k + 1, "mu": float(mus[k]), **r, "ratio": r["rayleigh"] / (r["bound"] * r["slack"])})
    ctx.ledger.scan("fem disk h=-1 first 20", sp, counts, rtol=FEM_CLUSTER_RTOL, upto=20)
    agreement = [{"k": k + 1, "label": list(exact.records[rec[k]].label[1:]),
                  "analytic": spectra.nodal_count_analytic(exact.records[rec[k]].label), "fem": counts[k]}
                 for k in range(20)]
    worst = max(r["ratio"] for r in rows)
    quad = sum(1 for r in rows if r["form"] == "quadratic")
    return CriterionResult(5, "nodal Rayleigh quotients on the disk with h=-1", ok,
                           f"{len(rows)} nodal domains, largest quotient/(bound*slack) {worst:.4f}; "
                           f"{quad} domains with mu+2 < 0 use the quadratic form",
                           {"constants": fc.to_dict(), "target_h": m.target_h, "rows": rows,
                            "nodal_count_agreement": agreement})


def criterion_robin_vs_neumann(ctx) -> CriterionResult:
    neu = spectra.disk_robin_spectrum(1.0, 0.0, 200).expanded()[:200]
    etas = np.round(np.arange(1, 10) / 10.0, 10)
    rows, viol_eig, viol_count = [], 0, 0
    for h in (-2.0, -1.0, -0.5):
        spec = DomainSpec.disk(1.0, h=h)
        fc = field_constants(spec)
        rob = spectra.disk_robin_spectrum(1.0, h, 200)
        mu = rob.expanded()[:200]
        ve = 0
        for eta in etas:
            low = (1 - eta) * neu - (fc.K1 * fc.H + fc.K2 * fc.H ** 2 / eta)
            ve += int(np.sum(mu < low - 1e-9 * np.maximum(np.abs(low), 1.0)))
        grid = np.linspace(mu[0], mu[-1], 50)
        arg_max = bounds.robin_count_argument(float(grid[-1]), float(etas[-1]), fc.K1, fc.K2, fc.H)
        counter = bounds._neumann_counter(DomainSpec.disk(1.0), arg_max)
        vc = 0
        for g in grid:
            n_rob = spectra.counting_function(rob, float(g))
            for eta in etas:
                vc += int(n_rob > bounds.robin_count_upper(float(g), float(eta), fc.K1, fc.K2, fc.H, counter))
        viol_eig += ve
        viol_count += vc
        rows.append({"h": h, "K1": fc.K1, "K2": fc.K2, "H": fc.H, "eigenvalue_violations": ve, "count_violations": vc})
    ok = viol_eig == 0 and viol_count == 0
    return CriterionResult(6, "Robin eigenvalue lower bound and counting bound on the disk", ok,
                           f"{viol_eig} eigenvalue and {viol_count} counting violations over h in (-2, -1, -0.5), "
                           f"k <= 200, eta in 0.1..0.9",
                           {"rows": rows})


def criterion_neumann_counts(ctx) -> CriterionResult:
    spec = DomainSpec.disk(1.0)
    g = summarize(spec)
    mus = np.logspace(0, math.log10(500), 100)
    counter = bounds._neumann_counter(spec, 500.0)
    bad = 0
    for mu in mus:
        n = counter(float(mu))
        b1 = bounds.neumann_count_convex(float(mu), spec)
        b2 = bounds.neumann_count_convex_c2(float(mu), g.V, g.S, g.kappa_max)
        bad += int(n > b1) + int(n > b2)
    n100 = counter(100.0)
    b1 = bounds.neumann_count_convex(100.0, spec)
    b2 = bounds.neumann_count_convex_c2(100.0, g.V, g.S, g.kappa_max)
    ok = bad == 0 and abs(b1 - b2) <= 0.5 and round(b1, 1) == 109.9 and round(b2, 1) == 109.9
    return CriterionResult(7, "Neumann counting bounds on the unit disk", ok,
                           f"{bad} violations on 100 log-spaced mu in [1, 500]; at mu=100: exact {n100}, "
                           f"Steiner bound {b1:.4f}, curvature bound {b2:.4f}",
                           {"violations": bad, "mu100": {"exact": n100, "steiner": b1, "curvature": b2}})


def criterion_scaling(ctx) -> CriterionResult:
    specs = {"disk h=-1": DomainSpec.disk(1.0, h=-1.0),
             "smoothed pentagon h=-0.5": DomainSpec.smoothed_polygon(
                 [(math.cos(2 * math.pi * i / 5), math.sin(2 * math.pi * i / 5)) for i in range(5)], 0.2, h=-0.5)}
    rows, worst = [], 0.0
    for name, spec in specs.items():
        g = summarize(spec)
        e0 = bounds.cs_eig_bound(g.V, g.delta1, g.rho, spec.h.H())
        c0 = bounds.cs_count_bound(g.V, g.t_plus, g.rho, spec.h.H())
        for t in (0.1, 0.5, 2.0, 10.0):
            st = spec.scaled(t)
            gt = summarize(st)
            et = bounds.cs_eig_bound(gt.V, gt.delta1, gt.rho, st.h.H())
            ct = bounds.cs_count_bound(gt.V, gt.t_plus, gt.rho, st.h.H())
            de = abs(et - e0 / t ** 2) / (e0 / t ** 2)
            dc = abs(ct - c0) / c0
            worst = max(worst, de, dc)
            rows.append({"domain": name, "t": t, "eig_rel_dev": de, "count_rel_dev": dc})
    ok = worst < 1e-10
    return CriterionResult(8, "scaling of the Courant-sharp eigenvalue and count bounds", ok,
                           f"largest relative deviation {worst:.3g} (limit 1e-10)", {"rows": rows})


def _iso_one(args):
    text, eps = args
    E = asym.PlanarSet.from_json(text)
    omega = E.ambient
    layer = asym.BoundaryLayer.for_domain(omega, 0.2)
    return asym.isoperimetric_check(E, omega, layer, eps=eps)


def criterion_isoperimetric(ctx) -> CriterionResult:
    eps = 0.1
    omega = DomainSpec.disk(1.0)
    layer = asym.BoundaryLayer.for_domain(omega, 0.2)
    corpus = asym.random_corpus(omega, layer, 50, eps=eps, seed=0)
    jobs = [(E.to_json(), eps) for E in corpus]
    if ctx.workers > 1:
        with ProcessPoolExecutor(ctx.workers) as ex:
            reps = list(ex.map(_iso_one, jobs))
    else:
        reps = [_iso_one(j) for j in jobs]
    ok = all(r.applicable and r.passed for r in reps)
    c1 = asym.largest_passing_C1(reps, eps)
    sq = DomainSpec.rectangle(1.0, 1.0)
    sq_layer = asym.BoundaryLayer.for_domain(sq, 0.2)
    r = 0.05
    th = np.linspace(0.0, math.pi, 257)
    half = asym.PlanarSet(sq, loops=[np.column_stack([0.5 + r * np.cos(th), r * np.sin(th)])])
    hrep = asym.isoperimetric_check(half, sq, sq_layer, eps=eps)
    ok &= not hrep.applicable
    rows = [{"index": i, "volume": q.volume, "layer_fraction": q.layer_fraction, "lhs": q.lhs, "rhs": q.rhs,
             "A_tilde": q.A_tilde, "passed": q.passed} for i, q in enumerate(reps)]
    return CriterionResult(9, "quantitative isoperimetric check on 50 gated sets", ok,
                           f"{sum(1 for q in reps if q.applicable and q.passed)}/50 pass with C1={asym.DEFAULT_C1:g}; "
                           f"largest passing C1 {c1:.4g}; half-disk on the boundary applicable={hrep.applicable}, "
                           f"raw ratio {hrep.raw_ratio:.4f}",
                           {"eps": eps, "delta": layer.delta, "t0": layer.t0, "alpha": asym.default_alpha(layer.t0, eps),
                            "beta": asym.default_beta(eps), "largest_passing_C1": c1, "rows": rows,
                            "half_disk": {"applicable": hrep.applicable, "reason": hrep.reason,
                                          "raw_ratio": hrep.raw_ratio}})


def criterion_mixed_fk(ctx) -> CriterionResult:
    fk = bounds.universal_constants(2)["fk_product"]
    rows, ok = [], True
    for r in (0.05, 0.1):
        m = fem.mesh(DomainSpec.disk(1.0), r / 10)
        c = m.vertices[m.triangles].mean(axis=1)
        lam, area = fem.mixed_dn_eigenvalue(m, np.hypot(c[:, 0], c[:, 1]) < r, return_area=True)
        ratio = lam * area / fk
        ok &= ratio >= 0.95
        rows.append({"set": f"interior disk r={r:g}", "lambda1": lam, "area": area, "ratio_to_fk": ratio})
    m = fem.mesh(DomainSpec.rectangle(1.0, 1.0), 0.005)
    c = m.vertices[m.triangles].mean(axis=1)
    lam, area = fem.mixed_dn_eigenvalue(m, np.hypot(c[:, 0] - 0.5, c[:, 1]) < 0.2, return_area=True)
    ratio = lam * area / fk
    ok &= abs(ratio - 0.5) <= 0.025
    rows.append({"set": "half-disk r=0.2 on the bottom edge of the unit square", "lambda1": lam, "area": area,
                 "ratio_to_fk": ratio})
    ctx.half_disk_product = lam * area
    return CriterionResult(10, "mixed Dirichlet-Neumann Faber-Krahn products", ok,
                           "; ".join(f"{r['set']}: {r['ratio_to_fk']:.4f} x fk" for r in rows),
                           {"fk_product": fk, "rows": rows})


def criterion_polya_szego(ctx) -> CriterionResult:
    rows, ok = [], True
    domains = {"square": DomainSpec.rectangle(1.0, 1.0, h="dirichlet"),
               "disk": DomainSpec.disk(1.0 / math.sqrt(math.pi), h="dirichlet")}
    for name, spec in domains.items():
        m = fem.mesh(spec, 0.02)
        _, X = fem.solve_eigens(fem.assemble(m), 10)
        for k in range(10):
            soup = asym.P1Soup.from_mesh(m, X[:, k]).absolute()
            rep = asym.polya_szego_check(soup)
            ok &= rep.passed
            rows.append({"input": f"{name} |u_{k + 1}|", **rep.to_dict()})
    # radial decreasing inputs: equality up to the check's tolerance
    disk = DomainSpec.disk(1.0)
    m = fem.mesh(disk, 0.02)
    r2 = np.sum(m.vertices ** 2, axis=1)
    radial = {"1 - r^2": 1.0 - r2}
    mD = fem.mesh(DomainSpec.disk(1.0, h="dirichlet"), 0.02)
    _, XD = fem.solve_eigens(fem.assemble(mD), 1)
    for name, (mm, u) in {"1 - r^2": (m, radial["1 - r^2"]), "first Dirichlet mode": (mD, np.abs(XD[:, 0]))}.items():
        for frac in (0.3, 0.7, 1.0):
            top = float(np.max(u))
            rep = asym.polya_szego_check(u, mm, s=frac * top)
            eq = abs(rep.lhs_energy - rep.rhs_energy) <= rep.tolerance
            ok &= eq
            rows.append({"input": f"radial {name}, s={frac:g} max", **rep.to_dict(), "equality": eq,
                         "rel_gap": abs(rep.lhs_energy - rep.rhs_energy) / rep.lhs_energy})
    n_eig = sum(1 for r in rows if "|u_" in r["input"] and r["passed"])
    return CriterionResult(11, "Polya-Szego comparison for rearranged eigenfunctions", ok,
                           f"{n_eig}/20 eigenfunction checks pass; radial inputs match within tolerance: "
                           f"{all(r.get('equality', True) for r in rows)}",
                           {"rows": rows})


def weyl_ratios(h, count: int = 2000, threshold: int = 500) -> dict:
    sp = spectra.disk_robin_spectrum(1.0, h, count)
    mus = sp.expanded()
    cl = sp.clusters()
    hi, lo, last_bad = 0.0, math.inf, 0
    for a, b in zip(cl[:-1], cl[1:]):
        N = a[-1]
        if N < threshold:
            continue
        mu_here, mu_next = float(mus[a[0] - 1]), float(mus[b[0] - 1])
        # on [mu_here, mu_next) the ratio N * 4 / mu runs from its max to its min
        r_max, r_min = 4.0 * N / mu_here, 4.0 * N / mu_next
        hi, lo = max(hi, r_max), min(lo, r_min)
        if r_max > 1.05 or r_min < 0.95:
            last_bad = N
    return {"max": hi, "min": lo, "last_N_outside": last_bad, "mu_range": [float(mus[threshold - 1]), float(mus[-1])]}


def criterion_weyl(ctx) -> CriterionResult:
    rows, ok = [], True
    for h in (-1.0, 0.0, 1.0):
        w = weyl_ratios(h)
        ok &= w["max"] <= 1.05 and w["min"] >= 0.95
        # two-term prediction of the relative excess: (|∂Ω|/(4π)) √μ / (|Ω| μ/(4π)) = 2/√μ on the unit disk
        w["two_term_excess_at_N500"] = 2.0 / math.sqrt(w["mu_range"][0])
        rows.append({"h": h, **w})
    worst = max(r["max"] for r in rows)
    return CriterionResult(12, "Weyl ratio N(mu)*4/mu on the disk for N >= 500", ok,
                           f"ratio range [{min(r['min'] for r in rows):.4f}, {worst:.4f}] against [0.95, 1.05]; "
                           f"exceedances end at N = {max(r['last_N_outside'] for r in rows)}",
                           {"rows": rows})


def criterion_courant_bound(ctx) -> CriterionResult:
    ok = not ctx.ledger.violations and ctx.ledger.checked > 0
    return CriterionResult(2, "Courant bound nu <= first index of the eigenvalue", ok,
                           f"{ctx.ledger.checked} eigenfunctions checked, {len(ctx.ledger.violations)} violations",
                           {"suites": ctx.ledger.suites, "violations": ctx.ledger.violations})


CRITERIA: dict = {
    1: criterion_fem_vs_analytic,
    3: criterion_courant_sharp,
    4: criterion_pleijel,
    5: criterion_nodal_rayleigh,
    6: criterion_robin_vs_neumann,
    7: criterion_neumann_counts,
    8: criterion_scaling,
    9: criterion_isoperimetric,
    10: criterion_mixed_fk,
    11: criterion_polya_szego,
    12: criterion_weyl,
}


@dataclass
class Context:
    workers: int = 1
    ledger: CourantLedger = field(default_factory=CourantLedger)
    half_disk_product: Optional[float] = None


def run_verify(only: Optional[list] = None, n_workers: Optional[int] = None) -> list:
    """Run the requested criteria (all by default) in numerical order.

    Criterion 2 summarises the Courant checks made by the suites that ran;
    criterion 13 needs two separate runs and is handled by ``compare_runs``.
    """
    ctx = Context(workers=workers() if n_workers is None else n_workers)
    wanted = sorted(set(only)) if only else sorted(list(CRITERIA) + [2])
    results = []
    for num in wanted:
        if num == 2:
            continue
        if num not in CRITERIA:
            raise ValueError(f"no criterion {num} to run here")
        t = time.perf_counter()
        results.append(CRITERIA[num](ctx))
        log.info("criterion %d done in %.1f s", num, time.perf_counter() - t)
    if 2 in wanted:
        results.append(criterion_courant_bound(ctx))
    return sorted(results, key=lambda r: r.number)


def render(results: list) -> tuple:
    """(summary text, JSON text) for a list of results."""
    text = "".join(r.line() + "\n" for r in results)
    body = json.dumps([r.to_dict() for r in results], sort_keys=True, indent=1) + "\n"
    return text, body


def write_outputs(results: list, outdir: str) -> None:
    os.makedirs(outdir, exist_ok=True)
    text, body = render(results)
    with open(os.path.join(outdir, "summary.txt"), "w") as f:
        f.write(text)
    with open(os.path.join(outdir, "results.json"), "w") as f:
        f.write(body)


def compare_runs(dir_a: str, dir_b: str) -> CriterionResult:
    """Criterion 13: byte comparison of the files written by two verify runs."""
    names = sorted(set(os.listdir(dir_a)) | set(os.listdir(dir_b)))
    differing = []
    for n in names:
        pa, pb = os.path.join(dir_a, n), os.path.join(dir_b, n)
        if not (os.path.exists(pa) and os.path.exists(pb)):
            differing.append(n)
            continue
        with open(pa, "rb") as fa, open(pb, "rb") as fb:
            if fa.read() != fb.read():
                differing.append(n)
    ok = not differing and bool(names)
    return CriterionResult(13, "repeated verify runs give identical bytes", ok,
                           f"{len(names)} files compared, {len(differing)} differ", {"differing": differing})
