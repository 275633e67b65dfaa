"""Command-line driver: ``robinlab <subcommand> [options]``.

Every subcommand writes CSV or JSON (to ``--out`` or stdout) and exits 0
exactly when its own assertions hold.  Options may also come from a JSON
file given with ``--config``; its keys are option names, and flags given on
the command line take precedence.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from typing import Optional


from . import asymmetry as asym
from . import bounds, fem, nodal, spectra, verify
from .geometry import DomainSpec, summarize

log = logging.getLogger("robinlab")


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# domain and h parsing
# ---------------------------------------------------------------------------


def parse_h(text):
    """'dirichlet', a number, or a comma-separated list of per-segment values."""
    if text is None:
        return None
    if isinstance(text, (int, float)):
        return float(text)
    if isinstance(text, list):
        return [float(v) for v in text]
    t = str(text).strip().lower()
    if t in ("dirichlet", "inf"):
        return "dirichlet"
    if "," in t:
        return [float(v) for v in t.split(",")]
    return float(t)


def build_domain(args) -> DomainSpec:
    h = parse_h(args.h)
    if args.mode == "dirichlet":
        h = "dirichlet"
    elif args.mode == "neumann":
        h = 0.0
    elif h is None:
        h = 0.0
    d = args.domain
    if d == "disk":
        return DomainSpec.disk(args.radius, h=h)
    if d == "square":
        return DomainSpec.rectangle(args.a, args.a, h=h)
    if d == "rectangle":
        return DomainSpec.rectangle(args.a, args.b, h=h)
    text = d if d.lstrip().startswith("{") else open(d).read()
    spec = DomainSpec.from_json(text)
    return spec if args.h is None and args.mode is None else spec.with_h(h)


def analytic_spectrum(spec: DomainSpec, count: int):
    hv = "dirichlet" if spec.dirichlet else spec.h.constant
    if not spec.h.is_constant and not spec.dirichlet:
        raise ValueError("analytic spectra need a constant h; use --fem")
    if spec.kind == "disk":
        return spectra.disk_robin_spectrum(spec.radius, hv, count)
    if spec.kind == "rectangle":
        return spectra.rectangle_spectrum(spec.a, spec.b, hv, count)
    raise ValueError(f"no analytic spectrum for a {spec.kind}; use --fem")


def emit(text: str, path: Optional[str]) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
        return
    d = os.path.dirname(path)
    if d:
        os.makedirs(d, exist_ok=True)
    with open(path, "w") as f:
        f.write(text)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_spectrum(args) -> int:
    spec = build_domain(args)
    if args.fem:
        m = fem.mesh(spec, args.target_h)
        sp, _ = fem.solve_eigens(fem.assemble(m), args.count)
    else:
        sp = analytic_spectrum(spec, args.count)
    emit(sp.to_json() + "\n" if args.format == "json" else sp.to_csv(), args.out)
    return 0


def _fem_counts(spec: DomainSpec, count: int, target_h: Optional[float]):
    if target_h is None:
        guess = analytic_spectrum(spec, count).expanded()[count - 1] if spec.kind in ("disk", "rectangle") \
            and (spec.dirichlet or spec.h.is_constant) else None
        if guess is None:
            raise ValueError("give --target-h for this domain")
        target_h = fem.nodal_target_h(1.05 * max(float(guess), 1.0))
    m = fem.mesh(spec, target_h)
    sp, X = fem.solve_eigens(fem.assemble(m), count)
    mus = sp.expanded()[:count]
    for k in range(count):
        fem.require_nodal_resolution(m.target_h, float(mus[k]))
    counts = [nodal.nodal_domains(m, X[:, k])[0] for k in range(count)]
    return sp, counts


def cmd_nodal(args) -> int:
    spec = build_domain(args)
    if args.fem:
        sp, counts = _fem_counts(spec, args.count, args.target_h)
        rtol = verify.FEM_CLUSTER_RTOL
    else:
        sp = analytic_spectrum(spec, args.count)
        counts = nodal.analytic_counts(sp)
        rtol = spectra.CLUSTER_RTOL
    n = min(args.count, len(sp))
    try:
        sharp = nodal.courant_sharp_scan(sp, counts, upto=n, rtol=rtol)
        ok = True
    except nodal.CourantViolation as exc:
        log.error("%s", exc)
        sharp, ok = [], False
    rep = nodal.NodalReport(mu=sp.expanded()[:n].tolist(), nu=[int(c) for c in counts[:n]], sharp=sharp)
    emit(rep.to_json() + "\n" if args.format == "json" else rep.to_csv(), args.out)
    if args.plot_csv:
        emit(rep.plot_csv(), args.plot_csv)
    return 0 if ok else 1


def cmd_pleijel(args) -> int:
    spec = build_domain(args)
    sp = analytic_spectrum(spec, args.kmax)
    counts = nodal.analytic_counts(sp)
    ser = nodal.pleijel_series(sp, counts, args.kmax)
    gam = bounds.universal_constants(2)["gamma_n"]
    emit(ser.to_csv(), args.out)
    ok = ser.tail_max < gam
    print(f"tail max over k in [{ser.tail_window[0]}, {ser.tail_window[1]}]: {ser.tail_max:.6f} at k={ser.tail_argmax}; "
          f"gamma(2) = {gam:.10f}; {'PASS' if ok else 'FAIL'}", file=sys.stderr)
    return 0 if ok else 1


def cmd_courant_sharp(args) -> int:
    spec = build_domain(args)
    if args.fem:
        sp, counts = _fem_counts(spec, args.kmax, args.target_h)
        rtol, eig, combo = verify.FEM_CLUSTER_RTOL, "canonical", None
    else:
        sp = analytic_spectrum(spec, args.kmax)
        counts = nodal.analytic_counts(sp)
        rtol = spectra.CLUSTER_RTOL
        eig = args.eigenspace
        combo = (nodal.disk_rotation_counter(sp) if spec.kind == "disk" else nodal.rectangle_rotation_counter(sp)) \
            if eig == "rotation_grid" else None
    try:
        sharp = nodal.courant_sharp_scan(sp, counts, eig, combo=combo, upto=args.kmax, rtol=rtol)
        ok = True
    except nodal.CourantViolation as exc:
        log.error("%s", exc)
        sharp, ok = [], False
    mus = sp.expanded()
    g = summarize(spec)
    H = spec.h.H()
    doc = {"sharp": sharp, "sharp_mu": [float(mus[k - 1]) for k in sharp], "kmax": args.kmax}
    if g.t_plus is not None and sharp:
        ce = bounds.cs_eig_bound(g.V, g.delta1, g.rho, H)
        cc = bounds.cs_count_bound(g.V, g.t_plus, g.rho, H)
        obs_e = [({"V": g.V, "delta1": g.delta1, "rho": g.rho, "H": H}, float(mus[k - 1])) for k in sharp]
        obs_c = [({"V": g.V, "t_plus": g.t_plus, "rho": g.rho, "H": H}, k) for k in sharp]
        doc["cs_eig_bound_C1"] = ce
        doc["cs_count_bound_C1"] = cc
        doc["calibrated_C"] = {"cs_eig": bounds.calibrate_constant(obs_e, "cs_eig")["C"],
                               "cs_count": bounds.calibrate_constant(obs_c, "cs_count")["C"]}
    else:
        doc["note"] = "the Courant-sharp bounds need a C2 boundary; not evaluated"
    if args.expect:
        want = sorted(int(x) for x in str(args.expect).split(","))
        doc["expected"] = want
        ok &= sharp == want
    emit(json.dumps(verify._clean(doc), sort_keys=True) + "\n", args.out)
    return 0 if ok else 1


def cmd_bounds(args) -> int:
    spec = build_domain(args)
    rows = bounds.bound_table(spec, mu=args.mu, k=args.k, eta=args.eta)
    emit(bounds.bound_table_json(rows) + "\n" if args.format == "json" else bounds.bound_table_csv(rows), args.out)
    checks = [r.scale_check for r in rows if not math.isnan(r.scale_check)]
    return 0 if checks and max(checks) < 1e-10 else 1


def cmd_isoperimetric(args) -> int:
    spec = build_domain(args)
    layer = asym.BoundaryLayer.for_domain(spec, args.delta)
    corpus = asym.random_corpus(spec, layer, args.count, eps=args.eps, seed=args.seed)
    reps = [asym.isoperimetric_check(E, spec, layer, eps=args.eps, C1=args.C1) for E in corpus]
    fields = ["applicable", "volume", "layer_fraction", "lhs", "rhs", "A_tilde", "raw_ratio", "passed", "reason"]
    if args.format == "json":
        text = json.dumps(verify._clean([r.to_dict() for r in reps]), sort_keys=True) + "\n"
    else:
        lines = [",".join(["index"] + fields)]
        for i, r in enumerate(reps):
            d = r.to_dict()
            lines.append(",".join([str(i)] + [_fmt(d[f]) for f in fields]))
        text = "\n".join(lines) + "\n"
    emit(text, args.out)
    ok = all(r.applicable and r.passed for r in reps)
    print(f"{sum(1 for r in reps if r.applicable and r.passed)}/{len(reps)} pass; largest passing C1 "
          f"{asym.largest_passing_C1(reps, args.eps):.4g}", file=sys.stderr)
    return 0 if ok else 1


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.10g}"
    if v is None:
        return ""
    return str(v).replace(",", ";")


def cmd_polya_szego(args) -> int:
    spec = build_domain(args)
    if not spec.dirichlet:
        log.warning("the comparison needs functions vanishing on the boundary; Robin eigenfunctions may fail it")
    m = fem.mesh(spec, args.target_h)
    _, X = fem.solve_eigens(fem.assemble(m), args.count)
    fields = ["level", "lhs_energy", "rhs_energy", "grid_term", "tolerance", "passed", "flat_elements", "flat_area"]
    lines, ok = [",".join(["k"] + fields)], True
    for k in range(args.count):
        rep = asym.polya_szego_check(asym.P1Soup.from_mesh(m, X[:, k]).absolute(), n_levels=args.levels)
        ok &= rep.passed
        d = rep.to_dict()
        lines.append(",".join([str(k + 1)] + [_fmt(d[f]) for f in fields]))
    emit("\n".join(lines) + "\n", args.out)
    return 0 if ok else 1


def cmd_verify(args) -> int:
    if args.compare:
        res = verify.compare_runs(*args.compare)
        print(res.line())
        return 0 if res.passed else 1
    only = [int(x) for x in str(args.only).split(",")] if args.only else None
    results = verify.run_verify(only, n_workers=args.workers)
    if args.out:
        verify.write_outputs(results, args.out)
    for r in results:
        print(r.line())
    return 0 if all(r.passed for r in results) else 1


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _domain_options(p, default="disk"):
    p.add_argument("--domain", default=default,
                   help="disk, square, rectangle, a DomainSpec JSON file, or inline JSON")
    p.add_argument("--radius", type=float, default=1.0, help="disk radius")
    p.add_argument("--a", type=float, default=1.0, help="rectangle width (square side)")
    p.add_argument("--b", type=float, default=1.0, help="rectangle height")
    p.add_argument("--h", default=None, help="Robin parameter: number, comma list per segment, or 'dirichlet'")
    p.add_argument("--mode", choices=["robin", "neumann", "dirichlet"], default=None,
                   help="shorthand for --h 0 (neumann) or --h dirichlet")


def _output_options(p, formats=("csv", "json")):
    p.add_argument("--out", default=None, help="output path (stdout when omitted)")
    p.add_argument("--format", choices=list(formats), default=formats[0])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="robinlab", description=__doc__.splitlines()[0])
    parser.add_argument("--config", default=None, help="JSON file of option values")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectrum", help="analytic or FEM eigenvalues")
    _domain_options(p)
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--fem", action="store_true", help="use the finite element solver")
    p.add_argument("--target-h", type=float, default=0.03)
    _output_options(p)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("nodal", help="nodal counts with the Courant bound enforced")
    _domain_options(p)
    p.add_argument("--count", type=int, default=20)
    p.add_argument("--fem", action="store_true")
    p.add_argument("--target-h", type=float, default=None)
    p.add_argument("--plot-csv", default=None, help="also write the ratio series with the gamma reference row")
    _output_options(p)
    p.set_defaults(func=cmd_nodal)

    p = sub.add_parser("pleijel", help="nu(k)/k series and its tail maximum")
    _domain_options(p)
    p.add_argument("--kmax", type=int, default=2000)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_pleijel)

    p = sub.add_parser("courant-sharp", help="Courant-sharp indices and the bounds on them")
    _domain_options(p)
    p.add_argument("--kmax", type=int, default=200)
    p.add_argument("--eigenspace", choices=["canonical", "rotation_grid"], default="rotation_grid")
    p.add_argument("--fem", action="store_true")
    p.add_argument("--target-h", type=float, default=None)
    p.add_argument("--expect", default=None, help="comma list the sharp set must equal")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_courant_sharp)

    p = sub.add_parser("bounds", help="table of every bound with a rescaling self-check")
    _domain_options(p)
    p.add_argument("--mu", type=float, default=100.0)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--eta", type=float, default=None)
    _output_options(p)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("isoperimetric", help="randomized gated corpus for the isoperimetric check")
    _domain_options(p)
    p.add_argument("--count", type=int, default=50)
    p.add_argument("--delta", type=float, default=0.2)
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--C1", type=float, default=asym.DEFAULT_C1)
    p.add_argument("--seed", type=int, default=0)
    _output_options(p)
    p.set_defaults(func=cmd_isoperimetric)

    p = sub.add_parser("polya-szego", help="rearrangement energy comparison for FEM eigenfunctions")
    _domain_options(p, default="square")
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--target-h", type=float, default=0.02)
    p.add_argument("--levels", type=int, default=400)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_polya_szego)

    p = sub.add_parser("verify", help="run the acceptance criteria")
    p.add_argument("--only", default=None, help="comma list of criterion numbers")
    p.add_argument("--out", default=None, help="directory for summary.txt and results.json")
    p.add_argument("--workers", type=int, default=None,
                   help=f"process count for the corpus (default from {verify.WORKERS_ENV})")
    p.add_argument("--compare", nargs=2, metavar="DIR", default=None,
                   help="compare the outputs of two earlier runs byte for byte")
    p.set_defaults(func=cmd_verify)
    return parser


def load_config(path: str, parser: argparse.ArgumentParser, command: str) -> dict:
    try:
        with open(path) as f:
            doc = json.load(f)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be an object of option values")
    subp = parser._subparsers._group_actions[0].choices[command]
    known = {a.dest: a for a in subp._actions if a.dest != "help"}
    out = {}
    for key, val in doc.items():
        dest = key.lstrip("-").replace("-", "_")
        if dest in ("command", "subcommand"):
            continue
        if dest not in known:
            raise ConfigError(f"{path}: field {key!r} is not an option of '{command}'")
        act = known[dest]
        if act.type is not None and val is not None and not isinstance(val, bool):
            try:
                val = act.type(val)
            except (TypeError, ValueError):
                raise ConfigError(f"{path}: field {key!r} has invalid value {val!r}") from None
        if act.choices is not None and val not in act.choices:
            raise ConfigError(f"{path}: field {key!r} must be one of {sorted(act.choices)}")
        out[dest] = val
    return out


def main(argv=None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    if args.config:
        try:
            values = load_config(args.config, parser, args.command)
        except (ConfigError, OSError) as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return 2
        subp = parser._subparsers._group_actions[0].choices[args.command]
        subp.set_defaults(**values)
        args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"{args.command}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
