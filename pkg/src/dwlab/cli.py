"""Batch front door: build domains, fit and cache maps, run orbits, estimate
cluster sets, check the wedge construction, and emit verdict reports with
figures.

Exit codes: 0 success, 1 usage or configuration error, 2 verification
failure (reports are still written).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile

import numpy as np

from . import conformal, dynamics, geometry, plotting, primeends, wedgebuilder
from .dynamics import OrbitRecord

VERIFY_SCENARIOS = ("comb", "spiral", "koch", "control", "lehto", "all")


def _write_text_atomic(path, text):
    d = os.path.dirname(os.fspath(path)) or "."
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d)
    with os.fdopen(fd, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _write_json(path, doc):
    _write_text_atomic(path, json.dumps(_plain(doc), indent=2, sort_keys=True) + "\n")


def _plain(doc):
    if isinstance(doc, dict):
        return {k: _plain(v) for k, v in doc.items()}
    if isinstance(doc, (list, tuple)):
        return [_plain(v) for v in doc]
    if isinstance(doc, complex):
        return [doc.real, doc.imag]
    if isinstance(doc, (np.floating, np.integer)):
        return doc.item()
    if isinstance(doc, np.ndarray):
        return _plain(doc.tolist())
    if isinstance(doc, float) and not math.isfinite(doc):
        return str(doc)
    return doc


def _load_config(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        raise SystemExit2(f"cannot read config {path}: {e}")


class SystemExit2(RuntimeError):
    """Usage/config error -> exit 1."""


def _merge_config(args, parser_defaults, config):
    """Explicit flags win; config fills the rest; unknown keys are rejected."""
    if not config:
        return args
    known = set(vars(args))
    unknown = set(config) - known
    if unknown:
        raise SystemExit2(f"unknown config keys: {sorted(unknown)}")
    for key, value in config.items():
        if getattr(args, key) == parser_defaults.get(key):
            setattr(args, key, value)
    return args


def _domain_from_args(args):
    if getattr(args, "domain", None):
        with open(args.domain) as fh:
            return geometry.domain_from_json(json.load(fh))
    variant = args.variant
    if variant == "comb":
        return geometry.build_comb(args.a, args.slits)
    if variant == "spiral":
        return geometry.build_spiral(args.tmax)
    if variant == "koch":
        return geometry.build_koch(args.depth)
    if variant == "unitDisc":
        return geometry.UnitDisc()
    raise SystemExit2(f"cannot build variant {variant!r} from flags; "
                      "pass --domain <json>")


def _fixture_kwargs(args):
    kw = {}
    for flag, key in (("a", "a"), ("slits", "slit_count"), ("lam", "lam"),
                      ("delta", "delta"), ("tmax", "t_max"), ("depth", "depth"),
                      ("samples", "boundary_samples"), ("eps", "eps")):
        v = getattr(args, flag, None)
        if v is not None:
            kw[key] = v
    if getattr(args, "no_cache", False):
        kw["use_cache"] = False
    return kw


def _fixture_name(scenario):
    return {"comb": "comb-wedge", "spiral": "spiral-slice",
            "koch": "koch-slice", "control": "control-convergent"}[scenario]


# ---------------------------------------------------------------------------
# subcommand implementations
# ---------------------------------------------------------------------------

def cmd_domain(args):
    dom = _domain_from_args(args)
    if args.action == "build":
        out = args.out or "domain.json"
        _write_json(out, dom.to_json())
        print(f"wrote {out}")
    else:
        doc = dom.to_json()
        print(json.dumps(doc, indent=2, sort_keys=True))
        b = dom.boundary_points(256)
        print(f"# boundary sample span: Re [{b.real.min():.4g}, {b.real.max():.4g}] "
              f"Im [{b.imag.min():.4g}, {b.imag.max():.4g}]")
    return 0


def cmd_map(args):
    if args.action == "fit":
        dom = _domain_from_args(args)
        m = conformal.fit_with_cache(dom, args.samples,
                                     use_cache=not args.no_cache)
        out = args.out or "map.json"
        _write_json(out, m.to_json())
        rep = getattr(m, "fit_report", {})
        print(f"wrote {out}")
        if rep:
            print(json.dumps(_plain({"effective": rep.get("effective"),
                                     "validation": rep.get("validation")}),
                             indent=2, sort_keys=True))
        return 0
    with open(args.map) as fh:
        m = conformal.map_from_json(json.load(fh))
    z = complex(*[float(x) for x in args.at.split(",")])
    val = (m.eval_from_halfplane(np.array([z]))[0] if args.halfplane
           else m.evaluate(np.array([z]))[0])
    print(f"{val.real:.12g},{val.imag:.12g}")
    return 0


def cmd_orbit(args):
    fx = dynamics.build_fixture(_fixture_name(args.scenario), **_fixture_kwargs(args))
    f = fx.self_map
    z0 = np.zeros(2, dtype=complex)
    z0[0] = complex(*[float(x) for x in args.seed.split(",")])
    orbit = dynamics.iterate(f, z0, args.iters, floor=args.floor,
                             ambient=fx.ambient)
    out = args.out or f"orbit-{args.scenario}.csv"
    _write_text_atomic(out, orbit.to_csv())
    print(f"wrote {out} ({len(orbit)} rows)")
    for w in orbit.warnings:
        print(f"note: {w}", file=sys.stderr)
    return 0


def cmd_cluster(args):
    if args.action == "radial":
        dom = _domain_from_args(args)
        m = conformal.fit_with_cache(dom, args.samples,
                                     use_cache=not args.no_cache)
        sched = primeends.geometric_schedule(1.0, max(args.floor, m.trust_floor),
                                             args.points)
        est = primeends.radial_cluster_set(m, sched, args.eps)
        out = args.out or "cluster-radial.json"
        _write_json(out, est.to_json())
        print(f"wrote {out} ({len(est.points)} net points)")
        return 0
    with open(args.orbit) as fh:
        orbit = OrbitRecord.from_csv(fh.read())
    est = dynamics.target_set_estimate(orbit, args.eps, min_points=8)
    out = args.out or "cluster-orbit.json"
    _write_json(out, {"full": est["full"].to_json(),
                      "second": est["second"].to_json(),
                      "first": est["first"].to_json(),
                      "warnings": est["warnings"]})
    print(f"wrote {out}")
    return 0


def cmd_wedge(args):
    if not 9.0 * args.a ** 2 / 4.0 < args.delta ** 2:
        raise SystemExit2(
            f"size relation 9a^2/4 < delta^2 fails: "
            f"{9 * args.a ** 2 / 4:.6g} >= {args.delta ** 2:.6g}")
    comb = geometry.build_comb(args.a, args.slits)
    g = conformal.fit_with_cache(comb, args.samples, use_cache=not args.no_cache)
    v = geometry.Disc(0.5 * args.a, 0.5 * args.a)
    phi_env = wedgebuilder.estimate_phi(g, v)
    phi_hat = wedgebuilder.concave_majorant(phi_env)
    psi0_fn = wedgebuilder.psi0(phi_hat)
    if args.action == "build":
        out = args.out or "wedge.json"
        _write_json(out, {"a": args.a, "delta": args.delta,
                          "phi": phi_env.to_json(),
                          "phiHat": phi_hat.to_json(),
                          "psi0": psi0_fn.to_json()})
        print(f"wrote {out}")
        return 0
    report = wedgebuilder.verify_graph_in_wedge(g, v, psi0_fn, args.delta,
                                                args.a, samples=args.wedge_samples)
    out = args.out or "wedge-check.json"
    _write_json(out, report)
    print(json.dumps(_plain(report), indent=2, sort_keys=True))
    return 0 if report["pass"] else 2


def _verify_one(scenario, args, outdir):
    """Run one scenario; returns (check_results, artifacts)."""
    checks = {}
    if scenario == "lehto":
        comb = geometry.build_comb(args.a, args.slits)
        g = conformal.fit_with_cache(comb, args.samples,
                                     use_cache=not args.no_cache)
        inner = dynamics._reference_inner(args.lam)
        w = [1.0 + 0j]
        while True:
            nxt = complex(inner(np.array([w[-1]]))[0])
            if nxt.real < args.floor:
                break
            w.append(nxt)
        rep = primeends.verify_lehto(g, np.array(w), 1.0 + 1e-9, args.eps,
                                     tolerance=args.tol)
        checks["hypothesesMet"] = rep.get("hypothesesMet", False)
        checks["equalityWithinTolerance"] = bool(rep.get("pass", False))
        ctl = primeends.verify_lehto(conformal.make_cayley_map(),
                                     0.5 ** np.arange(1, 61), 1.0 + 1e-9,
                                     args.eps, tolerance=1e-6)
        checks["controlSingleton"] = bool(ctl.get("pass", False))
        _write_json(outdir / "report.json", {"scenario": "lehto", "comb": rep,
                                             "control": ctl, "checks": checks})
        return checks, rep

    fx = dynamics.build_fixture(_fixture_name(scenario), **_fixture_kwargs(args))
    verdict_tol = args.tol if scenario == "control" else 1e-3
    rep = dynamics.denjoy_wolff_report(
        fx, m=args.iters,
        seed=(complex(*[float(x) for x in args.seed.split(",")]), 0.0),
        floor=args.floor, eps=args.eps, verdict_tol=verdict_tol)
    checks["verdictMatches"] = bool(rep["match"])
    checks["stepsNonIncreasing"] = bool(rep["stepsNonIncreasing"])
    checks["stolzBounded"] = bool(rep["stolzMaxRatio"] <= 1.0 + 1e-9)
    if scenario == "comb":
        checks["targetDiameter"] = bool(
            rep["targetDiameter"] >= 1.0 / 3.0 - args.tol)
        checks["firstCoordinateCollapses"] = bool(
            rep["firstCoordinateSpread"] <= 1e-3)
    if scenario == "control":
        checks["singletonTarget"] = bool(rep["targetDiameter"] <= args.tol)
        checks["atOrigin"] = bool(rep["hausdorffToOracle"] <= args.tol)
    if scenario == "koch":
        dim = geometry.box_counting_dimension(geometry.koch_boundary_cloud(6))
        rep["boxCountingDimension"] = dim["dimension"]
        checks["dimensionInRange"] = bool(1.18 <= dim["dimension"] <= 1.34)

    # artifacts: report + orbit + figure
    f = fx.self_map
    z0 = np.zeros(2, dtype=complex)
    z0[0] = complex(*[float(x) for x in args.seed.split(",")])
    orbit = dynamics.iterate(f, z0, args.iters, floor=args.floor,
                             ambient=fx.ambient)
    _write_text_atomic(outdir / "orbit.csv", orbit.to_csv())
    rep["checks"] = checks
    _write_json(outdir / "report.json", rep)
    dom = {"comb": geometry.build_comb(args.a, args.slits),
           "spiral": geometry.build_spiral(args.tmax),
           "koch": geometry.build_koch(6),
           "control": None}[scenario]
    plotting.render_scene(outdir / "figure.svg", domain=dom,
                          orbit_points=orbit.second_coords(),
                          oracle_points=fx.oracle.points,
                          title=f"{fx.name}: verdict {rep['verdict']}")
    return checks, rep


def cmd_verify(args):
    from pathlib import Path
    scenarios = [args.scenario] if args.scenario != "all" else \
        ["comb", "spiral", "koch", "control", "lehto"]
    failures = 0
    for sc in scenarios:
        outdir = Path(args.out) / sc
        outdir.mkdir(parents=True, exist_ok=True)
        checks, rep = _verify_one(sc, args, outdir)
        ok = all(checks.values())
        failures += 0 if ok else 1
        status = "ok" if ok else "FAILED"
        print(f"verify {sc}: {status}")
        for name, val in checks.items():
            print(f"    {name}: {'pass' if val else 'FAIL'}")
        if sc != "lehto" and "verdict" in rep:
            print(f"    verdict: {rep['verdict']} (target diameter "
                  f"{rep['targetDiameter']:.4g})")
    return 0 if failures == 0 else 2


def cmd_plot(args):
    dom = None
    orbit_pts = None
    oracle_pts = None
    if args.domain:
        with open(args.domain) as fh:
            dom = geometry.domain_from_json(json.load(fh))
    if args.orbit:
        with open(args.orbit) as fh:
            orbit = OrbitRecord.from_csv(fh.read())
        orbit_pts = orbit.second_coords()
    if args.set:
        with open(args.set) as fh:
            doc = json.load(fh)
        est = primeends.CompactSetEstimate.from_json(
            doc["second"] if "second" in doc else doc)
        oracle_pts = est.points
    if dom is None and orbit_pts is None and oracle_pts is None:
        raise SystemExit2("nothing to plot: pass --domain, --orbit or --set")
    plotting.render_scene(args.out, domain=dom, orbit_points=orbit_pts,
                          oracle_points=oracle_pts, title=args.title)
    print(f"wrote {args.out}")
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _add_common(p, *names):
    if "a" in names:
        p.add_argument("--a", type=float, default=1.0)
    if "slits" in names:
        p.add_argument("--slits", type=int, default=40)
    if "lam" in names:
        p.add_argument("--lambda", dest="lam", type=float, default=0.5)
    if "delta" in names:
        p.add_argument("--delta", type=float, default=2.0)
    if "tmax" in names:
        p.add_argument("--tmax", type=float, default=8.0)
    if "depth" in names:
        p.add_argument("--depth", type=int, default=4)
    if "samples" in names:
        p.add_argument("--samples", type=int, default=2048,
                       help="boundary samples for map fits")
    if "iters" in names:
        p.add_argument("--iters", type=int, default=2000)
    if "floor" in names:
        p.add_argument("--floor", type=float, default=1e-6)
    if "eps" in names:
        p.add_argument("--eps", type=float, default=0.02)
    if "tol" in names:
        p.add_argument("--tol", type=float, default=0.05)
    if "seed" in names:
        p.add_argument("--seed", type=str, default="1,0",
                       help="seed first coordinate re,im")
    if "cache" in names:
        p.add_argument("--no-cache", action="store_true")
    p.add_argument("--config", type=str, default=None,
                   help="JSON config merged under explicit flags")
    p.add_argument("--out", type=str, default=None)


def build_parser():
    ap = argparse.ArgumentParser(prog="dw-lab",
                                 description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("domain", help="build or show a domain description")
    p.add_argument("action", choices=["build", "show"])
    p.add_argument("--variant", default="comb",
                   choices=["comb", "spiral", "koch", "unitDisc"])
    p.add_argument("--domain", type=str, default=None)
    _add_common(p, "a", "slits", "tmax", "depth")
    p.set_defaults(fn=cmd_domain)

    p = sub.add_parser("map", help="fit a conformal map or evaluate one")
    p.add_argument("action", choices=["fit", "eval"])
    p.add_argument("--domain", type=str, default=None)
    p.add_argument("--variant", default="comb",
                   choices=["comb", "spiral", "koch", "unitDisc"])
    p.add_argument("--map", type=str, default=None)
    p.add_argument("--at", type=str, default="0.5,0")
    p.add_argument("--halfplane", action="store_true",
                   help="evaluate in the canonical half-plane chart")
    _add_common(p, "a", "slits", "tmax", "depth", "samples", "cache")
    p.set_defaults(fn=cmd_map)

    p = sub.add_parser("orbit", help="iterate a fixture self-map")
    p.add_argument("action", choices=["run"])
    p.add_argument("--scenario", default="comb",
                   choices=["comb", "spiral", "koch", "control"])
    _add_common(p, "a", "slits", "lam", "delta", "tmax", "depth", "samples",
                "iters", "floor", "eps", "seed", "cache")
    p.set_defaults(fn=cmd_orbit)

    p = sub.add_parser("cluster", help="cluster-set estimates")
    p.add_argument("action", choices=["radial", "orbit"])
    p.add_argument("--domain", type=str, default=None)
    p.add_argument("--variant", default="comb",
                   choices=["comb", "spiral", "koch", "unitDisc"])
    p.add_argument("--orbit", type=str, default=None)
    p.add_argument("--points", type=int, default=2000)
    _add_common(p, "a", "slits", "tmax", "depth", "samples", "floor", "eps",
                "cache")
    p.set_defaults(fn=cmd_cluster)

    p = sub.add_parser("wedge", help="build or check the trapping wedge")
    p.add_argument("action", nargs="?", choices=["build", "check"],
                   default="check")
    p.add_argument("--wedge-samples", type=int, default=10000)
    _add_common(p, "a", "slits", "delta", "samples", "cache")
    p.set_defaults(fn=cmd_wedge)

    p = sub.add_parser("verify", help="run scenario verdict checks")
    p.add_argument("scenario", choices=VERIFY_SCENARIOS)
    _add_common(p, "a", "slits", "lam", "delta", "tmax", "depth", "samples",
                "iters", "floor", "eps", "tol", "seed", "cache")
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("plot", help="render an SVG from artifacts")
    p.add_argument("--domain", type=str, default=None)
    p.add_argument("--orbit", type=str, default=None)
    p.add_argument("--set", type=str, default=None)
    p.add_argument("--title", type=str, default=None)
    p.add_argument("--config", type=str, default=None)
    p.add_argument("--out", type=str, default="figure.svg")
    p.set_defaults(fn=cmd_plot)

    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    defaults = {a.dest: a.default for g in ap._subparsers._group_actions
                for a in g.choices[args.command]._actions}
    try:
        if getattr(args, "config", None):
            args = _merge_config(args, defaults, _load_config(args.config))
        if args.command == "verify" and args.out is None:
            args.out = "dw-lab-out"
        code = args.fn(args)
    except SystemExit2 as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except (ValueError, FileNotFoundError, KeyError, conformal.FitError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    return code


if __name__ == "__main__":
    sys.exit(main())
