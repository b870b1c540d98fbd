"""Acceptance criteria, one test per numbered criterion.

Each test prints `ACCEPTANCE <n>: PASS|FAIL - <measurement>` before asserting,
so a full run always shows the measured values for every criterion.
"""

import math
import time

import numpy as np

from dwlab import conformal, dynamics, geometry, hyperbolic, wedgebuilder
from dwlab.primeends import (
    CompactSetEstimate,
    geometric_schedule,
    hausdorff_distance,
    principal_part_comb,
    radial_cluster_set,
    verify_lehto,
)


def _report(n, ok, detail):
    print(f"\nACCEPTANCE {n}: {'PASS' if ok else 'FAIL'} - {detail}")
    return ok


def test_criterion_1_comb_principal_part(comb_map):
    """Radial cluster of the comb map vs the oracle segment [-i/6, i/6],
    a = 1, slits >= 40, boundary samples >= 2048, floor 1e-6, tol 0.05."""
    t0 = time.time()
    sched = geometric_schedule(1.0, 1e-6, 2000)
    est = radial_cluster_set(comb_map, sched, eps=0.02)
    oracle = principal_part_comb(1.0, eps=0.01)
    d = hausdorff_distance(est, oracle)
    elapsed = time.time() - t0
    ok = d <= 0.05 and elapsed <= 120
    _report(1, ok, f"Hausdorff(radial estimate, segment) = {d:.4f} "
                   f"(tolerance 0.05, {elapsed:.1f}s; fitted truncation "
                   f"resolves {comb_map.fit_report['effective']['slitCount']} teeth, "
                   f"radial reach at the 1e-6 floor spans the first gates only)")
    assert ok, (f"estimate sits {d:.3f} from the oracle segment; the 1e-6 "
                "floor explores only the outermost corridor gates")


def test_criterion_2_denjoy_wolff_failure(comb_fixture):
    t0 = time.time()
    rep = dynamics.denjoy_wolff_report(comb_fixture, m=2000,
                                       seed=(1.0 + 0.0j, 0.0 + 0.0j),
                                       floor=1e-6, eps=0.02,
                                       verdict_tol=1.0 / 3.0 - 0.05)
    elapsed = time.time() - t0
    ok = (rep["verdict"] == "FAILS"
          and rep["targetDiameter"] >= 1.0 / 3.0 - 0.05
          and rep["firstCoordinateSpread"] <= 1e-3
          and elapsed <= 60)
    _report(2, ok, f"verdict {rep['verdict']}, second-coordinate diameter "
                   f"{rep['targetDiameter']:.4f} >= {1/3 - 0.05:.4f}, first "
                   f"coordinate within {rep['firstCoordinateSpread']:.2e} of 0 "
                   f"({elapsed:.1f}s)")
    assert ok


def test_criterion_3_cluster_equality(comb_map, comb_orbit):
    w = comb_orbit.first_coords()
    assert hyperbolic.stolz_check(w, 1.0 + 1e-9)
    assert math.isfinite(hyperbolic.step_bound(w))
    rep = verify_lehto(comb_map, w, 1.0 + 1e-9, eps=0.02, tolerance=0.05)
    ctl = verify_lehto(conformal.make_cayley_map(), 0.5 ** np.arange(1, 61),
                       1.0 + 1e-9, eps=0.1, tolerance=1e-6)
    rad = CompactSetEstimate.from_json(ctl["radial"])
    seq = CompactSetEstimate.from_json(ctl["sequence"])
    ctl_sing = (max(np.max(np.abs(rad.points)), np.max(np.abs(seq.points)))
                <= 1e-6)
    ok = (rep["hypothesesMet"] and rep["pass"]
          and ctl["pass"] and ctl_sing)
    _report(3, ok, f"comb: Hausdorff(radial, orbit cluster) = "
                   f"{rep['distance']:.4f} <= 0.05; control: distance "
                   f"{ctl['distance']:.2e} with both estimates at 0 "
                   f"within 1e-6")
    assert ok


def test_criterion_4_contraction_behavior():
    details = []
    ok = True
    for name in ["comb-wedge", "spiral-slice", "koch-slice",
                 "control-convergent"]:
        fx = dynamics.build_fixture(name)
        orbit = dynamics.iterate(fx.self_map, np.array([1.0 + 0j, 0j]), 2000,
                                 floor=1e-6, ambient=fx.ambient)
        steps = orbit.step_dists[1:]
        noninc = bool(np.all(np.diff(steps) <= 1e-9))
        stolz = float(np.max(orbit.stolz_ratios))
        re1 = orbit.first_coords().real
        below = np.where(re1 < 1e-5)[0]
        fast = len(below) > 0 and below[0] <= 40
        ok = ok and noninc and stolz <= 1.0 + 1e-9 and fast
        details.append(f"{name}: steps nonincreasing={noninc}, "
                       f"max ratio={stolz:.10f}, Re<1e-5 at m={below[0] if len(below) else '-'}")
    _report(4, ok, "; ".join(details))
    assert ok


def test_criterion_5_wedge_containment(comb_map):
    v = geometry.Disc(0.5, 0.5)
    phi = wedgebuilder.estimate_phi(comb_map, v)
    psi0_fn = wedgebuilder.psi0(wedgebuilder.concave_majorant(phi))
    rep = wedgebuilder.verify_graph_in_wedge(comb_map, v, psi0_fn, delta=2.0,
                                             a=1.0, samples=10000)
    guard = False
    try:
        wedgebuilder.verify_graph_in_wedge(comb_map, v, psi0_fn, delta=1.4,
                                           a=1.0, samples=10000)
    except ValueError as e:
        guard = "9 a^2/4" in str(e)
    ok = rep["pass"] and rep["violations"] == 0 and rep["maxNorm"] < 2.0 and guard
    _report(5, ok, f"{rep['samples']} samples, {rep['violations']} violations, "
                   f"max norm {rep['maxNorm']:.4f} < 2, worst margin "
                   f"{rep['worstMargin']:.2e}; delta=1.4 rejected={guard}")
    assert ok


def test_criterion_6_smooth_regularization(comb_map):
    v = geometry.Disc(0.5, 0.5)
    phi = wedgebuilder.estimate_phi(comb_map, v)
    psi0_fn = wedgebuilder.psi0(wedgebuilder.concave_majorant(phi))
    psi = wedgebuilder.smooth_psi(psi0_fn)
    t_max = psi0_fn.t[-1]
    grid = np.linspace(-t_max, t_max, 1001)
    grid = grid[grid != 0]
    second = psi.second_derivative(grid)
    minorant = np.all(psi.value(grid) <= np.asarray(psi0_fn(np.abs(grid))) + 1e-12)
    at_zero = (psi(0.0) == 0.0 and abs(float(psi.slope(0.0))) == 0.0)
    levi_pos = all(wedgebuilder.levi_form(psi, p2, 1.0) > 0
                   for p2 in [0.4, -0.8, 1.3])
    levi_zero = wedgebuilder.levi_form(psi, 0.7, 0.0) == 0.0
    ok = bool(at_zero and np.all(second > 0) and minorant and levi_pos
              and levi_zero)
    _report(6, ok, f"psi(0)=psi'(0)=0: {at_zero}; psi''>0 on grid: "
                   f"{bool(np.all(second > 0))} (min {second.min():.3e}); "
                   f"psi <= psi0(|t|): {minorant}; Levi positive off 0 and "
                   f"zero for v2=0: {levi_pos and levi_zero}")
    assert ok


def test_criterion_7_spiral_target(spiral_map):
    t0 = time.time()
    fx = dynamics.build_fixture("spiral-slice")
    rep = dynamics.denjoy_wolff_report(fx, m=2000, floor=1e-6, eps=0.05,
                                       verdict_tol=1e-3)
    elapsed = time.time() - t0
    d = rep["hausdorffToOracle"]
    ok = d <= 0.1 and elapsed <= 180
    _report(7, ok, f"Hausdorff(target estimate, unit circle) = {d:.3f} "
                   f"(tolerance 0.1, verdict {rep['verdict']}, "
                   f"estimate winds {rep['targetDiameter']:.3f} across, "
                   f"{elapsed:.1f}s; reachable depth covers about one winding)")
    assert ok, (f"estimate sits {d:.2f} from the circle; the 1e-6 floor "
                "reaches only the first winding of the spiral corridor")


def test_criterion_8_koch_example():
    dim = geometry.box_counting_dimension(geometry.koch_boundary_cloud(6))
    dim_ok = 1.18 <= dim["dimension"] <= 1.34
    fx = dynamics.build_fixture("koch-slice")
    rep = dynamics.denjoy_wolff_report(fx, m=2000, floor=1e-6, eps=0.05,
                                       verdict_tol=1e-3)
    containment = rep["defectEstimateToOracle"]
    cont_ok = containment <= 0.1
    ok = dim_ok and cont_ok
    _report(8, ok, f"box-counting dimension {dim['dimension']:.4f} in "
                   f"[1.18, 1.34]: {dim_ok}; target estimate within 0.1 of "
                   f"the snowflake boundary: {cont_ok} "
                   f"(defect {containment:.3f})")
    assert ok, ("composite pipeline target sits inside the snowflake at "
                f"defect {containment:.2f}; reachable depth is mid-domain")


def test_criterion_9_conformal_engine(quarter_weld):
    rng = np.random.default_rng(42)
    # fitted maps vs closed forms
    circle = np.exp(2j * np.pi * np.arange(512) / 512)
    disc_weld = conformal.zipper_fit(geometry.PolylineJordan(circle), 512,
                                     base=0j)
    z = rng.uniform(-0.6, 0.6, 600) + 1j * rng.uniform(-0.6, 0.6, 600)
    z = z[np.abs(z) < 0.6][:300]
    probe = complex(disc_weld.inverse_evaluate(np.array([0.3 + 0j]))[0])
    rot = np.angle(probe / 0.3)
    e_disc = float(np.max(np.abs(disc_weld.evaluate(z * np.exp(1j * rot)) - z)))
    qd = conformal.make_quarterdisc_map()
    probe_q = complex(quarter_weld.inverse_evaluate(
        qd.evaluate(np.array([0.3 + 0j])))[0])
    rot_q = np.angle(probe_q / 0.3)
    e_quarter = float(np.max(np.abs(
        quarter_weld.evaluate(z * np.exp(1j * rot_q)) - qd.evaluate(z))))
    cay = conformal.make_cayley_map()
    e_cayley = float(np.max(np.abs(
        cay.evaluate(z) - (1 - z) / (1 + z))))
    fits_ok = e_disc < 1e-3 and e_quarter < 1e-3 and e_cayley < 1e-12

    # metric axioms + invariance at 1e-10 on 1e3 samples
    inv_ok = True
    for _ in range(1000):
        a = 0.7 * rng.uniform(0, 1) * np.exp(2j * np.pi * rng.uniform())
        th = rng.uniform(0, 2 * np.pi)
        p = 0.9 * rng.uniform(0, 1) * np.exp(2j * np.pi * rng.uniform())
        q = 0.9 * rng.uniform(0, 1) * np.exp(2j * np.pi * rng.uniform())
        u = 0.9 * rng.uniform(0, 1) * np.exp(2j * np.pi * rng.uniform())
        tp = np.exp(1j * th) * (p - a) / (1 - np.conj(a) * p)
        tq = np.exp(1j * th) * (q - a) / (1 - np.conj(a) * q)
        dpq = hyperbolic.dist_disc(p, q)
        if (abs(hyperbolic.dist_disc(tp, tq) - dpq) > 1e-10
                or abs(dpq - hyperbolic.dist_disc(q, p)) > 1e-10
                or dpq > hyperbolic.dist_disc(p, u)
                       + hyperbolic.dist_disc(u, q) + 1e-10):
            inv_ok = False
            break

    knots = np.column_stack([np.linspace(0, 2, 21),
                             np.linspace(0, 2, 21) ** 2 / 4])
    wedge = geometry.Wedge(geometry.Disc(0.5, 0.5),
                           wedgebuilder.MonotoneFn(knots), 2.0)
    bounds_ok = True
    count = 0
    worst_gap = 0.0
    while count < 1000:
        z1 = rng.uniform(0.05, 0.95) + 1j * rng.uniform(-0.4, 0.4)
        z2 = rng.uniform(0.05, 0.9) + 1j * rng.uniform(-0.4, 0.4)
        w1 = rng.uniform(0.05, 0.95) + 1j * rng.uniform(-0.4, 0.4)
        w2 = rng.uniform(0.05, 0.9) + 1j * rng.uniform(-0.4, 0.4)
        if not (wedge.contains_pair(z1, z2) and wedge.contains_pair(w1, w2)):
            continue
        lo, up = hyperbolic.kobayashi_bounds_c2(wedge, [z1, z2], [w1, w2],
                                                refine=4)
        if lo > up + 1e-12:
            bounds_ok = False
            break
        worst_gap = max(worst_gap, lo - up)
        count += 1
    ok = fits_ok and inv_ok and bounds_ok
    _report(9, ok, f"fit errors: disc {e_disc:.2e}, quarter {e_quarter:.2e}, "
                   f"cayley {e_cayley:.2e} (tol 1e-3); invariance to 1e-10: "
                   f"{inv_ok}; lower<=upper on 1000 wedge pairs: {bounds_ok}")
    assert ok


def test_criterion_10_control_fixture(control_fixture):
    rep = dynamics.denjoy_wolff_report(control_fixture, m=2000, floor=1e-6,
                                       eps=1e-3, verdict_tol=1e-3)
    ok = (rep["verdict"] == "HOLDS" and rep["targetDiameter"] <= 1e-3
          and rep["hausdorffToOracle"] <= 1e-3)
    _report(10, ok, f"verdict {rep['verdict']}, target diameter "
                    f"{rep['targetDiameter']:.2e} <= 1e-3, distance to 0 "
                    f"{rep['hausdorffToOracle']:.2e}")
    assert ok
