import json
import math

import numpy as np
import pytest

from dwlab import geometry
from dwlab.conformal import (
    CompositeMap,
    FitError,
    WeldedMap,
    angular_derivative,
    fit_with_cache,
    make_cayley_map,
    make_disc_identity,
    make_halfplane_scaling,
    make_quarterdisc_map,
    make_tangent_disc_map,
    map_from_json,
    normalize_prime_end,
    zipper_fit,
)


def interior_grid(rng, n, radius=0.7):
    z = rng.uniform(-radius, radius, 4 * n) + 1j * rng.uniform(-radius, radius, 4 * n)
    return z[np.abs(z) < radius][:n]


def align_rotation(fitted, oracle, probe=0.3 + 0j):
    """Source rotation matching two disc-source maps of the same domain."""
    target = complex(oracle.evaluate(np.array([probe]))[0])
    pre = complex(fitted.inverse_evaluate(np.array([target]))[0])
    return np.angle(pre / probe)


# ---- closed forms ----------------------------------------------------------

def test_disc_identity_and_cayley_values():
    ident = make_disc_identity()
    assert complex(ident.evaluate(np.array([0j]))[0]) == 0
    cay = make_cayley_map()
    assert abs(complex(cay.evaluate(np.array([0j]))[0]) - 1.0) < 1e-15


def test_quarterdisc_closed_form_ranges_and_inverse():
    qd = make_quarterdisc_map()
    rng = np.random.default_rng(0)
    z = interior_grid(rng, 300, 0.9)
    q = qd.evaluate(z)
    assert np.all(np.abs(q) < 1) and np.all(q.real > 0) and np.all(q.imag > 0)
    assert np.max(np.abs(qd.inverse_evaluate(q) - z)) < 1e-12


def test_unit_disc_fit_short_circuits_to_identity():
    m = zipper_fit(geometry.UnitDisc(), 128)
    rng = np.random.default_rng(1)
    z = interior_grid(rng, 50)
    assert np.max(np.abs(m.evaluate(z) - z)) == 0


# ---- welded maps vs oracles ------------------------------------------------

def test_welded_circle_matches_identity():
    boundary = np.exp(2j * np.pi * np.arange(512) / 512)
    m = zipper_fit(geometry.PolylineJordan(boundary), 512, base=0j)
    rng = np.random.default_rng(2)
    z = interior_grid(rng, 200, 0.7)
    rot = align_rotation(m, make_disc_identity())
    sup = np.max(np.abs(m.evaluate(z * np.exp(1j * rot)) - z))
    assert sup < 1e-3


def test_welded_quarterdisc_matches_closed_form(quarter_weld):
    qd = make_quarterdisc_map()
    rng = np.random.default_rng(3)
    z = interior_grid(rng, 200, 0.6)
    rot = align_rotation(quarter_weld, qd)
    sup = np.max(np.abs(quarter_weld.evaluate(z * np.exp(1j * rot)) - qd.evaluate(z)))
    assert sup < 1e-3


def test_welded_map_preserves_hyperbolic_distance(quarter_weld):
    # pullback distance through the fitted map agrees with the closed form
    from dwlab.hyperbolic import dist_disc, dist_pullback
    qd = make_quarterdisc_map()
    rng = np.random.default_rng(17)
    z = interior_grid(rng, 40, 0.6)
    pts = qd.evaluate(z)
    for p, q in zip(pts[:-1:2], pts[1::2]):
        exact = dist_disc(complex(qd.inverse_evaluate(np.array([p]))[0]),
                          complex(qd.inverse_evaluate(np.array([q]))[0]))
        fitted = dist_pullback(quarter_weld, p, q)
        assert abs(fitted - exact) < 1e-3


def test_welded_map_injective_on_grid(quarter_weld):
    from scipy.spatial import cKDTree
    g = np.linspace(-0.9, 0.9, 64)
    zz = (g[:, None] + 1j * g[None, :]).ravel()
    zz = zz[np.abs(zz) < 0.92]
    img = np.asarray(quarter_weld.evaluate(zz))
    tree = cKDTree(np.column_stack([img.real, img.imag]))
    d, i = tree.query(np.column_stack([img.real, img.imag]), k=2)
    assert d[:, 1].min() > 0


def test_welded_round_trip_hundred_points(quarter_weld):
    rng = np.random.default_rng(4)
    z = interior_grid(rng, 100, 0.75)
    w = quarter_weld.evaluate(z)
    back = quarter_weld.inverse_evaluate(w, tol=1e-8)
    assert np.max(np.abs(quarter_weld.evaluate(back) - w)) < 1e-8


def test_weld_rejects_nonsimple_polygon():
    bow = np.array([0, 1 + 1j, 1, 1j], dtype=complex)  # self-crossing
    with pytest.raises(FitError):
        zipper_fit(geometry.PolylineJordan(bow), 128)


def test_fit_reports_carry_vertex_diagnostics():
    with pytest.raises(FitError):
        # far too few samples for a weld
        WeldedMap.weld(np.array([0, 1, 1j]), ["", "", ""], 0.2 + 0.2j)


# ---- the comb map ----------------------------------------------------------

def test_comb_fit_validates_and_reports_truncation(comb_map):
    rep = comb_map.fit_report
    assert rep["validation"]["angles_monotone"]
    assert rep["validation"]["round_trip"] < 1e-6
    assert rep["effective"]["slitCount"] >= 2


def test_comb_base_normalization(comb_map):
    g1 = complex(comb_map.eval_from_halfplane(np.array([1.0]))[0])
    assert abs(g1 - (0.75 + 0.25j)) < 1e-5


def test_comb_images_inside_effective_comb(comb_map):
    eff = geometry.build_comb(1.0, comb_map.fit_report["effective"]["slitCount"])
    rng = np.random.default_rng(5)
    z = rng.uniform(0.02, 3.0, 300) + 1j * rng.uniform(-3.0, 3.0, 300)
    vals = comb_map.eval_from_halfplane(z)
    assert np.all(eff.contains_many(vals))


def test_comb_radial_reaches_into_corridors(comb_map):
    rs = np.array([1.0, 1e-2, 1e-4, 1e-6])
    vals = comb_map.eval_from_halfplane(rs)
    re = vals.real
    assert np.all(np.diff(re) < 0)          # marches toward the deep end
    assert re[-1] < 0.05                     # well under the first teeth
    assert np.all(np.abs(vals.imag) < 0.5)


def test_comb_deep_corridor_round_trip(comb_map):
    # image point with Re about 1e-3, reached radially
    lo, hi = 1e-8, 1.0
    for _ in range(60):
        mid = math.sqrt(lo * hi)
        if comb_map.eval_from_halfplane(np.array([mid]))[0].real > 1e-3:
            hi = mid
        else:
            lo = mid
    r = hi
    w = comb_map.eval_from_halfplane(np.array([r]))
    back = comb_map.inverse_to_halfplane(w)
    fwd = comb_map.eval_from_halfplane(back)
    assert abs(complex(fwd[0]) - complex(w[0])) < 1e-6


def test_comb_refit_is_deterministic(comb_map):
    again = zipper_fit(geometry.build_comb(1.0, 40), 2048)
    assert len(again.ops) == len(comb_map.ops)
    for (k1, a1, b1, c1), (k2, a2, b2, c2) in zip(again.ops, comb_map.ops):
        assert k1 == k2 and a1 == a2 and b1 == b2 and c1 == c2
    assert again.u_base == comb_map.u_base


def test_serialization_round_trip(comb_map):
    doc = json.loads(json.dumps(comb_map.to_json()))
    back = map_from_json(doc)
    rng = np.random.default_rng(6)
    z = interior_grid(rng, 40)
    assert np.max(np.abs(back.evaluate(z) - comb_map.evaluate(z))) == 0


def test_fit_cache_round_trip(tmp_path, monkeypatch):
    monkeypatch.setenv("DW_LAB_CACHE", str(tmp_path))
    dom = geometry.build_comb(1.0, 6)
    m1 = fit_with_cache(dom, 256)
    files = list(tmp_path.glob("fit-*.json"))
    assert len(files) == 1
    m2 = fit_with_cache(dom, 256)
    rng = np.random.default_rng(7)
    z = interior_grid(rng, 20)
    assert np.max(np.abs(m1.evaluate(z) - m2.evaluate(z))) == 0


def test_boundary_angles_monotone(comb_map):
    ang = np.unwrap(comb_map.angles)
    diffs = np.diff(ang)
    assert np.all(diffs > -1e-9) or np.all(diffs < 1e-9)


# ---- prime-end normalization and the angular derivative --------------------

def test_normalize_cayley_radial_limit_zero():
    cay = normalize_prime_end(make_cayley_map(), 0.0)
    rs = np.array([1e-2, 1e-4, 1e-6])
    vals = cay.eval_from_halfplane(rs)
    assert np.all(np.abs(vals) < 3 * rs)


def test_normalize_welded_requires_matching_seam(comb_map):
    assert normalize_prime_end(comb_map, 0.0) is comb_map
    with pytest.raises(ValueError):
        normalize_prime_end(comb_map, 1.0 + 0.5j)


def test_comb_real_part_decays_along_radius(comb_map):
    rs = np.array([1.0, 1e-2, 1e-4, 1e-6])
    re = comb_map.eval_from_halfplane(rs).real
    assert np.all(np.diff(re) < 0)


def test_spiral_modulus_grows_along_radius(spiral_map):
    rs = np.array([1.0, 1e-2, 1e-4, 1e-6])
    mags = np.abs(spiral_map.eval_from_halfplane(rs))
    assert np.all(np.diff(mags) > 0)
    assert mags[-1] > 0.5


def test_angular_derivative_tangent_disc():
    val, err = angular_derivative(make_tangent_disc_map())
    assert abs(val - 1.0) < 1e-4
    assert err < 1e-3


def test_angular_derivative_scaling():
    val, _ = angular_derivative(make_halfplane_scaling(2.0))
    assert abs(val - 2.0) < 1e-9


def test_angular_derivative_of_scaled_inner_composition():
    lam = 0.5
    phi = make_tangent_disc_map()

    class Scaled:
        source = "halfPlane"
        trust_floor = 0.0

        def eval_from_halfplane(self, z):
            return phi.eval_from_halfplane(lam * np.asarray(z, complex))

    val, _ = angular_derivative(Scaled())
    assert abs(val - 0.5) < 1e-4


def test_angular_derivative_comb_reflects_truncation(comb_map):
    # the truncated comb has an accessible end with a huge radial derivative
    # (it grows with the resolved depth; the untruncated domain has none)
    val, _err = angular_derivative(comb_map)
    assert math.isinf(val) or val > 1e3


def test_angular_derivative_divergence_flag():
    class Sqrt:
        source = "halfPlane"
        trust_floor = 0.0

        def eval_from_halfplane(self, z):
            return np.sqrt(np.asarray(z, complex))

    val, err = angular_derivative(Sqrt())
    assert math.isinf(val)


def test_composite_map_chains_evaluations(spiral_map):
    outer = make_disc_identity()
    comp = CompositeMap(outer, spiral_map)
    rs = np.array([1e-2, 1e-3])
    assert np.max(np.abs(comp.eval_from_halfplane(rs)
                         - spiral_map.eval_from_halfplane(rs))) == 0


def test_spiral_effective_truncation_reported(spiral_map):
    assert spiral_map.fit_report["effective"]["tMax"] >= 1.9
