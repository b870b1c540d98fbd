import numpy as np
import pytest

from dwlab import conformal, geometry, hyperbolic, wedgebuilder
from dwlab.hyperbolic import (
    dist_disc,
    dist_halfplane,
    dist_pullback,
    kobayashi_bounds_c2,
    kobayashi_royden_planar,
    step_bound,
    stolz_check,
)


def atanh_series(x, terms=60):
    """Independent oracle: atanh by its power series."""
    return sum(x ** (2 * k + 1) / (2 * k + 1) for k in range(terms))


def disc_automorphism(a, theta):
    def t(z):
        return np.exp(1j * theta) * (z - a) / (1 - np.conj(a) * z)
    return t


def test_dist_disc_examples():
    assert dist_disc(0, 0) == 0
    assert abs(dist_disc(0, 0.5) - atanh_series(0.5)) < 1e-12
    assert abs(dist_disc(0, 0.5) - 0.549306) < 1e-6


def test_dist_disc_moebius_invariance():
    rng = np.random.default_rng(5)
    for _ in range(1000):
        a = (rng.uniform(-0.9, 0.9) + 1j * rng.uniform(-0.9, 0.9)) * 0.7
        t = disc_automorphism(a, rng.uniform(0, 2 * np.pi))
        z = rng.uniform(-0.7, 0.7) + 1j * rng.uniform(-0.7, 0.7)
        w = rng.uniform(-0.7, 0.7) + 1j * rng.uniform(-0.7, 0.7)
        assert abs(dist_disc(t(z), t(w)) - dist_disc(z, w)) < 1e-12


def test_dist_halfplane_examples():
    assert dist_halfplane(1, 1) == 0
    assert abs(dist_halfplane(1, 3) - atanh_series(0.5)) < 1e-12


def test_dist_halfplane_scaling_invariance():
    rng = np.random.default_rng(6)
    for _ in range(200):
        z = rng.uniform(0.1, 3) + 1j * rng.uniform(-2, 2)
        w = rng.uniform(0.1, 3) + 1j * rng.uniform(-2, 2)
        t = rng.uniform(0.1, 10)
        assert abs(dist_halfplane(t * z, t * w) - dist_halfplane(z, w)) < 1e-12


def test_dist_halfplane_matches_cayley_pullback():
    rng = np.random.default_rng(7)
    for _ in range(200):
        z = rng.uniform(0.05, 3) + 1j * rng.uniform(-2, 2)
        w = rng.uniform(0.05, 3) + 1j * rng.uniform(-2, 2)
        zd, wd = geometry.cayley_inverse(z), geometry.cayley_inverse(w)
        assert abs(dist_halfplane(z, w) - dist_disc(zd, wd)) < 1e-11


def test_dist_halfplane_deep_points_stable():
    d = dist_halfplane(1e-200, 2e-200)
    assert abs(d - atanh_series(1 / 3)) < 1e-12


def test_metric_axioms_random_triples():
    rng = np.random.default_rng(8)
    for _ in range(1000):
        z, w, u = (rng.uniform(0.0, 0.9) * np.exp(1j * rng.uniform(0, 2 * np.pi))
                   for _ in range(3))
        dzw = dist_disc(z, w)
        assert abs(dzw - dist_disc(w, z)) < 1e-12
        assert dzw <= dist_disc(z, u) + dist_disc(u, w) + 1e-10
    for _ in range(1000):
        z, w, u = (rng.uniform(0.05, 3) + 1j * rng.uniform(-2, 2)
                   for _ in range(3))
        dzw = dist_halfplane(z, w)
        assert abs(dzw - dist_halfplane(w, z)) < 1e-12
        assert dzw <= dist_halfplane(z, u) + dist_halfplane(u, w) + 1e-10


def test_schwarz_pick_for_inner_map():
    h = lambda z: z / (z + 2.0)  # the lambda = 1/2 inner factor
    rng = np.random.default_rng(9)
    for _ in range(300):
        z = rng.uniform(0.05, 3) + 1j * rng.uniform(-2, 2)
        w = rng.uniform(0.05, 3) + 1j * rng.uniform(-2, 2)
        if z == w:
            continue
        assert dist_halfplane(h(z), h(w)) < dist_halfplane(z, w) + 1e-9


def test_pullback_through_closed_form():
    m = conformal.make_round_disc_map(1 + 1j, 2.0)
    rng = np.random.default_rng(10)
    for _ in range(100):
        z = rng.uniform(-0.7, 0.7) + 1j * rng.uniform(-0.7, 0.7)
        w = rng.uniform(-0.7, 0.7) + 1j * rng.uniform(-0.7, 0.7)
        p, q = m.evaluate(np.array([z]))[0], m.evaluate(np.array([w]))[0]
        assert abs(dist_pullback(m, p, q) - dist_disc(z, w)) < 1e-10


def test_pullback_equal_points():
    m = conformal.make_disc_identity()
    assert dist_pullback(m, 0.3, 0.3) == 0


def test_kobayashi_royden_disc_identity():
    m = conformal.make_disc_identity()
    assert abs(kobayashi_royden_planar(m, 0.0, 1.0) - 1.0) < 1e-8
    assert abs(kobayashi_royden_planar(m, 0.5, 1.0) - 4.0 / 3.0) < 1e-8


def test_kobayashi_royden_halfplane_value():
    m = conformal.make_cayley_map()  # disc onto half plane
    assert abs(kobayashi_royden_planar(m, 1.0, 1.0) - 0.5) < 1e-7


def test_kobayashi_royden_rejects_zero_direction():
    with pytest.raises(ValueError):
        kobayashi_royden_planar(conformal.make_disc_identity(), 0.0, 0.0)


def test_step_bound_examples():
    assert step_bound([0.5, 0.5, 0.5]) == 0
    w = 0.5 ** np.arange(1, 20)
    b = step_bound(w)
    assert abs(b - atanh_series(1 / 3)) < 1e-12
    # orbit of the inner map: steps non-increasing
    z = [1.0]
    for _ in range(25):
        z.append(z[-1] / (z[-1] + 2.0))
    steps = [dist_halfplane(a, b) for a, b in zip(z, z[1:])]
    assert all(s2 <= s1 + 1e-12 for s1, s2 in zip(steps, steps[1:]))


def test_stolz_check_examples():
    radial = 0.5 ** np.arange(1, 20)
    assert stolz_check(radial, 2.0)
    tangential = np.array([2.0 ** -n * (1 + n * 1j) for n in range(1, 25)])
    assert not stolz_check(tangential, 10.0)


def _wedge():
    knots = np.column_stack([np.linspace(0, 2, 21),
                             np.linspace(0, 2, 21) ** 2 / 4])
    psi = wedgebuilder.MonotoneFn(knots)
    return geometry.Wedge(geometry.Disc(0.5, 0.5), psi, 2.0)


def test_kobayashi_bounds_equal_points():
    w = _wedge()
    lo, up = kobayashi_bounds_c2(w, [0.5, 0.5], [0.5, 0.5])
    assert lo == 0 and up == 0


def test_kobayashi_bounds_order_on_random_pairs():
    w = _wedge()
    rng = np.random.default_rng(11)
    count = 0
    while count < 1000:
        z1 = rng.uniform(0.05, 0.95) + 1j * rng.uniform(-0.4, 0.4)
        z2 = rng.uniform(0.05, 0.9) + 1j * rng.uniform(-0.4, 0.4)
        w1 = rng.uniform(0.05, 0.95) + 1j * rng.uniform(-0.4, 0.4)
        w2 = rng.uniform(0.05, 0.9) + 1j * rng.uniform(-0.4, 0.4)
        if not (w.contains_pair(z1, z2) and w.contains_pair(w1, w2)):
            continue
        lo, up = kobayashi_bounds_c2(w, [z1, z2], [w1, w2], refine=8)
        assert lo <= up + 1e-12
        count += 1


def test_kobayashi_upper_close_to_ball_oracle():
    w = _wedge()
    # both points on one complex line inside a safe ball
    c = np.array([0.5 + 0.0j, 0.4 + 0.0j])
    r = hyperbolic._wedge_inradius(w, c[0], c[1])
    assert r > 0.05
    d = np.array([1.0 + 0.0j, 0.0 + 0.0j]) * (0.3 * r)
    p, q = c - d, c + d
    lo, up = kobayashi_bounds_c2(w, p, q)
    oracle = hyperbolic._disc_distance_in_ball(p, q, c, r)
    # the chain bound may beat the single-ball oracle (bigger discs fit the
    # wedge); it must not exceed it by more than 10%
    assert up <= oracle * 1.10
    assert lo <= up
