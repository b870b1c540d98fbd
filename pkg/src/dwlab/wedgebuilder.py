"""Construction of the convex wedge that traps a graph: the increasing
envelope of Re g over a planar slice, its strictly concave majorant, the
convex inverse, a smooth even strongly convex minorant, the Levi form of
the resulting boundary, and the product-slice fixture.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.interpolate import PchipInterpolator

from .geometry import Disc, Domain, Wedge


class MonotoneFn:
    """Piecewise-linear function given by knots, linear beyond the last knot.

    Abscissas are strictly increasing; values non-decreasing (strictly when
    built by `concave_majorant` / `psi0`).  Inversion swaps the knot columns.
    """

    def __init__(self, knots):
        k = np.asarray(knots, dtype=float)
        if k.ndim != 2 or k.shape[1] != 2 or len(k) < 2:
            raise ValueError("knots must be an (n, 2) array with n >= 2")
        if np.any(np.diff(k[:, 0]) <= 0):
            raise ValueError("knot abscissas must be strictly increasing")
        if np.any(np.diff(k[:, 1]) < 0):
            raise ValueError("knot values must be non-decreasing")
        self.knots = k

    @property
    def t(self):
        return self.knots[:, 0]

    @property
    def y(self):
        return self.knots[:, 1]

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        t, y = self.t, self.y
        out = np.interp(x, t, y)
        # linear extension beyond the last knot
        hi = x > t[-1]
        if np.any(hi):
            slope = (y[-1] - y[-2]) / (t[-1] - t[-2])
            out = np.where(hi, y[-1] + slope * (x - t[-1]), out)
        lo = x < t[0]
        if np.any(lo):
            slope = (y[1] - y[0]) / (t[1] - t[0])
            out = np.where(lo, y[0] + slope * (x - t[0]), out)
        return out if out.ndim else float(out)

    def inverse(self) -> "MonotoneFn":
        if np.any(np.diff(self.y) <= 0):
            raise ValueError("only strictly increasing functions invert to a "
                             "function; values have flat spots")
        return MonotoneFn(np.column_stack([self.y, self.t]))

    def is_strictly_increasing(self) -> bool:
        return bool(np.all(np.diff(self.y) > 0))

    def second_differences(self):
        t, y = self.t, self.y
        s = np.diff(y) / np.diff(t)
        return np.diff(s)

    def is_convex(self, tol: float = 1e-12) -> bool:
        return bool(np.all(self.second_differences() >= -tol))

    def is_concave(self, tol: float = 1e-12) -> bool:
        return bool(np.all(self.second_differences() <= tol))

    def to_json(self):
        return {"knots": self.knots.tolist()}

    @classmethod
    def from_json(cls, doc):
        return cls(doc["knots"])


def _near_boundary_arc(v_a, n=4096, pull=1e-7):
    """Points just inside the V boundary; Re g is harmonic, so the running
    sup over {Re <= t} is governed by this arc plus the cross sections."""
    if isinstance(v_a, Disc):
        th = 2 * np.pi * np.arange(n) / n
        pts = v_a.center + v_a.radius * (1.0 - pull) * np.exp(1j * th)
        return pts[v_a.contains_many(pts)]
    b = v_a.boundary_points(n)
    centroid = complex(np.mean(b))
    pts = centroid + (b - centroid) * (1.0 - 1e-5)
    return pts[v_a.contains_many(pts)]


def _stratum_transverse(v_a, t, y0, y1):
    """Transverse sample heights for the slice {Re = t}: a coarse pass finds
    the admissible band, then points pile up geometrically at both edges."""
    wide = np.linspace(y0, y1, 201)
    member = v_a.contains_many(t + 1j * wide)
    if not np.any(member):
        return None
    lo, hi = wide[member].min(), wide[member].max()
    width = hi - lo
    if width <= 0:
        return np.array([0.5 * (lo + hi)])
    edge = width * np.exp(np.linspace(math.log(1e-7), math.log(0.5), 9))
    ys = np.concatenate([[lo], lo + edge, [0.5 * (lo + hi)], hi - edge[::-1], [hi]])
    return np.clip(ys, lo, hi)


def estimate_phi(g, v_a: Domain, grid: int = 2000, bound: float = 1e6,
                 rng=None) -> MonotoneFn:
    """Increasing envelope t -> sup { Re g(zeta) : zeta in V_a, Re zeta <= t }.

    Sampled on a grid stratified by Re zeta and monotonized by a running
    maximum; the value at 0 is pinned to 0 (the graph map sends the wedge
    end to the boundary of its image there).
    """
    if grid < 1000:
        raise ValueError("need at least 1000 grid samples")
    if rng is None:
        rng = np.random.default_rng(1729)
    pts = v_a.sample_interior(grid, rng)
    # stratify down to the evaluation floor; each stratum gets a transverse
    # grid fitted to the slice width there (near 0 the slice is a thin lens)
    # and concentrated at the lens edges, where Re g peaks
    x0, x1, y0, y1 = v_a.bounding_box()
    extra = []
    for t in np.exp(np.linspace(math.log(5e-7), math.log(max(x1, 1e-3)), 60)):
        ys = _stratum_transverse(v_a, t, y0, y1)
        if ys is None:
            continue
        cand = t + 1j * ys
        cand = cand[v_a.contains_many(cand)]
        extra.extend(cand.tolist())
    extra.extend(_near_boundary_arc(v_a).tolist())
    if extra:
        pts = np.concatenate([pts, np.asarray(extra)])
    vals = np.asarray(g.eval_from_halfplane(pts), dtype=complex)
    if np.any(~np.isfinite(vals)) or np.max(np.abs(vals)) > bound:
        raise ValueError("graph map unbounded on the slice sample")
    order = np.argsort(pts.real)
    xs = pts.real[order]
    re = vals.real[order]
    env = np.maximum.accumulate(re)
    # decimate to knot list on a log-ish grid of Re values
    knot_t = np.unique(np.concatenate([
        [0.0],
        np.exp(np.linspace(math.log(max(xs[0] * 0.999, 1e-9)), math.log(xs[-1]), 120)),
        [xs[-1]],
    ]))
    knot_y = np.concatenate([[0.0],
                             [env[xs <= t].max() if np.any(xs <= t) else 0.0
                              for t in knot_t[1:]]])
    knot_y = np.maximum.accumulate(np.maximum(knot_y, 0.0))
    keep = np.concatenate([[True], np.diff(knot_t) > 0])
    return MonotoneFn(np.column_stack([knot_t[keep], knot_y[keep]]))


def least_concave_majorant(knots) -> np.ndarray:
    """Upper concave envelope of the knot set (upper convex hull by x)."""
    k = np.asarray(knots, dtype=float)
    pts = k[np.argsort(k[:, 0])]
    hull = []
    for p in pts:
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            # drop the middle point when it lies below the chord
            if (y2 - y1) * (p[0] - x1) <= (p[1] - y1) * (x2 - x1) + 1e-15:
                hull.pop()
            else:
                break
        hull.append((p[0], p[1]))
    return np.asarray(hull)


def concave_majorant(phi: MonotoneFn, margin_scale: float = 1e-3) -> MonotoneFn:
    """Strictly concave, strictly increasing majorant of phi vanishing at 0.

    Least concave majorant of the knots plus the strictly concave margin
    margin_scale * sqrt(t), so the domination is strict at every positive
    knot.
    """
    hull = least_concave_majorant(phi.knots)
    t = np.unique(np.concatenate([phi.t, hull[:, 0]]))
    hull_fn = MonotoneFn(hull if hull[0, 0] == 0.0 else
                         np.vstack([[0.0, 0.0], hull]))
    y = np.asarray(hull_fn(t)) + margin_scale * np.sqrt(np.maximum(t, 0.0))
    if t[0] > 0.0:
        t = np.concatenate([[0.0], t])
        y = np.concatenate([[0.0], y])
    else:
        y[0] = 0.0
    out = MonotoneFn(np.column_stack([t, y]))
    if not out.is_concave(1e-9):
        raise ValueError("majorant lost concavity")
    if not out.is_strictly_increasing():
        raise ValueError("majorant is not strictly increasing")
    vals = out(phi.t[phi.t > 0])
    if np.any(vals <= phi.y[phi.t > 0]):
        raise ValueError("majorant fails strict domination")
    return out


def psi0(phi_hat: MonotoneFn) -> MonotoneFn:
    """Inverse of the concave majorant: convex, strictly increasing, 0 at 0."""
    inv = phi_hat.inverse()
    if not inv.is_convex(1e-9):
        raise ValueError("inverse lost convexity")
    return inv


def verify_graph_in_wedge(g, v_a: Domain, psi0_fn: MonotoneFn, delta: float,
                          a: float, samples: int = 10000, rng=None) -> dict:
    """Check the wedge trap on samples: Re z1 > psi0(Re g(z1)) strictly and
    ||(z1, g(z1))|| < delta, under the size relation 9 a^2 / 4 < delta^2."""
    if not 9.0 * a * a / 4.0 < delta * delta:
        raise ValueError(
            f"size relation violated: need 9 a^2/4 < delta^2, got "
            f"{9 * a * a / 4:.6g} >= {delta * delta:.6g}")
    if samples < 10000:
        raise ValueError("need at least 1e4 samples")
    if rng is None:
        rng = np.random.default_rng(271828)
    pts = v_a.sample_interior(samples, rng)
    x0, x1, y0, y1 = v_a.bounding_box()
    extra = []
    for t in np.exp(np.linspace(math.log(1e-6), math.log(max(x1, 1e-3)), 60)):
        ys = _stratum_transverse(v_a, t, y0, y1)
        if ys is None:
            continue
        mids = np.linspace(ys.min(), ys.max(), 15)
        cand = t + 1j * np.concatenate([ys, mids])
        extra.extend(cand[v_a.contains_many(cand)].tolist())
    extra.extend(_near_boundary_arc(v_a, n=2048, pull=3e-6).tolist())
    if extra:
        pts = np.concatenate([pts, np.asarray(extra)])
    gv = np.asarray(g.eval_from_halfplane(pts), dtype=complex)
    lhs = pts.real
    rhs = np.asarray(psi0_fn(gv.real))
    violations = int(np.sum(lhs <= rhs))
    norms = np.sqrt(np.abs(pts) ** 2 + np.abs(gv) ** 2)
    report = {
        "samples": int(len(pts)),
        "violations": violations,
        "worstMargin": float(np.min(lhs - rhs)),
        "maxNorm": float(np.max(norms)),
        "delta": delta,
        "pass": bool(violations == 0 and np.max(norms) < delta),
    }
    return report


class SmoothConvexFn:
    """Even convex function with two derivatives: integral of an odd smooth
    strictly increasing slope."""

    def __init__(self, slope_knots, mu: float, tanh_scale: float):
        k = np.asarray(slope_knots, dtype=float)
        self._interp = PchipInterpolator(k[:, 0], k[:, 1])
        self._anti = self._interp.antiderivative()
        self._deriv = self._interp.derivative()
        self.knots = k
        self.mu = float(mu)
        self.tanh_scale = float(tanh_scale)
        self.t_max = k[-1, 0]

    def _slope_raw(self, u):
        u = np.asarray(u, dtype=float)
        inside = np.clip(u, 0.0, self.t_max)
        s = np.asarray(self._interp(inside))
        beyond = u > self.t_max
        if np.any(beyond):
            s = np.where(beyond, self.knots[-1, 1], s)
        return s

    def slope(self, t):
        """The odd slope function."""
        t = np.asarray(t, dtype=float)
        u = np.abs(t)
        s = self._slope_raw(u) + self.mu * np.tanh(u / self.tanh_scale)
        return np.sign(t) * s

    def value(self, t):
        t = np.asarray(t, dtype=float)
        u = np.abs(t)
        inside = np.clip(u, 0.0, self.t_max)
        base = np.asarray(self._anti(inside)) - float(self._anti(0.0))
        beyond = u > self.t_max
        if np.any(beyond):
            base = np.where(beyond,
                            base + self.knots[-1, 1] * (u - self.t_max), base)
        extra = self.mu * self.tanh_scale * np.log(np.cosh(u / self.tanh_scale))
        out = base + extra
        return out if out.ndim else float(out)

    def __call__(self, t):
        return self.value(t)

    def second_derivative(self, t):
        t = np.asarray(t, dtype=float)
        u = np.abs(t)
        inside = np.clip(u, 0.0, self.t_max)
        d = np.asarray(self._deriv(inside))
        d = np.where(u > self.t_max, 0.0, d)
        d = d + (self.mu / self.tanh_scale) / np.cosh(u / self.tanh_scale) ** 2
        return d if d.ndim else float(d)

    def to_json(self):
        return {"slopeKnots": self.knots.tolist(), "mu": self.mu,
                "tanhScale": self.tanh_scale}


def smooth_psi(psi0_fn: MonotoneFn, slack: float = 1e-3) -> SmoothConvexFn:
    """Build the even smooth strongly convex minorant of t -> psi0(|t|).

    The piecewise slopes of psi0 increase; the smooth slope interpolates
    values held strictly below the left slope of each interval, so the
    integral stays below psi0 while the second derivative stays positive.
    """
    t = psi0_fn.t
    y = psi0_fn.y
    slopes = np.diff(y) / np.diff(t)
    if np.any(slopes <= 0):
        raise ValueError("psi0 must be strictly increasing")
    if np.any(np.diff(slopes) < -1e-12):
        raise ValueError("psi0 slopes are not non-decreasing; domination by an "
                         "increasing odd slope is impossible")
    slopes = np.maximum.accumulate(slopes)
    # knot j carries (1 - slack) * slope of the interval ending at t_j, so on
    # [t_j, t_{j+1}] the smooth slope stays below slope_j <= psi0' there
    vals = np.concatenate([[0.0], (1.0 - slack) * slopes])
    vals = np.maximum.accumulate(vals)
    for j in range(1, len(vals)):
        if vals[j] <= vals[j - 1]:
            vals[j] = vals[j - 1] * (1 + 1e-9) + 1e-15
    knots = np.column_stack([t, vals])
    mu = slack * float(slopes[0])
    scale = max(float(t[-1]) / 3.0, 1e-6)
    fn = SmoothConvexFn(knots, mu, scale)
    # certificates
    grid = np.linspace(-t[-1], t[-1], 1001)
    grid = grid[grid != 0.0]
    if not np.all(fn.second_derivative(grid) > 0):
        raise ValueError("second derivative not positive off 0")
    pg = np.abs(grid)
    if not np.all(fn.value(grid) <= np.asarray(psi0_fn(pg)) + 1e-12):
        raise ValueError("smooth minorant exceeds psi0(|t|)")
    return fn


def levi_form(psi: SmoothConvexFn, p2: complex, v2: complex) -> float:
    """Boundary Hermitian form of {Re z1 > psi(Re z2)} at a point with second
    coordinate p2, tangent direction second coordinate v2."""
    return float(psi.second_derivative(complex(p2).real)) * abs(complex(v2)) ** 2 / 4.0


# ---------------------------------------------------------------------------
# product-slice fixture
# ---------------------------------------------------------------------------

class SliceModelDomain:
    """Bounded convex model in C^2 with the disc {0} x 4D on its boundary:
    intersection of Re z1 > 0, |z2| < 4 and ||z|| < 5."""

    radius_cylinder = 4.0
    radius_ball = 5.0

    def contains_pair(self, z1: complex, z2: complex) -> bool:
        z1, z2 = complex(z1), complex(z2)
        return (z1.real > 0 and abs(z2) < self.radius_cylinder
                and math.hypot(abs(z1), abs(z2)) < self.radius_ball)

    def contains_many_pairs(self, z1, z2):
        z1 = np.atleast_1d(np.asarray(z1, complex))
        z2 = np.atleast_1d(np.asarray(z2, complex))
        return ((z1.real > 0) & (np.abs(z2) < self.radius_cylinder)
                & (np.sqrt(np.abs(z1) ** 2 + np.abs(z2) ** 2) < self.radius_ball))

    def slice_domain(self) -> Disc:
        # z2 = 0 slice is the right half disc of radius 5; the inscribed round
        # description used downstream is the half-scale copy handle
        return Disc(0.0, self.radius_ball)


def slice_scenario(samples: int = 10000, rng=None) -> dict:
    """Verify the product containment V x 2D x {0} inside the model domain,
    with V the half-scale slice, via the midpoint construction."""
    if rng is None:
        rng = np.random.default_rng(424242)
    omega = SliceModelDomain()
    # V = {zeta : 2 zeta in D}, D = slice of the model: half disc radius 5
    # -> V = half disc radius 2.5
    n = samples
    z1 = rng.uniform(0, 2.5, n) + 1j * rng.uniform(-2.5, 2.5, n)
    keep = (np.abs(z1) < 2.5) & (z1.real > 0)
    z1 = z1[keep]
    z2 = (rng.uniform(-2, 2, len(z1)) + 1j * rng.uniform(-2, 2, len(z1)))
    z2 = np.where(np.abs(z2) < 2.0, z2, z2 * (1.9 / np.maximum(np.abs(z2), 1e-9)))
    ok = omega.contains_many_pairs(z1, z2)
    # the midpoint identity: (2 zeta, 0) and (0, 2 eta) average to (zeta, eta)
    mid_err = float(np.max(np.abs(0.5 * (2 * z1 + 0) - z1))
                    + np.max(np.abs(0.5 * (2 * z2 + 0) - z2)))
    report = {
        "samples": int(len(z1)),
        "containmentViolations": int(np.sum(~ok)),
        "midpointIdentityError": mid_err,
        "pass": bool(np.all(ok) and mid_err < 1e-12),
    }
    if not report["pass"]:
        bad = np.where(~ok)[0]
        if len(bad):
            report["witness"] = [z1[bad[0]].real, z1[bad[0]].imag,
                                 z2[bad[0]].real, z2[bad[0]].imag]
    return report


def build_wedge(v: Domain, psi0_fn: MonotoneFn, delta: float) -> Wedge:
    return Wedge(v, psi0_fn, delta)
