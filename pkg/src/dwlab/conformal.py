"""Numerical Riemann maps.

Closed forms cover the disc, half plane, round discs and the square-corner
fixtures; everything else is fitted by conformal welding: the boundary is
unzipped point by point with arc maps u = sqrt(v^2 + c^2) (after a Moebius
v = w/(1 - w/b)), slit teeth are welded as whole arcs, and every step is
followed by a rescale so the working scale stays O(1).  After a slit weld
the chain recenters on the continuation side through the cancellation-free
identity u - s*c = v^2 / (u + s*c).

Welding a domain whose boundary hides structure behind long thin corridors
loses that structure to rounding: the harmonic measure of material beyond a
corridor of width w and depth d scales like exp(-pi d / w), and once that
drops below float resolution the weld cannot represent it.  Fits therefore
back off to the deepest resolvable truncation and report it
(`fit_report["effective"]`), instead of failing or silently producing noise.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from pathlib import Path

import numpy as np

from . import geometry
from .geometry import (
    Comb,
    Disc,
    Koch,
    PolylineJordan,
    RightHalfPlane,
    Spiral,
    UnitDisc,
    spiral_curve,
)

DEFAULT_TRUST_FLOOR = 1e-6


class FitError(RuntimeError):
    def __init__(self, message, vertex_index=None):
        super().__init__(message)
        self.vertex_index = vertex_index


class InverseError(RuntimeError):
    def __init__(self, message, best_residual):
        super().__init__(message)
        self.best_residual = best_residual


class NoAngularDerivativeError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# elementary maps of the upper half plane chain
# ---------------------------------------------------------------------------

def _arc_apply(w, b, c):
    """Weld the arc from 0 to the parameter encoded by (b, c).

    v = w/(1 - w/b) then u = sqrt(v^2 + c^2), branch in the closed upper half
    plane; exactly-real inputs continue with their sign (they sit on the
    already-welded rim).
    """
    w = np.asarray(w, dtype=complex)
    with np.errstate(all="ignore"):
        if np.isinf(b):
            v = w.copy()
        else:
            v = np.where(np.isinf(w), -b + 0j, w / (1.0 - w / b))
        real_mask = v.imag == 0.0
        t = v / c
        s = c * np.sqrt(t * t + 1.0)
        big = np.abs(v) > 1e15 * c
        if np.any(big):
            vb = np.where(big, v, 1.0)
            s = np.where(big, vb * np.sqrt(1.0 + (c / vb) ** 2), s)
        s_real = np.sign(v.real) * np.abs(s)
        s_cplx = np.where(s.imag < 0, -s, s)
        return np.where(real_mask, s_real, s_cplx)


def _arc_invert(u, b, c):
    u = np.asarray(u, dtype=complex)
    with np.errstate(all="ignore"):
        real_mask = u.imag == 0.0
        ur = u.real
        inside = np.abs(ur) < c
        v_real = np.where(
            inside,
            1j * np.sqrt(np.maximum((c - ur) * (c + ur), 0.0)),
            np.sign(ur) * np.sqrt(np.maximum((ur - c) * (ur + c), 0.0)),
        )
        # product form keeps precision where u hugs the rim near +-c
        s = np.sqrt((u - c) * (u + c))
        big = np.abs(u) > 1e150
        if np.any(big):
            ub = np.where(big, u, 1.0)
            s = np.where(big, ub * np.sqrt(1.0 - (c / ub) ** 2), s)
        s = np.where(s.imag < 0, -s, s)
        v = np.where(real_mask, v_real, s)
        if np.isinf(b):
            return v
        return v / (1.0 + v / b)


def _arc_apply_recentered(w, b, c, side):
    """Arc weld followed by the stable shift u -> u - side*c."""
    w = np.asarray(w, dtype=complex)
    with np.errstate(all="ignore"):
        if np.isinf(b):
            v = w.copy()
        else:
            v = np.where(np.isinf(w), -b + 0j, w / (1.0 - w / b))
        u = _arc_apply(w, b, c)
        return v * (v / (u + side * c))


def _arc_invert_recentered(u_shifted, b, c, side):
    """Inverse of the recentered arc weld, straight from the shifted frame.

    With u = u_shifted + side*c one has u^2 - c^2 = u_shifted (u_shifted +
    2 side c), which never re-forms the lost difference.
    """
    w = np.asarray(u_shifted, dtype=complex)
    with np.errstate(all="ignore"):
        t = w * (w + 2.0 * side * c)
        real_mask = w.imag == 0.0
        tr = t.real
        u_real = w.real + side * c
        v_real = np.where(tr < 0, 1j * np.sqrt(np.maximum(-tr, 0.0)),
                          np.sign(u_real) * np.sqrt(np.maximum(tr, 0.0)))
        s = np.sqrt(t)
        s = np.where(s.imag < 0, -s, s)
        v = np.where(real_mask, v_real, s)
        if np.isinf(b):
            return v
        return v / (1.0 + v / b)


OP_ARC = 0
OP_ARCREC = 1
OP_SCALE = 2


def _chain_apply(ops, w):
    w = np.asarray(w, dtype=complex)
    with np.errstate(all="ignore"):
        for kind, p1, p2, p3 in ops:
            if kind == OP_ARC:
                w = _arc_apply(w, p1, p2)
            elif kind == OP_ARCREC:
                w = _arc_apply_recentered(w, p1, p2, p3)
            else:
                w = w / p1
    return w


def _chain_invert(ops, w):
    w = np.asarray(w, dtype=complex)
    with np.errstate(all="ignore"):
        for kind, p1, p2, p3 in reversed(ops):
            if kind == OP_ARC:
                w = _arc_invert(w, p1, p2)
            elif kind == OP_ARCREC:
                w = _arc_invert_recentered(w, p1, p2, p3)
            else:
                w = w * p1
    return w


# ---------------------------------------------------------------------------
# conformal map interface
# ---------------------------------------------------------------------------

class ConformalMap:
    """Common surface: evaluate / inverse_evaluate in source coordinates plus
    a canonical half-plane chart with the distinguished prime end at 0 and
    the base point at 1."""

    source = "unitDisc"
    trust_floor = DEFAULT_TRUST_FLOOR

    def evaluate(self, z):
        raise NotImplementedError

    def inverse_evaluate(self, w, tol: float = 1e-8):
        raise NotImplementedError

    def eval_from_halfplane(self, z):
        raise NotImplementedError

    def to_json(self) -> dict:
        raise NotImplementedError


class ClosedFormMap(ConformalMap):
    """Named elementary map with exact forward/inverse formulas."""

    def __init__(self, name, source, forward, inverse, params=None,
                 prime_end_angle=None):
        self.name = name
        self.source = source
        self._forward = forward
        self._inverse = inverse
        self.params = params or {}
        self.prime_end_angle = prime_end_angle
        self.trust_floor = 1e-300  # formulas are exact

    def evaluate(self, z):
        z = np.asarray(z, dtype=complex)
        return self._forward(z)

    def inverse_evaluate(self, w, tol: float = 1e-8):
        w = np.asarray(w, dtype=complex)
        return self._inverse(w)

    def eval_from_halfplane(self, z):
        z = np.asarray(z, dtype=complex)
        if self.source == "halfPlane":
            return self.evaluate(z)
        theta = self.prime_end_angle
        if theta is None:
            raise ValueError("disc-source map has no distinguished prime end; "
                             "call normalize_prime_end first")
        a = np.exp(1j * theta) * (1.0 - z) / (1.0 + z)
        return self.evaluate(a)

    def to_json(self):
        return {"kind": "closedForm", "name": self.name, "source": self.source,
                "params": self.params, "primeEndAngle": self.prime_end_angle}


def make_disc_identity() -> ClosedFormMap:
    return ClosedFormMap("discIdentity", "unitDisc", lambda z: z, lambda w: w,
                         prime_end_angle=0.0)


def make_halfplane_identity() -> ClosedFormMap:
    return ClosedFormMap("halfPlaneIdentity", "halfPlane", lambda z: z, lambda w: w)


def make_cayley_map() -> ClosedFormMap:
    """Unit disc onto the right half plane, z -> (1-z)/(1+z)."""
    def fwd(z):
        return (1.0 - z) / (1.0 + z)
    return ClosedFormMap("cayley", "unitDisc", fwd, fwd, prime_end_angle=0.0)


def make_round_disc_map(center: complex, radius: float) -> ClosedFormMap:
    c, r = complex(center), float(radius)
    return ClosedFormMap(
        "roundDisc", "unitDisc",
        lambda z: c + r * z,
        lambda w: (w - c) / r,
        params={"center": [c.real, c.imag], "radius": r},
    )


def make_tangent_disc_map() -> ClosedFormMap:
    """Half plane onto the disc of center 1/2 and radius 1/2, z -> z/(z+1).

    Fixes the boundary point 0 with derivative 1 there; the canonical inner
    map factor.
    """
    return ClosedFormMap(
        "tangentDisc", "halfPlane",
        lambda z: z / (z + 1.0),
        lambda w: w / (1.0 - w),
    )


def make_halfplane_scaling(t: float) -> ClosedFormMap:
    t = float(t)
    if t <= 0:
        raise ValueError("scaling must be positive")
    return ClosedFormMap("scaling", "halfPlane", lambda z: t * z, lambda w: w / t,
                         params={"t": t})


def make_halfdisc_map() -> ClosedFormMap:
    """Unit disc onto the upper half disc {|z|<1, Im z>0}.

    Chain: disc -> upper half plane eta = i(1-z)/(1+z), then solve
    -(z + 1/z)/2 = eta for the root inside the disc.
    """
    def fwd(zeta):
        zeta = np.asarray(zeta, dtype=complex)
        eta = 1j * (1.0 - zeta) / (1.0 + zeta)
        s = np.sqrt(eta * eta - 1.0)
        za = -eta + s
        zb = -eta - s
        return np.where(np.abs(za) < 1.0, za, zb)

    def inv(z):
        z = np.asarray(z, dtype=complex)
        eta = -(z + 1.0 / z) / 2.0
        return (eta - 1j) / (eta + 1j) * (-1.0)

    return ClosedFormMap("halfDisc", "unitDisc", fwd, inv)


def make_quarterdisc_map() -> ClosedFormMap:
    """Unit disc onto {|z|<1, Re z>0, Im z>0} via the square map on the
    half-disc model (z and z^2 exchange the two fixtures)."""
    hd = make_halfdisc_map()

    def fwd(zeta):
        return np.sqrt(hd.evaluate(zeta))

    def inv(z):
        z = np.asarray(z, dtype=complex)
        return hd.inverse_evaluate(z * z)

    return ClosedFormMap("quarterDisc", "unitDisc", fwd, inv)


_CLOSED_FORM_FACTORIES = {
    "discIdentity": lambda params: make_disc_identity(),
    "halfPlaneIdentity": lambda params: make_halfplane_identity(),
    "cayley": lambda params: make_cayley_map(),
    "roundDisc": lambda params: make_round_disc_map(
        complex(params["center"][0], params["center"][1]), params["radius"]),
    "tangentDisc": lambda params: make_tangent_disc_map(),
    "scaling": lambda params: make_halfplane_scaling(params["t"]),
    "halfDisc": lambda params: make_halfdisc_map(),
    "quarterDisc": lambda params: make_quarterdisc_map(),
}


# ---------------------------------------------------------------------------
# welded maps
# ---------------------------------------------------------------------------

class WeldedMap(ConformalMap):
    """Conformal map of the unit disc onto a welded polyline domain.

    The distinguished prime end is the seam at the first boundary vertex
    (angle 0 on the source circle); `eval_from_halfplane` reaches it through
    an inversion chart, so radii down to ~1e-300 stay resolvable.
    """

    source = "unitDisc"

    def __init__(self, z0, z1, ops, zeta_cl, sigma, u_base, vertices,
                 angles=None, fit_report=None):
        self.z0 = complex(z0)
        self.z1 = complex(z1)
        self.ops = ops
        self.zeta_cl = float(zeta_cl)
        self.sigma = float(sigma)
        self.u_base = complex(u_base)
        self.vertices = np.asarray(vertices, dtype=complex)
        self.angles = None if angles is None else np.asarray(angles, float)
        self.fit_report = fit_report or {}
        self.trust_floor = self.fit_report.get("trust_floor", DEFAULT_TRUST_FLOOR)

    # ---- fitting ----------------------------------------------------------

    @classmethod
    def weld(cls, points, tags, base, fit_report=None):
        """Run the weld over boundary samples in positive orientation.

        tags: '' for plain boundary points, 'slit' for interior slit-arc
        targets, 'slit_end' for a slit tip whose continuation returns to the
        rim (triggers recentering).
        """
        pts = np.asarray(points, dtype=complex)
        n = len(pts)
        if n < 8:
            raise FitError("too few boundary samples")
        z0, z1 = pts[0], pts[1]
        work = np.concatenate([pts[2:], [complex(base)]])
        with np.errstate(all="ignore"):
            work = 1j * np.sqrt((work - z1) / (work - z0))
        z0_img = np.inf + 0j
        landed = []  # rim positions of welded vertices, kept current
        ops = []
        n_pinned = 0

        def push_landed(fn):
            if landed:
                arr = np.asarray(landed, dtype=complex)
                arr2 = fn(arr)
                landed[:] = arr2.tolist()

        with np.errstate(all="ignore"):
            for k in range(n - 2):
                ak = work[k]
                tag = tags[k + 2] if k + 2 < n else ""
                if not np.isfinite(ak) or ak == 0:
                    raise FitError(f"boundary image degenerate while welding "
                                   f"vertex {k + 2} of {n}", vertex_index=k + 2)
                r = abs(ak)
                im = ak.imag
                if im <= 0:
                    raise FitError(f"boundary image left the upper half plane at "
                                   f"vertex {k + 2}", vertex_index=k + 2)
                if im <= 1e-14 * r:
                    n_pinned += 1
                bk = r * (r / ak.real) if abs(ak.real) > 1e-12 * r else math.inf
                ck = r * (r / im)
                if tag == "slit_end":
                    nxt = _arc_apply(work[k + 1:k + 2], bk, ck)
                    side = 1.0 if nxt[0].real >= 0 else -1.0
                    work[k + 1:] = _arc_apply_recentered(work[k + 1:], bk, ck, side)
                    z0_img = complex(_arc_apply_recentered(
                        np.array([z0_img]), bk, ck, side)[0])
                    push_landed(lambda a: _arc_apply_recentered(a, bk, ck, side))
                    ops.append((OP_ARCREC, bk, ck, side))
                else:
                    work[k + 1:] = _arc_apply(work[k + 1:], bk, ck)
                    z0_img = complex(_arc_apply(np.array([z0_img]), bk, ck)[0])
                    push_landed(lambda a: _arc_apply(a, bk, ck))
                    ops.append((OP_ARC, bk, ck, 0.0))
                landed.append(0.0 + 0.0j)
                sk = abs(work[k + 1]) if k + 1 < n - 2 else 1.0
                if not np.isfinite(sk) or sk == 0:
                    sk = 1.0
                if sk != 1.0:
                    work[k + 1:] /= sk
                    if np.isfinite(z0_img):
                        z0_img /= sk
                    push_landed(lambda a: a / sk)
                    ops.append((OP_SCALE, sk, 0.0, 0.0))
                if not np.isfinite(work[-1]) or work[-1].imag <= 0:
                    raise FitError(f"base point image lost welding vertex {k + 2} "
                                   f"(boundary sample {pts[k + 2]:.5g})",
                                   vertex_index=k + 2)
        if not np.isfinite(z0_img) or abs(z0_img.real) < 1e-300:
            raise FitError("seam image degenerate at closing")
        zeta_cl = z0_img.real
        base_img = work[-1]
        v = base_img / (1.0 - base_img / zeta_cl)
        sigma = 1.0 if np.angle(v) <= np.pi / 2 else -1.0
        u_base = sigma * v * v
        if not (u_base.imag > 0):
            raise FitError("base point did not land in the model half plane")

        # boundary angles on the source circle (seam vertex at angle 0)
        lan = np.asarray(landed, dtype=complex).real
        with np.errstate(all="ignore"):
            vv = lan / (1.0 - lan / zeta_cl)
            vv = np.where(np.isinf(lan), -zeta_cl, vv)
            uu = sigma * vv * vv
            zz = (uu - u_base) / (uu - np.conj(u_base))
            ang = np.angle(zz)
        angles = np.concatenate([[0.0], np.where(np.isfinite(ang), ang, 0.0)])
        rep = dict(fit_report or {})
        rep["pinned_vertices"] = n_pinned
        return cls(z0, z1, ops, zeta_cl, sigma, u_base, pts, angles, rep)

    # ---- evaluation -------------------------------------------------------

    def _from_model(self, u):
        """Upper-half-plane model coordinate to the image domain."""
        with np.errstate(all="ignore"):
            v = np.sqrt(u) if self.sigma > 0 else 1j * np.sqrt(u)
            w = v / (1.0 + v / self.zeta_cl)
            w = _chain_invert(self.ops, w)
            q = -(w * w)
            return (self.z1 - self.z0 * q) / (1.0 - q)

    def _to_model(self, z):
        with np.errstate(all="ignore"):
            w = 1j * np.sqrt((z - self.z1) / (z - self.z0))
            w = _chain_apply(self.ops, w)
            v = w / (1.0 - w / self.zeta_cl)
            return self.sigma * v * v

    def evaluate(self, z):
        z = np.asarray(z, dtype=complex)
        p = self.u_base
        u = (p - np.conj(p) * z) / (1.0 - z)
        return self._from_model(u)

    def eval_from_halfplane(self, z):
        z = np.asarray(z, dtype=complex)
        p = self.u_base
        u = p.imag * (1j / z) + p.real
        return self._from_model(u)

    def inverse_evaluate(self, w, tol: float = 1e-8, newton: bool = True):
        w = np.asarray(w, dtype=complex)
        scalar = w.ndim == 0
        w = np.atleast_1d(w)
        u = self._to_model(w)
        p = self.u_base
        z = (u - p) / (u - np.conj(p))
        if newton:
            res = np.abs(self.evaluate(z) - w)
            bad = res > max(tol / 10, 1e-13)
            h = 1e-5
            for _ in range(3):
                if not np.any(bad):
                    break
                zb = z[bad]
                fb = self.evaluate(zb)
                db = (self.evaluate(zb + h) - self.evaluate(zb - h)) / (2 * h)
                ok = np.abs(db) > 1e-14
                step = np.where(ok, (fb - w[bad]) / np.where(ok, db, 1.0), 0.0)
                z[bad] = zb - step
                res = np.abs(self.evaluate(z) - w)
                bad = res > max(tol / 10, 1e-13)
        res = np.abs(self.evaluate(z) - w)
        worst = float(res.max()) if len(res) else 0.0
        if worst > tol:
            raise InverseError(f"inverse did not reach {tol:g} "
                               f"(best residual {worst:.3e})", worst)
        return z[0] if scalar else z

    def inverse_to_halfplane(self, w):
        """Inverse into the canonical half-plane chart (prime end at 0)."""
        w = np.asarray(w, dtype=complex)
        u = self._to_model(w)
        p = self.u_base
        return p.imag * 1j / (u - p.real)

    def boundary_correspondence(self):
        """(source angle, boundary vertex) pairs, angles monotone from the
        seam."""
        if self.angles is None:
            raise ValueError("fit did not record boundary angles")
        return list(zip(np.unwrap(np.asarray(self.angles, float)).tolist(),
                        self.vertices.tolist()))

    # ---- serialization ----------------------------------------------------

    def to_json(self):
        return {
            "kind": "zipper",
            "source": self.source,
            "params": {
                "z0": [self.z0.real, self.z0.imag],
                "z1": [self.z1.real, self.z1.imag],
                "ops": [[int(k), float(p1.real) if isinstance(p1, complex) else float(p1),
                         float(p2), float(p3)] for (k, p1, p2, p3) in self.ops],
                "zetaClose": self.zeta_cl,
                "sigma": self.sigma,
                "base": [self.u_base.real, self.u_base.imag],
            },
            "normalization": {"primeEndAngle": 0.0, "seamVertex":
                              [self.z0.real, self.z0.imag]},
            "vertices": [[v.real, v.imag] for v in self.vertices],
            "angles": None if self.angles is None else
                      [float(a) for a in self.angles],
            "fitReport": _jsonable(self.fit_report),
        }

    @classmethod
    def from_json(cls, doc):
        p = doc["params"]
        ops = [(int(k), (math.inf if p1 == math.inf else float(p1)), float(p2),
                float(p3)) for k, p1, p2, p3 in p["ops"]]
        verts = np.array([complex(a, b) for a, b in doc["vertices"]])
        return cls(complex(*p["z0"]), complex(*p["z1"]), ops, p["zetaClose"],
                   p["sigma"], complex(*p["base"]), verts,
                   angles=doc.get("angles"), fit_report=doc.get("fitReport"))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.complexfloating, complex)):
        return [obj.real, obj.imag]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, float) and math.isinf(obj):
        return 1e308
    return obj


class CompositeMap(ConformalMap):
    """outer after inner; inner's image must lie in outer's source disc."""

    def __init__(self, outer: ConformalMap, inner: ConformalMap):
        if outer.source != "unitDisc":
            raise ValueError("composite outer map must have disc source")
        self.outer = outer
        self.inner = inner
        self.source = inner.source
        self.trust_floor = max(outer.trust_floor, inner.trust_floor)

    def evaluate(self, z):
        return self.outer.evaluate(self.inner.evaluate(z))

    def eval_from_halfplane(self, z):
        return self.outer.evaluate(self.inner.eval_from_halfplane(z))

    def inverse_evaluate(self, w, tol: float = 1e-8):
        return self.inner.inverse_evaluate(self.outer.inverse_evaluate(w, tol=tol),
                                           tol=tol)

    def to_json(self):
        return {"kind": "composite", "outer": self.outer.to_json(),
                "inner": self.inner.to_json()}


# ---------------------------------------------------------------------------
# fit boundary builders
# ---------------------------------------------------------------------------

def _seg(z_from, z_to, step, out, tags, tag=""):
    length = abs(z_to - z_from)
    m = max(1, int(math.ceil(length / step)))
    for t in range(m):
        out.append(z_from + (t / m) * (z_to - z_from))
        tags.append(tag)


def comb_fit_samples(a, slit_limit, samples, arcs_per_slit=1):
    """Boundary samples for the comb truncated at slit_limit teeth.

    The seam vertex is the midpoint of the left edge (the accumulation
    prime end); slit teeth are tagged arc chains welded from their bases.
    """
    xs = [(a / n, n % 2 == 0) for n in range(2, slit_limit + 2)]
    ylo, yhi = -a / 2, a / 2
    per = 2 * a + 2 * a  # rectangle perimeter
    step = max(per / max(samples - slit_limit * (arcs_per_slit + 4), 64), a / 2048)
    pts, tags = [], []
    _seg(0j, ylo * 1j, step, pts, tags)
    cur = ylo * 1j
    for x, _ in sorted([p for p in xs if p[1]]):
        tip = a / 6
        _seg(cur, x + ylo * 1j, step, pts, tags)
        for j in range(1, arcs_per_slit):
            y = ylo + (tip - ylo) * j / arcs_per_slit
            pts.append(x + y * 1j)
            tags.append("slit")
        pts.append(x + tip * 1j)
        tags.append("slit_end")
        cur = x + ylo * 1j
    _seg(cur, a + ylo * 1j, step, pts, tags)
    _seg(a + ylo * 1j, a + yhi * 1j, step, pts, tags)
    cur = a + yhi * 1j
    for x, _ in sorted([p for p in xs if not p[1]], reverse=True):
        tip = -a / 6
        _seg(cur, x + yhi * 1j, step, pts, tags)
        for j in range(1, arcs_per_slit):
            y = yhi + (tip - yhi) * j / arcs_per_slit
            pts.append(x + y * 1j)
            tags.append("slit")
        pts.append(x + tip * 1j)
        tags.append("slit_end")
        cur = x + yhi * 1j
    _seg(cur, yhi * 1j, step, pts, tags)
    _seg(yhi * 1j, 0j, step, pts, tags)
    arr = np.asarray(pts, dtype=complex)
    keep = np.abs(np.diff(np.r_[arr, arr[:1]])) > 1e-12
    return arr[keep], [t for t, k in zip(tags, keep) if k]


def spiral_fit_samples(t_max, t_eff, samples):
    """Boundary samples for the spiral slit disc.

    The cut gamma([1, t_eff]) plus a radial stub out to the circle is welded
    as one arc chain entering from the circle; the seam vertex is the stub
    base on the circle (the deep corridor prime end lives there).
    """
    th0 = (2 * np.pi * t_max) % (2 * np.pi)
    n_circle = max(samples // 2, 128)
    th = th0 + np.linspace(0, 2 * np.pi, n_circle, endpoint=False)
    pts = list(np.exp(1j * th))
    tags = [""] * len(pts)
    # stub: radial chords from the circle in to gamma(t_eff)
    end_dir = np.exp(1j * th0)
    r_tip = 1.0 - 1.0 / t_eff
    stub_r = np.linspace(1.0, r_tip, 8)[1:]
    for r in stub_r:
        pts.append(r * end_dir)
        tags.append("slit")
    # spiral chords from t_eff inward to 1: chord length ~ gap(t)/4
    t = t_eff
    cut = []
    while t > 1.0 + 1e-9:
        gap = 1.0 / (t * t)
        dt = min(max(gap / (4 * 2 * np.pi) * 4, 2e-4), 0.04)
        t = max(t - dt, 1.0)
        cut.append(t)
    for tv in cut:
        pts.append(complex(spiral_curve(tv)))
        tags.append("slit")
    tags[-1] = "slit_end"
    arr = np.asarray(pts, dtype=complex)
    keep = np.abs(np.diff(np.r_[arr, arr[:1]])) > 1e-12
    return arr[keep], [t_ for t_, k in zip(tags, keep) if k]


def polygon_fit_samples(vertices, samples, seam=None):
    """Simple closed polygon subdivided to the requested sample count."""
    v = np.asarray(vertices, dtype=complex)
    if seam is not None:
        i0 = int(np.argmin(np.abs(v - complex(seam))))
        v = np.roll(v, -i0)
    per = float(np.sum(np.abs(np.roll(v, -1) - v)))
    step = per / max(samples, len(v))
    pts, tags = [], []
    m = len(v)
    for i in range(m):
        _seg(v[i], v[(i + 1) % m], step, pts, tags)
    arr = np.asarray(pts, dtype=complex)
    keep = np.abs(np.diff(np.r_[arr, arr[:1]])) > 1e-12
    return arr[keep], [t for t, k in zip(tags, keep) if k]


def _ensure_positive_orientation(pts, tags):
    v = np.asarray(pts, dtype=complex)
    area = float(np.sum(v.real * np.roll(v.imag, -1) - np.roll(v.real, -1) * v.imag))
    if area < 0:
        v = np.concatenate([v[:1], v[1:][::-1]])
        tags = [tags[0]] + tags[1:][::-1]
    return v, tags


# ---------------------------------------------------------------------------
# fit driver with validation and back-off
# ---------------------------------------------------------------------------

def _validate_weld(m: WeldedMap, domain, probe_floor=1e-6):
    """Quality gates: base reproduction, round trips, monotone rim angles and
    membership of a radial probe.  Returns (ok, report)."""
    rep = {}
    base = m.eval_from_halfplane(np.array([1.0]))[0]
    rt_src = np.array([0.35 + 0.1j, -0.2 + 0.4j, 0.5 - 0.3j, 0.05 + 0.05j])
    try:
        imgs = m.evaluate(rt_src)
        back = m.inverse_evaluate(imgs, tol=1e-6)
        rep["round_trip"] = float(np.max(np.abs(m.evaluate(back) - imgs)))
        rep["round_trip_source"] = float(np.max(np.abs(back - rt_src)))
    except InverseError as e:
        rep["round_trip"] = float(e.best_residual)
        rep["round_trip_source"] = math.inf
    ang = m.angles
    if ang is not None and len(ang) > 4:
        wrapped = np.unwrap(ang)
        mono = np.all(np.diff(wrapped) > -1e-9) or np.all(np.diff(wrapped) < 1e-9)
        rep["angles_monotone"] = bool(mono)
    else:
        rep["angles_monotone"] = True
    rs = np.exp(np.linspace(0.0, np.log(probe_floor), 80))
    probe = m.eval_from_halfplane(rs)
    rep["probe_finite"] = bool(np.all(np.isfinite(probe)))
    if domain is not None and rep["probe_finite"]:
        inside = domain.contains_many(probe)
        rep["probe_inside"] = int(np.sum(inside))
        rep["probe_total"] = len(rs)
    else:
        rep["probe_inside"] = rep["probe_total"] = 0
    rep["base_value"] = complex(base)
    ok = (rep["round_trip"] < 1e-6 and rep["round_trip_source"] < 1e-3
          and rep["angles_monotone"] and rep["probe_finite"]
          and rep["probe_inside"] >= 0.98 * rep["probe_total"])
    return ok, rep


def _default_base(domain):
    if isinstance(domain, Comb):
        return 0.75 * domain.a + 0.25j * domain.a
    if isinstance(domain, Spiral):
        # pick the candidate farthest from the cut
        cand = np.array([-0.35, -0.25 - 0.25j, 0.3j, -0.45 + 0.2j])
        d = [np.min(np.abs(domain.polyline - c)) for c in cand]
        return complex(cand[int(np.argmax(d))])
    if isinstance(domain, (Koch, PolylineJordan)):
        v = domain.vertices if isinstance(domain, Koch) else domain.vertices
        return complex(np.mean(v))
    return 0.0 + 0.0j


def zipper_fit(domain, boundary_samples: int = 2048, base=None, access=None):
    """Fit a conformal map of the unit disc onto the domain.

    Closed-form variants short-circuit.  Welded fits validate themselves and
    back off the truncation depth (comb teeth, spiral windings) until the
    weld resolves; the effective depth lands in `fit_report`.
    """
    if boundary_samples < 64:
        raise ValueError("need at least 64 boundary samples")
    if isinstance(domain, UnitDisc):
        return make_disc_identity()
    if isinstance(domain, RightHalfPlane):
        return make_cayley_map()
    if isinstance(domain, Disc):
        return make_round_disc_map(domain.center, domain.radius)
    if base is None:
        base = _default_base(domain)

    attempts = []
    if isinstance(domain, Comb):
        limits = [min(domain.slit_count, 6), 5, 4, 3, 2]
        limits = sorted(set(l for l in limits if 2 <= l <= domain.slit_count),
                        reverse=True)
        for lim in limits:
            pts, tags = comb_fit_samples(domain.a, lim, boundary_samples)
            pts, tags = _ensure_positive_orientation(pts, tags)
            try:
                m = WeldedMap.weld(pts, tags, base,
                                   fit_report={"domain": domain.to_json(),
                                               "effective": {"slitCount": lim}})
            except FitError as e:
                attempts.append((lim, str(e)))
                continue
            ok, rep = _validate_weld(m, Comb(domain.a, lim))
            m.fit_report["validation"] = rep
            m.fit_report["attempts"] = attempts
            if ok:
                return m
            attempts.append((lim, "validation failed"))
        raise FitError(f"comb weld failed at every truncation depth: {attempts}")

    if isinstance(domain, Spiral):
        t_cap = min(domain.t_max, 4.5)
        t_effs = [t_cap - 0.5 * i for i in range(int((t_cap - 1.6) / 0.5) + 1)]
        t_effs = [t for t in t_effs if t > 1.5] or [min(domain.t_max, 1.9)]
        for t_eff in t_effs:
            pts, tags = spiral_fit_samples(domain.t_max, t_eff, boundary_samples)
            pts, tags = _ensure_positive_orientation(pts, tags)
            try:
                m = WeldedMap.weld(pts, tags, base,
                                   fit_report={"domain": domain.to_json(),
                                               "effective": {"tMax": t_eff}})
            except FitError as e:
                attempts.append((t_eff, str(e)))
                continue
            ok, rep = _validate_weld(m, Spiral(t_eff))
            m.fit_report["validation"] = rep
            m.fit_report["attempts"] = attempts
            if ok:
                return m
            attempts.append((t_eff, "validation failed"))
        raise FitError(f"spiral weld failed at every truncation: {attempts}")

    if isinstance(domain, (Koch, PolylineJordan)):
        verts = domain.vertices
        if not geometry.polygon_is_simple(verts):
            raise FitError("polygon boundary is not simple")
        pts, tags = polygon_fit_samples(verts, boundary_samples, seam=access)
        pts, tags = _ensure_positive_orientation(pts, tags)
        m = WeldedMap.weld(pts, tags, base,
                           fit_report={"domain": domain.to_json()})
        ok, rep = _validate_weld(m, domain)
        m.fit_report["validation"] = rep
        if not ok:
            raise FitError(f"polygon weld failed validation: {rep}")
        return m

    raise FitError(f"domain variant {domain.variant!r} has no fitting path")


# ---------------------------------------------------------------------------
# normalization and boundary behavior
# ---------------------------------------------------------------------------

def normalize_prime_end(cmap: ConformalMap, target) -> ConformalMap:
    """Return a map whose canonical half-plane chart sends the prime end over
    `target` to 0 (and keeps the base point at 1).

    Welded maps are built with the seam at the access vertex, so for them the
    target must match the seam; closed forms get the boundary parameter
    located numerically.
    """
    target = complex(target)
    if isinstance(cmap, WeldedMap):
        i = int(np.argmin(np.abs(cmap.vertices - target)))
        if abs(cmap.vertices[i] - cmap.z0) > 1e-9:
            raise ValueError(
                f"welded map seam is at {cmap.z0:.5g}; refit with "
                f"access={target:.5g} to distinguish that prime end")
        return cmap
    if isinstance(cmap, CompositeMap):
        raise ValueError("normalize the inner factor before composing")
    if isinstance(cmap, ClosedFormMap):
        if cmap.source == "halfPlane":
            val = complex(cmap.evaluate(np.array([1e-9]))[0])
            if abs(val - target) > 1e-6:
                raise ValueError(f"half-plane map does not reach {target} at 0 "
                                 f"(found {val})")
            return cmap
        th = np.linspace(-np.pi, np.pi, 4097)[:-1]
        bnd = cmap.evaluate((1.0 - 1e-9) * np.exp(1j * th))
        i = int(np.argmin(np.abs(bnd - target)))
        if abs(bnd[i] - target) > 1e-3:
            raise ValueError(f"target {target} not reached on the boundary")
        return ClosedFormMap(cmap.name, cmap.source, cmap._forward, cmap._inverse,
                             params=cmap.params, prime_end_angle=float(th[i]))
    raise TypeError(f"cannot normalize {type(cmap).__name__}")


def angular_derivative(cmap: ConformalMap, k_lo: int = 8, k_hi: int = 20):
    """Radial derivative lim f(r)/r at the distinguished prime end.

    Richardson-extrapolated over r = 2^-k; returns (value, error_bar), with
    math.inf for a monotone divergence and NoAngularDerivativeError when the
    ratios oscillate without settling.
    """
    ks = np.arange(k_lo, k_hi + 1)
    rs = 0.5 ** ks
    vals = np.asarray(cmap.eval_from_halfplane(rs), dtype=complex)
    ratios = vals / rs
    mags = np.abs(ratios)
    growth = mags[1:] / np.maximum(mags[:-1], 1e-300)
    if np.median(growth) > 1.2 and mags[-1] > 50 * mags[0]:
        return math.inf, math.inf
    rich = 2.0 * ratios[1:] - ratios[:-1]
    tail = rich[-4:]
    spread = float(np.max(np.abs(tail - tail[-1])))
    value = tail[-1]
    if spread > 0.1 * max(abs(value), 1e-12):
        diffs = np.real(np.diff(ratios[-8:]))
        if np.any(diffs > 0) and np.any(diffs < 0):
            raise NoAngularDerivativeError(
                f"radial ratios oscillate (spread {spread:.2e})")
    err = spread + abs(value.imag)
    return float(value.real), float(err)


# ---------------------------------------------------------------------------
# disk cache for fitted maps
# ---------------------------------------------------------------------------

def cache_dir() -> Path:
    env = os.environ.get("DW_LAB_CACHE")
    if env:
        return Path(env)
    return Path.home() / ".cache" / "dw-lab"


def _fit_key(domain, boundary_samples, base, access) -> str:
    doc = {"domain": domain.to_json(), "samples": boundary_samples,
           "base": None if base is None else [complex(base).real, complex(base).imag],
           "access": None if access is None else
           [complex(access).real, complex(access).imag]}
    blob = json.dumps(doc, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:20]


def map_from_json(doc) -> ConformalMap:
    kind = doc.get("kind")
    if kind == "zipper":
        return WeldedMap.from_json(doc)
    if kind == "closedForm":
        m = _CLOSED_FORM_FACTORIES[doc["name"]](doc.get("params") or {})
        if doc.get("primeEndAngle") is not None:
            m.prime_end_angle = doc["primeEndAngle"]
        return m
    if kind == "composite":
        return CompositeMap(map_from_json(doc["outer"]), map_from_json(doc["inner"]))
    raise ValueError(f"unknown map kind {kind!r}")


def fit_with_cache(domain, boundary_samples: int = 2048, base=None, access=None,
                   use_cache: bool = True) -> ConformalMap:
    key = _fit_key(domain, boundary_samples, base, access)
    path = cache_dir() / f"fit-{key}.json"
    if use_cache and path.exists():
        try:
            return map_from_json(json.loads(path.read_text()))
        except (ValueError, KeyError):
            pass  # stale cache entry; refit
    m = zipper_fit(domain, boundary_samples, base=base, access=access)
    if use_cache:
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(".tmp")
        tmp.write_text(json.dumps(m.to_json(), sort_keys=True))
        os.replace(tmp, path)
    return m
