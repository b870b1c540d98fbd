"""Planar and C^2 domain primitives: Moebius maps, the slit comb, the spiral
slit disc, Koch snowflake polygons, polyline Jordan domains and convex wedges.

All domains are open; membership returns False within CLEARANCE of the
boundary.  Every variant offers `contains`, a boundary sampler and a JSON
round trip with the field names fixed by the CLI file formats.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

CLEARANCE = 1e-9

INFINITY = complex(math.inf, math.inf)


def is_infinite(z: complex) -> bool:
    return math.isinf(z.real) or math.isinf(z.imag)


def require_finite(z: complex, what: str = "point") -> complex:
    z = complex(z)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise ValueError(f"{what} must be finite, got {z!r}")
    return z


def cayley(z: complex) -> complex:
    """Map the unit disc onto the right half plane, z -> (1-z)/(1+z).

    The same formula is its own inverse.  The unit circle (minus -1) goes to
    the imaginary axis; -1 is the pole.
    """
    z = complex(z)
    if abs(z + 1.0) < 1e-15:
        raise ZeroDivisionError("cayley pole at z = -1")
    return (1.0 - z) / (1.0 + z)


def cayley_inverse(w: complex) -> complex:
    """Half plane back to the disc; identical formula (involution)."""
    return cayley(w)


@dataclass(frozen=True)
class MobiusTransform:
    """z -> (az + b)/(cz + d) with ad - bc bounded away from 0."""

    a: complex
    b: complex
    c: complex
    d: complex

    def __post_init__(self):
        if abs(self.a * self.d - self.b * self.c) <= 1e-12:
            raise ValueError("Moebius determinant too close to zero")

    @classmethod
    def identity(cls) -> "MobiusTransform":
        return cls(1.0, 0.0, 0.0, 1.0)

    @classmethod
    def cayley(cls) -> "MobiusTransform":
        return cls(-1.0, 1.0, 1.0, 1.0)

    def apply(self, z: complex) -> complex:
        if is_infinite(z):
            if abs(self.c) < 1e-300:
                return INFINITY
            return self.a / self.c
        den = self.c * z + self.d
        if abs(den) < 1e-300:
            return INFINITY
        return (self.a * z + self.b) / den

    def __call__(self, z: complex) -> complex:
        return self.apply(z)

    def inverse(self) -> "MobiusTransform":
        return MobiusTransform(self.d, -self.b, -self.c, self.a)

    def compose(self, other: "MobiusTransform") -> "MobiusTransform":
        """self after other: (self.compose(other))(z) = self(other(z))."""
        return MobiusTransform(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
        )


def mobius_apply(t: MobiusTransform, z: complex) -> complex:
    return t.apply(z)


# ---------------------------------------------------------------------------
# vectorized polyline helpers
# ---------------------------------------------------------------------------

def point_segment_distance(z, seg_a, seg_b):
    """Distances from points z (array) to the segment(s) [seg_a, seg_b].

    Broadcasts z against segment arrays; returns the per-point minimum over
    all segments.
    """
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    a = np.atleast_1d(np.asarray(seg_a, dtype=complex))
    b = np.atleast_1d(np.asarray(seg_b, dtype=complex))
    d = b - a
    L2 = (d.real ** 2 + d.imag ** 2)
    L2 = np.where(L2 == 0, 1e-300, L2)
    w = z[:, None] - a[None, :]
    t = (w.real * d.real[None, :] + w.imag * d.imag[None, :]) / L2[None, :]
    t = np.clip(t, 0.0, 1.0)
    proj = a[None, :] + t * d[None, :]
    dist = np.abs(z[:, None] - proj)
    return dist.min(axis=1)


def point_in_polygon(vertices, z):
    """Crossing-number test, vectorized over query points."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    px = vertices.real
    py = vertices.imag
    qx = np.roll(px, -1)
    qy = np.roll(py, -1)
    x = z.real[:, None]
    y = z.imag[:, None]
    cond = ((py[None, :] <= y) & (qy[None, :] > y)) | ((qy[None, :] <= y) & (py[None, :] > y))
    denom = np.where(qy == py, 1e-300, qy - py)
    t = (y - py[None, :]) / denom[None, :]
    xc = px[None, :] + t * (qx - px)[None, :]
    inside = (np.sum(cond & (xc > x), axis=1) % 2) == 1
    return inside


def polygon_is_simple(vertices, tol: float = 1e-12) -> bool:
    """Segment sweep (chunked brute force) for self intersections."""
    v = np.asarray(vertices, dtype=complex)
    n = len(v)
    a = v
    b = np.roll(v, -1)
    # bounding boxes
    xlo = np.minimum(a.real, b.real)
    xhi = np.maximum(a.real, b.real)
    ylo = np.minimum(a.imag, b.imag)
    yhi = np.maximum(a.imag, b.imag)

    def orient(p, q, r):
        return (q.real - p.real) * (r.imag - p.imag) - (q.imag - p.imag) * (r.real - p.real)

    idx = np.argsort(xlo)
    for ii in range(n):
        i = idx[ii]
        for jj in range(ii + 1, n):
            j = idx[jj]
            if xlo[j] > xhi[i] + tol:
                break
            if abs(i - j) in (0, 1) or {i, j} == {0, n - 1}:
                continue
            if ylo[j] > yhi[i] + tol or yhi[j] < ylo[i] - tol:
                continue
            d1 = orient(a[i], b[i], a[j])
            d2 = orient(a[i], b[i], b[j])
            d3 = orient(a[j], b[j], a[i])
            d4 = orient(a[j], b[j], b[i])
            if ((d1 > tol) != (d2 > tol)) and ((d3 > tol) != (d4 > tol)):
                return False
    return True


def _closed_polyline(vertices, max_step):
    """Subdivide the closed polygon so edges are at most max_step long."""
    out = []
    v = np.asarray(vertices, dtype=complex)
    n = len(v)
    for i in range(n):
        p, q = v[i], v[(i + 1) % n]
        m = max(1, int(math.ceil(abs(q - p) / max_step)))
        for t in range(m):
            out.append(p + (t / m) * (q - p))
    return np.asarray(out, dtype=complex)


# ---------------------------------------------------------------------------
# domain variants
# ---------------------------------------------------------------------------

class Domain:
    """Base for planar domain descriptions."""

    variant = "abstract"

    def contains(self, z) -> bool:
        return bool(np.all(self.contains_many(np.atleast_1d(np.asarray(z, complex)))))

    def contains_many(self, z):
        raise NotImplementedError

    def boundary_points(self, n: int):
        raise NotImplementedError

    def to_json(self) -> dict:
        raise NotImplementedError

    def sample_interior(self, n: int, rng) -> np.ndarray:
        """Rejection sample n interior points from the bounding box."""
        box = self.bounding_box()
        out = []
        while len(out) < n:
            m = max(4 * (n - len(out)), 64)
            z = (rng.uniform(box[0], box[1], m)
                 + 1j * rng.uniform(box[2], box[3], m))
            z = z[self.contains_many(z)]
            out.extend(z.tolist())
        return np.asarray(out[:n], dtype=complex)

    def bounding_box(self):
        b = self.boundary_points(512)
        return (b.real.min(), b.real.max(), b.imag.min(), b.imag.max())


class UnitDisc(Domain):
    variant = "unitDisc"

    def contains_many(self, z):
        z = np.asarray(z, dtype=complex)
        return np.abs(z) < 1.0 - CLEARANCE

    def boundary_points(self, n: int):
        th = 2 * np.pi * np.arange(n) / n
        return np.exp(1j * th)

    def to_json(self):
        return {"variant": self.variant}

    def bounding_box(self):
        return (-1.0, 1.0, -1.0, 1.0)


class RightHalfPlane(Domain):
    variant = "rightHalfPlane"

    def contains_many(self, z):
        z = np.asarray(z, dtype=complex)
        return z.real > CLEARANCE

    def boundary_points(self, n: int):
        t = np.linspace(-10, 10, n)
        return 1j * t

    def to_json(self):
        return {"variant": self.variant}

    def bounding_box(self):
        return (0.0, 10.0, -10.0, 10.0)


class Disc(Domain):
    variant = "disc"

    def __init__(self, center: complex, radius: float):
        if radius <= 0:
            raise ValueError("radius must be positive")
        self.center = complex(center)
        self.radius = float(radius)

    def contains_many(self, z):
        z = np.asarray(z, dtype=complex)
        return np.abs(z - self.center) < self.radius - CLEARANCE

    def boundary_points(self, n: int):
        th = 2 * np.pi * np.arange(n) / n
        return self.center + self.radius * np.exp(1j * th)

    def to_json(self):
        return {"variant": self.variant,
                "center": [self.center.real, self.center.imag],
                "radius": self.radius}

    def bounding_box(self):
        c, r = self.center, self.radius
        return (c.real - r, c.real + r, c.imag - r, c.imag + r)

    def interior_distance(self, z: complex) -> float:
        return self.radius - abs(complex(z) - self.center)


class HalfDiscSlice(Domain):
    """V intersected with {|z| < a}."""

    variant = "halfDiscSlice"

    def __init__(self, inner: Domain, a: float):
        if a <= 0:
            raise ValueError("a must be positive")
        self.inner = inner
        self.a = float(a)

    def contains_many(self, z):
        z = np.asarray(z, dtype=complex)
        return self.inner.contains_many(z) & (np.abs(z) < self.a - CLEARANCE)

    def boundary_points(self, n: int):
        b = self.inner.boundary_points(n)
        return b[np.abs(b) <= self.a]

    def to_json(self):
        return {"variant": self.variant, "V": self.inner.to_json(), "a": self.a}

    def bounding_box(self):
        x0, x1, y0, y1 = self.inner.bounding_box()
        return (max(x0, -self.a), min(x1, self.a), max(y0, -self.a), min(y1, self.a))


@dataclass(frozen=True)
class Slit:
    """One vertical comb tooth at re_coordinate with the given Im range."""

    re_coordinate: float
    im_low: float
    im_high: float
    parity: str  # "even" (attached below) or "odd" (attached above)

    def __post_init__(self):
        if self.im_low >= self.im_high:
            raise ValueError("slit Im range is empty")


class Comb(Domain):
    """Rectangle {0 < Re < a, |Im| < a/2} minus interleaved vertical teeth.

    Tooth n sits at Re = a/n; even n are attached to the bottom edge and
    span Im in [-a/2, a/6], odd n >= 3 hang from the top and span
    [-a/6, a/2].  Only the strip 0 < Re < a is used; see the project notes
    on the sign convention for Re.
    """

    variant = "comb"

    def __init__(self, a: float, slit_count: int):
        if a <= 0:
            raise ValueError("a must be positive")
        if slit_count < 2:
            raise ValueError("need at least two slits")
        self.a = float(a)
        self.slit_count = int(slit_count)

    def slits(self):
        a = self.a
        out = []
        for n in range(2, self.slit_count + 2):
            if n % 2 == 0:
                out.append(Slit(a / n, -a / 2, a / 6, "even"))
            else:
                out.append(Slit(a / n, -a / 6, a / 2, "odd"))
        return out

    def contains_many(self, z):
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        a = self.a
        ok = ((z.real > CLEARANCE) & (z.real < a - CLEARANCE)
              & (np.abs(z.imag) < a / 2 - CLEARANCE))
        slits = self.slits()
        xs = np.array([s.re_coordinate for s in slits])
        lo = np.array([s.im_low for s in slits])
        hi = np.array([s.im_high for s in slits])
        dx = np.abs(z.real[:, None] - xs[None, :])
        dy = np.maximum(np.maximum(lo[None, :] - z.imag[:, None],
                                   z.imag[:, None] - hi[None, :]), 0.0)
        dist = np.hypot(dx, dy).min(axis=1)
        return ok & (dist > CLEARANCE)

    def boundary_points(self, n: int):
        a = self.a
        rect = [0j, -0.5j * a, a - 0.5j * a, a + 0.5j * a, 0.5j * a]
        pts = [_closed_polyline(np.array(rect), 4 * a / n)]
        per = max(2, n // (2 * self.slit_count))
        for s in self.slits():
            ys = np.linspace(s.im_low, s.im_high, per)
            pts.append(s.re_coordinate + 1j * ys)
        return np.concatenate(pts)

    def to_json(self):
        return {"variant": self.variant, "a": self.a, "slitCount": self.slit_count}

    def bounding_box(self):
        return (0.0, self.a, -self.a / 2, self.a / 2)


def build_comb(a: float, slit_count: int) -> Comb:
    return Comb(a, slit_count)


def spiral_curve(t):
    """gamma(t) = (1 - 1/t) e^{2 pi i t}."""
    t = np.asarray(t, dtype=float)
    return (1.0 - 1.0 / t) * np.exp(2j * np.pi * t)


class Spiral(Domain):
    """Unit disc minus the polyline discretization of gamma([1, tMax])."""

    variant = "spiral"

    def __init__(self, t_max: float, max_chord: float = 1e-3):
        if t_max <= 1:
            raise ValueError("tMax must exceed 1")
        self.t_max = float(t_max)
        self.max_chord = float(max_chord)
        self._polyline = self._sample_curve()

    def _sample_curve(self):
        # |gamma'(t)| <= 2 pi + 1/t^2; uniform parameter step is enough
        speed = 2 * np.pi + 1.0
        n = int(math.ceil((self.t_max - 1.0) * speed / self.max_chord)) + 1
        t = np.linspace(1.0, self.t_max, max(n, 16))
        return spiral_curve(t)

    @property
    def polyline(self):
        return self._polyline

    def contains_many(self, z):
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        ok = np.abs(z) < 1.0 - CLEARANCE
        d = point_segment_distance(z, self._polyline[:-1], self._polyline[1:])
        return ok & (d > CLEARANCE)

    def boundary_points(self, n: int):
        th = 2 * np.pi * np.arange(n // 2) / (n // 2)
        step = max(1, len(self._polyline) // (n - n // 2 + 1))
        return np.concatenate([np.exp(1j * th), self._polyline[::step]])

    def to_json(self):
        return {"variant": self.variant, "tMax": self.t_max}

    def bounding_box(self):
        return (-1.0, 1.0, -1.0, 1.0)


def build_spiral(t_max: float) -> Spiral:
    return Spiral(t_max)


def koch_vertices(depth: int, scale: float = 0.95) -> np.ndarray:
    """Closed snowflake polygon with 3 * 4**depth edges, inside the unit disc."""
    if depth < 0 or depth > 8:
        raise ValueError("depth must be between 0 and 8")
    pts = np.array([np.exp(1j * (np.pi / 2 + 2 * np.pi * k / 3)) for k in range(3)])
    for _ in range(depth):
        out = []
        m = len(pts)
        for i in range(m):
            p, q = pts[i], pts[(i + 1) % m]
            d = q - p
            out.extend([p, p + d / 3, p + d / 3 + (d / 3) * np.exp(-1j * np.pi / 3),
                        p + 2 * d / 3])
        pts = np.asarray(out)
    return pts * (scale / np.max(np.abs(pts)))


class Koch(Domain):
    variant = "koch"

    def __init__(self, depth: int):
        self.depth = int(depth)
        self.vertices = koch_vertices(self.depth)

    def contains_many(self, z):
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        inside = point_in_polygon(self.vertices, z)
        d = point_segment_distance(z, self.vertices, np.roll(self.vertices, -1))
        return inside & (d > CLEARANCE)

    def boundary_points(self, n: int):
        step = max(1, len(self.vertices) // n)
        return self.vertices[::step]

    def to_json(self):
        return {"variant": self.variant, "depth": self.depth}

    def bounding_box(self):
        v = self.vertices
        return (v.real.min(), v.real.max(), v.imag.min(), v.imag.max())


def build_koch(depth: int) -> Koch:
    return Koch(depth)


def box_counting_dimension(points, sizes=None) -> dict:
    """Box-counting estimate of the dimension of a planar point cloud.

    Counts occupied boxes over a dyadic range of box sizes and fits the
    log-log slope by least squares.
    """
    z = np.asarray(points, dtype=complex)
    span = max(z.real.max() - z.real.min(), z.imag.max() - z.imag.min())
    if sizes is None:
        sizes = span * 0.5 ** np.arange(2, 10)
    counts = []
    for s in sizes:
        ix = np.floor((z.real - z.real.min()) / s).astype(np.int64)
        iy = np.floor((z.imag - z.imag.min()) / s).astype(np.int64)
        counts.append(len(set(zip(ix.tolist(), iy.tolist()))))
    logs = np.log(1.0 / np.asarray(sizes, dtype=float))
    logc = np.log(np.asarray(counts, dtype=float))
    slope, intercept = np.polyfit(logs, logc, 1)
    return {"dimension": float(slope), "sizes": list(map(float, sizes)),
            "counts": counts, "intercept": float(intercept)}


def koch_boundary_cloud(depth: int, points_per_edge: int = 8) -> np.ndarray:
    """Dense boundary sampling of the snowflake for dimension estimates."""
    v = koch_vertices(depth)
    w = np.roll(v, -1)
    t = np.arange(points_per_edge) / points_per_edge
    return (v[:, None] + t[None, :] * (w - v)[:, None]).ravel()


class PolylineJordan(Domain):
    variant = "polylineJordan"

    def __init__(self, vertices):
        v = np.asarray(vertices, dtype=complex)
        if len(v) < 3:
            raise ValueError("need at least three vertices")
        self.vertices = v

    def contains_many(self, z):
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        inside = point_in_polygon(self.vertices, z)
        d = point_segment_distance(z, self.vertices, np.roll(self.vertices, -1))
        return inside & (d > CLEARANCE)

    def boundary_points(self, n: int):
        per = self.perimeter()
        return _closed_polyline(self.vertices, per / n)

    def perimeter(self):
        return float(np.sum(np.abs(np.roll(self.vertices, -1) - self.vertices)))

    def to_json(self):
        return {"variant": self.variant,
                "vertices": [[v.real, v.imag] for v in self.vertices]}

    def bounding_box(self):
        v = self.vertices
        return (v.real.min(), v.real.max(), v.imag.min(), v.imag.max())


class Wedge:
    """Convex domain in C^2: ||z|| < delta, z1 in V, Re z2 > 0, Re z1 > psi(Re z2)."""

    variant = "wedge"

    def __init__(self, v: Domain, psi, delta: float):
        if delta <= 0:
            raise ValueError("delta must be positive")
        self.v = v
        self.psi = psi
        self.delta = float(delta)

    def contains_pair(self, z1: complex, z2: complex) -> bool:
        z1, z2 = complex(z1), complex(z2)
        if math.hypot(abs(z1), abs(z2)) >= self.delta:
            return False
        if not self.v.contains(z1):
            return False
        if z2.real <= 0:
            return False
        return z1.real > self.psi(z2.real)

    def contains_many_pairs(self, z1, z2):
        z1 = np.atleast_1d(np.asarray(z1, complex))
        z2 = np.atleast_1d(np.asarray(z2, complex))
        norm = np.sqrt(np.abs(z1) ** 2 + np.abs(z2) ** 2)
        psi_vals = np.array([self.psi(t) for t in z2.real])
        return ((norm < self.delta) & self.v.contains_many(z1)
                & (z2.real > 0) & (z1.real > psi_vals))

    def to_json(self):
        knots = getattr(self.psi, "knots", None)
        if knots is None:
            raise ValueError("wedge psi is not serializable (no knot list)")
        return {"variant": self.variant, "V": self.v.to_json(),
                "psi": {"knots": np.asarray(knots, float).tolist()},
                "delta": self.delta}


def wedge_contains(w: Wedge, pair) -> bool:
    z1, z2 = pair
    return w.contains_pair(z1, z2)


class GraphDomain:
    """Graph of g over V in C^2, with a tolerance-based membership check."""

    variant = "graph"

    def __init__(self, v: Domain, g, tol: float = 1e-9):
        self.v = v
        self.g = g
        self.tol = tol

    def contains_pair(self, z1: complex, z2: complex) -> bool:
        if not self.v.contains(z1):
            return False
        return abs(complex(z2) - complex(self.g(z1))) < self.tol


# ---------------------------------------------------------------------------
# JSON round trip
# ---------------------------------------------------------------------------

def domain_from_json(doc) -> Domain:
    if isinstance(doc, str):
        doc = json.loads(doc)
    variant = doc.get("variant")
    known = {"unitDisc", "rightHalfPlane", "disc", "halfDiscSlice", "comb",
             "spiral", "koch", "polylineJordan"}
    if variant not in known:
        raise ValueError(f"unknown domain variant {variant!r}")
    extra = set(doc) - {"variant", "center", "radius", "V", "a", "slitCount",
                        "tMax", "depth", "vertices"}
    if extra:
        raise ValueError(f"unknown keys in domain document: {sorted(extra)}")
    if variant == "unitDisc":
        return UnitDisc()
    if variant == "rightHalfPlane":
        return RightHalfPlane()
    if variant == "disc":
        c = doc["center"]
        return Disc(complex(c[0], c[1]), doc["radius"])
    if variant == "halfDiscSlice":
        return HalfDiscSlice(domain_from_json(doc["V"]), doc["a"])
    if variant == "comb":
        return Comb(doc["a"], doc["slitCount"])
    if variant == "spiral":
        return Spiral(doc["tMax"])
    if variant == "koch":
        return Koch(doc["depth"])
    return PolylineJordan([complex(p[0], p[1]) for p in doc["vertices"]])


def domain_to_json_str(d: Domain) -> str:
    return json.dumps(d.to_json(), sort_keys=True)
