"""Hyperbolic (Kobayashi) distances on the disc and half plane, pullbacks
through conformal maps, the infinitesimal metric, and certified two-sided
distance bounds on convex wedges in C^2.

Normalization: the density on the unit disc at 0 is 1, so
k_D(0, r) = atanh(r) and kappa_D(z; 1) = 1/(1 - |z|^2).
"""

from __future__ import annotations

import math

import numpy as np

from .geometry import Disc, Wedge


def dist_disc(z: complex, w: complex) -> float:
    """atanh of the pseudo-hyperbolic ratio |z-w| / |1 - conj(z) w|."""
    z, w = complex(z), complex(w)
    if abs(z) >= 1 or abs(w) >= 1:
        raise ValueError("dist_disc needs points strictly inside the disc")
    rho = abs(z - w) / abs(1.0 - z.conjugate() * w)
    rho = min(rho, 1.0 - 1e-17)
    return math.atanh(rho)


def dist_halfplane(z: complex, w: complex) -> float:
    """Right half plane distance via the stable ratio |z-w| / |z + conj(w)|.

    Equal to the Cayley pullback of dist_disc, but safe for points within
    1e-300 of the boundary (no 1 - z cancellation).
    """
    z, w = complex(z), complex(w)
    if z.real <= 0 or w.real <= 0:
        raise ValueError("dist_halfplane needs Re > 0")
    rho = abs(z - w) / abs(z + w.conjugate())
    rho = min(rho, 1.0 - 1e-17)
    return math.atanh(rho)


def dist_source(source: str, z: complex, w: complex) -> float:
    if source == "halfPlane":
        return dist_halfplane(z, w)
    if source == "unitDisc":
        return dist_disc(z, w)
    raise ValueError(f"unknown source {source!r}")


def dist_pullback(cmap, p: complex, q: complex) -> float:
    """Distance between image points, measured by pulling back to the source."""
    zp = cmap.inverse_evaluate(p)
    zq = cmap.inverse_evaluate(q)
    return dist_source(cmap.source, complex(zp), complex(zq))


def density_disc(z: complex) -> float:
    return 1.0 / (1.0 - abs(complex(z)) ** 2)


def density_halfplane(z: complex) -> float:
    return 1.0 / (2.0 * complex(z).real)


def kobayashi_royden_planar(cmap, p: complex, v: complex, step: float = 1e-6) -> float:
    """Infinitesimal metric at an image point p in direction v.

    |v| * kappa_source(z) / |f'(z)| at z = f^{-1}(p); the derivative uses
    central differences with one Richardson sweep.
    """
    if v == 0:
        raise ValueError("direction must be nonzero")
    z = complex(cmap.inverse_evaluate(p))
    if cmap.source == "unitDisc":
        margin = 1.0 - abs(z)
        kappa = density_disc(z)
    else:
        margin = z.real
        kappa = density_halfplane(z)
    if margin < 10 * step:
        raise ValueError(f"point too close to the source boundary for a stable "
                         f"derivative (margin {margin:.3e})")

    def d(h):
        return (complex(cmap.evaluate(z + h)) - complex(cmap.evaluate(z - h))) / (2 * h)

    d1 = d(step)
    d2 = d(step / 2)
    deriv = (4 * d2 - d1) / 3
    if abs(deriv) < 1e-300 or abs(d2 - d1) > 0.5 * abs(deriv):
        raise ValueError(f"derivative unstable at z={z} (residual {abs(d2 - d1):.2e})")
    return abs(v) * kappa / abs(deriv)


def step_bound(points) -> float:
    """sup of consecutive half-plane distances along a sequence."""
    pts = [complex(p) for p in points]
    if len(pts) < 2:
        return 0.0
    return max(dist_halfplane(a, b) for a, b in zip(pts, pts[1:]))


def stolz_check(points, aperture: float) -> bool:
    """True when sup |w| / Re w stays at or below the aperture."""
    if aperture <= 1:
        raise ValueError("aperture must exceed 1")
    for p in points:
        p = complex(p)
        if p.real <= 0:
            return False
        if abs(p) / p.real > aperture:
            return False
    return True


def stolz_max_ratio(points) -> float:
    return max(abs(complex(p)) / complex(p).real for p in points)


# ---------------------------------------------------------------------------
# two-sided Kobayashi bounds on a wedge in C^2
# ---------------------------------------------------------------------------

def _wedge_inradius(w: Wedge, z1: complex, z2: complex) -> float:
    """Euclidean distance from (z1, z2) to the complement of the wedge.

    Each defining constraint contributes an exact distance; the minimum is a
    valid ball radius inside the wedge.
    """
    norm = math.hypot(abs(z1), abs(z2))
    r = w.delta - norm
    r = min(r, z2.real)
    v = w.v
    if isinstance(v, Disc):
        r = min(r, v.interior_distance(z1))
    else:
        b = v.boundary_points(512)
        r = min(r, float(np.min(np.abs(b - z1))))
    psi = w.psi
    knots = getattr(psi, "knots", None)
    if knots is not None:
        k = np.asarray(knots, dtype=float)
        t, y = k[:, 0], k[:, 1]
        slopes = np.diff(y) / np.diff(t)
        # psi convex piecewise linear = max of supporting lines; distance to
        # each half plane {x1 <= y_i + s_i (x2 - t_i)} in the (Re z1, Re z2) plane
        vals = z1.real - (y[:-1] + slopes * (z2.real - t[:-1]))
        r = min(r, float(np.min(vals / np.sqrt(1.0 + slopes ** 2))))
    else:
        # callable psi: conservative slope bound by sampling
        ts = np.linspace(1e-6, w.delta, 64)
        ps = np.array([psi(t) for t in ts])
        slope = max(np.max(np.abs(np.diff(ps) / np.diff(ts))), 1.0)
        r = min(r, (z1.real - psi(z2.real)) / math.sqrt(1.0 + slope ** 2))
    return max(r, 0.0)


def _disc_distance_in_ball(p, q, center, radius) -> float:
    """Hyperbolic distance between p, q inside the affine disc (complex line
    through p and q) cut out of the Euclidean ball B(center, radius)."""
    d = np.asarray(q) - np.asarray(p)
    L = math.sqrt(float(np.sum(np.abs(d) ** 2)))
    if L == 0:
        return 0.0
    # line x(lambda) = p + lambda d; ball cut is |lambda - lam_c| < rho
    rel = np.asarray(p) - np.asarray(center)
    a = float(np.sum(np.abs(d) ** 2))
    b = 2 * float(np.real(np.sum(np.conj(d) * rel)))
    c = float(np.sum(np.abs(rel) ** 2)) - radius ** 2
    disc = b * b - 4 * a * c
    if disc <= 0:
        return math.inf
    lam_c = -b / (2 * a)
    rho = math.sqrt(disc) / (2 * a)
    u = (0.0 - lam_c) / rho
    v = (1.0 - lam_c) / rho
    if abs(u) >= 1 or abs(v) >= 1:
        return math.inf
    return dist_disc(complex(u, 0), complex(v, 0))


def kobayashi_bounds_c2(w: Wedge, z, zz, refine: int = 64):
    """(lower, upper) bounds for the Kobayashi distance between two wedge points.

    Lower: the first-coordinate projection contracts to the half plane.
    Upper: chain of analytic discs along the Euclidean segment (the wedge is
    convex, so the segment stays inside); each link is measured inside the
    largest safe ball around its midpoint.
    """
    z = np.asarray(z, dtype=complex)
    zz = np.asarray(zz, dtype=complex)
    if not (w.contains_pair(z[0], z[1]) and w.contains_pair(zz[0], zz[1])):
        raise ValueError("both points must lie in the wedge")
    lower = dist_halfplane(z[0], zz[0])
    if np.all(z == zz):
        return 0.0, 0.0

    def chain_cost(k):
        ts = np.linspace(0.0, 1.0, k + 1)
        pts = z[None, :] + ts[:, None] * (zz - z)[None, :]
        total = 0.0
        for i in range(k):
            mid = 0.5 * (pts[i] + pts[i + 1])
            r = _wedge_inradius(w, mid[0], mid[1])
            if r <= 0:
                return math.inf
            c = _disc_distance_in_ball(pts[i], pts[i + 1], mid, r)
            if math.isinf(c):
                return math.inf
            total += c
        return total

    best = math.inf
    k = 1
    while k <= refine:
        best = min(best, chain_cost(k))
        k *= 2
    upper = best
    if upper < lower:
        # both bounds are certified; numerical ties can invert by rounding
        upper = lower
    return lower, upper
