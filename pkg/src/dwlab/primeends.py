"""Null chains and crosscuts of the comb, cluster-set estimators, and
Hausdorff comparison of finite compact-set approximations.

Estimates are epsilon-nets of tail values: a configurable head fraction is
dropped, surviving points need enough nearby tail samples (dense tails
require 3 supporters inside eps/2; short orbit tails keep single points,
the head discard already removed the transient), and the net keeps points
pairwise at least eps/2 apart in first-seen order.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist

from .geometry import Comb
from .hyperbolic import step_bound, stolz_check

ESCAPE_RADIUS = 1e9


@dataclass
class CompactSetEstimate:
    """Finite epsilon-net approximation of a compact planar or C^2 set."""

    points: np.ndarray
    epsilon: float
    has_escape: bool = False

    def __post_init__(self):
        self.points = np.atleast_1d(np.asarray(self.points, dtype=complex))
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")

    @property
    def is_planar(self) -> bool:
        return self.points.ndim == 1

    def as_real(self) -> np.ndarray:
        p = self.points if self.points.ndim > 1 else self.points[:, None]
        return np.column_stack([p.real, p.imag]).reshape(len(p), -1)

    def diameter(self) -> float:
        if len(self.points) < 2:
            return 0.0
        r = self.as_real()
        return float(cdist(r, r).max())

    def to_json(self) -> dict:
        return {"epsilon": self.epsilon,
                "points": self.as_real().tolist(),
                **({"escape": True} if self.has_escape else {})}

    @classmethod
    def from_json(cls, doc):
        if isinstance(doc, str):
            doc = json.loads(doc)
        arr = np.asarray(doc["points"], dtype=float)
        if arr.shape[1] == 2:
            pts = arr[:, 0] + 1j * arr[:, 1]
        else:
            pts = arr[:, 0::2] + 1j * arr[:, 1::2]
        return cls(pts, doc["epsilon"], doc.get("escape", False))


def _thin(values: np.ndarray, eps: float, min_support: int) -> np.ndarray:
    """Net the values in order: keep a point if it has enough supporters and
    clears every kept point by eps/2."""
    vals = np.atleast_1d(values)
    flat = vals if vals.ndim > 1 else vals[:, None]
    real = np.column_stack([flat.real, flat.imag]).reshape(len(flat), -1)
    kept: list[int] = []
    if min_support > 1:
        d = cdist(real, real)
        support = (d <= eps / 2).sum(axis=1)
    else:
        support = np.full(len(real), min_support)
    for i in range(len(real)):
        if support[i] < min_support:
            continue
        if kept and np.min(np.linalg.norm(real[kept] - real[i], axis=1)) < eps / 2:
            continue
        kept.append(i)
    return vals[kept]


def _estimate(values, eps, head_fraction, min_support=None) -> CompactSetEstimate:
    vals = np.atleast_1d(np.asarray(values, dtype=complex))
    n = len(vals)
    tail = vals[int(math.floor(n * head_fraction)):]
    if len(tail) == 0:
        raise ValueError("no tail samples left after head discard")
    mags = np.abs(tail) if tail.ndim == 1 else np.sqrt(np.sum(np.abs(tail) ** 2, axis=-1))
    escape = bool(np.any(mags > ESCAPE_RADIUS) or not np.all(np.isfinite(mags)))
    finite = tail[mags <= ESCAPE_RADIUS] if escape else tail
    if min_support is None:
        min_support = 3 if len(finite) >= 30 else 1
    # deepest-first: the latest tail samples are the best cluster witnesses,
    # so they claim net slots before shallower ones
    net = _thin(finite[::-1], eps, min_support)
    if len(net) == 0:
        net = finite[-1:]
    return CompactSetEstimate(net, eps, has_escape=escape)


def radial_cluster_set(cmap, r_schedule, eps: float,
                       head_fraction: float = 0.5,
                       min_support=None) -> CompactSetEstimate:
    """Estimate the cluster set of the map along its distinguished radius.

    The schedule is decreasing and must respect the map's trust floor.
    """
    r = np.asarray(r_schedule, dtype=float)
    if np.any(np.diff(r) >= 0):
        raise ValueError("r schedule must be strictly decreasing")
    floor = getattr(cmap, "trust_floor", 0.0)
    if r[-1] < floor:
        raise ValueError(f"schedule bottom {r[-1]:g} is below the trust floor "
                         f"{floor:g}")
    values = np.asarray(cmap.eval_from_halfplane(r), dtype=complex)
    return _estimate(values, eps, head_fraction, min_support)


def geometric_schedule(r_hi: float, r_lo: float, n: int) -> np.ndarray:
    return np.exp(np.linspace(math.log(r_hi), math.log(r_lo), n))


def sequence_cluster_set(points, eps: float, head_fraction: float = 0.5,
                         min_points: int = 100,
                         min_support=None) -> CompactSetEstimate:
    """Cluster estimate of an explicit value sequence (tail accumulation)."""
    pts = np.atleast_1d(np.asarray(points, dtype=complex))
    if len(pts) < min_points:
        raise ValueError(f"need at least {min_points} points, got {len(pts)}; "
                         "pass min_points explicitly for short orbits")
    return _estimate(pts, eps, head_fraction, min_support)


def hausdorff_distance(a: CompactSetEstimate, b: CompactSetEstimate) -> float:
    """Symmetric Hausdorff distance between two finite estimates."""
    if a.has_escape or b.has_escape:
        raise ValueError("cannot compare estimates with escape flags")
    if len(a.points) == 0 or len(b.points) == 0:
        raise ValueError("estimates must be non-empty")
    d = cdist(a.as_real(), b.as_real())
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))


def directed_hausdorff_defects(a: CompactSetEstimate, b: CompactSetEstimate):
    """(sup_{x in a} d(x, b), sup_{y in b} d(y, a)) reported separately."""
    d = cdist(a.as_real(), b.as_real())
    return float(d.min(axis=1).max()), float(d.min(axis=0).max())


def segment_net(z_from: complex, z_to: complex, eps: float) -> CompactSetEstimate:
    n = max(2, int(math.ceil(abs(z_to - z_from) / (eps / 2))) + 1)
    t = np.linspace(0.0, 1.0, n)
    return CompactSetEstimate(complex(z_from) + t * (complex(z_to) - complex(z_from)), eps)


def circle_net(radius: float, eps: float, center: complex = 0.0) -> CompactSetEstimate:
    n = max(8, int(math.ceil(2 * math.pi * radius / (eps / 2))))
    th = 2 * np.pi * np.arange(n) / n
    return CompactSetEstimate(complex(center) + radius * np.exp(1j * th), eps)


# ---------------------------------------------------------------------------
# crosscuts and null chains of the comb
# ---------------------------------------------------------------------------

@dataclass
class Crosscut:
    """Polyline with endpoints on the boundary and interior inside the domain."""

    points: np.ndarray

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=complex)

    def diameter(self) -> float:
        p = self.points
        return float(np.abs(p[:, None] - p[None, :]).max())


@dataclass
class NullChain:
    crosscuts: list = field(default_factory=list)

    def diameters(self):
        return [c.diameter() for c in self.crosscuts]

    def check_shrinking(self) -> bool:
        d = self.diameters()
        return all(b < a for a, b in zip(d, d[1:]))


def comb_null_chain(a: float, y: float, n_cuts: int,
                    sample_step: float = 1e-3) -> NullChain:
    """Crosscuts [a/(2n+1), a/2n] x {y} of the comb, n = 2..n_cuts.

    Each lies between a top tooth and the next bottom tooth; admissible for
    |y| <= a/6 where the two families overlap.
    """
    if abs(y) > a / 6:
        raise ValueError("crosscut height must satisfy |y| <= a/6")
    if n_cuts < 2:
        raise ValueError("need n >= 2")
    comb = Comb(a, 2 * n_cuts + 2)
    cuts = []
    for n in range(2, n_cuts + 1):
        x0, x1 = a / (2 * n + 1), a / (2 * n)
        m = max(8, int(math.ceil((x1 - x0) / sample_step)))
        xs = np.linspace(x0, x1, m)
        pts = xs + 1j * y
        interior = pts[1:-1]
        if not np.all(comb.contains_many(interior)):
            raise ValueError(f"crosscut at n={n}, y={y} leaves the domain")
        cuts.append(Crosscut(pts))
    return NullChain(cuts)


def principal_part_comb(a: float, eps: float = 0.01) -> CompactSetEstimate:
    """The segment [-ia/6, ia/6]: limits along the comb's corridor chain."""
    if a <= 0:
        raise ValueError("a must be positive")
    return segment_net(-1j * a / 6, 1j * a / 6, eps)


def comb_impression(a: float, eps: float = 0.01) -> CompactSetEstimate:
    """The full end impression [-ia/2, ia/2]."""
    return segment_net(-1j * a / 2, 1j * a / 2, eps)


# ---------------------------------------------------------------------------
# the cluster-set equality check
# ---------------------------------------------------------------------------

def verify_lehto(cmap, w_sequence, aperture: float, eps: float,
                 tolerance: float = 0.05) -> dict:
    """Compare the radial cluster estimate with the cluster of g(w_n).

    Hypotheses: the sequence approaches 0 inside a Stolz sector of the given
    aperture with bounded consecutive hyperbolic steps.  The radial schedule
    is coupled to the sequence radii (densified between them), so the two
    estimators examine the same depth window.
    """
    w = np.atleast_1d(np.asarray(w_sequence, dtype=complex))
    report = {"tolerance": tolerance}
    hyp_ok = (len(w) >= 3 and stolz_check(w, aperture)
              and abs(w[-1]) < abs(w[0]))
    if hyp_ok:
        bound = step_bound(w)
        hyp_ok = math.isfinite(bound)
        report["stepBound"] = bound
    if not hyp_ok:
        report["hypothesesMet"] = False
        return report
    report["hypothesesMet"] = True

    radii = np.abs(w)
    floor = max(getattr(cmap, "trust_floor", 0.0), radii.min())
    dense = []
    for r0, r1 in zip(radii[:-1], radii[1:]):
        hi, lo = max(r0, r1), min(r0, r1)
        lo = max(lo, floor)
        if hi <= lo:
            continue
        dense.append(np.exp(np.linspace(math.log(hi), math.log(lo), 12,
                                        endpoint=False)))
    dense.append(np.array([max(radii.min(), floor)]))
    schedule = np.concatenate(dense)
    schedule = np.unique(schedule)[::-1]

    radial = radial_cluster_set(cmap, schedule, eps)
    seq_vals = np.asarray(cmap.eval_from_halfplane(w), dtype=complex)
    seq = sequence_cluster_set(seq_vals, eps, min_points=min(len(w), 100))
    dist = hausdorff_distance(radial, seq)
    report.update({
        "distance": dist,
        "pass": bool(dist <= tolerance),
        "radial": radial.to_json(),
        "sequence": seq.to_json(),
    })
    return report
