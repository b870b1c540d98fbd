"""Fixed-point-free self-maps of the ambient domains, orbit iteration and
target-set estimation, with the four study fixtures (slit comb in a wedge,
spiral slice, snowflake slice, convergent control) and the verdict report.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import wedgebuilder
from .conformal import (
    CompositeMap,
    ConformalMap,
    angular_derivative,
    fit_with_cache,
    make_tangent_disc_map,
)
from .geometry import Disc, build_comb, build_koch, build_spiral, koch_vertices
from .hyperbolic import dist_halfplane
from .primeends import (
    CompactSetEstimate,
    circle_net,
    hausdorff_distance,
    directed_hausdorff_defects,
    principal_part_comb,
    sequence_cluster_set,
)

DEFAULT_FLOOR = 1e-6
DEFAULT_LAMBDA = 0.5
DEFAULT_APERTURE = 10.0


@dataclass
class InnerMap:
    """h(z) = phi(lambda z): the contracting one-variable factor."""

    phi: ConformalMap
    lam: float
    derivative_at_end: float

    def __call__(self, z):
        return self.phi.eval_from_halfplane(self.lam * np.asarray(z, complex))


def build_inner(phi: ConformalMap, lam: float, v_domain=None,
                margin: float = 1e-6) -> InnerMap:
    """Check lambda * phi'(0) < 1 and the image containment, then wrap."""
    if not 0 < lam:
        raise ValueError("lambda must be positive")
    deriv, _err = angular_derivative(phi)
    if not math.isfinite(deriv):
        raise ValueError("phi has no finite angular derivative at its end")
    if lam * deriv >= 1.0 - margin:
        raise ValueError(f"contraction bound fails: lambda * phi'(0) = "
                         f"{lam * deriv:.6g} is not below 1 - {margin:g} "
                         f"(computed phi'(0) = {deriv:.6g})")
    inner = InnerMap(phi, lam, deriv)
    if v_domain is not None:
        rng = np.random.default_rng(7)
        grid = rng.uniform(0.05, 3.0, 64) + 1j * rng.uniform(-3.0, 3.0, 64)
        vals = np.asarray(inner(grid))
        if not np.all(v_domain.contains_many(vals)):
            raise ValueError("inner map image leaves the target slice")
    return inner


@dataclass
class SelfMapF:
    """F(z) = (h(z1), g(h(z1)), 0...): factors through the first coordinate."""

    inner: InnerMap
    graph_map: ConformalMap
    padding: int = 0

    def __call__(self, z):
        z = np.atleast_1d(np.asarray(z, complex))
        z1 = self.inner(z[..., 0])
        z2 = np.asarray(self.graph_map.eval_from_halfplane(z1), complex)
        out = np.zeros(z.shape[:-1] + (2 + self.padding,), dtype=complex)
        out[..., 0] = z1
        out[..., 1] = z2
        return out

    def first_coordinate_orbit(self, z1_0: complex, m: int, floor: float):
        orbit = [complex(z1_0)]
        for _ in range(m):
            nxt = complex(self.inner(np.array([orbit[-1]]))[0])
            if nxt.real < floor:
                break
            orbit.append(nxt)
        return np.asarray(orbit)


def build_f(inner: InnerMap, graph_map: ConformalMap, ambient,
            padding: int = 0, check_samples: int = 64) -> SelfMapF:
    """Verify the ambient hypotheses on samples and assemble the self-map."""
    f = SelfMapF(inner, graph_map, padding)
    rng = np.random.default_rng(11)
    z1 = rng.uniform(0.05, 2.0, check_samples) + 1j * rng.uniform(-2.0, 2.0, check_samples)
    h1 = inner(z1)
    g1 = np.asarray(graph_map.eval_from_halfplane(h1), complex)
    if np.any(h1.real <= 0):
        raise ValueError("ambient hypothesis fails: first coordinate leaves Re>0")
    inside = _ambient_contains(ambient, h1, g1)
    if not np.all(inside):
        bad = int(np.argmin(inside))
        raise ValueError(f"graph containment fails at sample z1={z1[bad]:.5g} "
                         f"-> ({h1[bad]:.5g}, {g1[bad]:.5g})")
    # self-mapping sanity: F(F(z)) evaluates
    pts = np.zeros((8, 2 + padding), dtype=complex)
    pts[:, 0] = z1[:8]
    pts[:, 1] = g1[:8]
    f(f(pts))
    return f


def _ambient_contains(ambient, z1, z2):
    if hasattr(ambient, "contains_many_pairs"):
        return ambient.contains_many_pairs(z1, z2)
    return np.array([ambient.contains_pair(a, b) for a, b in zip(z1, z2)])


class IterationError(RuntimeError):
    def __init__(self, message, index):
        super().__init__(message)
        self.index = index


@dataclass
class OrbitRecord:
    """Iterates with per-step hyperbolic distances and sector ratios."""

    points: np.ndarray          # (k, 2 + padding) complex, row 0 = seed
    step_dists: np.ndarray      # (k,) with nan in row 0
    stolz_ratios: np.ndarray    # (k,)
    floor: float
    requested: int
    stopped_at_floor: bool
    warnings: list = field(default_factory=list)

    def __len__(self):
        return len(self.points)

    def first_coords(self):
        return self.points[:, 0]

    def second_coords(self):
        return self.points[:, 1]

    def to_csv(self) -> str:
        lines = ["m,re1,im1,re2,im2,step_dist,stolz_ratio"]
        for m, (row, sd, sr) in enumerate(zip(self.points, self.step_dists,
                                              self.stolz_ratios)):
            lines.append(f"{m},{row[0].real:.17g},{row[0].imag:.17g},"
                         f"{row[1].real:.17g},{row[1].imag:.17g},"
                         f"{sd:.17g},{sr:.17g}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv(cls, text: str) -> "OrbitRecord":
        rows = [r for r in text.strip().splitlines()[1:] if r]
        pts = np.zeros((len(rows), 2), dtype=complex)
        sd = np.zeros(len(rows))
        sr = np.zeros(len(rows))
        for i, r in enumerate(rows):
            f = [float(x) for x in r.split(",")[1:]]
            pts[i, 0] = complex(f[0], f[1])
            pts[i, 1] = complex(f[2], f[3])
            sd[i], sr[i] = f[4], f[5]
        return cls(pts, sd, sr, floor=math.nan, requested=len(rows),
                   stopped_at_floor=False)


def iterate(f: SelfMapF, z0, m: int, floor: float = DEFAULT_FLOOR,
            ambient=None) -> OrbitRecord:
    """Run the orbit, stopping once the first coordinate drops under the
    evaluation floor (recorded); checks ambient membership of iterates."""
    if m < 1:
        raise ValueError("need m >= 1")
    z0 = np.asarray(z0, dtype=complex)
    if z0.shape != (2 + f.padding,):
        raise ValueError(f"seed must have {2 + f.padding} coordinates")
    if z0[0].real <= 0:
        raise ValueError("seed first coordinate must satisfy Re > 0")
    rows = [z0]
    stopped = False
    for k in range(m):
        nxt = f(rows[-1][None, :])[0]
        if not np.all(np.isfinite(nxt)):
            raise IterationError(f"iterate {k + 1} left the numerical range", k + 1)
        if nxt[0].real < floor:
            stopped = True
            break
        if ambient is not None and k > 0:
            if not bool(_ambient_contains(ambient, nxt[None, 0], nxt[None, 1])[0]):
                raise IterationError(f"iterate {k + 1} left the ambient domain "
                                     f"({nxt[0]:.4g}, {nxt[1]:.4g})", k + 1)
        rows.append(nxt)
    pts = np.asarray(rows)
    z1 = pts[:, 0]
    sd = np.full(len(pts), math.nan)
    for i in range(1, len(pts)):
        sd[i] = dist_halfplane(z1[i - 1], z1[i])
    sr = np.abs(z1) / z1.real
    warns = []
    if stopped:
        warns.append(f"stopped at the evaluation floor {floor:g} after "
                     f"{len(pts) - 1} of {m} requested iterates")
    return OrbitRecord(pts, sd, sr, floor, m, stopped, warns)


def target_set_estimate(orbit: OrbitRecord, eps: float,
                        min_points: int = 200) -> dict:
    """Cluster estimate of the orbit in C^2, with the per-coordinate
    projections that the verdicts use."""
    n = len(orbit)
    warnings = list(orbit.warnings)
    if n < min_points:
        warnings.append(f"orbit holds {n} points, below the preferred "
                        f"{min_points}; estimates use what is available")
    if n < 8:
        raise ValueError("orbit too short for any cluster estimate")
    full = sequence_cluster_set(orbit.points, eps, min_points=min(n, min_points))
    second = sequence_cluster_set(orbit.second_coords(), eps,
                                  min_points=min(n, min_points))
    first = sequence_cluster_set(orbit.first_coords(), eps,
                                 min_points=min(n, min_points))
    return {"full": full, "second": second, "first": first,
            "warnings": warnings}


# ---------------------------------------------------------------------------
# fixtures
# ---------------------------------------------------------------------------

@dataclass
class Fixture:
    name: str
    ambient: object
    self_map: SelfMapF
    graph_map: ConformalMap
    oracle: CompactSetEstimate
    oracle_name: str
    expected_verdict: str
    aperture: float = 1.0 + 1e-9
    notes: dict = field(default_factory=dict)


def _reference_inner(lam: float) -> InnerMap:
    phi = make_tangent_disc_map()
    return build_inner(phi, lam, v_domain=Disc(0.5, 0.5))


def comb_wedge_fixture(a: float = 1.0, slit_count: int = 40, lam: float = DEFAULT_LAMBDA,
                       delta: float = 2.0, boundary_samples: int = 2048,
                       eps: float = 0.02, use_cache: bool = True,
                       **_extra) -> Fixture:
    """The wedge ambient around the graph of the comb map."""
    comb = build_comb(a, slit_count)
    g = fit_with_cache(comb, boundary_samples, use_cache=use_cache)
    inner = _reference_inner(lam)
    v = Disc(0.5 * a, 0.5 * a)
    v_a = v  # the slice {|z| < a} already contains the tangent disc
    phi_env = wedgebuilder.estimate_phi(g, v_a)
    phi_hat = wedgebuilder.concave_majorant(phi_env)
    psi0_fn = wedgebuilder.psi0(phi_hat)
    wedge = wedgebuilder.build_wedge(v, psi0_fn, delta)
    f = build_f(inner, g, wedge)
    oracle = principal_part_comb(a, eps / 2)
    return Fixture("comb-wedge", wedge, f, g, oracle,
                   "segment [-ia/6, ia/6]", "FAILS",
                   notes={"a": a, "slitCount": slit_count, "lambda": lam,
                          "delta": delta,
                          "effective": g.fit_report.get("effective", {})})


def spiral_slice_fixture(t_max: float = 8.0, lam: float = DEFAULT_LAMBDA,
                         boundary_samples: int = 2048, eps: float = 0.02,
                         use_cache: bool = True, **_extra) -> Fixture:
    spiral = build_spiral(t_max)
    g = fit_with_cache(spiral, boundary_samples, use_cache=use_cache)
    inner = _reference_inner(lam)
    ambient = wedgebuilder.SliceModelDomain()
    f = build_f(inner, g, ambient)
    oracle = circle_net(1.0, eps / 2)
    return Fixture("spiral-slice", ambient, f, g, oracle, "unit circle", "FAILS",
                   notes={"tMax": t_max, "lambda": lam,
                          "effective": g.fit_report.get("effective", {})})


def koch_slice_fixture(depth: int = 4, t_max: float = 8.0,
                       lam: float = DEFAULT_LAMBDA,
                       boundary_samples: int = 2048, eps: float = 0.02,
                       use_cache: bool = True, **_extra) -> Fixture:
    """Composite pipeline: snowflake Riemann map after the spiral map."""
    spiral = build_spiral(t_max)
    h = fit_with_cache(spiral, boundary_samples, use_cache=use_cache)
    koch = build_koch(depth)
    fmap = fit_with_cache(koch, boundary_samples, use_cache=use_cache)
    g = CompositeMap(fmap, h)
    inner = _reference_inner(lam)
    ambient = wedgebuilder.SliceModelDomain()
    f = build_f(inner, g, ambient)
    verts = koch_vertices(6)
    oracle = CompactSetEstimate(verts[::4], eps)
    return Fixture("koch-slice", ambient, f, g, oracle,
                   "snowflake boundary (depth 6)", "FAILS",
                   notes={"depth": depth, "tMax": t_max, "lambda": lam})


def control_fixture(lam: float = DEFAULT_LAMBDA, delta: float = 2.0,
                    eps: float = 1e-3, **_ignored) -> Fixture:
    """Graph map with a continuous extension at the end: single-point target."""
    g = make_tangent_disc_map()
    inner = _reference_inner(lam)
    v = Disc(0.5, 0.5)
    phi_env = wedgebuilder.estimate_phi(g, v)
    phi_hat = wedgebuilder.concave_majorant(phi_env)
    psi0_fn = wedgebuilder.psi0(phi_hat)
    wedge = wedgebuilder.build_wedge(v, psi0_fn, delta)
    f = build_f(inner, g, wedge)
    oracle = CompactSetEstimate(np.array([0.0 + 0.0j]), eps)
    return Fixture("control-convergent", wedge, f, g, oracle, "{0}", "HOLDS",
                   notes={"lambda": lam, "delta": delta})


FIXTURE_BUILDERS = {
    "comb-wedge": comb_wedge_fixture,
    "spiral-slice": spiral_slice_fixture,
    "koch-slice": koch_slice_fixture,
    "control-convergent": control_fixture,
}


def build_fixture(name: str, **kwargs) -> Fixture:
    if name not in FIXTURE_BUILDERS:
        raise ValueError(f"unknown fixture {name!r}; "
                         f"choose from {sorted(FIXTURE_BUILDERS)}")
    return FIXTURE_BUILDERS[name](**kwargs)


# ---------------------------------------------------------------------------
# verdict report
# ---------------------------------------------------------------------------

def denjoy_wolff_report(fixture: Fixture, m: int = 2000,
                        seed=(1.0 + 0.0j, 0.0 + 0.0j),
                        floor: float = DEFAULT_FLOOR, eps: float = 0.02,
                        verdict_tol: float = 1e-3,
                        grid_points: int = 100) -> dict:
    """Iterate the fixture, estimate the target set and decide whether the
    single-limit-point property fails or holds for this orbit."""
    f = fixture.self_map
    z0 = np.zeros(2 + f.padding, dtype=complex)
    z0[0], z0[1] = seed[0], seed[1]
    orbit = iterate(f, z0, m, floor=floor, ambient=fixture.ambient)
    est = target_set_estimate(orbit, eps)
    second = est["second"]
    first = est["first"]
    diameter = second.diameter()
    d_est_or, d_or_est = directed_hausdorff_defects(second, fixture.oracle)
    try:
        hd = hausdorff_distance(second, fixture.oracle)
    except ValueError:
        hd = math.nan
    first_to_zero = float(np.max(np.abs(first.points)))
    steps = orbit.step_dists[1:]
    step_max = float(np.nanmax(steps)) if len(steps) else 0.0
    nonincreasing = bool(np.all(np.diff(steps) <= 1e-9)) if len(steps) > 1 else True

    # fixed-point-freeness evidence: min |F(z) - z| on an ambient grid
    rng = np.random.default_rng(99)
    pts = _ambient_grid(fixture.ambient, grid_points, rng)
    fz = f(pts)
    disp = np.sqrt(np.sum(np.abs(fz - pts) ** 2, axis=-1))
    verdict = "FAILS" if diameter > verdict_tol else "HOLDS"
    return {
        "fixture": fixture.name,
        "oracle": fixture.oracle_name,
        "verdict": verdict,
        "expected": fixture.expected_verdict,
        "match": verdict == fixture.expected_verdict,
        "targetDiameter": diameter,
        "hausdorffToOracle": hd,
        "defectEstimateToOracle": d_est_or,
        "defectOracleToEstimate": d_or_est,
        "firstCoordinateSpread": first_to_zero,
        "stepBound": step_max,
        "stepsNonIncreasing": nonincreasing,
        "stolzMaxRatio": float(np.max(orbit.stolz_ratios)),
        "minDisplacementOnGrid": float(disp.min()),
        "lastFirstCoordinate": float(orbit.first_coords()[-1].real),
        "orbitLength": len(orbit),
        "requestedIterates": m,
        "floor": floor,
        "epsilon": eps,
        "verdictTolerance": verdict_tol,
        "warnings": est["warnings"],
        "notes": fixture.notes,
    }


def _ambient_grid(ambient, n, rng):
    if isinstance(ambient, wedgebuilder.SliceModelDomain):
        z1 = rng.uniform(0.05, 2.0, 4 * n) + 1j * rng.uniform(-2, 2, 4 * n)
        z2 = rng.uniform(-2, 2, 4 * n) + 1j * rng.uniform(-2, 2, 4 * n)
    else:
        z1 = rng.uniform(0.01, 1.0, 4 * n) + 1j * rng.uniform(-0.5, 0.5, 4 * n)
        z2 = rng.uniform(0.0, 1.0, 4 * n) + 1j * rng.uniform(-0.6, 0.6, 4 * n)
    keep = _ambient_contains(ambient, z1, z2)
    z1, z2 = z1[keep][:n], z2[keep][:n]
    pts = np.zeros((len(z1), 2), dtype=complex)
    pts[:, 0], pts[:, 1] = z1, z2
    return pts
