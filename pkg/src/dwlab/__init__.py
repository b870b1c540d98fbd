"""Numerical laboratory for Denjoy-Wolff behavior on convex domains in C^2:
slit-comb / spiral / snowflake domains, welded Riemann maps, hyperbolic
distances, prime-end cluster estimators, wedge construction and orbit
dynamics, with a batch CLI (`dw-lab`)."""

from .conformal import (
    ConformalMap,
    WeldedMap,
    angular_derivative,
    fit_with_cache,
    normalize_prime_end,
    zipper_fit,
)
from .dynamics import (
    OrbitRecord,
    SelfMapF,
    build_fixture,
    build_inner,
    denjoy_wolff_report,
    iterate,
    target_set_estimate,
)
from .geometry import (
    Comb,
    Disc,
    Koch,
    MobiusTransform,
    PolylineJordan,
    Spiral,
    UnitDisc,
    Wedge,
    build_comb,
    build_koch,
    build_spiral,
    cayley,
    domain_from_json,
)
from .hyperbolic import (
    dist_disc,
    dist_halfplane,
    dist_pullback,
    kobayashi_bounds_c2,
    kobayashi_royden_planar,
    step_bound,
    stolz_check,
)
from .primeends import (
    CompactSetEstimate,
    comb_null_chain,
    hausdorff_distance,
    principal_part_comb,
    radial_cluster_set,
    sequence_cluster_set,
    verify_lehto,
)
from .wedgebuilder import (
    MonotoneFn,
    SmoothConvexFn,
    concave_majorant,
    estimate_phi,
    levi_form,
    psi0,
    slice_scenario,
    smooth_psi,
    verify_graph_in_wedge,
)

__version__ = "0.1.0"
