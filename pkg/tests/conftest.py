import os
import tempfile

import numpy as np
import pytest

_cache_dir = tempfile.mkdtemp(prefix="dw-lab-test-cache-")
os.environ["DW_LAB_CACHE"] = _cache_dir

from dwlab import conformal, dynamics, geometry  # noqa: E402


@pytest.fixture(scope="session")
def comb_domain():
    return geometry.build_comb(1.0, 40)


@pytest.fixture(scope="session")
def comb_map(comb_domain):
    return conformal.fit_with_cache(comb_domain, 2048)


@pytest.fixture(scope="session")
def spiral_domain():
    return geometry.build_spiral(8.0)


@pytest.fixture(scope="session")
def spiral_map(spiral_domain):
    return conformal.fit_with_cache(spiral_domain, 2048)


@pytest.fixture(scope="session")
def quarter_weld():
    qd = conformal.make_quarterdisc_map()
    boundary = np.concatenate([
        np.linspace(0, 1, 80, endpoint=False),
        np.exp(1j * np.linspace(0, np.pi / 2, 80, endpoint=False)),
        1j * np.linspace(1, 0, 80, endpoint=False),
    ])
    base = complex(qd.evaluate(np.array([0j]))[0])
    return conformal.zipper_fit(geometry.PolylineJordan(boundary), 1024, base=base)


@pytest.fixture(scope="session")
def comb_fixture(comb_map):
    return dynamics.build_fixture("comb-wedge")


@pytest.fixture(scope="session")
def control_fixture():
    return dynamics.build_fixture("control-convergent")


@pytest.fixture(scope="session")
def comb_orbit(comb_fixture):
    f = comb_fixture.self_map
    z0 = np.array([1.0 + 0.0j, 0.0 + 0.0j])
    return dynamics.iterate(f, z0, 2000, floor=1e-6, ambient=comb_fixture.ambient)
