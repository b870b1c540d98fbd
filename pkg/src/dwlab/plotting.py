"""Static figure emission for domains, orbits and cluster estimates.

SVG output is byte-reproducible: fixed hash salt, no embedded date, fixed
figure geometry, and stable draw order with explicit gids.
"""

from __future__ import annotations

import os
import tempfile

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .geometry import Comb, Domain, Koch, PolylineJordan, Spiral, UnitDisc  # noqa: E402

matplotlib.rcParams["svg.hashsalt"] = "dw-lab"
matplotlib.rcParams["svg.fonttype"] = "path"


def _draw_domain(ax, domain: Domain):
    if isinstance(domain, Comb):
        a = domain.a
        rect_x = [0, a, a, 0, 0]
        rect_y = [-a / 2, -a / 2, a / 2, a / 2, -a / 2]
        ax.plot(rect_x, rect_y, color="black", lw=1.0, gid="boundary")
        for i, s in enumerate(domain.slits()):
            ax.plot([s.re_coordinate, s.re_coordinate], [s.im_low, s.im_high],
                    color="black", lw=0.8, gid=f"slit-{i:03d}")
    elif isinstance(domain, Spiral):
        th = np.linspace(0, 2 * np.pi, 512)
        ax.plot(np.cos(th), np.sin(th), color="black", lw=1.0, gid="boundary")
        p = domain.polyline[:: max(1, len(domain.polyline) // 4000)]
        ax.plot(p.real, p.imag, color="black", lw=0.8, gid="slit-000")
    elif isinstance(domain, (Koch, PolylineJordan)):
        v = np.r_[domain.vertices, domain.vertices[:1]]
        ax.plot(v.real, v.imag, color="black", lw=1.0, gid="boundary")
    elif isinstance(domain, UnitDisc):
        th = np.linspace(0, 2 * np.pi, 512)
        ax.plot(np.cos(th), np.sin(th), color="black", lw=1.0, gid="boundary")
    else:
        b = domain.boundary_points(720)
        ax.plot(b.real, b.imag, ".", color="black", ms=1.0, gid="boundary")


def render_scene(out_path, domain: Domain = None, orbit_points=None,
                 oracle_points=None, title: str = None):
    """Compose domain boundary, orbit markers (colored by iterate index) and
    an oracle overlay into one deterministic SVG."""
    fig, ax = plt.subplots(figsize=(6.0, 6.0), dpi=100)
    if domain is not None:
        _draw_domain(ax, domain)
    if oracle_points is not None and len(oracle_points):
        pts = np.asarray(oracle_points, dtype=complex)
        ax.plot(pts.real, pts.imag, color="#d62728", lw=2.0, alpha=0.6,
                gid="oracle", zorder=3)
    if orbit_points is not None and len(orbit_points):
        pts = np.asarray(orbit_points, dtype=complex)
        idx = np.arange(len(pts))
        ax.scatter(pts.real, pts.imag, c=idx, cmap="viridis", s=14,
                   gid="orbit", zorder=4)
    ax.set_aspect("equal")
    ax.set_xlabel("Re")
    ax.set_ylabel("Im")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    write_svg_atomic(fig, out_path)
    plt.close(fig)


def write_svg_atomic(fig, out_path):
    """Save without a date stamp and publish by rename."""
    out_path = os.fspath(out_path)
    d = os.path.dirname(out_path) or "."
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(suffix=".svg", dir=d)
    os.close(fd)
    try:
        fig.savefig(tmp, format="svg", metadata={"Date": None})
        os.replace(tmp, out_path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)
