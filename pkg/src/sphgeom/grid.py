"""Iso-latitude pixelization of the unit sphere.

Rings of constant colatitude, the same number of columns on every ring.
Ring centers sit at theta_i = pi (i + 1/2) / n_rings, ring edges at
pi i / n_rings, and the per-cell solid angle is the exact cosine difference
across the ring band times 2 pi / n_phi, so the cell areas telescope to 4 pi.

Pixels are addressed as (ring, col) with col wrapping modulo n_phi.  Cells on
the first and last ring additionally see the antipodal-longitude cells of
their own ring as across-pole neighbours, which keeps every pixel's
neighbourhood an 8-cycle.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = ["GridSpec", "PixelId", "build_grid", "default_grid", "integrate",
           "neighbors8", "geodesic_distance", "write_map", "read_map"]

PixelId = tuple[int, int]

_MAP_MAGIC = "sphgrid v1"


@dataclass(frozen=True)
class GridSpec:
    n_rings: int
    n_phi: int
    theta: np.ndarray = field(repr=False, compare=False)
    theta_edges: np.ndarray = field(repr=False, compare=False)
    ring_area: np.ndarray = field(repr=False, compare=False)  # solid angle of one cell, per ring
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def n_pix(self) -> int:
        return self.n_rings * self.n_phi

    @property
    def phi(self) -> np.ndarray:
        return 2.0 * np.pi * (np.arange(self.n_phi) + 0.5) / self.n_phi

    def cell_area(self, ring: int) -> float:
        return float(self.ring_area[ring])


def build_grid(n_rings: int, n_phi: int) -> GridSpec:
    if n_rings < 4 or n_phi < 4:
        raise ValueError(f"grid too small: need n_rings >= 4 and n_phi >= 4, got ({n_rings}, {n_phi})")
    if n_phi % 2 != 0:
        raise ValueError("n_phi must be even (antipodal pole closure)")
    edges = np.pi * np.arange(n_rings + 1) / n_rings
    theta = np.pi * (np.arange(n_rings) + 0.5) / n_rings
    ring_area = (np.cos(edges[:-1]) - np.cos(edges[1:])) * (2.0 * np.pi / n_phi)
    g = GridSpec(n_rings=n_rings, n_phi=n_phi, theta=theta, theta_edges=edges, ring_area=ring_area)
    g.theta.setflags(write=False)
    g.theta_edges.setflags(write=False)
    g.ring_area.setflags(write=False)
    return g


def default_grid(ell: int, oversampling: int = 6) -> GridSpec:
    """Grid matched to multipole ell: n_rings = oversampling * ell, n_phi twice that."""
    if ell < 1:
        raise ValueError("ell must be >= 1")
    return build_grid(oversampling * ell, 2 * oversampling * ell)


def integrate(values: np.ndarray, grid: GridSpec) -> float:
    """Area-weighted sum over all cells: sum_p v_p w_p."""
    values = np.asarray(values)
    if values.shape == (grid.n_pix,):
        values = values.reshape(grid.n_rings, grid.n_phi)
    elif values.shape != (grid.n_rings, grid.n_phi):
        raise ValueError(f"value array shape {values.shape} does not match grid "
                         f"({grid.n_rings} x {grid.n_phi})")
    return float(values.sum(axis=1) @ grid.ring_area)


def neighbors8(p: PixelId, grid: GridSpec) -> list[PixelId]:
    """The 8 surrounding pixels of p in cyclic order.

    Interior pixels get the usual (W, NW, N, NE, E, SE, S, SW) ring/column
    neighbours.  On the first and last ring the three missing across-pole
    entries are the antipodal-longitude cells of the same ring; crossing the
    pole flips the east/west sense, which is what keeps the neighbour relation
    symmetric.  Needs n_phi >= 8 so the cycle entries are distinct.
    """
    nr, nphi = grid.n_rings, grid.n_phi
    if nphi < 8:
        raise ValueError("neighbors8 requires n_phi >= 8")
    r, c = p
    if not (0 <= r < nr and 0 <= c < nphi):
        raise ValueError(f"pixel {p} out of range")
    east = (c + 1) % nphi
    west = (c - 1) % nphi
    h = nphi // 2
    if r == 0:
        over = [(0, (c + h + 1) % nphi), (0, (c + h) % nphi), (0, (c + h - 1) % nphi)]
        return [(0, west)] + over + [(0, east), (1, east), (1, c), (1, west)]
    if r == nr - 1:
        over = [(r, (c + h - 1) % nphi), (r, (c + h) % nphi), (r, (c + h + 1) % nphi)]
        return [(r, west), (r - 1, west), (r - 1, c), (r - 1, east), (r, east)] + over
    return [(r, west), (r - 1, west), (r - 1, c), (r - 1, east), (r, east),
            (r + 1, east), (r + 1, c), (r + 1, west)]


def geodesic_distance(x: np.ndarray, y: np.ndarray) -> float:
    """arccos of the clamped inner product of two unit vectors."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    for v in (x, y):
        if abs(float(v @ v) - 1.0) > 2e-9:
            raise ValueError("geodesic_distance requires unit vectors")
    return float(np.arccos(np.clip(float(x @ y), -1.0, 1.0)))


def pixel_center(p: PixelId, grid: GridSpec) -> np.ndarray:
    th = grid.theta[p[0]]
    ph = 2.0 * np.pi * (p[1] + 0.5) / grid.n_phi
    return np.array([math.sin(th) * math.cos(ph), math.sin(th) * math.sin(ph), math.cos(th)])


# --- sphgrid v1 map files ----------------------------------------------------
#
# header line:  sphgrid v1 <n_rings> <n_phi> <ell> <seed>\n
# body: ring-major values, either text CSV (one ring per line, repr floats)
# or a little-endian float64 block.  Round trips are bit exact either way.


def write_map(path: str, grid: GridSpec, values: np.ndarray, ell: int, seed: int,
              binary: bool = False) -> None:
    values = np.asarray(values, dtype=np.float64).reshape(grid.n_rings, grid.n_phi)
    header = f"{_MAP_MAGIC} {grid.n_rings} {grid.n_phi} {ell} {seed}\n"
    if binary:
        with open(path, "wb") as fh:
            fh.write(header.encode("ascii"))
            fh.write(values.astype("<f8").tobytes())
    else:
        with open(path, "w", encoding="ascii") as fh:
            fh.write(header)
            for row in values:
                fh.write(",".join(repr(float(v)) for v in row))
                fh.write("\n")


def read_map(path: str) -> tuple[GridSpec, np.ndarray, int, int]:
    """Read a sphgrid v1 file; returns (grid, values, ell, seed)."""
    with open(path, "rb") as fh:
        raw = fh.read()
    nl = raw.find(b"\n")
    if nl < 0:
        raise ValueError(f"{path}: not a sphgrid file (no header line)")
    header = raw[:nl].decode("ascii", errors="replace").split()
    if len(header) != 6 or header[0] != "sphgrid" or header[1] != "v1":
        raise ValueError(f"{path}: bad sphgrid header: {header!r}")
    n_rings, n_phi, ell, seed = (int(t) for t in header[2:])
    grid = build_grid(n_rings, n_phi)
    body = raw[nl + 1:]
    if len(body) == 8 * grid.n_pix:
        values = np.frombuffer(body, dtype="<f8").reshape(n_rings, n_phi).copy()
    else:
        values = np.loadtxt(io.BytesIO(body), delimiter=",", ndmin=2)
        if values.shape != (n_rings, n_phi):
            raise ValueError(f"{path}: body shape {values.shape} does not match header")
    return grid, values, ell, seed
