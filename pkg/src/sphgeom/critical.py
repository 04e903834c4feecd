"""Critical points of a FieldMap: extrema by local comparison, saddles by topology.

Extrema are pixels that beat every pixel within a geodesic disk of radius
1.6 times the cell scale.  On an iso-latitude grid that disk reduces to the
usual strict 8-neighbour test where cells are square (mid-latitudes) and
widens in longitude toward the poles, where the 8-neighbour stencil collapses
onto too few directions and would misread saddles as extrema.  The window
saturates to whole rings over the caps, which is exactly the across-pole
closure.

Saddles are not detected locally at all.  For a Morse function,
``chi(A_u) = maxima(u) + minima(u) - saddles(u)``, and the Euler
characteristic estimator in lkc shares this module's topology conventions, so
``saddles(u) = extrema(u) - chi(u)`` counts saddles (with multiplicity:
a monkey saddle steps chi by 2).  At u = -infinity chi is exactly 2, which
makes the Morse identity hold on every realization by construction rather
than statistically.

Ties are broken by (value, pixel rank) lexicographic order, rank being the
flat pixel index.  Degenerate inputs with exactly equal adjacent values
(zonal fields) are detected and rerouted through a rank transform, on which
the same window tests are strict.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import maximum_filter1d, minimum_filter1d

from .grid import GridSpec
from .lkc import euler_characteristic, euler_characteristic_profile
from .synth import FieldMap

__all__ = ["CriticalCounts", "CriticalHistogram", "find_extrema",
           "classify_critical", "total_counts", "critical_histogram",
           "MIN_RINGS_PER_ELL"]

MIN_RINGS_PER_ELL = 4
_DISK_FACTOR = 1.6


@dataclass(frozen=True)
class CriticalCounts:
    u: float
    maxima: int
    minima: int
    saddles: int

    @property
    def extrema(self) -> int:
        return self.maxima + self.minima

    @property
    def critical(self) -> int:
        return self.extrema + self.saddles


@dataclass(frozen=True)
class CriticalHistogram:
    bin_edges: np.ndarray
    bin_centers: np.ndarray
    maxima: np.ndarray
    minima: np.ndarray
    saddles: np.ndarray
    ell: int

    @property
    def extrema(self) -> np.ndarray:
        return self.maxima + self.minima

    @property
    def critical(self) -> np.ndarray:
        return self.extrema + self.saddles

    def density(self, which: str) -> np.ndarray:
        """Per-bin density normalized by the class's expected total count."""
        lam = self.ell * (self.ell + 1)
        width = float(self.bin_edges[1] - self.bin_edges[0])
        totals = {
            "critical": 2.0 * lam / math.sqrt(3.0),
            "extrema": lam / math.sqrt(3.0),
            "saddles": lam / math.sqrt(3.0),
        }
        counts = getattr(self, which if which != "critical" else "critical")
        return counts / (totals[which] * width)


def _disk_windows(grid: GridSpec) -> np.ndarray:
    """Column half-widths k[r, dr+1] of the geodesic disk, dr in (-1, 0, 1).

    -1 marks a row not intersected, n_phi//2 a fully covered ring.  The
    geodesic distance between iso-latitude points is monotone in the
    longitude offset, so each row intersects the disk in a single centered
    window; over the poles the window saturates to the full ring.
    """
    key = ("diskwin", _DISK_FACTOR)
    cached = grid._cache.get(key)
    if cached is not None:
        return cached
    nr, nphi = grid.n_rings, grid.n_phi
    theta = grid.theta
    dphi = 2.0 * math.pi / nphi
    rho = _DISK_FACTOR * max(math.pi / nr, dphi)
    cos_rho = math.cos(rho)
    ks = np.full((nr, 3), -1, dtype=np.int64)
    for dr in (-1, 0, 1):
        rows = np.arange(nr)
        r2 = rows + dr
        valid = (r2 >= 0) & (r2 < nr)
        t1 = theta[rows[valid]]
        t2 = theta[r2[valid]]
        ct = np.cos(t1) * np.cos(t2)
        st = np.sin(t1) * np.sin(t2)
        with np.errstate(divide="ignore", invalid="ignore"):
            x = (cos_rho - ct) / st
        k = np.where(x <= -1.0, nphi // 2,
                     np.where(x >= 1.0, -1,
                              np.floor(np.arccos(np.clip(x, -1.0, 1.0)) / dphi)))
        ks[valid, dr + 1] = k.astype(np.int64)
    ks.setflags(write=False)
    grid._cache[key] = ks
    return ks


def _window_extrema(f: np.ndarray, grid: GridSpec) -> tuple[np.ndarray, np.ndarray]:
    """Boolean masks (ismax, ismin) from the disk window tests.

    Same-row windows include the pixel itself, so the row test is weak
    (== window max); cross-row tests are strict.
    """
    nr, nphi = f.shape
    ks = _disk_windows(grid)
    half = nphi // 2
    ismax = np.ones(f.shape, dtype=bool)
    ismin = np.ones(f.shape, dtype=bool)
    for dr in (-1, 0, 1):
        col = ks[:, dr + 1]
        rows = np.flatnonzero(col >= 0)
        if rows.size == 0:
            continue
        for k in np.unique(col[rows]):
            batch = rows[col[rows] == k]
            data = f[batch + dr]
            if k >= half:
                mx = data.max(axis=1, keepdims=True)
                mn = data.min(axis=1, keepdims=True)
            else:
                size = int(2 * k + 1)
                mx = maximum_filter1d(data, size=size, axis=1, mode="wrap")
                mn = minimum_filter1d(data, size=size, axis=1, mode="wrap")
            if dr == 0:
                ismax[batch] &= f[batch] == mx
                ismin[batch] &= f[batch] == mn
            else:
                ismax[batch] &= f[batch] > mx
                ismin[batch] &= f[batch] < mn
    return ismax, ismin


def _has_adjacent_ties(f: np.ndarray) -> bool:
    return bool(np.any(f[:, :-1] == f[:, 1:]) or np.any(f[:, 0] == f[:, -1])
                or np.any(f[:-1] == f[1:]))


def find_extrema(fm: FieldMap) -> tuple[np.ndarray, np.ndarray]:
    """Values of the local maxima and minima of the map.

    Generic maps take the fast strict path.  Maps with exactly tied adjacent
    values are rerouted through a rank transform (stable argsort of the
    flattened map), which realizes the (value, pixel rank) tie order.
    """
    f = fm.values
    if _has_adjacent_ties(f):
        order = np.argsort(f.ravel(), kind="stable")
        ranks = np.empty(f.size, dtype=np.float64)
        ranks[order] = np.arange(f.size, dtype=np.float64)
        ismax, ismin = _window_extrema(ranks.reshape(f.shape), fm.grid)
    else:
        ismax, ismin = _window_extrema(f, fm.grid)
    return f[ismax], f[ismin]


def _check_resolution(fm: FieldMap) -> None:
    if fm.grid.n_rings < MIN_RINGS_PER_ELL * fm.ell:
        raise ValueError(
            f"map resolution too low for critical counting: n_rings = {fm.grid.n_rings} "
            f"< {MIN_RINGS_PER_ELL} * ell = {MIN_RINGS_PER_ELL * fm.ell}")


def classify_critical(fm: FieldMap, u: float) -> CriticalCounts:
    """Counts of maxima, minima and saddles with critical value >= u."""
    _check_resolution(fm)
    maxv, minv = find_extrema(fm)
    return _counts_at(fm, maxv, minv, u)


def _counts_at(fm: FieldMap, maxv: np.ndarray, minv: np.ndarray, u: float) -> CriticalCounts:
    n_max = int((maxv >= u).sum())
    n_min = int((minv >= u).sum())
    if math.isinf(u):
        chi = 2 if u < 0 else 0
    else:
        chi = euler_characteristic(fm, u)[0]
    return CriticalCounts(u=u, maxima=n_max, minima=n_min,
                          saddles=n_max + n_min - chi)


def total_counts(fm: FieldMap) -> CriticalCounts:
    """All critical points (u = -infinity); extrema - saddles = 2 exactly."""
    return classify_critical(fm, -math.inf)


def critical_histogram(fm: FieldMap, bin_width: float = 0.03) -> CriticalHistogram:
    """Binned critical values per class, bins centered on multiples of bin_width.

    Saddle bins are differences of the Euler characteristic profile across the
    bin edges, so cumulating the histogram from any edge upward reproduces
    classify_critical at that edge exactly.
    """
    if bin_width <= 0:
        raise ValueError("bin_width must be positive")
    _check_resolution(fm)
    maxv, minv = find_extrema(fm)
    lo, hi = float(fm.values.min()), float(fm.values.max())
    k_lo = math.floor(lo / bin_width) - 1
    k_hi = math.ceil(hi / bin_width) + 1
    edges = (np.arange(k_lo, k_hi + 1) - 0.5) * bin_width
    centers = np.arange(k_lo, k_hi) * bin_width
    h_max = np.histogram(maxv, bins=edges)[0]
    h_min = np.histogram(minv, bins=edges)[0]
    # saddles >= u telescope: ext(u) - chi(u) evaluated on every edge
    chi = euler_characteristic_profile(fm, edges)
    ext_at_edges = np.concatenate([(h_max + h_min)[::-1].cumsum()[::-1], [0]])
    sad_at_edges = ext_at_edges - chi
    h_sad = sad_at_edges[:-1] - sad_at_edges[1:]
    return CriticalHistogram(bin_edges=edges, bin_centers=centers,
                             maxima=h_max, minima=h_min, saddles=h_sad, ell=fm.ell)
