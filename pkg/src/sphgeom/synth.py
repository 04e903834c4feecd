"""Sampling and synthesis of Gaussian random spherical eigenfunctions.

A single multipole ell is sampled directly with coefficient variance
``4 pi / (2 ell + 1)`` so the real field has unit variance at every point
and covariance P_ell(cos d(x, y)).  Coefficient streams are counter-based
(Philox keyed on (seed, ell, m)), which makes them order-independent and
reproducible under any parallel schedule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .grid import GridSpec, integrate, read_map, write_map
from .specfun import assoc_legendre_matrix

__all__ = ["Multipole", "HarmonicCoefficients", "FieldMap", "sample_alm",
           "synthesize", "normalize", "mix64", "load_field", "save_field",
           "legendre_table"]


def mix64(*parts: int) -> int:
    """64-bit avalanche hash of a tuple of integers (splitmix64 chain)."""
    mask = (1 << 64) - 1
    h = 0x9E3779B97F4A7C15
    for p in parts:
        h = (h ^ (int(p) & mask)) & mask
        h = (h + 0x9E3779B97F4A7C15) & mask
        z = h
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & mask
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & mask
        h = z ^ (z >> 31)
    return h


@dataclass(frozen=True)
class Multipole:
    ell: int

    def __post_init__(self):
        if self.ell < 1:
            raise ValueError("multipole ell must be >= 1 (ell = 0 is a constant field)")

    @property
    def eigenvalue(self) -> float:
        return float(self.ell * (self.ell + 1))


@dataclass(frozen=True)
class HarmonicCoefficients:
    """a_{ell m} for m = 0..ell; negative m implied by a_{l,-m} = (-1)^m conj(a_{lm})."""
    ell: int
    a: np.ndarray  # complex, length ell + 1, a[0].imag == 0

    def __post_init__(self):
        if self.a.shape != (self.ell + 1,):
            raise ValueError("coefficient array must have length ell + 1")
        if self.a[0].imag != 0.0:
            raise ValueError("a_{l0} must be real")


@dataclass(frozen=True)
class FieldMap:
    grid: GridSpec
    values: np.ndarray  # (n_rings, n_phi) float64
    ell: int
    seed: int
    normalized: str = "ensemble"  # ensemble | sample

    def __post_init__(self):
        if self.values.shape != (self.grid.n_rings, self.grid.n_phi):
            raise ValueError("value array does not match grid")
        if self.normalized not in ("ensemble", "sample"):
            raise ValueError(f"unknown normalization {self.normalized!r}")


def sample_alm(ell: int, seed: int) -> HarmonicCoefficients:
    """Draw one coefficient set.

    a_{l0} is a real Gaussian with variance 4 pi / (2 ell + 1); for m > 0 the
    real and imaginary parts are independent Gaussians with half that
    variance.  Each m gets its own Philox stream keyed on (seed, ell, m).
    """
    mult = Multipole(ell)
    sigma = math.sqrt(4.0 * math.pi / (2 * ell + 1))
    a = np.empty(ell + 1, dtype=complex)
    for m in range(ell + 1):
        key = (mix64(seed, ell, m, 0xA) << 64) | mix64(seed, ell, m, 0xB)
        gen = np.random.Generator(np.random.Philox(key=key))
        if m == 0:
            a[0] = sigma * gen.standard_normal()
        else:
            re, im = gen.standard_normal(2)
            a[m] = complex(re, im) * (sigma / math.sqrt(2.0))
    return HarmonicCoefficients(ell=mult.ell, a=a)


def legendre_table(ell: int, grid: GridSpec) -> np.ndarray:
    """Cached P̄_{ell,m}(cos theta_i) table of shape (n_rings, ell + 1)."""
    key = ("plm", ell)
    tab = grid._cache.get(key)
    if tab is None:
        tab = assoc_legendre_matrix(ell, grid.theta)
        tab.setflags(write=False)
        grid._cache[key] = tab
    return tab


def synthesize(alm: HarmonicCoefficients, grid: GridSpec, seed: int = 0) -> FieldMap:
    """Evaluate the field on the grid, one rFFT per ring block.

    f(theta_i, phi_j) = a_0 P̄_{l0} + 2 sum_m Re[a_m P̄_{lm} e^{i m phi_j}].
    Requires n_phi > 2 ell so no mode aliases.
    """
    ell = alm.ell
    if grid.n_phi <= 2 * ell:
        raise ValueError(f"aliasing: n_phi = {grid.n_phi} must exceed 2 ell = {2 * ell}")
    tab = legendre_table(ell, grid)
    ring_spec = tab * alm.a[None, :]
    # pixel centers sit at phi = 2 pi (j + 1/2) / n_phi: fold the half-bin
    # phase into the spectrum, then let the inverse rFFT do the sum over m
    m = np.arange(ell + 1)
    phase = np.exp(1j * m * math.pi / grid.n_phi)
    spec = np.zeros((grid.n_rings, grid.n_phi // 2 + 1), dtype=complex)
    spec[:, : ell + 1] = ring_spec * phase[None, :] * grid.n_phi
    values = np.fft.irfft(spec, n=grid.n_phi, axis=1)
    return FieldMap(grid=grid, values=values, ell=ell, seed=seed)


def simulate(ell: int, seed: int, grid: GridSpec, normalization: str = "ensemble") -> FieldMap:
    """sample_alm + synthesize + normalize in one call."""
    fm = synthesize(sample_alm(ell, seed), grid, seed=seed)
    return normalize(fm, normalization)


def normalize(fm: FieldMap, mode: str = "ensemble") -> FieldMap:
    """Ensemble mode is the identity; sample mode standardizes the map.

    Sample mode subtracts the area-weighted mean and divides by the
    area-weighted standard deviation, making the weighted variance exactly 1.
    """
    if mode == "ensemble":
        return replace(fm, normalized="ensemble")
    if mode != "sample":
        raise ValueError(f"unknown normalization mode {mode!r}")
    area = 4.0 * math.pi
    mean = integrate(fm.values, fm.grid) / area
    var = integrate((fm.values - mean) ** 2, fm.grid) / area
    if var <= 0.0:
        raise ValueError("degenerate map: zero variance under sample normalization")
    values = (fm.values - mean) / math.sqrt(var)
    return replace(fm, values=values, normalized="sample")


def save_field(path: str, fm: FieldMap, binary: bool = False) -> None:
    write_map(path, fm.grid, fm.values, fm.ell, fm.seed, binary=binary)


def load_field(path: str) -> FieldMap:
    grid, values, ell, seed = read_map(path)
    return FieldMap(grid=grid, values=values, ell=ell, seed=seed)
