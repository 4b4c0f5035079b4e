"""Periodic grid, FFT transforms, spectral derivatives and frequency projections.

The domain is the torus [-L, L) with N equispaced points standing in for the
real line; frequencies are xi_j = (pi/L) * j for j in {-N/2, ..., N/2-1},
stored in FFT order.  All operators act mode-by-mode on the FFT of the
samples.  Fields are immutable value objects; every function here is pure.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "GridSpec",
    "RealField",
    "ComplexField",
    "SpectralField",
    "DyadicBand",
    "GridMismatchError",
    "make_grid",
    "to_spectral",
    "to_physical",
    "derivative",
    "multiplier",
    "smooth_cutoff",
    "band_cutoff",
    "dyadic_partition",
    "project_dyadic",
    "project_low",
    "project_halfline",
    "evaluate_at",
    "fourier_continuum",
    "l2_norm",
    "integrate",
]


class GridMismatchError(ValueError):
    """Fields built on different grids were combined."""


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic grid on [-L, L) with its wavenumber table.

    x[j] = -L + j*dx and xi[j] = (pi/L)*j in FFT ordering; the lone Nyquist
    mode sits at index N//2 with value -pi*N/(2L).
    """

    L: float
    N: int

    def __post_init__(self):
        if self.L <= 0:
            raise ValueError(f"domain half-length must be positive, got {self.L}")
        if self.N < 16 or (self.N & (self.N - 1)) != 0:
            raise ValueError(f"N must be a power of two >= 16, got {self.N}")

    @property
    def dx(self) -> float:
        return 2.0 * self.L / self.N

    @property
    def x(self) -> np.ndarray:
        return -self.L + self.dx * np.arange(self.N)

    @property
    def xi(self) -> np.ndarray:
        return 2.0 * np.pi * np.fft.fftfreq(self.N, d=self.dx)

    @property
    def xi_max(self) -> float:
        """Largest resolved |xi| (the Nyquist frequency pi*N/(2L))."""
        return np.pi * self.N / (2.0 * self.L)

    @property
    def nyquist_index(self) -> int:
        return self.N // 2


def make_grid(L: float, N: int) -> GridSpec:
    return GridSpec(L=float(L), N=int(N))


@dataclass(frozen=True)
class RealField:
    """One real-valued time slice u(.) sampled on the grid."""

    samples: np.ndarray
    grid: GridSpec

    def __post_init__(self):
        if self.samples.shape != (self.grid.N,):
            raise ValueError(
                f"expected {self.grid.N} samples, got shape {self.samples.shape}"
            )
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("field samples contain non-finite values")


@dataclass(frozen=True)
class ComplexField:
    """Complex-valued samples on the grid (half-line projections, packets)."""

    samples: np.ndarray
    grid: GridSpec

    def __post_init__(self):
        if self.samples.shape != (self.grid.N,):
            raise ValueError(
                f"expected {self.grid.N} samples, got shape {self.samples.shape}"
            )


@dataclass(frozen=True)
class SpectralField:
    """FFT coefficients indexed like grid.xi (numpy fft normalization)."""

    coeffs: np.ndarray
    grid: GridSpec

    def __post_init__(self):
        if self.coeffs.shape != (self.grid.N,):
            raise ValueError(
                f"expected {self.grid.N} coefficients, got shape {self.coeffs.shape}"
            )


def _check_same_grid(a, b):
    if a.grid != b.grid:
        raise GridMismatchError(f"grid mismatch: {a.grid} vs {b.grid}")


def to_spectral(f: RealField) -> SpectralField:
    return SpectralField(coeffs=np.fft.fft(f.samples), grid=f.grid)


def to_physical(F: SpectralField) -> RealField:
    return RealField(samples=np.fft.ifft(F.coeffs).real, grid=F.grid)


def derivative(f: RealField, k: int) -> RealField:
    """k-th spatial derivative via multiplication by (i*xi)^k.

    The unpaired Nyquist mode is zeroed for odd k.
    """
    if not 0 <= k <= 5:
        raise ValueError(f"derivative order must be in 0..5, got {k}")
    if k == 0:
        return f
    grid = f.grid
    symbol = (1j * grid.xi) ** k
    if k % 2 == 1:
        symbol[grid.nyquist_index] = 0.0
    coeffs = symbol * np.fft.fft(f.samples)
    return RealField(samples=np.fft.ifft(coeffs).real, grid=grid)


def derivative_complex(f: ComplexField, k: int) -> ComplexField:
    """Spectral derivative of a complex field (no Hermitian structure assumed)."""
    if not 0 <= k <= 5:
        raise ValueError(f"derivative order must be in 0..5, got {k}")
    if k == 0:
        return f
    grid = f.grid
    symbol = (1j * grid.xi) ** k
    if k % 2 == 1:
        symbol[grid.nyquist_index] = 0.0
    coeffs = symbol * np.fft.fft(f.samples)
    return ComplexField(samples=np.fft.ifft(coeffs), grid=grid)


def multiplier(F: SpectralField, m) -> SpectralField:
    """Apply a Fourier multiplier m(xi), given as callable or array."""
    xi = F.grid.xi
    mv = np.asarray(m(xi) if callable(m) else m, dtype=complex)
    if mv.shape != xi.shape:
        raise ValueError(f"multiplier shape {mv.shape} does not match xi table")
    if not np.all(np.isfinite(mv)):
        raise ValueError("multiplier takes non-finite values on the xi table")
    return SpectralField(coeffs=mv * F.coeffs, grid=F.grid)


def apply_multiplier(f: RealField, m) -> RealField:
    """Convenience: physical -> multiplier -> physical."""
    return to_physical(multiplier(to_spectral(f), m))


# ---------------------------------------------------------------------------
# Dyadic decomposition
# ---------------------------------------------------------------------------


def _smoothstep(s: np.ndarray) -> np.ndarray:
    """C-infinity step: 0 for s<=0, 1 for s>=1, f(s)/(f(s)+f(1-s)) between."""
    s = np.clip(s, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        f = np.where(s > 0.0, np.exp(-1.0 / np.maximum(s, 1e-300)), 0.0)
        g = np.where(s < 1.0, np.exp(-1.0 / np.maximum(1.0 - s, 1e-300)), 0.0)
    return f / (f + g)


def smooth_cutoff(xi, delta: float = 1.0) -> np.ndarray:
    """Even C-infinity bump sigma: 1 on |xi|<=1, 0 on |xi|>=2**delta.

    The transition is a smoothstep in log2|xi|, so the scaled family
    sigma(xi/R) telescopes exactly across centers spaced by 2**delta, and
    all derivatives vanish at the seams (spectral derivatives of windowed
    fields stay clean).
    """
    a = np.abs(np.asarray(xi, dtype=float))
    out = np.zeros_like(a)
    out[a <= 1.0] = 1.0
    mid = (a > 1.0) & (a < 2.0**delta)
    out[mid] = _smoothstep(1.0 - np.log2(a[mid]) / delta)
    return out


def band_cutoff(xi, center: float, delta: float = 1.0) -> np.ndarray:
    """sigma_N(xi) = sigma(xi/N) - sigma(2**delta * xi / N); peaks on |xi| ~ N."""
    return smooth_cutoff(np.asarray(xi) / center, delta) - smooth_cutoff(
        2.0**delta * np.asarray(xi) / center, delta
    )


@dataclass(frozen=True)
class DyadicBand:
    """One Littlewood-Paley band: center in 2**(delta*Z), spacing exponent delta."""

    center: float
    delta: float = 1.0

    def __post_init__(self):
        if self.center <= 0:
            raise ValueError(f"band center must be positive, got {self.center}")
        if self.delta <= 0:
            raise ValueError(f"band spacing must be positive, got {self.delta}")


def dyadic_partition(grid: GridSpec, delta: float = 1.0, n_min: float | None = None):
    """Bands covering the resolved range plus the low cutoff that completes them.

    Returns (low_center, bands) such that sigma_{<=low_center} plus the band
    bumps sum to exactly 1 on the grid's xi table.
    """
    xi_lowest = np.pi / grid.L
    if n_min is None:
        n_min = xi_lowest
    j_low = int(np.floor(np.log2(n_min) / delta))
    j_high = int(np.ceil(np.log2(grid.xi_max) / delta))
    low_center = 2.0 ** (delta * j_low)
    bands = [DyadicBand(2.0 ** (delta * j), delta) for j in range(j_low + 1, j_high + 1)]
    return low_center, bands


def project_dyadic(f: RealField, band: DyadicBand) -> RealField:
    """P_N f: apply the smooth band bump sigma_N in frequency."""
    if band.center > 2.0**band.delta * f.grid.xi_max:
        raise ValueError(
            f"band center {band.center} outside resolved range (xi_max={f.grid.xi_max})"
        )
    return apply_multiplier(f, lambda xi: band_cutoff(xi, band.center, band.delta))


def project_low(f: RealField, center: float, delta: float = 1.0) -> RealField:
    """P_{<=center} f with the smooth low-pass sigma(xi/center)."""
    return apply_multiplier(f, lambda xi: smooth_cutoff(xi / center, delta))


def _halfline_symbol(grid: GridSpec, sign: int) -> np.ndarray:
    """Indicator of xi > 0 (or xi < 0); zero mode dropped, Nyquist split evenly."""
    sym = np.zeros(grid.N)
    if sign > 0:
        sym[grid.xi > 0] = 1.0
    else:
        sym[grid.xi < 0] = 1.0
    sym[0] = 0.0
    sym[grid.nyquist_index] = 0.5
    return sym


def project_halfline(f: RealField, sign: int) -> ComplexField:
    """P^+ or P^- frequency half-line projection of a real field.

    The zero mode belongs to neither projection (it is mean(f), carried
    separately); the unpaired Nyquist mode is split half-and-half so that
    P^- f = conj(P^+ f) and P^+ f + P^- f = f - mean(f) hold exactly.
    """
    if sign not in (+1, -1):
        raise ValueError("sign must be +1 or -1")
    coeffs = np.fft.fft(f.samples) * _halfline_symbol(f.grid, sign)
    return ComplexField(samples=np.fft.ifft(coeffs), grid=f.grid)


# ---------------------------------------------------------------------------
# Interpolation, continuum Fourier transform, quadrature
# ---------------------------------------------------------------------------


def evaluate_at(field, points) -> np.ndarray:
    """Evaluate a field at arbitrary points by summing its Fourier series.

    Exact for band-limited fields.  The Nyquist coefficient is split between
    +xi_N and -xi_N (cosine convention), so real fields interpolate to real
    values.
    """
    pts = np.atleast_1d(np.asarray(points, dtype=float))
    grid = field.grid
    coeffs = np.fft.fft(field.samples) / grid.N
    nyq = grid.nyquist_index
    s = pts + grid.L
    # Skip dealias-zeroed modes; the cost is nv * n_active.
    active = np.nonzero(coeffs)[0]
    active = active[active != nyq]
    vals = np.exp(1j * np.outer(s, grid.xi[active])) @ coeffs[active]
    vals = vals + coeffs[nyq] * np.cos(grid.xi[nyq] * s)
    if np.isrealobj(field.samples):
        vals = vals.real
    return vals if np.ndim(points) else vals[0]


def fourier_continuum(f) -> tuple[np.ndarray, np.ndarray]:
    """Unitary continuum Fourier transform on the xi table, sorted by xi.

    Returns (xi, uhat) with uhat(xi) = (1/sqrt(2 pi)) * integral of
    f(x) e^{-i xi x} dx approximated by the trapezoid rule, which on a uniform
    periodic grid is the FFT times dx * e^{i xi L} / sqrt(2 pi).
    """
    grid = f.grid
    raw = np.fft.fft(np.asarray(f.samples))
    uhat = grid.dx / np.sqrt(2.0 * np.pi) * np.exp(1j * grid.xi * grid.L) * raw
    order = np.fft.fftshift(np.arange(grid.N))
    return grid.xi[order], uhat[order]


def l2_norm(f) -> float:
    """Continuum L2 norm: sqrt(dx * sum |f|^2)."""
    return float(np.sqrt(f.grid.dx * np.sum(np.abs(f.samples) ** 2)))


def integrate(f) -> float:
    """Integral over the torus (trapezoid = rectangle rule on periodic grids)."""
    return float(f.grid.dx * np.sum(f.samples))
