"""Norms, conserved quantities, vector-field functionals, region masks and
decay-exponent fits.

Conventions: integrals use the rectangle rule (spectrally accurate on the
periodic grid); the Japanese bracket is <z> = sqrt(1 + z^2); x-weighted
functionals use the grid coordinate and are meaningful only while the
boundary-mass monitor stays small.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .evolve import FieldState, nonlinearity
from .spectral import (
    RealField,
    apply_multiplier,
    derivative,
    l2_norm,
    to_physical,
    multiplier,
)

__all__ = [
    "DiagnosticRecord",
    "RegionMask",
    "ExponentFit",
    "hamiltonian",
    "corrected_energy",
    "vector_field_J",
    "lambda_u",
    "xtilde_norm",
    "sobolev_norm",
    "decay_constant",
    "region_masks",
    "boundary_mass",
    "fit_exponent",
    "compute_record",
]


def _integral(grid, values) -> float:
    return float(grid.dx * np.sum(values))


def hamiltonian(u: RealField, beta: float) -> float:
    """Energy integral (1/2) u_xx^2 + (5/6) beta u^6; conserved when alpha=0."""
    uxx = derivative(u, 2).samples
    return _integral(u.grid, 0.5 * uxx**2 + (5.0 / 6.0) * beta * u.samples**6)


def corrected_energy(u: RealField, alpha: float) -> float:
    """|u_xx|_L2^2 - 12 alpha * integral(u^2 u_x^2); almost conserved for all alpha."""
    uxx = derivative(u, 2).samples
    ux = derivative(u, 1).samples
    return _integral(u.grid, uxx**2 - 12.0 * alpha * u.samples**2 * ux**2)


def physical_window(grid, sponge=None) -> np.ndarray | None:
    """Smooth mask of the region where the torus faithfully represents the line.

    Inside an absorbing layer the damping breaks the x / t d^4 cancellation of
    the vector field, so x-weighted functionals are restricted to the
    complement (rolled off smoothly just inside the layer).  Returns None when
    no sponge is active.
    """
    from .spectral import _smoothstep

    if sponge is None or not sponge.enabled:
        return None
    x0 = (1.0 - sponge.width_fraction) * grid.L
    roll = 0.05 * grid.L
    return _smoothstep((x0 - np.abs(grid.x)) / roll)


def vector_field_J(state: FieldState, mask=None) -> RealField:
    """J u = x u + t u_xxxx, the conjugated-weight vector field.

    `mask`, when given, restricts the field to the physical window.
    """
    grid = state.u.grid
    u4 = derivative(state.u, 4).samples
    vals = grid.x * state.u.samples + state.t * u4
    if mask is not None:
        vals = vals * mask
    return RealField(samples=vals, grid=grid)


def lambda_u(state: FieldState, alpha: float, beta: float, mask=None) -> RealField:
    """Lambda u = J u + 5 t N(u).

    For solutions the antiderivative of the equation's right side is N(u)
    itself, so no numerical antidifferentiation (with its ill-defined zero
    mode) is ever performed.
    """
    ju = vector_field_J(state, mask)
    if alpha == 0.0 and beta == 0.0:
        return ju
    n = nonlinearity(state.u, alpha, beta).samples
    if mask is not None:
        n = n * mask
    return RealField(samples=ju.samples + 5.0 * state.t * n, grid=ju.grid)


def xtilde_norm(state: FieldState, mask=None) -> float:
    """|J u|_L2 + t^{1/5} |<t^{1/5} d/dx>^{-1} u|_L2 for t >= 1."""
    t = state.t
    if t < 1.0:
        raise ValueError(f"xtilde norm defined for t >= 1, got t={t}")
    ju = vector_field_J(state, mask)
    smoothed = to_physical(
        multiplier(state.spectrum, lambda xi: (1.0 + t ** 0.4 * xi**2) ** -0.5)
    )
    return l2_norm(ju) + t**0.2 * l2_norm(smoothed)


def sobolev_norm(u: RealField, s: float) -> float:
    """Inhomogeneous H^s norm |<xi>^s uhat|_L2 (continuum normalization)."""
    grid = u.grid
    F = np.fft.fft(u.samples)
    w = (1.0 + grid.xi**2) ** s
    return float(np.sqrt(grid.dx / grid.N * np.sum(w * np.abs(F) ** 2)))


def decay_constant(state: FieldState, k: int) -> float:
    """C_k(t) = t^{(k+1)/5} * sup_x <t^{-1/5} x>^{-k/4+3/8} |d^k u|.

    Bounded in t exactly when the dispersive decay estimate holds.  The sup
    is the exact grid max; no subgrid interpolation.
    """
    if not 0 <= k <= 3:
        raise ValueError(f"k must be in 0..3, got {k}")
    t = state.t
    if t < 1.0:
        raise ValueError(f"decay constants defined for t >= 1, got t={t}")
    grid = state.u.grid
    dk = derivative(state.u, k).samples
    z = t**-0.2 * grid.x
    weight = (1.0 + z**2) ** (0.5 * (-k / 4 + 3 / 8))
    return float(t ** ((k + 1) / 5) * np.max(weight * np.abs(dk)))


@dataclass(frozen=True)
class RegionMask:
    """Decaying / self-similar / oscillatory partition of the grid at time t."""

    t: float
    eps_reg: float
    threshold: float
    decaying: np.ndarray
    selfsimilar: np.ndarray
    oscillatory: np.ndarray


def region_masks(grid, t: float, eps_reg: float = 0.05) -> RegionMask:
    """Split the grid at |x| = t^{1/5} * t^{(4/5)(1/10 - eps_reg)}.

    Positive x beyond the threshold is the decaying region, negative x beyond
    it the oscillatory region, the middle band the self-similar region.
    """
    if t < 1.0:
        raise ValueError(f"region masks defined for t >= 1, got t={t}")
    if not 0.0 < eps_reg < 0.1:
        raise ValueError(f"eps_reg must lie in (0, 1/10), got {eps_reg}")
    threshold = t ** (1 / 5 + (4 / 5) * (1 / 10 - eps_reg))
    x = grid.x
    decaying = (x > 0) & (np.abs(x) > threshold)
    oscillatory = (x < 0) & (np.abs(x) > threshold)
    selfsimilar = ~(decaying | oscillatory)
    return RegionMask(
        t=t,
        eps_reg=eps_reg,
        threshold=threshold,
        decaying=decaying,
        selfsimilar=selfsimilar,
        oscillatory=oscillatory,
    )


def boundary_mass(u: RealField) -> float:
    """Fraction of the L2 mass in the outer 5% of the domain on each side."""
    grid = u.grid
    total = np.sum(u.samples**2)
    if total == 0.0:
        return 0.0
    outer = np.abs(grid.x) > 0.9 * grid.L
    return float(np.sum(u.samples[outer] ** 2) / total)


@dataclass(frozen=True)
class ExponentFit:
    """Least-squares slope of log(value) against log(t)."""

    slope: float
    intercept: float
    residual_rms: float
    residual_max: float


def fit_exponent(series) -> ExponentFit:
    """Fit value ~ C * t^p on a list of (t, value) pairs; returns p with residuals."""
    pairs = list(series)
    if len(pairs) < 4:
        raise ValueError(f"need at least 4 samples, got {len(pairs)}")
    ts = np.array([p[0] for p in pairs], dtype=float)
    vals = np.array([p[1] for p in pairs], dtype=float)
    if np.any(ts <= 0) or np.any(vals <= 0):
        raise ValueError("fit_exponent requires positive times and values")
    lt, lv = np.log(ts), np.log(vals)
    slope, intercept = np.polyfit(lt, lv, 1)
    resid = lv - (slope * lt + intercept)
    return ExponentFit(
        slope=float(slope),
        intercept=float(intercept),
        residual_rms=float(np.sqrt(np.mean(resid**2))),
        residual_max=float(np.max(np.abs(resid))),
    )


@dataclass(frozen=True)
class DiagnosticRecord:
    """Per-snapshot scalar diagnostics."""

    t: float
    l2: float
    hs: dict
    hamiltonian: float
    corrected_energy: float
    xtilde: float
    xs_norm: float
    boundary_mass: float
    decay_constants: dict
    boundary_warning: bool


def compute_record(
    state: FieldState, alpha: float, beta: float, mask=None
) -> DiagnosticRecord:
    """Assemble the full diagnostic row for one snapshot."""
    u = state.u
    bm = boundary_mass(u)
    lam = lambda_u(state, alpha, beta, mask)
    xs = sobolev_norm(u, 2.0) + l2_norm(lam)
    decay = (
        {k: decay_constant(state, k) for k in range(4)} if state.t >= 1.0 else {}
    )
    xt = xtilde_norm(state, mask) if state.t >= 1.0 else float("nan")
    return DiagnosticRecord(
        t=state.t,
        l2=l2_norm(u),
        hs={1: sobolev_norm(u, 1.0), 2: sobolev_norm(u, 2.0)},
        hamiltonian=hamiltonian(u, beta),
        corrected_energy=corrected_energy(u, alpha),
        xtilde=xt,
        xs_norm=xs,
        boundary_mass=bm,
        decay_constants=decay,
        boundary_warning=bm > 1e-6,
    )
