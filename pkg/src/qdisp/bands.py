"""Hyperbolic/elliptic decomposition of the positive-frequency part.

For each dyadic band N >= t^{-1/5}, the hyperbolic piece is the part of
P_N u^+ living in the stationary-phase window {x < 0, |x| ~ t N^4}; the
elliptic piece is the remainder of u^+.  The weighted sup and L2 functionals
of both pieces, divided by t^{-1/10} |u|_Xtilde, are the bounded ratios this
module reports.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .evolve import FieldState
from .spectral import (
    ComplexField,
    _smoothstep,
    band_cutoff,
    derivative_complex,
    project_halfline,
    smooth_cutoff,
)

__all__ = ["HypEllSplit", "split", "check_pointwise_bounds", "check_l2_bounds"]


@dataclass(frozen=True)
class HypEllSplit:
    t: float
    u_plus: ComplexField
    hyp: ComplexField
    ell: ComplexField
    band_centers: list
    band_fields: list
    delta: float


def _spatial_window(x, center: float, delta: float) -> np.ndarray:
    """Window for one band's stationary region, restricted to x < 0.

    Flat where the band's frequencies are stationary, |x|/center in
    [2^{-4 delta}, 2^{4 delta}]; smoothstep transitions fill the remaining
    room out to the mandated support |x|/center in [1/6, 6].  Needs
    4 delta < log2(6), i.e. delta < 0.646, for the core to fit.
    """
    margin = np.log2(6.0)
    core = 4.0 * delta
    width = margin - core
    if width <= 0:
        raise ValueError(f"delta={delta} too coarse: stationary core exceeds support")
    with np.errstate(divide="ignore"):
        ell = np.where(x != 0.0, np.log2(np.abs(x) / center), -np.inf)
    w = _smoothstep((margin - np.abs(ell)) / width)
    return np.where(x < 0, w, 0.0)


def split(state: FieldState, delta: float = 0.5) -> HypEllSplit:
    """Decompose u^+ into hyperbolic band pieces and the elliptic remainder.

    Bands with center N >= t^{-1/5} contribute; the threshold band fades in
    smoothly (weight smoothstep in log2(t N^5)) so the decomposition varies
    continuously as the floor slides with t.
    """
    t = state.t
    if t < 1.0:
        raise ValueError(f"decomposition defined for t >= 1, got t={t}")
    grid = state.u.grid
    u_plus = project_halfline(state.u, +1)
    spectrum_plus = np.fft.fft(u_plus.samples)

    n_floor = t ** (-1 / 5)
    j_low = int(np.ceil(np.log2(n_floor) / delta - 1e-12))
    j_high = int(np.ceil(np.log2(grid.xi_max) / delta))

    hyp_total = np.zeros(grid.N, dtype=complex)
    centers, fields = [], []
    for j in range(j_low, j_high + 1):
        center = 2.0 ** (delta * j)
        # bands near the floor fade in over t N^5 in [1, 32]: young bands have
        # windows at small |x| whose cutoff derivatives would swamp the k >= 1
        # functionals, so they enter gradually as the window moves outward
        fade = float(_smoothstep(np.log2(t * center**5) / 5.0))
        if fade == 0.0:
            continue
        scale = t * center**4
        if scale / 6.0 > grid.L:
            break  # window entirely outside the domain
        band_hat = band_cutoff(grid.xi, center, delta) * spectrum_plus
        u_band = np.fft.ifft(band_hat)
        w = fade * _spatial_window(grid.x, scale, delta)
        piece = w * u_band
        hyp_total += piece
        centers.append(center)
        fields.append(ComplexField(piece, grid))

    hyp = ComplexField(hyp_total, grid)
    ell = ComplexField(u_plus.samples - hyp_total, grid)
    return HypEllSplit(
        t=t,
        u_plus=u_plus,
        hyp=hyp,
        ell=ell,
        band_centers=centers,
        band_fields=fields,
        delta=delta,
    )


def _bracket(z):
    return np.sqrt(1.0 + z**2)


def check_pointwise_bounds(split_: HypEllSplit, xtilde: float, k: int):
    """Weighted sup of the hyperbolic and elliptic parts over t^{-1/10} Xtilde.

    Hyperbolic weight <t^{-1/5}x>^{-(k-1)/4}, elliptic <t^{-1/5}x>^{-k/4+7/8};
    both ratios stay bounded when the pointwise decay bounds hold.
    """
    if xtilde == 0.0:
        raise ValueError("xtilde must be nonzero")
    if not 0 <= k <= 3:
        raise ValueError(f"k must be in 0..3, got {k}")
    t = split_.t
    grid = split_.hyp.grid
    z = t ** (-1 / 5) * grid.x
    scale = t ** ((k + 1) / 5) / (t ** (-1 / 10) * xtilde)

    dk_hyp = derivative_complex(split_.hyp, k).samples
    w_hyp = _bracket(z) ** (-(k - 1) / 4)
    hyp_ratio = scale * float(np.max(w_hyp * np.abs(dk_hyp)))

    dk_ell = derivative_complex(split_.ell, k).samples
    w_ell = _bracket(z) ** (-k / 4 + 7 / 8)
    ell_ratio = scale * float(np.max(w_ell * np.abs(dk_ell)))
    return hyp_ratio, ell_ratio


def _weighted_l2(field_samples, weight, dx) -> float:
    """L2 norm with a pointwise weight that may be singular off the support."""
    mask = np.abs(field_samples) > 0
    vals = np.zeros_like(weight)
    vals[mask] = weight[mask] * np.abs(field_samples[mask])
    return float(np.sqrt(dx * np.sum(vals**2)))


def check_l2_bounds(split_: HypEllSplit, xtilde: float) -> dict:
    """The three weighted-L2 families of the decomposition, divided by xtilde.

    hyp_w:     t^{(k+1)/4} |x|^{-(5k+1)/4 + l} d^l u_hyp, summed over l <= k
    hyp_jplus: t^{k/4} |x|^{(3-k)/4} (|x|^{1/4} + i t^{1/4} d/dx) d^k u_hyp
    ell:       t^{(k+1)/5} <t^{-1/5}x>^{-k/4 + 1} d^k u_ell
    """
    if xtilde == 0.0:
        raise ValueError("xtilde must be nonzero")
    t = split_.t
    grid = split_.hyp.grid
    dx = grid.dx
    absx = np.abs(grid.x)
    out = {}

    hyp_derivs = [derivative_complex(split_.hyp, l).samples for l in range(5)]
    total = 0.0
    for k in range(4):
        for l in range(k + 1):
            w = np.zeros_like(absx)
            nz = absx > 0
            w[nz] = t ** ((k + 1) / 4) * absx[nz] ** (-(5 * k + 1) / 4 + l)
            val = _weighted_l2(hyp_derivs[l], w, dx) / xtilde
            out[f"hyp_w_k{k}_l{l}"] = val
            total += val
    out["hyp_w_total"] = total

    total = 0.0
    for k in range(4):
        dk = hyp_derivs[k]
        dk1 = hyp_derivs[k + 1]
        jplus = absx**0.25 * dk + 1j * t**0.25 * dk1
        w = t ** (k / 4) * absx ** ((3 - k) / 4)
        val = float(np.sqrt(dx * np.sum((w * np.abs(jplus)) ** 2))) / xtilde
        out[f"hyp_jplus_k{k}"] = val
        total += val
    out["hyp_jplus_total"] = total

    z = t ** (-1 / 5) * grid.x
    total = 0.0
    for k in range(4):
        dk = derivative_complex(split_.ell, k).samples
        w = t ** ((k + 1) / 5) * _bracket(z) ** (-k / 4 + 1)
        val = float(np.sqrt(dx * np.sum((w * np.abs(dk)) ** 2))) / xtilde
        out[f"ell_k{k}"] = val
        total += val
    out["ell_total"] = total
    return out
