"""Self-similar rescaling, profile extraction, and the linear profile oracle.

The rescaled solution U(t,y) = t^{1/5} u(t, t^{1/5} y) converges in the
self-similar region to a profile Q solving

    Q'''' + y Q + 5 alpha (2 Q^2 Q'' + 3 Q (Q')^2) + 5 beta Q^5 = 0.

For the linear equation the profile is Q0(y) = (1/pi) int_0^inf
cos(y xi + xi^5/5) dxi, the fifth-order analogue of the Airy function,
evaluated here by phase-resolving Gauss-Legendre panels on [0, Xi] plus a
contour-rotated tail along the e^{i pi/10} ray (the direct integral does not
converge numerically).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .evolve import FieldState
from .spectral import evaluate_at

__all__ = [
    "Profile",
    "rescale",
    "extract_Q",
    "ode_residual_Q",
    "linear_profile_Q0",
    "q0_value",
    "q0_left_tail",
    "q0_integral",
    "fd_weights",
]


@dataclass(frozen=True)
class Profile:
    """A sampled function of the self-similar variable y."""

    y: np.ndarray
    values: np.ndarray
    t_source: object  # time of extraction, or "oracle"
    residual_norm: float | None = None
    certificate: tuple = ()
    converged: bool = True

    def __post_init__(self):
        dy = np.diff(self.y)
        if not np.allclose(dy, dy[0], rtol=1e-12, atol=0.0):
            raise ValueError("profile y grid must be uniform")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("profile values must be finite")

    @property
    def dy(self) -> float:
        return float(self.y[1] - self.y[0])


def rescale(state: FieldState, y_grid) -> Profile:
    """U(t, y) = t^{1/5} u(t, t^{1/5} y), by spectral interpolation."""
    t = state.t
    if t < 1.0:
        raise ValueError(f"rescaling defined for t >= 1, got t={t}")
    y = np.asarray(y_grid, dtype=float)
    pts = t**0.2 * y
    L = state.u.grid.L
    if pts.min() < -L or pts.max() >= L:
        raise ValueError(
            f"rescaled points reach |x| = {np.max(np.abs(pts)):.3g}, "
            f"outside the domain [-{L}, {L})"
        )
    vals = t**0.2 * evaluate_at(state.u, pts)
    return Profile(y=y, values=vals, t_source=t)


def extract_Q(snapshots, y_grid) -> Profile:
    """Profile at the latest snapshot plus a convergence certificate.

    The certificate lists sup |U(t_i) - U(t_last)| for the earlier snapshots;
    a non-decreasing certificate flags the sequence as not converged.
    """
    if len(snapshots) < 3:
        raise ValueError(f"need >= 3 snapshots, got {len(snapshots)}")
    ordered = sorted(snapshots, key=lambda s: s.t)
    profiles = [rescale(s, y_grid) for s in ordered]
    last = profiles[-1]
    cert = tuple(
        (p.t_source, float(np.max(np.abs(p.values - last.values))))
        for p in profiles[:-1]
    )
    gaps = [c[1] for c in cert]
    scale = float(np.max(np.abs(last.values))) or 1.0
    floor = 1e-12 * scale
    converged = all(
        gaps[i + 1] <= gaps[i] or gaps[i + 1] < floor for i in range(len(gaps) - 1)
    )
    return Profile(
        y=last.y,
        values=last.values,
        t_source=last.t_source,
        certificate=cert,
        converged=converged,
    )


def fd_weights(x0: float, xs, m: int) -> np.ndarray:
    """Finite-difference weights for derivatives 0..m at x0 on nodes xs
    (Fornberg's recursion)."""
    xs = np.asarray(xs, dtype=float)
    n = len(xs)
    w = np.zeros((m + 1, n))
    w[0, 0] = 1.0
    c1 = 1.0
    for j in range(1, n):
        c2 = 1.0
        prev = w[:, j - 1].copy()  # new-node weights need the pre-update column
        for k in range(j):
            c3 = xs[j] - xs[k]
            c2 *= c3
            for mu in range(min(j, m), 0, -1):
                w[mu, k] = ((xs[j] - x0) * w[mu, k] - mu * w[mu - 1, k]) / c3
            w[0, k] = (xs[j] - x0) * w[0, k] / c3
        for mu in range(min(j, m), 0, -1):
            w[mu, j] = c1 * (mu * prev[mu - 1] - (xs[j - 1] - x0) * prev[mu]) / c2
        w[0, j] = -c1 * (xs[j - 1] - x0) * prev[0] / c2
        c1 = c2
    return w


_STENCIL_HALF = 6  # 13-point centered stencils: 8th order for the 4th derivative


def _derivatives(values: np.ndarray, dy: float):
    """Interior 1st, 2nd and 4th derivatives by 13-point centered stencils."""
    half = _STENCIL_HALF
    nodes = np.arange(-half, half + 1, dtype=float)
    w = fd_weights(0.0, nodes, 4)
    n = len(values)
    if n < 2 * half + 1:
        raise ValueError(f"profile too coarse: need >= {2 * half + 1} points")
    core = slice(half, n - half)
    d1 = np.zeros(n - 2 * half)
    d2 = np.zeros(n - 2 * half)
    d4 = np.zeros(n - 2 * half)
    for i, c in enumerate(nodes.astype(int)):
        seg = values[half + c : n - half + c]
        d1 += w[1, i] * seg
        d2 += w[2, i] * seg
        d4 += w[4, i] * seg
    return core, d1 / dy, d2 / dy**2, d4 / dy**4


def ode_residual_Q(Q: Profile, alpha: float, beta: float) -> float:
    """L2 norm over the inner 80% of the window of
    Q'''' + y Q + 5 alpha (2 Q^2 Q'' + 3 Q (Q')^2) + 5 beta Q^5."""
    if len(Q.y) < 64:
        raise ValueError("profile grid too coarse for the residual check")
    core, d1, d2, d4 = _derivatives(Q.values, Q.dy)
    y = Q.y[core]
    q = Q.values[core]
    resid = d4 + y * q + 5 * alpha * (2 * q**2 * d2 + 3 * q * d1**2) + 5 * beta * q**5
    span = Q.y[-1] - Q.y[0]
    inner = np.abs(y) <= 0.4 * span  # central 80% of the full window
    return float(np.sqrt(Q.dy * np.sum(resid[inner] ** 2)))


def ode_residual_pointwise(Q: Profile, alpha: float, beta: float):
    """(y, residual) on the interior stencil range; for oracle validation."""
    core, d1, d2, d4 = _derivatives(Q.values, Q.dy)
    y = Q.y[core]
    q = Q.values[core]
    resid = d4 + y * q + 5 * alpha * (2 * q**2 * d2 + 3 * q * d1**2) + 5 * beta * q**5
    return y, resid


# ---------------------------------------------------------------------------
# The linear profile oracle
# ---------------------------------------------------------------------------

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)


def _gl_panels(f, a: float, b: float, width: float):
    """Sum of 16-node Gauss-Legendre panels of at most the given width."""
    n = max(1, int(np.ceil((b - a) / width)))
    edges = np.linspace(a, b, n + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * (edges[1] - edges[0])
    pts = (mid[:, None] + half * _GL_NODES[None, :]).ravel()
    vals = f(pts).reshape(n, -1)
    return half * float(np.sum(vals @ _GL_WEIGHTS))


def _panel_width(y: float, xi_max: float) -> float:
    # at most ~2 radians of phase per 16-node panel
    gmax = abs(y) + xi_max**4
    return min(0.5, 2.0 / max(gmax, 1.0))


def q0_value(y: float) -> float:
    """Q0(y) = (1/pi) Re int_0^inf e^{i(y xi + xi^5/5)} d xi.

    Head: panels on [0, Xi] sized to resolve the phase (Xi is past any
    stationary point, so the phase is monotone beyond).  Tail: rotate onto
    the ray xi = Xi + s e^{i pi/10}, where every term of i(y xi + xi^5/5)
    gains a negative real part and the integrand decays exponentially.
    """
    y = float(y)
    xi_big = max(1.5 * abs(y) ** 0.25, 2.0)

    def head(xi):
        return np.cos(y * xi + xi**5 / 5.0)

    val = _gl_panels(head, 0.0, xi_big, _panel_width(y, xi_big))

    rot = np.exp(1j * np.pi / 10)
    slope = y + xi_big**4
    rate = 0.3 * slope  # sin(pi/10) ~ 0.309 times the phase slope
    s_max = 45.0 / rate

    def tail(s):
        zeta = xi_big + s * rot
        return np.real(rot * np.exp(1j * (y * zeta + zeta**5 / 5.0)))

    val += _gl_panels(tail, 0.0, s_max, 2.0 / slope)
    return val / np.pi


def q0_left_tail(Y: float) -> float:
    """int_{-inf}^{-Y} Q0(y) dy = 1/2 + (1/pi) int_0^inf sin(xi^5/5 - Y xi) dxi/xi.

    The 1/2 is the delta mass at xi = 0 from regularizing the divergent
    y-integral; the remaining integrand is regular at 0 and gets the same
    head-plus-rotated-tail treatment.  Requires Y > 0.
    """
    if Y <= 0:
        raise ValueError("left tail defined for Y > 0")
    xi_big = max(1.5 * Y**0.25, 2.0)

    def head(xi):
        return np.sin(xi**5 / 5.0 - Y * xi) / xi

    val = _gl_panels(head, 0.0, xi_big, _panel_width(Y, xi_big))

    rot = np.exp(1j * np.pi / 10)
    slope = xi_big**4 - Y
    rate = 0.3 * max(slope, 1e-3)
    s_max = 45.0 / rate

    def tail(s):
        zeta = xi_big + s * rot
        return np.imag(rot * np.exp(1j * (zeta**5 / 5.0 - Y * zeta)) / zeta)

    val += _gl_panels(tail, 0.0, s_max, 2.0 / max(slope + Y, 1.0))
    return 0.5 + val / np.pi


def q0_integral(y_left: float = 30.0, y_right: float = 16.0) -> float:
    """int of Q0 over the line: quadrature on [-y_left, y_right] plus the
    oscillatory left-tail correction (the right tail decays super-fast)."""
    val = _gl_panels(np.vectorize(q0_value), -y_left, y_right, 0.5)
    return val + q0_left_tail(y_left)


def linear_profile_Q0(y_grid) -> Profile:
    """Sampled linear self-similar profile (unit integral normalization)."""
    y = np.asarray(y_grid, dtype=float)
    if np.max(np.abs(y)) > 60.0:
        raise ValueError("oracle window limited to |y| <= 60")
    vals = np.array([q0_value(v) for v in y])
    return Profile(y=y, values=vals, t_source="oracle")
