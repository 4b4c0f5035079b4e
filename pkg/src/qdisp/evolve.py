"""Time integration of u_t - (1/5) u_xxxxx = d/dx N(u), with
N(u) = alpha (2 u^2 u_xx + 3 u u_x^2) + beta u^5.

The linear phase e^{i t xi^5 / 5} is applied exactly in frequency space
(integrating-factor classical RK4); the nonlinearity is explicit with
truncation dealiasing: the solution spectrum is confined to |xi| <= xi_K
with 5K <= N - K (quintic) or 3K <= N - K (cubic), so aliased images of
pointwise products land outside the retained band and are removed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .spectral import (
    GridSpec,
    RealField,
    SpectralField,
    derivative,
    to_physical,
    to_spectral,
)

__all__ = [
    "InitialDatum",
    "SpongeSpec",
    "SimConfig",
    "FieldState",
    "RunResult",
    "BlowUpError",
    "linear_propagate",
    "nonlinearity",
    "rhs",
    "step",
    "run",
]

BLOWUP_THRESHOLD = 1e8


class BlowUpError(RuntimeError):
    """Solution lost finiteness; carries the time of detection."""

    def __init__(self, t: float, message: str = ""):
        super().__init__(message or f"solution blew up at t={t:.6g}")
        self.t = t


@dataclass(frozen=True)
class InitialDatum:
    """Initial datum u(t0, .); gaussian and sech profiles or custom samples."""

    kind: str = "gaussian"
    amplitude: float = 0.05
    width: float = 1.0
    center: float = 0.0
    samples: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in ("gaussian", "sech", "custom"):
            raise ValueError(f"unknown initial datum kind {self.kind!r}")
        if self.kind != "custom" and (self.amplitude <= 0 or self.width <= 0):
            raise ValueError("amplitude and width must be positive")
        if self.kind == "custom" and self.samples is None:
            raise ValueError("custom datum requires samples")

    def build(self, grid: GridSpec) -> RealField:
        z = (grid.x - self.center) / self.width
        if self.kind == "gaussian":
            vals = self.amplitude * np.exp(-(z**2))
        elif self.kind == "sech":
            vals = self.amplitude / np.cosh(z)
        else:
            vals = np.asarray(self.samples, dtype=float)
        f = RealField(samples=vals, grid=grid)
        edge = max(abs(vals[0]), abs(vals[-1]))
        if edge >= 1e-14:
            raise ValueError(
                f"initial datum does not decay at the domain boundary "
                f"(|u0(-L)| = {edge:.3g}); enlarge L or shrink the width"
            )
        return f


@dataclass(frozen=True)
class SpongeSpec:
    """Absorbing layer: u multiplied by exp(-dt mu(x)) each step, with mu a
    smooth ramp supported in the outer width_fraction of the domain per side."""

    enabled: bool = False
    strength: float = 2.0
    width_fraction: float = 0.10

    def profile(self, grid: GridSpec) -> np.ndarray:
        x0 = (1.0 - self.width_fraction) * grid.L
        r = (np.abs(grid.x) - x0) / (grid.L - x0)
        r = np.clip(r, 0.0, 1.0)
        return self.strength * 0.5 * (1.0 - np.cos(np.pi * r))


@dataclass(frozen=True)
class SimConfig:
    alpha: float
    beta: float
    grid: GridSpec
    t0: float
    t_final: float
    dt: float | str = "auto"
    dealias_rule: float | str = "auto"
    initial: InitialDatum = field(default_factory=InitialDatum)
    sponge: SpongeSpec = field(default_factory=SpongeSpec)
    snapshot_times: tuple = ()
    cfl: float = 0.5

    def __post_init__(self):
        if self.t_final < self.t0:
            raise ValueError(f"t_final ({self.t_final}) < t0 ({self.t0})")
        if not isinstance(self.dt, str):
            if self.dt <= 0:
                raise ValueError(f"dt must be positive, got {self.dt}")
        elif self.dt != "auto":
            raise ValueError(f"dt must be a number or 'auto', got {self.dt!r}")
        k = self.dealias_modes
        n = self.grid.N
        p = 5 if self.beta != 0 else 3
        if p * k > n - k:
            raise ValueError(
                f"dealias band K={k} not alias-free for degree-{p} products "
                f"(need {p}K <= N-K with N={n})"
            )
        for s in self.snapshot_times:
            if not self.t0 <= s <= self.t_final:
                raise ValueError(
                    f"snapshot time {s} outside [{self.t0}, {self.t_final}]"
                )
        if list(self.snapshot_times) != sorted(set(self.snapshot_times)):
            raise ValueError("snapshot_times must be strictly increasing")

    @property
    def dealias_modes(self) -> int:
        """Number of retained one-sided modes K."""
        if self.dealias_rule == "auto":
            return self.grid.N // 6 if self.beta != 0 else self.grid.N // 4
        if isinstance(self.dealias_rule, str):
            raise ValueError(f"bad dealias_rule {self.dealias_rule!r}")
        return int(self.grid.N * float(self.dealias_rule))

    @property
    def xi_cutoff(self) -> float:
        return np.pi * self.dealias_modes / self.grid.L

    def dealias_mask(self) -> np.ndarray:
        idx = np.rint(self.grid.xi * self.grid.L / np.pi).astype(int)
        return (np.abs(idx) <= self.dealias_modes).astype(float)

    def auto_dt(self, u_max: float) -> float:
        """Step heuristic: the explicit term d/dx(u^2 u_xx) acts like xi^3 u^2."""
        scale = 1.0 + abs(self.alpha) * u_max**2 + abs(self.beta) * u_max**4
        return self.cfl / (self.xi_cutoff**3 * scale)


@dataclass(frozen=True)
class FieldState:
    """One time slice: samples, cached spectrum, and the time t."""

    t: float
    u: RealField
    spectrum: SpectralField

    @classmethod
    def from_field(cls, t: float, u: RealField) -> "FieldState":
        return cls(t=t, u=u, spectrum=to_spectral(u))

    @classmethod
    def from_spectrum(cls, t: float, F: SpectralField) -> "FieldState":
        return cls(t=t, u=to_physical(F), spectrum=F)


@dataclass
class RunResult:
    states: list
    warnings: list
    blowup: BlowUpError | None = None


def linear_propagate(F: SpectralField, tau: float) -> SpectralField:
    """Exact free evolution: multiply by e^{i tau xi^5 / 5}.

    The unpaired Nyquist mode is carried unchanged (its odd symbol has no
    conjugate partner), keeping the map unitary and Hermitian-preserving.
    """
    xi = F.grid.xi
    phase = np.exp(0.2j * tau * xi**5)
    phase[F.grid.nyquist_index] = 1.0
    return SpectralField(coeffs=phase * F.coeffs, grid=F.grid)


def nonlinearity(u: RealField, alpha: float, beta: float) -> RealField:
    """N(u) = alpha (2 u^2 u_xx + 3 u u_x^2) + beta u^5, derivatives spectral.

    Pointwise products are exact here; alias control happens in the stepping
    pipeline, where inputs and outputs are truncated to the retained band.
    """
    v = u.samples
    out = np.zeros_like(v)
    if alpha != 0.0:
        ux = derivative(u, 1).samples
        uxx = derivative(u, 2).samples
        out += alpha * (2.0 * v**2 * uxx + 3.0 * v * ux**2)
    if beta != 0.0:
        out += beta * v**5
    if not np.all(np.isfinite(out)):
        raise BlowUpError(float("nan"), "nonlinearity overflowed")
    return RealField(samples=out, grid=u.grid)


def rhs(state: FieldState, cfg: SimConfig) -> RealField:
    """Full right-hand side (1/5) u_xxxxx + d/dx N(u) with dealiased products."""
    stepper = _Stepper(cfg)
    uhat = state.spectrum.coeffs * stepper.mask
    lin = stepper.lin_symbol * uhat
    nl = stepper.nonlinear_rhs(uhat)
    return RealField(samples=np.fft.ifft(lin + nl).real, grid=cfg.grid)


class _Stepper:
    """Precomputed symbols and scratch for the integrating-factor RK4."""

    def __init__(self, cfg: SimConfig):
        self.cfg = cfg
        grid = cfg.grid
        xi = grid.xi
        self.mask = cfg.dealias_mask()
        self.lin_symbol = 0.2j * xi**5
        self.lin_symbol[grid.nyquist_index] = 0.0
        d1 = 1j * xi
        d1[grid.nyquist_index] = 0.0
        self.d1 = d1 * self.mask
        self.d2 = (1j * xi) ** 2 * self.mask
        self.out_symbol = self.d1  # outer d/dx, truncated
        self.sponge_mu = cfg.sponge.profile(grid) if cfg.sponge.enabled else None
        self._dt_cached = None
        self._e_half = None
        self._e_full = None

    def _phases(self, dt: float):
        if dt != self._dt_cached:
            half = np.exp(0.5 * dt * self.lin_symbol)
            self._e_half = half
            self._e_full = half * half
            self._dt_cached = dt
        return self._e_half, self._e_full

    def nonlinear_rhs(self, uhat: np.ndarray) -> np.ndarray:
        """G(uhat) = i xi * FFT[N(u)] restricted to the retained band."""
        cfg = self.cfg
        u = np.fft.ifft(uhat).real
        if cfg.alpha != 0.0:
            ux = np.fft.ifft(self.d1 * uhat).real
            uxx = np.fft.ifft(self.d2 * uhat).real
            w = cfg.alpha * (2.0 * u * u * uxx + 3.0 * u * ux * ux)
        else:
            w = np.zeros_like(u)
        if cfg.beta != 0.0:
            w += cfg.beta * u**5
        return self.out_symbol * np.fft.fft(w)

    def advance(self, uhat: np.ndarray, dt: float) -> np.ndarray:
        e, e2 = self._phases(dt)
        g = self.nonlinear_rhs
        k1 = g(uhat)
        k2 = g(e * (uhat + 0.5 * dt * k1))
        k3 = g(e * uhat + 0.5 * dt * k2)
        k4 = g(e2 * uhat + dt * e * k3)
        out = e2 * uhat + (dt / 6.0) * (e2 * k1 + 2.0 * e * (k2 + k3) + k4)
        if self.sponge_mu is not None:
            damped = np.fft.ifft(out).real * np.exp(-dt * self.sponge_mu)
            out = np.fft.fft(damped) * self.mask
        return out


def step(state: FieldState, dt: float, cfg: SimConfig) -> FieldState:
    """One fourth-order step; exact linear flow when alpha = beta = 0.

    The incoming spectrum is truncated to the retained band: the evolution is
    defined on band-limited states and products are alias-free only there.
    """
    stepper = _Stepper(cfg)
    out = stepper.advance(state.spectrum.coeffs * stepper.mask, dt)
    new = FieldState.from_spectrum(state.t + dt, SpectralField(out, cfg.grid))
    _check_finite(new)
    return new


def _check_finite(state: FieldState):
    m = np.max(np.abs(state.u.samples))
    if not np.isfinite(m) or m > BLOWUP_THRESHOLD:
        raise BlowUpError(state.t)


def run(cfg: SimConfig) -> RunResult:
    """March from t0 to t_final, emitting snapshots at the requested times.

    Snapshot times are hit exactly by shortening the final substep of each
    interval.  Blow-up mid-run returns the partial trajectory plus the error
    record instead of raising.
    """
    from .diagnostics import boundary_mass

    grid = cfg.grid
    u0 = cfg.initial.build(grid)
    stepper = _Stepper(cfg)
    uhat = np.fft.fft(u0.samples) * stepper.mask
    t = cfg.t0

    if isinstance(cfg.dt, str):
        dt = cfg.auto_dt(float(np.max(np.abs(u0.samples))))
    else:
        dt = float(cfg.dt)

    snapshot_times = list(cfg.snapshot_times) or [cfg.t_final]
    states: list[FieldState] = []
    warnings: list[str] = []

    def emit(t_now: float):
        st = FieldState.from_spectrum(t_now, SpectralField(uhat.copy(), grid))
        _check_finite(st)
        bm = boundary_mass(st.u)
        if bm > 1e-6:
            warnings.append(
                f"boundary mass {bm:.3e} at t={t_now:.6g} exceeds 1e-6; "
                f"x-weighted functionals unreliable"
            )
        states.append(st)

    try:
        for s in snapshot_times:
            span = s - t
            if span > 1e-12 * max(1.0, abs(s)):
                n_full = int(math.floor(span / dt))
                rem = span - n_full * dt
                if rem < 1e-9 * dt:
                    rem = 0.0
                    span = n_full * dt
                for _ in range(n_full):
                    uhat = stepper.advance(uhat, dt)
                    t += dt
                    if not np.all(np.isfinite(uhat)):
                        raise BlowUpError(t)
                if rem > 0.0:
                    uhat = stepper.advance(uhat, rem)
            t = s
            emit(t)
    except BlowUpError as err:
        return RunResult(states=states, warnings=warnings, blowup=err)
    return RunResult(states=states, warnings=warnings, blowup=None)
