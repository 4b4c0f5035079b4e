"""Grid, transform, multiplier and projection checks."""

import numpy as np
import pytest

from qdisp.spectral import (
    ComplexField,
    DyadicBand,
    GridMismatchError,
    RealField,
    band_cutoff,
    derivative,
    dyadic_partition,
    evaluate_at,
    fourier_continuum,
    integrate,
    l2_norm,
    make_grid,
    multiplier,
    project_dyadic,
    project_halfline,
    project_low,
    smooth_cutoff,
    to_physical,
    to_spectral,
)


def random_field(grid, seed=0, band_limit=None):
    rng = np.random.default_rng(seed)
    coeffs = np.zeros(grid.N, dtype=complex)
    kmax = band_limit if band_limit is not None else grid.N // 2 - 1
    amps = rng.normal(size=kmax) + 1j * rng.normal(size=kmax)
    coeffs[1 : kmax + 1] = amps
    coeffs[-kmax:] = np.conj(amps[::-1])
    coeffs[0] = rng.normal()
    samples = np.fft.ifft(coeffs).real
    return RealField(samples=samples, grid=grid)


class TestGrid:
    def test_unit_torus(self):
        g = make_grid(np.pi, 16)
        assert g.dx == pytest.approx(2 * np.pi / 16)
        assert sorted(np.rint(g.xi).astype(int)) == list(range(-8, 8))

    def test_xi_max_large_grid(self):
        g = make_grid(1024.0, 2**15)
        assert g.xi_max == pytest.approx(16 * np.pi, rel=1e-15)

    def test_dx_times_n(self):
        g = make_grid(37.5, 256)
        assert g.dx * g.N == pytest.approx(2 * g.L, rel=1e-15)

    def test_xi_antisymmetry(self):
        g = make_grid(5.0, 64)
        xi = np.sort(g.xi)
        # every mode except the unpaired Nyquist has its negative present
        paired = xi[1:]
        assert np.allclose(paired + paired[::-1], 0.0)

    def test_rejects_bad_n(self):
        with pytest.raises(ValueError):
            make_grid(np.pi, 15)
        with pytest.raises(ValueError):
            make_grid(np.pi, 8)

    def test_rejects_bad_l(self):
        with pytest.raises(ValueError):
            make_grid(-1.0, 64)


class TestTransforms:
    def test_zero_field(self):
        g = make_grid(np.pi, 32)
        F = to_spectral(RealField(np.zeros(32), g))
        assert np.all(F.coeffs == 0)

    def test_single_mode(self):
        g = make_grid(np.pi, 32)
        F = to_spectral(RealField(np.cos(g.x), g))
        nonzero = np.abs(F.coeffs) > 1e-10
        assert np.flatnonzero(nonzero).tolist() == [1, 31]

    def test_round_trip(self):
        g = make_grid(10.0, 256)
        f = random_field(g, seed=1)
        back = to_physical(to_spectral(f))
        assert np.linalg.norm(back.samples - f.samples) <= 1e-12 * np.linalg.norm(
            f.samples
        )

    def test_parseval(self):
        g = make_grid(10.0, 256)
        f = random_field(g, seed=2)
        F = to_spectral(f)
        phys = g.dx * np.sum(f.samples**2)
        spec = g.dx / g.N * np.sum(np.abs(F.coeffs) ** 2)
        assert phys == pytest.approx(spec, rel=1e-12)


class TestDerivative:
    def test_sin_first(self):
        g = make_grid(np.pi, 64)
        d = derivative(RealField(np.sin(g.x), g), 1)
        assert np.max(np.abs(d.samples - np.cos(g.x))) < 1e-10

    def test_sin_fifth(self):
        # roundoff amplification is xi_max^5 * eps, so keep the grid small
        g = make_grid(np.pi, 32)
        d = derivative(RealField(np.sin(g.x), g), 5)
        assert np.max(np.abs(d.samples - np.cos(g.x))) < 1e-9

    def test_gaussian_second(self):
        g = make_grid(25.0, 1024)
        f = RealField(np.exp(-g.x**2), g)
        exact = (4 * g.x**2 - 2) * np.exp(-g.x**2)
        d = derivative(f, 2)
        assert np.max(np.abs(d.samples - exact)) < 1e-8

    def test_composition(self):
        g = make_grid(8.0, 256)
        f = random_field(g, seed=3, band_limit=40)
        d3 = derivative(f, 3)
        step = derivative(derivative(derivative(f, 1), 1), 1)
        assert np.max(np.abs(d3.samples - step.samples)) < 1e-9 * np.max(
            np.abs(d3.samples)
        )

    def test_order_range(self):
        g = make_grid(np.pi, 32)
        with pytest.raises(ValueError):
            derivative(RealField(np.zeros(32), g), 6)


class TestMultiplier:
    def test_identity(self):
        g = make_grid(4.0, 128)
        f = random_field(g, seed=4)
        F = to_spectral(f)
        out = multiplier(F, lambda xi: np.ones_like(xi))
        assert np.allclose(out.coeffs, F.coeffs)

    def test_ixi_matches_derivative(self):
        g = make_grid(4.0, 128)
        f = random_field(g, seed=5, band_limit=50)
        via_mult = to_physical(multiplier(to_spectral(f), lambda xi: 1j * xi))
        # derivative() zeroes the Nyquist mode; band-limited input has none
        assert np.max(np.abs(via_mult.samples - derivative(f, 1).samples)) < 1e-11

    def test_bessel_smoothing_of_spike(self):
        g = make_grid(np.pi, 128)
        spike = np.zeros(128)
        spike[64] = 1.0
        out = to_physical(
            multiplier(to_spectral(RealField(spike, g)), lambda xi: (1 + xi**2) ** -0.5)
        )
        # oracle: direct DFT summation at three sample points
        F = np.fft.fft(spike) * (1 + g.xi**2) ** -0.5
        for m in (60, 64, 70):
            direct = np.sum(F * np.exp(2j * np.pi * np.arange(128) * m / 128)) / 128
            assert out.samples[m] == pytest.approx(direct.real, abs=1e-13)
        assert out.samples[62] > 0 and out.samples[66] > 0

    def test_rejects_nonfinite(self):
        g = make_grid(np.pi, 32)
        F = to_spectral(RealField(np.zeros(32), g))
        with pytest.raises(ValueError):
            multiplier(F, lambda xi: 1.0 / xi)


class TestDyadic:
    def test_cutoff_shape(self):
        assert smooth_cutoff(0.5) == 1.0
        assert smooth_cutoff(1.0) == 1.0
        assert smooth_cutoff(2.0) == 0.0
        assert 0.0 < smooth_cutoff(1.5) < 1.0

    def test_band_centered_mode_passes(self):
        g = make_grid(np.pi, 256)
        f = RealField(np.cos(4 * g.x), g)
        out = project_dyadic(f, DyadicBand(4.0))
        assert np.max(np.abs(out.samples - f.samples)) < 1e-12

    def test_disjoint_band_rejects(self):
        g = make_grid(np.pi, 256)
        f = RealField(np.cos(4 * g.x), g)
        out = project_dyadic(f, DyadicBand(64.0))
        assert np.max(np.abs(out.samples)) < 1e-10

    def test_partition_reconstructs(self):
        g = make_grid(10.0, 512)
        f = random_field(g, seed=6)
        low_center, bands = dyadic_partition(g)
        total = project_low(f, low_center).samples.copy()
        for band in bands:
            total += project_dyadic(f, band).samples
        assert np.max(np.abs(total - f.samples)) < 1e-10

    def test_partition_fine_spacing(self):
        g = make_grid(10.0, 256)
        f = random_field(g, seed=7)
        low_center, bands = dyadic_partition(g, delta=0.5)
        total = project_low(f, low_center, delta=0.5).samples.copy()
        for band in bands:
            total += project_dyadic(f, band).samples
        assert np.max(np.abs(total - f.samples)) < 1e-10

    def test_bump_partition_of_unity(self):
        xi = np.linspace(0.07, 30.0, 1000)
        low_center, bands = dyadic_partition(make_grid(10.0, 512))
        total = smooth_cutoff(xi / low_center)
        for band in bands:
            total += band_cutoff(xi, band.center, band.delta)
        assert np.max(np.abs(total - 1.0)) < 1e-12


class TestHalfline:
    def test_cos_projects_to_half_exponential(self):
        g = make_grid(np.pi, 64)
        up = project_halfline(RealField(np.cos(g.x), g), +1)
        assert np.max(np.abs(up.samples - 0.5 * np.exp(1j * g.x))) < 1e-12

    def test_sin_spectrum(self):
        g = make_grid(np.pi, 64)
        up = project_halfline(RealField(np.sin(g.x), g), +1)
        expected = np.exp(1j * g.x) / 2j
        assert np.max(np.abs(up.samples - expected)) < 1e-12

    def test_conjugate_symmetry(self):
        g = make_grid(7.0, 128)
        f = random_field(g, seed=8)
        up = project_halfline(f, +1)
        um = project_halfline(f, -1)
        assert np.max(np.abs(um.samples - np.conj(up.samples))) < 1e-13

    def test_real_part_reconstruction(self):
        g = make_grid(7.0, 128)
        f = random_field(g, seed=9)
        up = project_halfline(f, +1)
        mean = np.mean(f.samples)
        assert np.max(np.abs(2 * up.samples.real - (f.samples - mean))) < 1e-12


class TestInterpolation:
    def test_on_grid_points(self):
        g = make_grid(5.0, 128)
        f = random_field(g, seed=10, band_limit=40)
        vals = evaluate_at(f, g.x[3:9])
        assert np.allclose(vals, f.samples[3:9], atol=1e-12)

    def test_band_limited_exact(self):
        g = make_grid(np.pi, 64)
        f = RealField(np.cos(3 * g.x) + 0.2 * np.sin(5 * g.x), g)
        pts = np.array([0.1234, -1.777, 2.5])
        exact = np.cos(3 * pts) + 0.2 * np.sin(5 * pts)
        assert np.allclose(evaluate_at(f, pts), exact, atol=1e-12)

    def test_complex_field(self):
        g = make_grid(np.pi, 64)
        f = ComplexField(np.exp(2j * g.x), g)
        pts = np.array([0.3, -0.9])
        assert np.allclose(evaluate_at(f, pts), np.exp(2j * pts), atol=1e-12)


class TestContinuumFourier:
    def test_gaussian_pair(self):
        # unitary transform of exp(-x^2) is exp(-xi^2/4)/sqrt(2)
        g = make_grid(30.0, 1024)
        f = RealField(np.exp(-g.x**2), g)
        xi, uhat = fourier_continuum(f)
        sel = np.abs(xi) < 6
        exact = np.exp(-xi[sel] ** 2 / 4) / np.sqrt(2)
        assert np.max(np.abs(uhat[sel] - exact)) < 1e-12

    def test_l2_matches_parseval(self):
        g = make_grid(12.0, 256)
        f = random_field(g, seed=11)
        _, uhat = fourier_continuum(f)
        dxi = np.pi / g.L
        assert l2_norm(f) ** 2 == pytest.approx(
            dxi * np.sum(np.abs(uhat) ** 2), rel=1e-12
        )

    def test_integrate_gaussian(self):
        g = make_grid(30.0, 512)
        f = RealField(np.exp(-g.x**2), g)
        assert integrate(f) == pytest.approx(np.sqrt(np.pi), rel=1e-12)


def test_grid_mismatch_raises():
    f1 = random_field(make_grid(5.0, 64), seed=12)
    from qdisp.spectral import _check_same_grid

    with pytest.raises(GridMismatchError):
        _check_same_grid(f1, random_field(make_grid(5.0, 128), seed=12))
