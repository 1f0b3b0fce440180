import numpy as np
import pytest

from divray.averaging import riesz_kernel_constant, singular_displacement_kernel
from divray.spectral import (
    SpectralGrid,
    bessel_apply,
    check_periodizable,
    frac_laplacian,
    lp_norm,
    riesz_potential,
    riesz_transform,
    sobolev_norm,
    sobolev_norm_field,
)
from conftest import smooth_noise


@pytest.fixture(scope="module")
def grid():
    return SpectralGrid.centered(2, 64, 16.0)


@pytest.fixture(scope="module")
def mean_free_u(grid):
    return smooth_noise(grid, seed=42)


def single_mode(grid, axis=0):
    x = grid.meshgrid()[axis]
    L = grid.lengths[axis]
    return np.sin(2 * np.pi * x / L), 2 * np.pi / L


class TestGrid:
    def test_rejects_non_power_of_two(self):
        with pytest.raises(ValueError):
            SpectralGrid(sizes=(48, 48), lengths=(16.0, 16.0), origin=(-8.0, -8.0))

    def test_fft_roundtrip(self, grid, mean_free_u):
        back = grid.ifft(grid.fft(mean_free_u)).real
        assert np.linalg.norm(back - mean_free_u) <= 1e-12 * np.linalg.norm(mean_free_u)

    def test_continuum_fft_matches_gaussian(self, grid):
        X, Y = grid.meshgrid()
        u = np.exp(-(X**2 + Y**2))
        uh = grid.continuum_fft(u)
        Z1, Z2 = grid.freq_meshgrid()
        exact = np.pi * np.exp(-(Z1**2 + Z2**2) / 4.0)
        mask = np.hypot(Z1, Z2) < grid.half_nyquist()
        err = np.max(np.abs(uh - exact)[mask]) / np.max(np.abs(exact))
        assert err < 1e-6
        back = grid.continuum_ifft(uh).real
        assert np.max(np.abs(back - u)) < 1e-12


class TestRiesz:
    def test_square_sum_is_minus_identity(self, grid, mean_free_u):
        rr = sum(riesz_transform(grid, riesz_transform(grid, mean_free_u, j), j)
                 for j in range(2))
        assert np.max(np.abs(rr + mean_free_u)) < 1e-10

    def test_constant_maps_to_zero(self, grid):
        out = riesz_transform(grid, np.full(grid.sizes, 3.7), 0)
        assert np.max(np.abs(out)) == 0.0

    def test_single_mode_phase_rotation(self, grid):
        u, freq = single_mode(grid, axis=0)
        out = riesz_transform(grid, u, 0)
        x = grid.meshgrid()[0]
        # -i * sign on the +freq mode turns sin into -cos with unit amplitude
        expected = -np.cos(freq * x)
        assert np.max(np.abs(out - expected)) < 1e-12

    def test_norm_bound_on_grid(self, grid, mean_free_u):
        for t in (0.0, 0.7):
            num = sobolev_norm(grid, riesz_transform(grid, mean_free_u, 1), t)
            den = sobolev_norm(grid, mean_free_u, t)
            assert num / den <= 1.0 + 1e-12


class TestFracLaplacian:
    def test_inverse_composition(self, grid, mean_free_u):
        s = 0.3
        out = frac_laplacian(grid, frac_laplacian(grid, mean_free_u, s, -1), s, 1)
        assert np.max(np.abs(out - mean_free_u)) < 1e-9 * np.max(np.abs(mean_free_u))

    def test_negative_order_semigroup(self, grid, mean_free_u):
        a = frac_laplacian(grid, frac_laplacian(grid, mean_free_u, 0.3, -1), 0.45, -1)
        b = frac_laplacian(grid, mean_free_u, 0.75, -1)
        assert np.max(np.abs(a - b)) < 1e-11 * np.max(np.abs(b))

    def test_single_mode_eigenvalue(self, grid):
        u, freq = single_mode(grid, axis=0)
        out = frac_laplacian(grid, u, 0.5, 1)
        assert np.max(np.abs(out - freq * u)) < 1e-12

    def test_rejects_bad_s(self, grid, mean_free_u):
        with pytest.raises(ValueError):
            frac_laplacian(grid, mean_free_u, -0.2, 1)

    def test_error_policy_rejects_nonzero_mean(self):
        g = SpectralGrid.centered(2, 32, 16.0, zero_mode_policy="error")
        with pytest.raises(ValueError):
            frac_laplacian(g, np.ones(g.sizes), 0.25, -1)

    def test_norm_estimate(self, grid, mean_free_u):
        s, t = 0.25, 0.8
        num = sobolev_norm(grid, frac_laplacian(grid, mean_free_u, s, 1), t - 2 * s)
        assert num <= sobolev_norm(grid, mean_free_u, t) * (1 + 1e-12)


class TestRieszPotential:
    def test_left_inverse(self, grid, mean_free_u):
        out = riesz_potential(grid, riesz_potential(grid, mean_free_u, 0.5), -0.5)
        assert np.max(np.abs(out - mean_free_u)) < 1e-12 * np.max(np.abs(mean_free_u))

    def test_semigroup(self, grid, mean_free_u):
        a = riesz_potential(grid, riesz_potential(grid, mean_free_u, 0.3), 0.4)
        b = riesz_potential(grid, mean_free_u, 0.7)
        assert np.max(np.abs(a - b)) < 1e-12

    def test_rejects_even_gamma_offset(self, grid, mean_free_u):
        with pytest.raises(ValueError):
            riesz_potential(grid, mean_free_u, 2.0)  # gamma - n = 0

    def test_matches_spatial_convolution_at_center(self, grid):
        s = 0.25
        X, Y = grid.meshgrid()
        u = np.exp(-(X**2 + Y**2))
        spec_route = riesz_potential(grid, u, 2 * s)
        h = riesz_kernel_constant(2, 2 * s)
        kern = singular_displacement_kernel(grid.spacing, grid.sizes,
                                            2 * s - 2, (0, 0))
        from scipy.signal import convolve2d
        direct = h * convolve2d(kern, u, mode="valid") * grid.cell_volume
        c = grid.sizes[0] // 2
        # compare mean-adjusted central values (spectral route drops the mean)
        delta = (spec_route - spec_route.mean()) - (direct - direct.mean())
        assert abs(delta[c, c]) / abs(direct[c, c]) < 1e-2


class TestBesselAndNorms:
    def test_order_zero_is_plain_l2(self, grid, mean_free_u):
        assert sobolev_norm(grid, mean_free_u, 0.0, 2.0) == pytest.approx(
            lp_norm(grid, mean_free_u, 2.0), rel=1e-13)

    def test_plancherel_cross_check(self, grid, mean_free_u):
        t = 1.3
        spatial = sobolev_norm(grid, mean_free_u, t, 2.0)
        uh = grid.fft(mean_free_u)
        zsq = sum(z**2 for z in grid.freq_meshgrid())
        weighted = np.sum((1 + zsq) ** t * np.abs(uh) ** 2)
        spectral_route = np.sqrt(weighted * grid.cell_volume / np.prod(grid.sizes))
        assert spatial == pytest.approx(spectral_route, rel=1e-12)

    def test_single_mode_h1_closed_form(self):
        g = SpectralGrid(sizes=(64, 64), lengths=(16.0, 16.0), origin=(0.0, 0.0))
        u, freq = single_mode(g, axis=0)
        L = g.lengths[0]
        expected = np.sqrt((1 + freq**2) * L**2 / 2)
        assert sobolev_norm(g, u, 1.0, 2.0) == pytest.approx(expected, rel=1e-12)

    def test_bessel_inverse(self, grid, mean_free_u):
        out = bessel_apply(grid, bessel_apply(grid, mean_free_u, 1.7), -1.7)
        assert np.max(np.abs(out - mean_free_u)) < 1e-12

    def test_rejects_p_below_one(self, grid, mean_free_u):
        with pytest.raises(ValueError):
            sobolev_norm(grid, mean_free_u, 0.0, 0.5)

    def test_tensor_field_norm_uses_multiplicity(self, grid):
        from divray.fields import SymTensorField
        comps = np.zeros((3,) + grid.sizes)
        comps[1] = 1.0  # off-diagonal (0,1) component of a 2-tensor
        fld = SymTensorField(2, grid, comps)
        # the (0,1) and (1,0) slots both contribute
        expected = 2.0 * lp_norm(grid, comps[1], 2.0)
        assert sobolev_norm_field(grid, fld, 0.0, 2.0) == pytest.approx(expected)


class TestOperatorAlgebra:
    def test_operators_commute(self, grid, mean_free_u):
        a = riesz_transform(grid, frac_laplacian(grid, mean_free_u, 0.25, -1), 0)
        b = frac_laplacian(grid, riesz_transform(grid, mean_free_u, 0), 0.25, -1)
        assert np.max(np.abs(a - b)) < 1e-12

    def test_bessel_commutes_with_riesz(self, grid, mean_free_u):
        a = bessel_apply(grid, riesz_transform(grid, mean_free_u, 1), 0.9)
        b = riesz_transform(grid, bessel_apply(grid, mean_free_u, 0.9), 1)
        assert np.max(np.abs(a - b)) < 1e-12


class TestPreflight:
    def test_accepts_decaying_field(self, grid):
        X, Y = grid.meshgrid()
        check_periodizable(grid, np.exp(-(X**2 + Y**2)))

    def test_rejects_boundary_mass(self, grid):
        X, Y = grid.meshgrid()
        with pytest.raises(ValueError):
            check_periodizable(grid, np.exp(-0.01 * (X**2 + Y**2)))
