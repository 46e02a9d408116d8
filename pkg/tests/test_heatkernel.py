import math

import numpy as np
import pytest
import scipy.integrate

from biheis import Point5, canonicalize, dilate
from biheis.errors import AccuracyError, InvalidArgumentError, WrongCaseError
from biheis.heatkernel import (
    BlockSpectrum,
    KernelQuery,
    closed_form_half,
    closed_form_iso,
    kernel,
    log_closed_form_half,
    log_closed_form_iso,
    log_heisenberg_vertical,
    log_kernel_z0,
    log_vertical_kernel,
    matrix_V,
    matrix_W,
    product_kernel,
    vertical_kernel,
)

ISO = canonicalize(1.0, 1.0)
HALF = canonicalize(1.0, 0.5)
PRODUCT = canonicalize(1.0, 0.0)


def _ratio_sinh_arr(tau):
    out = np.ones_like(tau)
    nz = tau > 1e-12
    out[nz] = tau[nz] / np.sinh(tau[nz])
    return out


def _ratio_tanh_arr(tau):
    out = np.ones_like(tau)
    nz = tau > 1e-12
    out[nz] = tau[nz] / np.tanh(tau[nz])
    return out


def skew(a1, a2):
    A = np.zeros((4, 4))
    A[0, 1], A[1, 0] = a1, -a1
    A[2, 3], A[3, 2] = a2, -a2
    return A


class TestMatrixFunctions:
    def test_V_iso(self):
        # both blocks at frequency 1: V = (1/sinh 1)^2
        assert math.isclose(matrix_V(skew(1, 1)), (1 / math.sinh(1)) ** 2, rel_tol=1e-14)

    def test_V_at_zero(self):
        assert math.isclose(matrix_V(np.zeros((4, 4))), 1.0)

    def test_W_identity_at_zero(self):
        assert np.allclose(matrix_W(np.zeros((4, 4))), np.eye(4))

    def test_W_block_values(self):
        W = matrix_W(skew(1.0, 0.5))
        assert np.allclose(W, np.diag([1 / math.tanh(1)] * 2 + [0.5 / math.tanh(0.5)] * 2))

    def test_W_even(self):
        A = skew(1.3, 0.4)
        assert np.allclose(matrix_W(A), matrix_W(-A), atol=1e-14)

    def test_non_skew_rejected(self):
        with pytest.raises(InvalidArgumentError):
            matrix_V(np.eye(4))

    def test_block_spectrum(self):
        assert BlockSpectrum.from_params(HALF).frequencies == (1.0, 0.5)
        assert BlockSpectrum.from_params(PRODUCT).frequencies == (1.0,)
        with pytest.raises(InvalidArgumentError):
            BlockSpectrum((0.5, 1.0))
        with pytest.raises(InvalidArgumentError):
            BlockSpectrum((1.0, -0.5))


class TestWeightedIntegralIdentities:
    def test_sinh_squared_moment(self):
        # int_0^inf tau^2 / sinh^2 tau dtau = pi^2 / 6 (half of pi^2/3 over R)
        val, _ = scipy.integrate.quad(
            lambda u: u * u / math.sinh(u) ** 2 if u > 1e-8 else 1.0, 0, 40
        )
        assert abs(val - math.pi**2 / 6) < 1e-10

    def test_heisenberg_vertical_from_integral(self):
        # 2/(4 pi t)^2 int_R (lam/sinh lam) cos(z lam / t) dlam
        # = 1 / (16 t^2 cosh^2(pi z / 2t))
        z, t = 0.7, 0.9
        val, _ = scipy.integrate.quad(
            lambda u: (u / math.sinh(u) if u > 1e-8 else 1.0) * math.cos(z * u / t),
            0,
            60,
            limit=200,
        )
        lhs = 2.0 / (4 * math.pi * t) ** 2 * 2 * val
        assert abs(math.log(lhs) - log_heisenberg_vertical(z, t, 1.0)) < 1e-10


class TestClosedForms:
    def test_origin_value(self):
        for t in (0.3, 1.0, 2.0):
            assert math.isclose(closed_form_iso(0.0, t), 1.0 / (96 * math.pi * t**3),
                                rel_tol=1e-12)

    def test_quadrature_matches_iso(self):
        for t in (0.2, 0.5, 1.0, 2.0):
            for z in (0.1, 1.0, 3.0):
                q = kernel(KernelQuery(Point5(0, 0, 0, 0, z), t, ISO))
                assert abs(q / closed_form_iso(z, t) - 1.0) < 1e-8

    def test_quadrature_matches_half(self):
        for t in (0.2, 0.5, 1.0, 2.0):
            for z in (0.1, 1.0, 3.0):
                q = kernel(KernelQuery(Point5(0, 0, 0, 0, z), t, HALF))
                assert abs(q / closed_form_half(z, t) - 1.0) < 1e-8

    def test_log_form_matches_naive_iso(self):
        # direct formula, valid where nothing under/overflows
        for X_ratio in np.linspace(1.0, 25.0, 9):
            t = 0.4
            z = X_ratio * t / math.pi
            X = math.pi * z / t
            naive = (
                (math.pi * z / math.tanh(X / 2) - 2 * t)
                * math.exp(-X)
                / (16 * math.pi * t**4 * (1 - math.exp(-X)) ** 2)
            )
            assert abs(log_closed_form_iso(z, t) - math.log(naive)) < 1e-12

    def test_log_form_matches_naive_half(self):
        for X_ratio in np.linspace(1.0, 25.0, 9):
            t = 0.4
            z = X_ratio * t / math.pi
            X = math.pi * z / t
            E = math.exp(-X)
            naive = (
                E
                * (
                    0.5 * math.pi * t * (1 + E**4)
                    - 4 * math.pi * z * E * (1 - E * E)
                    + 4 * t * E * (1 + E * E)
                    - 3 * math.pi * t * E * E
                )
                / (16 * math.pi * t**4 * (1 + E * E) ** 3)
            )
            assert abs(log_closed_form_half(z, t) - math.log(naive)) < 1e-12

    def test_log_forms_stable_deep(self):
        # far beyond double-precision underflow of e^{-pi z / t}
        lp = log_closed_form_iso(1.0, 1e-4)
        assert math.isfinite(lp) and lp < -1e4
        lp2 = log_closed_form_half(1.0, 1e-4)
        assert math.isfinite(lp2) and lp2 < -1e4

    def test_vertical_dispatch_rescaling(self):
        # p^{(c alpha)}_t(z) = p^{(alpha)}_t(z / c) / c
        c = 2.0
        params = canonicalize(2.0, 1.0)
        for z, t in ((0.5, 0.7), (2.0, 0.3)):
            assert math.isclose(
                vertical_kernel(z, t, params),
                closed_form_half(z / c, t) / c,
                rel_tol=1e-12,
            )

    def test_vertical_dispatch_other_ratio(self):
        # no closed form at ratio 0.7: falls back to quadrature, must agree
        # with the general kernel
        params = canonicalize(1.0, 0.7)
        q = kernel(KernelQuery(Point5(0, 0, 0, 0, 0.8), 0.6, params))
        assert abs(vertical_kernel(0.8, 0.6, params) / q - 1.0) < 1e-8


class TestKernelInvariances:
    def test_even_in_z(self):
        for params in (ISO, HALF):
            a = kernel(KernelQuery(Point5(0.3, 0.1, 0.2, -0.4, 0.9), 0.7, params))
            b = kernel(KernelQuery(Point5(0.3, 0.1, 0.2, -0.4, -0.9), 0.7, params))
            assert math.isclose(a, b, rel_tol=1e-14)

    def test_rotation_invariance(self):
        a = kernel(KernelQuery(Point5(0.5, 0.0, 0.3, 0.0, 0.6), 0.8, HALF))
        b = kernel(KernelQuery(Point5(0.0, 0.5, 0.0, -0.3, 0.6), 0.8, HALF))
        assert math.isclose(a, b, rel_tol=1e-14)

    def test_positive(self):
        rng = np.random.default_rng(1)
        for _ in range(10):
            q = Point5(*rng.uniform(-1.5, 1.5, 5))
            t = rng.uniform(0.2, 2.0)
            assert kernel(KernelQuery(q, t, HALF)) > 0.0

    def test_parabolic_homogeneity(self):
        # p_{s^2 t}(dilate(q, s)) = s^{-6} p_t(q): homogeneous dimension 6
        q = Point5(0.4, -0.2, 0.3, 0.5, 0.7)
        t, s = 0.6, 1.7
        a = kernel(KernelQuery(dilate(q, s), s * s * t, HALF))
        b = kernel(KernelQuery(q, t, HALF)) / s**6
        assert abs(a / b - 1.0) < 1e-10

    def test_z0_log_path_matches(self):
        q = Point5(0.4, -0.2, 0.3, 0.5, 0.0)
        a = math.exp(log_kernel_z0(q, 0.9, HALF))
        b = kernel(KernelQuery(q, 0.9, HALF))
        assert abs(a / b - 1.0) < 1e-12


class TestValidationAndErrors:
    def test_query_validation(self):
        with pytest.raises(InvalidArgumentError):
            KernelQuery(Point5(0, 0, 0, 0, 0), -1.0, ISO)
        with pytest.raises(InvalidArgumentError):
            KernelQuery(Point5(0, 0, 0, 0, 0), 1.0, ISO, precision=1.0)

    def test_product_routing(self):
        with pytest.raises(WrongCaseError):
            kernel(KernelQuery(Point5(0, 0, 0, 0, 1), 1.0, PRODUCT))
        with pytest.raises(WrongCaseError):
            product_kernel(Point5(0, 0, 0, 0, 1), 1.0, ISO)

    def test_small_t_off_axis_raises(self):
        with pytest.raises(AccuracyError):
            kernel(KernelQuery(Point5(0.3, 0, 0, 0, 1.0), 0.001, ISO))


class TestProductCase:
    def test_vertical_value(self):
        # Heisenberg vertical times flat factor at the plane origin
        z, t = 0.8, 0.6
        expected = math.exp(log_heisenberg_vertical(z, t, 1.0)) / (4 * math.pi * t)
        assert math.isclose(
            product_kernel(Point5(0, 0, 0, 0, z), t, PRODUCT), expected, rel_tol=1e-12
        )

    def test_flat_factor_splits(self):
        # moving in the flat block only multiplies by a Gaussian
        t = 0.5
        base = product_kernel(Point5(0.2, 0.1, 0, 0, 0.4), t, PRODUCT)
        moved = product_kernel(Point5(0.2, 0.1, 0.6, -0.3, 0.4), t, PRODUCT)
        rho2sq = 0.6**2 + 0.3**2
        assert math.isclose(moved, base * math.exp(-rho2sq / (4 * t)), rel_tol=1e-10)

    @pytest.mark.slow
    def test_total_mass(self):
        # int p_t = 1, via the reduced measure (2 pi rho1) drho1 dz on the
        # Heisenberg factor (the flat factor integrates to 1 exactly).  The
        # kernel grid comes from trapezoid quadrature of the integral
        # representation (spectrally accurate for this analytic integrand).
        t = 0.25
        rho = np.linspace(0.0, 6.0, 241)
        zs = np.linspace(-6.0, 6.0, 481)
        tau = np.linspace(0.0, 45.0, 3001)
        h = tau[1] - tau[0]
        v = _ratio_sinh_arr(tau)
        w = _ratio_tanh_arr(tau)
        G = v[None, :] * np.exp(-np.outer(rho**2, w) / (4 * t))  # (rho, tau)
        C = np.cos(np.outer(tau, zs / t))  # (tau, z)
        pref = 2.0 / (4 * math.pi * t) ** 2
        vals = pref * 2 * h * (G @ C - 0.5 * np.outer(G[:, 0], C[0]))
        # spot check against the production evaluator
        spot = product_kernel(Point5(rho[40], 0, 0, 0, zs[300]), t, PRODUCT)
        assert abs(vals[40, 300] / (spot * 4 * math.pi * t) - 1.0) < 1e-8
        mass = np.trapezoid(np.trapezoid(vals * 2 * math.pi * rho[:, None], zs, axis=1), rho)
        assert abs(mass - 1.0) < 1e-3


@pytest.mark.slow
class TestSemigroup:
    def test_convolution_square_at_origin(self):
        # int p_t(q)^2 dq = p_{2t}(0) by the semigroup law and symmetry;
        # reduced to 3-D with measure (2 pi rho1)(2 pi rho2) drho1 drho2 dz.
        # The value grid again comes from trapezoid quadrature of the
        # integral representation, spot-checked against kernel().
        t = 0.5
        rho = np.linspace(0.0, 5.0, 151)
        zs = np.linspace(-5.0, 5.0, 301)
        tau = np.linspace(0.0, 25.0, 2501)
        h = tau[1] - tau[0]
        v = _ratio_sinh_arr(tau) ** 2  # isotropic: both blocks at frequency 1
        w = _ratio_tanh_arr(tau)
        r2sum = (rho[:, None] ** 2 + rho[None, :] ** 2).ravel()  # (nr*nr,)
        G = v[None, :] * np.exp(-np.outer(r2sum, w) / (4 * t))
        C = np.cos(np.outer(tau, zs / t))
        pref = 2.0 / (4 * math.pi * t) ** 3
        vals = pref * 2 * h * (G @ C - 0.5 * np.outer(G[:, 0], C[0]))
        vals = vals.reshape(rho.size, rho.size, zs.size)
        spot = kernel(KernelQuery(Point5(rho[16], 0, rho[24], 0, zs[100]), t, ISO))
        assert abs(vals[16, 24, 100] / spot - 1.0) < 1e-8
        wgt = (2 * math.pi) ** 2 * rho[:, None, None] * rho[None, :, None]
        inner = np.trapezoid(vals**2 * wgt, zs, axis=2)
        total = np.trapezoid(np.trapezoid(inner, rho, axis=1), rho)
        expected = 1.0 / (96 * math.pi * (2 * t) ** 3)
        assert abs(total / expected - 1.0) < 1e-3
