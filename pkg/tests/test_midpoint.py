import math

import numpy as np
import pytest

from biheis import Point5, canonicalize
from biheis.distance import distance
from biheis.errors import (
    DegeneracyError,
    DiagonalPointError,
    InvalidArgumentError,
    UnsupportedCaseError,
    WrongStratumError,
)
from biheis.midpoint import (
    MorseBottDatum,
    case2_tube_datum,
    complementary_hessian,
    full_hessian_kernel_dimension,
    hinged_energy,
    laplace_expand,
    midpoint_set,
    nu_density,
    synthetic_quadratic_datum,
)

ISO = canonicalize(1.0, 1.0)
HALF = canonicalize(1.0, 0.5)
PRODUCT = canonicalize(1.0, 0.0)

ORIGIN = Point5(0, 0, 0, 0, 0)
Y_AXIS = Point5(0, 0, 0, 0, 1.0)


class TestHingedEnergy:
    def test_minimum_value_on_midpoints(self):
        # h equals d^2/4 at any midpoint of a minimizing geodesic
        ms = midpoint_set(ORIGIN, Y_AXIS, HALF)
        d2 = ms.distance**2
        for m in ms.points:
            h = hinged_energy(ORIGIN, Y_AXIS, m, HALF)
            assert abs(h - d2 / 4.0) < 1e-8 * d2

    def test_strictly_above_off_gamma(self):
        ms = midpoint_set(ORIGIN, Y_AXIS, HALF)
        d2 = ms.distance**2
        m = ms.points[0]
        # push the midpoint off the circle in a few normal directions
        for delta in (
            Point5(0.05 * m.x1, 0.05 * m.y1, 0, 0, 0),
            Point5(0, 0, 0, 0, 0.05),
            Point5(0, 0, 0.05, 0, 0),
        ):
            z = Point5(
                m.x1 + delta.x1,
                m.y1 + delta.y1,
                m.x2 + delta.x2,
                m.y2 + delta.y2,
                m.z + delta.z,
            )
            assert hinged_energy(ORIGIN, Y_AXIS, z, HALF) > d2 / 4.0 + 1e-8


class TestMidpointSet:
    def test_diagonal_rejected(self):
        with pytest.raises(DiagonalPointError):
            midpoint_set(ORIGIN, ORIGIN, HALF)

    def test_cut_pair_dimensions(self):
        assert midpoint_set(ORIGIN, Y_AXIS, ISO).dimension == 3
        assert midpoint_set(ORIGIN, Y_AXIS, HALF).dimension == 1
        assert midpoint_set(ORIGIN, Y_AXIS, PRODUCT).dimension == 1

    def test_non_cut_pair_single_midpoint(self):
        y = Point5(0.8, 0.2, 0.4, -0.1, 0.1)
        ms = midpoint_set(ORIGIN, y, HALF)
        assert ms.dimension == 0
        assert len(ms.points) == 1
        m = ms.points[0]
        a = distance(m, HALF).distance
        assert abs(a - ms.distance / 2.0) < 1e-7

    def test_case2_circle_geometry(self):
        # for y = (0,0,0,0,1) the midpoint circle sits at z = 1/2 with
        # radius 2/sqrt(pi) in the first block
        ms = midpoint_set(ORIGIN, Y_AXIS, HALF)
        R = 2.0 / math.sqrt(math.pi)
        for m in ms.points:
            assert abs(m.block_norm(1) - R) < 1e-10
            assert m.block_norm(2) < 1e-12
            assert abs(m.z - 0.5) < 1e-10

    def test_product_abnormal_pair_unsupported(self):
        with pytest.raises(UnsupportedCaseError):
            midpoint_set(ORIGIN, Point5(0, 0, 1.0, 0, 0), PRODUCT)


class TestSyntheticDatum:
    def test_hessian_recovered(self):
        datum = synthetic_quadratic_datum(hessian_diag=(2.0, 2.0))
        H = complementary_hessian(datum, 0.3)
        assert np.allclose(H, 2.0 * np.eye(2), atol=1e-6)

    def test_degenerate_rejected(self):
        bad = MorseBottDatum(
            n=3,
            r=1,
            h=lambda u: 0.5 * u[:, 1] ** 2 + 0.0 * u[:, 2],
            F=lambda u: np.ones(u.shape[0]),
            gamma_bounds=((0.0, 1.0),),
            normal_halfwidth=(1.0, 1.0),
        )
        with pytest.raises(DegeneracyError):
            complementary_hessian(bad, 0.0)

    def test_datum_validation(self):
        with pytest.raises(InvalidArgumentError):
            MorseBottDatum(
                n=2, r=2, h=lambda u: u[:, 0], F=lambda u: u[:, 0],
                gamma_bounds=((0, 1), (0, 1)), normal_halfwidth=(),
            )

    def test_nu_density_value(self):
        # F = 1, H^c = diag(2, 2): nu = 1/2
        datum = synthetic_quadratic_datum(hessian_diag=(2.0, 2.0))
        assert abs(nu_density(datum, 0.0) - 0.5) < 1e-6

    def test_laplace_constant_gaussian(self):
        # int e^{-h/t} du = L * (2 pi t)^{m/2} / sqrt(det H): power 1,
        # constant 2 pi * pi = 2 pi^2 for L = 2 pi, H = diag(2, 2)
        datum = synthetic_quadratic_datum()
        power, const = laplace_expand(
            datum, lambda u: np.ones(u.shape[0]), [2.0**-k for k in range(4, 11)]
        )
        expected = 2.0 * math.pi * (2.0 * math.pi) / math.sqrt(4.0)
        assert abs(power - 1.0) < 1e-3
        assert abs(const / expected - 1.0) < 1e-4


class TestCase2Tube:
    def test_stratum_checks(self):
        with pytest.raises(UnsupportedCaseError):
            case2_tube_datum(ISO, Y_AXIS)
        with pytest.raises(WrongStratumError):
            case2_tube_datum(HALF, Point5(0.1, 0, 0, 0, 1.0))

    def test_transverse_hessian_positive(self):
        full, _ = case2_tube_datum(HALF, Y_AXIS)
        H = complementary_hessian(full, 0.0)
        eig = np.linalg.eigvalsh(H)
        assert eig[0] > 1.0  # strictly Morse-Bott in the normal directions
        assert H.shape == (4, 4)

    def test_full_hessian_kernel_is_fiber_dimension(self):
        full, _ = case2_tube_datum(HALF, Y_AXIS)
        assert full_hessian_kernel_dimension(full, 0.0) == 1

    def test_nu_constant_along_fiber(self):
        full, _ = case2_tube_datum(HALF, Y_AXIS)
        vals = [nu_density(full, th) for th in np.linspace(0, 2 * math.pi, 5)]
        assert max(vals) - min(vals) < 1e-6 * max(vals)

    def test_tube_power_matches_normal_count(self):
        # 4 normal directions around a 1-D fiber: the tube integral scales
        # as t^2 for small t
        _, tube = case2_tube_datum(HALF, Y_AXIS)
        power, const = laplace_expand(
            tube,
            lambda u: np.ones(u.shape[0]),
            [2.0**-k for k in range(9, 13)],
            gamma_points=8,
        )
        assert abs(power - 2.0) < 0.05
        assert const > 0.0
