import math

import numpy as np
import pytest

from biheis import Covector, Point5, canonicalize, dilate, group_multiply
from biheis.cut import cut_time
from biheis.distance import (
    Method,
    brute_force_oracle,
    distance,
    distance_horizontal,
    distance_vertical,
    solve_radial,
    solve_radial_batch,
)
from biheis.errors import WrongStratumError
from biheis.expmap import exp0

ISO = canonicalize(1.0, 1.0)
HALF = canonicalize(1.0, 0.5)
PRODUCT = canonicalize(1.0, 0.0)

SQ2 = math.sqrt(0.5)


class TestClosedForms:
    def test_vertical(self):
        assert math.isclose(distance_vertical(math.pi, ISO), 2 * math.pi)
        assert math.isclose(distance_vertical(1.0, HALF), math.sqrt(4 * math.pi))
        d = distance(Point5(0, 0, 0, 0, math.pi), ISO)
        assert math.isclose(d.distance, 2 * math.pi, rel_tol=1e-12)
        assert d.method is Method.CLOSED_FORM_VERTICAL

    def test_horizontal(self):
        q = Point5(0.3, -0.4, 1.2, 0.0, 0.0)
        assert math.isclose(distance_horizontal(q), q.horizontal_norm)
        with pytest.raises(WrongStratumError):
            distance_horizontal(Point5(1, 0, 0, 0, 0.1))
        res = distance(q, HALF)
        assert math.isclose(res.distance, q.horizontal_norm, rel_tol=1e-12)
        assert res.method is Method.CLOSED_FORM_HORIZONTAL


class TestRoundtrip:
    @pytest.mark.parametrize("params", [ISO, HALF, PRODUCT])
    def test_exp_then_distance(self, params):
        rng = np.random.default_rng(17)
        for _ in range(8):
            r1 = rng.uniform(0.1, 0.9)
            p0 = Covector(
                r1,
                math.sqrt(1 - r1 * r1),
                rng.uniform(0, 2 * math.pi),
                rng.uniform(0, 2 * math.pi),
                rng.uniform(-1.5, 1.5),
            )
            # stay strictly inside the cut time so t is the distance
            t = 0.8 * min(cut_time(p0, params), 3.0)
            q = exp0(p0, t, params)
            res = distance(q, params)
            assert abs(res.distance - t) < 1e-8 * (1 + t)
            # returned minimizers actually reach q
            for p, tt in res.minimizers:
                qq = exp0(p, tt, params)
                assert np.abs(qq.as_array() - q.as_array()).max() < 1e-7

    def test_minimizer_time_within_cut_time(self):
        rng = np.random.default_rng(4)
        for _ in range(10):
            q = Point5(*rng.uniform(-1.5, 1.5, 5))
            res = distance(q, HALF)
            for p, t in res.minimizers:
                assert t <= cut_time(p, HALF) * (1 + 1e-9)


class TestMetricProperties:
    def test_symmetry_under_inverse(self):
        rng = np.random.default_rng(8)
        for _ in range(6):
            q = Point5(*rng.uniform(-1, 1, 5))
            a = distance(q, HALF).distance
            b = distance(q.inverse(), HALF).distance
            assert abs(a - b) < 1e-9 * (1 + a)

    def test_dilation_homogeneity(self):
        rng = np.random.default_rng(12)
        for _ in range(6):
            q = Point5(*rng.uniform(-1, 1, 5))
            s = rng.uniform(0.4, 2.2)
            a = distance(dilate(q, s), HALF).distance
            b = s * distance(q, HALF).distance
            assert abs(a - b) < 1e-8 * (1 + b)

    def test_triangle_inequality(self):
        rng = np.random.default_rng(31)
        for _ in range(6):
            a = Point5(*rng.uniform(-0.8, 0.8, 5))
            b = Point5(*rng.uniform(-0.8, 0.8, 5))
            dab = distance(group_multiply(a.inverse(), b, HALF), HALF).distance
            da = distance(a, HALF).distance
            db = distance(b, HALF).distance
            assert dab <= da + db + 1e-9


class TestSolver:
    def test_solve_radial_roundtrip(self):
        # generate a point strictly inside the cut time from known data and
        # check the minimal root recovers the geodesic time
        p0 = Covector(0.6, 0.8, 0.0, 0.0, 1.1)
        t = 0.85 * cut_time(p0, HALF)
        q = exp0(p0, t, HALF)
        sols = solve_radial(q.block_norm(1), q.block_norm(2), abs(q.z), HALF)
        assert math.isclose(sols[0][2], t, rel_tol=1e-9)

    def test_oracle_agreement(self):
        rng = np.random.default_rng(2)
        for params in (ISO, HALF, PRODUCT):
            q = Point5(*rng.uniform(-1.0, 1.0, 5))
            d = distance(q, params).distance
            o = brute_force_oracle(q, params)
            assert abs(d - o) < 1e-3 * (1 + d)

    def test_batch_warm_start(self):
        # warm-started vectorized Newton agrees with the scalar solver
        rng = np.random.default_rng(6)
        rho1 = rng.uniform(0.2, 0.8, 12)
        rho2 = rng.uniform(0.2, 0.8, 12)
        zabs = rng.uniform(0.3, 1.0, 12)
        singles = [
            solve_radial(a, b, c, HALF)[0] for a, b, c in zip(rho1, rho2, zabs)
        ]
        init = np.array(
            [
                [math.sqrt(max(1 - s[0] ** 2, 0.0)) for s in singles],
                [s[1] for s in singles],
                [s[2] for s in singles],
            ]
        )
        # perturb the warm start and let the batch solver re-converge
        r2, w, t, ok = solve_radial_batch(
            rho1, rho2, zabs, HALF, init * (1.0 + 1e-3)
        )
        assert ok.all()
        assert np.abs(t - [s[2] for s in singles]).max() < 1e-9
