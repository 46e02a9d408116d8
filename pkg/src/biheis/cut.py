"""Cut times, cut endpoints, the coefficients K and Psi, and the
classification of points of the cut locus together with their minimizing
covector fibers.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable

from .errors import (
    DiagonalPointError,
    InvalidArgumentError,
    NoCutPointError,
    UndefinedCoefficientError,
)
from .geometry import TWO_PI, Case, Covector, Point5, StructureParams
from .expmap import exp0

AXIS_TOL = 1e-10
K_REL_SLACK = 1e-12


def cut_time(p0: Covector, params: StructureParams) -> float:
    """2*pi / (|w| * max(alpha1, alpha2)); +inf for w = 0."""
    if p0.w == 0.0:
        return math.inf
    return TWO_PI / (abs(p0.w) * max(params.alpha1, params.alpha2))


def cut_endpoint(p0: Covector, params: StructureParams) -> Point5:
    """Endpoint at the cut time.  The first block vanishes identically there."""
    if p0.w == 0.0:
        raise NoCutPointError("w = 0 geodesics are optimal forever")
    tstar = cut_time(p0, params)
    q = exp0(p0, tstar, params)
    # s1 = alpha1 w t* = +-2*pi: kill the roundoff residue of the first block
    x2, y2 = q.x2, q.y2
    if params.case is Case.ISOTROPIC:
        x2 = y2 = 0.0
    return Point5(0.0, 0.0, x2, y2, q.z)


def K_coefficient(params: StructureParams) -> float:
    """Boundary coefficient of the non-isotropic cut locus: |z| >= K rho^2."""
    if params.case is not Case.NON_ISOTROPIC_CONTACT:
        raise UndefinedCoefficientError("K is defined only for 0 < alpha2 < alpha1")
    return psi_coefficient(params, 1.0)


def psi_coefficient(params: StructureParams, r: float) -> float:
    """Psi(alpha1, alpha2, r) with z = Psi * rho^2 on the cut parabolas.

    Strictly decreasing in r on (0, 1]; Psi(., ., 1) = K.
    """
    if params.case is not Case.NON_ISOTROPIC_CONTACT:
        raise UndefinedCoefficientError("Psi is defined only for 0 < alpha2 < alpha1")
    if not (0.0 < r <= 1.0):
        raise InvalidArgumentError("r must lie in (0, 1]")
    a1, a2 = params.alpha1, params.alpha2
    ratio = a2 / a1
    s = math.sin(math.pi * ratio)
    return (a2 * a2 / (8.0 * r * r * s * s)) * (
        TWO_PI / a1 - (r * r / a2) * math.sin(TWO_PI * ratio)
    )


class CutCase(enum.Enum):
    I = "I"
    II = "II"
    III = "III"


@dataclass(frozen=True)
class MinimizerFiber:
    """Parametrized family of minimizing covectors for a cut point.

    ``dimension`` is 1 (circle) or 3 (sphere).  ``at`` maps fiber parameters
    to a covector: for a circle the single parameter is theta1; for the
    sphere the parameters are (r1, theta1, theta2) with r2 = sqrt(1-r1^2).
    """

    dimension: int
    at: Callable[..., Covector]

    def samples(self, n: int = 8) -> list[Covector]:
        out = []
        if self.dimension == 1:
            for k in range(n):
                out.append(self.at(TWO_PI * k / n))
        else:
            for k in range(n):
                r1 = (k + 0.5) / n
                out.append(self.at(r1, TWO_PI * k / n, TWO_PI * ((3 * k) % n) / n))
        return out


@dataclass(frozen=True)
class CutClassification:
    is_cut: bool
    case: CutCase | None = None
    fiber_dimension: int = 0
    fiber: MinimizerFiber | None = None
    recovered_r2: float | None = None
    recovered_w: float | None = None
    distance: float | None = None


NOT_CUT = CutClassification(is_cut=False)


def _solve_psi(params: StructureParams, target: float, steps: int = 60) -> float:
    """Invert Psi(r) = target by bisection (Psi is strictly decreasing)."""
    lo, hi = 1e-14, 1.0
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        if psi_coefficient(params, mid) >= target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _block2_theta(x2: float, y2: float, s2: float) -> float:
    # endpoint block angle is theta2 + s2/2 + pi/2 (valid within the cut time)
    return math.atan2(y2, x2) - 0.5 * s2 - 0.5 * math.pi


def classify(q: Point5, params: StructureParams) -> CutClassification:
    """Theorem-level classification of q against the cut locus from the origin."""
    if q.horizontal_norm == 0.0 and q.z == 0.0:
        raise DiagonalPointError("classification undefined at the base point")

    rho1 = q.block_norm(1)
    rho2 = q.block_norm(2)
    z = q.z
    on_axis1 = rho1 < AXIS_TOL * (1.0 + abs(z))

    if params.case is Case.ISOTROPIC:
        on_axis = math.hypot(rho1, rho2) < AXIS_TOL * (1.0 + abs(z))
        if not (on_axis and z != 0.0):
            return NOT_CUT
        a = params.alpha1
        w = math.copysign(math.sqrt(math.pi / (a * abs(z))), z)
        d = TWO_PI / (a * abs(w))

        def at(r1: float, th1: float, th2: float) -> Covector:
            return Covector(r1, math.sqrt(max(1.0 - r1 * r1, 0.0)), th1, th2, w)

        return CutClassification(
            True, CutCase.I, 3, MinimizerFiber(3, at), None, w, d
        )

    if params.case is Case.NON_ISOTROPIC_CONTACT:
        if not on_axis1:
            return NOT_CUT
        a1, a2 = params.alpha1, params.alpha2
        if rho2 < AXIS_TOL * (1.0 + abs(z)):
            if z == 0.0:
                return NOT_CUT
            # z-axis inside case II: the r -> 0 degenerate limit
            w = math.copysign(math.sqrt(math.pi / (a1 * abs(z))), z)
            d = TWO_PI / (a1 * abs(w))

            def at_axis(th1: float) -> Covector:
                return Covector(1.0, 0.0, th1, 0.0, w)

            return CutClassification(
                True, CutCase.II, 1, MinimizerFiber(1, at_axis), 0.0, w, d
            )
        k = K_coefficient(params)
        target = abs(z) / (rho2 * rho2)
        if target < k * (1.0 - K_REL_SLACK):
            return NOT_CUT
        r2 = 1.0 if target <= k else _solve_psi(params, target)
        w = math.copysign(
            2.0 * r2 * math.sin(math.pi * a2 / a1) / (a2 * rho2), z
        )
        d = TWO_PI / (a1 * abs(w))
        s2 = a2 * w * d
        th2 = _block2_theta(q.x2, q.y2, s2)
        r1 = math.sqrt(max(1.0 - r2 * r2, 0.0))

        def at_circle(th1: float) -> Covector:
            return Covector(r1, r2, th1, th2, w)

        return CutClassification(
            True, CutCase.II, 1, MinimizerFiber(1, at_circle), r2, w, d
        )

    # product case (alpha2 = 0)
    if not on_axis1 or z == 0.0:
        return NOT_CUT
    a1 = params.alpha1
    if rho2 < AXIS_TOL * (1.0 + abs(z)):
        r2 = 0.0
        w = math.copysign(math.sqrt(math.pi / (a1 * abs(z))), z)
        th2 = 0.0
    else:
        ratio = 4.0 * math.pi * abs(z) / (a1 * rho2 * rho2)
        r2 = math.sqrt(1.0 / (1.0 + ratio))
        w = math.copysign(TWO_PI * r2 / (a1 * rho2), z)
        # the flat block travels along its momentum direction theta2 + pi/2
        th2 = math.atan2(q.y2, q.x2) - 0.5 * math.pi
    d = TWO_PI / (a1 * abs(w))
    r1 = math.sqrt(max(1.0 - r2 * r2, 0.0))

    def at_product(th1: float) -> Covector:
        return Covector(r1, r2, th1, th2, w)

    return CutClassification(
        True, CutCase.III, 1, MinimizerFiber(1, at_product), r2, w, d
    )
