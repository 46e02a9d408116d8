"""Core types and group operations for the bi-Heisenberg group.

The group lives on R^5 with coordinates (x1, y1, x2, y2, z).  The horizontal
frame is

    X_i = d/dx_i - (alpha_i/2) y_i d/dz,   Y_i = d/dy_i + (alpha_i/2) x_i d/dz

for i = 1, 2, with frequencies alpha_1 >= alpha_2 >= 0 after canonicalization.
Everything here is an immutable value; all operations are pure functions.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError, InvalidParametersError

TWO_PI = 2.0 * math.pi


class Case(enum.Enum):
    ISOTROPIC = "Isotropic"
    NON_ISOTROPIC_CONTACT = "NonIsotropicContact"
    PRODUCT = "Product"


@dataclass(frozen=True)
class StructureParams:
    """Frequency pair (alpha1, alpha2) with alpha1 >= alpha2 >= 0.

    ``swapped`` records whether :func:`canonicalize` exchanged the input
    order, so callers can permute the two horizontal blocks consistently.
    """

    alpha1: float
    alpha2: float
    case: Case
    swapped: bool = False

    @property
    def is_contact(self) -> bool:
        return self.alpha2 > 0.0

    @property
    def alphas(self) -> tuple[float, float]:
        return (self.alpha1, self.alpha2)


def canonicalize(alpha_a: float, alpha_b: float) -> StructureParams:
    """Order the frequencies as alpha1 >= alpha2 and tag the case."""
    if alpha_a < 0.0 or alpha_b < 0.0:
        raise InvalidParametersError("frequencies must be nonnegative")
    if alpha_a == 0.0 and alpha_b == 0.0:
        raise InvalidParametersError("at least one frequency must be positive")
    swapped = alpha_b > alpha_a
    a1, a2 = (alpha_b, alpha_a) if swapped else (alpha_a, alpha_b)
    if a2 == 0.0:
        case = Case.PRODUCT
    elif a1 == a2:
        case = Case.ISOTROPIC
    else:
        case = Case.NON_ISOTROPIC_CONTACT
    return StructureParams(a1, a2, case, swapped)


@dataclass(frozen=True)
class Point5:
    """Group element (x1, y1, x2, y2, z)."""

    x1: float
    y1: float
    x2: float
    y2: float
    z: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x1, self.y1, self.x2, self.y2, self.z])

    @staticmethod
    def from_array(a) -> "Point5":
        return Point5(float(a[0]), float(a[1]), float(a[2]), float(a[3]), float(a[4]))

    def inverse(self) -> "Point5":
        return Point5(-self.x1, -self.y1, -self.x2, -self.y2, -self.z)

    def block(self, i: int) -> tuple[float, float]:
        return (self.x1, self.y1) if i == 1 else (self.x2, self.y2)

    def block_norm(self, i: int) -> float:
        x, y = self.block(i)
        return math.hypot(x, y)

    @property
    def horizontal_norm(self) -> float:
        return math.sqrt(self.x1**2 + self.y1**2 + self.x2**2 + self.y2**2)


ORIGIN = Point5(0.0, 0.0, 0.0, 0.0, 0.0)


def _wrap_angle(theta: float) -> float:
    theta = math.fmod(theta, TWO_PI)
    return theta + TWO_PI if theta < 0.0 else theta


@dataclass(frozen=True)
class Covector:
    """Initial covector (r1, r2, theta1, theta2, w) on the unit level set.

    Angles are normalized to [0, 2*pi) on construction; r1^2 + r2^2 = 1 is
    enforced to 1e-12.
    """

    r1: float
    r2: float
    theta1: float
    theta2: float
    w: float

    def __post_init__(self):
        if self.r1 < 0.0 or self.r2 < 0.0:
            raise InvalidArgumentError("r1, r2 must be nonnegative")
        if abs(self.r1**2 + self.r2**2 - 1.0) > 1e-12:
            raise InvalidArgumentError(
                f"covector off the unit level set: r1^2+r2^2 = {self.r1**2 + self.r2**2!r}"
            )
        object.__setattr__(self, "theta1", _wrap_angle(self.theta1))
        object.__setattr__(self, "theta2", _wrap_angle(self.theta2))

    def momentum4(self) -> np.ndarray:
        """Dual horizontal momenta (p_x1, p_y1, p_x2, p_y2)."""
        return np.array(
            [
                -self.r1 * math.sin(self.theta1),
                self.r1 * math.cos(self.theta1),
                -self.r2 * math.sin(self.theta2),
                self.r2 * math.cos(self.theta2),
            ]
        )

    @staticmethod
    def from_momentum4(p: np.ndarray, w: float) -> "Covector":
        r1 = math.hypot(p[0], p[1])
        r2 = math.hypot(p[2], p[3])
        n = math.hypot(r1, r2)
        r1, r2 = r1 / n, r2 / n
        th1 = math.atan2(-p[0], p[1]) if r1 > 0 else 0.0
        th2 = math.atan2(-p[2], p[3]) if r2 > 0 else 0.0
        return Covector(r1, r2, th1, th2, w)


def group_multiply(q: Point5, qp: Point5, params: StructureParams) -> Point5:
    """Group product; the unique one making the frame left-invariant."""
    a1, a2 = params.alpha1, params.alpha2
    z = (
        q.z
        + qp.z
        + 0.5 * a1 * (q.x1 * qp.y1 - q.y1 * qp.x1)
        + 0.5 * a2 * (q.x2 * qp.y2 - q.y2 * qp.x2)
    )
    return Point5(q.x1 + qp.x1, q.y1 + qp.y1, q.x2 + qp.x2, q.y2 + qp.y2, z)


def dilate(q: Point5, s: float) -> Point5:
    """Carnot dilation: weight 1 on the horizontal block, weight 2 on z."""
    if s <= 0.0:
        raise InvalidArgumentError("dilation factor must be positive")
    return Point5(s * q.x1, s * q.y1, s * q.x2, s * q.y2, s * s * q.z)


def frame_at(q: Point5, params: StructureParams) -> np.ndarray:
    """The four frame vectors X1, Y1, X2, Y2 at q, as rows of a 4x5 array."""
    a1, a2 = params.alpha1, params.alpha2
    return np.array(
        [
            [1.0, 0.0, 0.0, 0.0, -0.5 * a1 * q.y1],
            [0.0, 1.0, 0.0, 0.0, 0.5 * a1 * q.x1],
            [0.0, 0.0, 1.0, 0.0, -0.5 * a2 * q.y2],
            [0.0, 0.0, 0.0, 1.0, 0.5 * a2 * q.x2],
        ]
    )


def rotate_blocks(q: Point5, phi1: float, phi2: float) -> Point5:
    """Rotate each horizontal block independently about the z-axis (an isometry)."""
    c1, s1 = math.cos(phi1), math.sin(phi1)
    c2, s2 = math.cos(phi2), math.sin(phi2)
    return Point5(
        c1 * q.x1 - s1 * q.y1,
        s1 * q.x1 + c1 * q.y1,
        c2 * q.x2 - s2 * q.y2,
        s2 * q.x2 + c2 * q.y2,
        q.z,
    )
