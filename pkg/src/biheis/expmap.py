"""Closed-form exponential map from the origin and its derived quantities.

For an initial covector (r1, r2, theta1, theta2, w) the horizontal blocks are

    x_i + i y_i = r_i t e^{i theta_i} (e^{i s_i} - 1) / s_i,   s_i = alpha_i w t,

and the vertical coordinate is

    z = sum_i (r_i^2 alpha_i t^2 / 2) (s_i - sin s_i) / s_i^2.

Written this way the formulas are smooth across w -> 0 and alpha_i -> 0, so a
single evaluation path covers the contact case, the product case and the
straight lines; the removable singularities are handled by series branches.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DegenerateProjectionError, UnsupportedCaseError
from .geometry import Case, Covector, Point5, StructureParams, frame_at

_SERIES_CUTOFF = 1e-4


def _cis_ratio(s):
    """(e^{is} - 1) / s as (real, imag), elementwise, stable near s = 0."""
    s = np.asarray(s, dtype=float)
    small = np.abs(s) < _SERIES_CUTOFF
    sb = np.where(small, 1.0, s)  # avoid 0/0 in the generic branch
    re = (np.cos(sb) - 1.0) / sb
    im = np.sin(sb) / sb
    s2 = s * s
    re_series = s * (-0.5 + s2 * (1.0 / 24.0 - s2 / 720.0))
    im_series = 1.0 + s2 * (-1.0 / 6.0 + s2 / 120.0)
    return np.where(small, re_series, re), np.where(small, im_series, im)


def _sinc(x):
    """sin(x)/x with series branch near 0."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < _SERIES_CUTOFF
    xb = np.where(small, 1.0, x)
    x2 = x * x
    return np.where(small, 1.0 + x2 * (-1.0 / 6.0 + x2 / 120.0), np.sin(xb) / xb)


def _area_ratio(s):
    """(s - sin s) / s^2 with series branch near 0."""
    s = np.asarray(s, dtype=float)
    small = np.abs(s) < _SERIES_CUTOFF
    sb = np.where(small, 1.0, s)
    s2 = s * s
    series = s * (1.0 / 6.0 - s2 / 120.0 + s2 * s2 / 5040.0)
    return np.where(small, series, (s - np.sin(s)) / (sb * sb))


def exp0_arrays(r1, r2, theta1, theta2, w, t, alpha1: float, alpha2: float):
    """Vectorized exponential map; returns the 5 coordinate arrays."""
    r1, r2, theta1, theta2, w, t = np.broadcast_arrays(
        *(np.asarray(a, dtype=float) for a in (r1, r2, theta1, theta2, w, t))
    )
    coords = []
    for r, th, a in ((r1, theta1, alpha1), (r2, theta2, alpha2)):
        s = a * w * t
        cre, cim = _cis_ratio(s)
        c, sn = np.cos(th), np.sin(th)
        coords.append(r * t * (c * cre - sn * cim))
        coords.append(r * t * (sn * cre + c * cim))
    z = 0.5 * t * t * (
        r1 * r1 * alpha1 * _area_ratio(alpha1 * w * t)
        + r2 * r2 * alpha2 * _area_ratio(alpha2 * w * t)
    )
    coords.append(z)
    return coords


def exp0(p0: Covector, t: float, params: StructureParams) -> Point5:
    """Endpoint of the arclength geodesic with initial covector p0 at time t."""
    c = exp0_arrays(
        p0.r1, p0.r2, p0.theta1, p0.theta2, p0.w, t, params.alpha1, params.alpha2
    )
    return Point5(*(float(v) for v in c))


@dataclass(frozen=True)
class GeodesicSample:
    point: Point5
    time: float
    covector: Covector


def rho(p0: Covector, t: float, block: int, params: StructureParams) -> float:
    """Distance of the block-i projection from the plane origin at time t."""
    r = p0.r1 if block == 1 else p0.r2
    a = params.alpha1 if block == 1 else params.alpha2
    return float(abs(r * t * _sinc(0.5 * a * p0.w * t)))


def circle_data(p0: Covector, block: int, params: StructureParams):
    """Period, radius and center of the block-i projected circle."""
    r = p0.r1 if block == 1 else p0.r2
    a = params.alpha1 if block == 1 else params.alpha2
    th = p0.theta1 if block == 1 else p0.theta2
    if p0.w == 0.0 or a == 0.0 or r == 0.0:
        raise DegenerateProjectionError(
            "projection is a line or a point; no circle (need w, alpha_i, r_i != 0)"
        )
    period = 2.0 * math.pi / (a * abs(p0.w))
    radius = r / (a * abs(p0.w))
    scale = -r / (a * p0.w)
    center = (scale * math.cos(th), scale * math.sin(th))
    return period, radius, center


def vertical_area_check(
    p0: Covector, t: float, params: StructureParams, n: int = 4096
) -> float:
    """|z(t) - sum_i alpha_i Area(A_i(t))| with the areas from shoelace sums.

    Polygonal (shoelace) areas over n and n/2 samples are Richardson-combined
    to kill the O(h^2) chord error.
    """

    def shoelace(n_samples: int):
        ts = np.linspace(0.0, t, n_samples + 1)
        x1, y1, x2, y2, _ = exp0_arrays(
            p0.r1, p0.r2, p0.theta1, p0.theta2, p0.w, ts, params.alpha1, params.alpha2
        )
        areas = []
        for x, y in ((x1, y1), (x2, y2)):
            # polygon (0, gamma(t_0), ..., gamma(t_n)); edges through the
            # origin contribute nothing to the signed area
            areas.append(0.5 * float(np.sum(x[:-1] * y[1:] - y[:-1] * x[1:])))
        return areas

    coarse = shoelace(n // 2)
    fine = shoelace(n)
    a1 = (4.0 * fine[0] - coarse[0]) / 3.0
    a2 = (4.0 * fine[1] - coarse[1]) / 3.0
    z = exp0(p0, t, params).z
    return abs(z - (params.alpha1 * a1 + params.alpha2 * a2))


def _sphere_chart(p0: Covector):
    """Orthonormal tangent basis of S^3 at the momentum 4-vector of p0."""
    base = p0.momentum4()
    basis = scipy.linalg.null_space(base.reshape(1, 4))  # 4 x 3, orthonormal
    return base, basis


def exp_jacobian(p0: Covector, t: float, params: StructureParams):
    """Finite-difference differential of exp0 in chart (S^3 tangent, w, t).

    Returns the 5x5 matrix and its singular values sorted descending.  Central
    differences with step 1e-5 per coordinate; the S^3 factor is charted by
    projecting back to the sphere to avoid polar degeneracies at r_i = 0.
    """
    if params.case is Case.PRODUCT:
        raise UnsupportedCaseError("product case has abnormals; rank test undefined")
    base, basis = _sphere_chart(p0)

    def eval_chart(u: np.ndarray) -> np.ndarray:
        p4 = base + basis @ u[:3]
        p4 = p4 / np.linalg.norm(p4)
        cov = Covector.from_momentum4(p4, p0.w + u[3])
        return exp0(cov, t + u[4], params).as_array()

    steps = np.array([1e-5, 1e-5, 1e-5, 1e-5 * (1.0 + abs(p0.w)), 1e-5 * (1.0 + t)])
    cols = []
    for j in range(5):
        du = np.zeros(5)
        du[j] = steps[j]
        cols.append((eval_chart(du) - eval_chart(-du)) / (2.0 * steps[j]))
    jac = np.column_stack(cols)
    sv = np.linalg.svd(jac, compute_uv=False)
    return jac, sv


def rank_deficiency(p0: Covector, t: float, params: StructureParams) -> int:
    """Number of singular values of the differential below 1e-6 * sigma_max."""
    _, sv = exp_jacobian(p0, t, params)
    return int(np.sum(sv < 1e-6 * sv[0]))


def hamiltonian_rhs(state: np.ndarray, w: float, alpha1: float, alpha2: float):
    """Right-hand side of the normal Hamiltonian system (w is conserved)."""
    x1, y1, x2, y2, _, px1, py1, px2, py2 = state
    u1 = px1 - 0.5 * alpha1 * y1 * w
    v1 = py1 + 0.5 * alpha1 * x1 * w
    u2 = px2 - 0.5 * alpha2 * y2 * w
    v2 = py2 + 0.5 * alpha2 * x2 * w
    return np.array(
        [
            u1,
            v1,
            u2,
            v2,
            0.5 * alpha1 * (x1 * v1 - y1 * u1) + 0.5 * alpha2 * (x2 * v2 - y2 * u2),
            -0.5 * alpha1 * w * v1,
            0.5 * alpha1 * w * u1,
            -0.5 * alpha2 * w * v2,
            0.5 * alpha2 * w * u2,
        ]
    )


def hamiltonian_oracle(
    p0: Covector, t: float, params: StructureParams, steps: int = 10_000
) -> Point5:
    """Integrate the Hamiltonian system with fixed-step classical RK4.

    Test oracle for exp0; deliberately independent of the closed forms.
    """
    if steps < 16:
        raise ValueError("steps must be >= 16")
    a1, a2 = params.alpha1, params.alpha2
    p4 = p0.momentum4()
    state = np.array([0.0, 0.0, 0.0, 0.0, 0.0, p4[0], p4[1], p4[2], p4[3]])
    h = t / steps
    for _ in range(steps):
        k1 = hamiltonian_rhs(state, p0.w, a1, a2)
        k2 = hamiltonian_rhs(state + 0.5 * h * k1, p0.w, a1, a2)
        k3 = hamiltonian_rhs(state + 0.5 * h * k2, p0.w, a1, a2)
        k4 = hamiltonian_rhs(state + h * k3, p0.w, a1, a2)
        state = state + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return Point5(state[0], state[1], state[2], state[3], state[4])


def hamiltonian_energy(state: np.ndarray, w: float, alpha1: float, alpha2: float) -> float:
    x1, y1, x2, y2 = state[0], state[1], state[2], state[3]
    px1, py1, px2, py2 = state[5], state[6], state[7], state[8]
    u1 = px1 - 0.5 * alpha1 * y1 * w
    v1 = py1 + 0.5 * alpha1 * x1 * w
    u2 = px2 - 0.5 * alpha2 * y2 * w
    v2 = py2 + 0.5 * alpha2 * x2 * w
    return 0.5 * (u1**2 + v1**2 + u2**2 + v2**2)


def horizontal_speed(p0: Covector, t: float, params: StructureParams, h: float = 1e-6) -> float:
    """Speed |gamma'(t)| in the frame metric, reconstructed by finite differences."""
    fwd = exp0(p0, t + h, params).as_array()
    bwd = exp0(p0, max(t - h, 0.0), params).as_array()
    vel = (fwd - bwd) / (t + h - max(t - h, 0.0))
    q = exp0(p0, t, params)
    fr = frame_at(q, params)  # rows X1,Y1,X2,Y2
    # velocity is horizontal: components in the frame are the 4 horizontal
    # velocity coordinates themselves
    coeffs = vel[:4]
    recon = coeffs @ fr
    if np.linalg.norm(recon - vel) > 1e-5 * (1.0 + np.linalg.norm(vel)):
        raise AssertionError("velocity not horizontal to tolerance")
    return float(np.linalg.norm(coeffs))
