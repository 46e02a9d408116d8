"""Hinged energy, midpoint sets, and a Morse-Bott Laplace-expansion engine.

The hinged energy h_{x,y}(z) = [d^2(x,z) + d^2(z,y)]/2 attains its minimum
d^2(x,y)/4 exactly on the set Gamma of midpoints of minimizing geodesics.
When y is a cut point of x the minimizers form an r-dimensional fiber and
Gamma is an r-dimensional manifold on which h is Morse-Bott: the transverse
Hessian H^c h is positive definite.  Tube integrals of e^{-h/t} then scale
as t^{(n-r)/2} with a leading constant weighted by the density

    nu = F / sqrt(det H^c h)

in coordinates adapted to Gamma, and this is exactly the mechanism behind
the t^{-(n+r)/2} small-time kernel rate at cut points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .cut import classify
from .errors import (
    DegeneracyError,
    DiagonalPointError,
    InvalidArgumentError,
    PoorAsymptoticRegimeError,
    SolverNoConvergenceError,
    UnsupportedCaseError,
    WrongStratumError,
)
from .expmap import exp0
from .geometry import Case, Point5, StructureParams, group_multiply
from .distance import distance, solve_radial, solve_radial_batch

FD_STEP = 1e-4


def hinged_energy(
    x: Point5, y: Point5, z: Point5, params: StructureParams
) -> float:
    """[d^2(x,z) + d^2(z,y)] / 2, via origin-based distance queries."""
    dxz = distance(group_multiply(x.inverse(), z, params), params).distance
    dzy = distance(group_multiply(z.inverse(), y, params), params).distance
    return 0.5 * (dxz * dxz + dzy * dzy)


@dataclass(frozen=True)
class MidpointSet:
    """Sampled midpoint manifold Gamma with its fiber parametrization."""

    dimension: int
    parametrization: Callable[..., Point5]
    points: list[Point5]
    distance: float


def midpoint_set(
    x: Point5, y: Point5, params: StructureParams, samples: int = 8
) -> MidpointSet:
    """Gamma for the pair (x, y): the minimizer fiber mapped through exp0
    at half the distance."""
    y0 = group_multiply(x.inverse(), y, params)
    if y0.horizontal_norm == 0.0 and y0.z == 0.0:
        raise DiagonalPointError("midpoint set undefined for coincident endpoints")
    if (
        params.case is Case.PRODUCT
        and y0.z == 0.0
        and y0.block_norm(1) == 0.0
    ):
        # straight lines in the flat block are abnormal extremals
        raise UnsupportedCaseError(
            "product-case pair joined by abnormal-touching geodesics"
        )
    cls = classify(y0, params)
    if cls.is_cut:
        d = cls.distance
        fiber = cls.fiber

        def gamma(*args) -> Point5:
            m = exp0(fiber.at(*args), 0.5 * d, params)
            return group_multiply(x, m, params)

        pts = [
            group_multiply(x, exp0(c, 0.5 * d, params), params)
            for c in fiber.samples(samples)
        ]
        return MidpointSet(cls.fiber_dimension, gamma, pts, d)

    res = distance(y0, params)
    cov, t = res.minimizers[0]
    mid = group_multiply(x, exp0(cov, 0.5 * t, params), params)
    return MidpointSet(0, lambda: mid, [mid], res.distance)


@dataclass(frozen=True)
class MorseBottDatum:
    """Scalar field h and volume density F in coordinates adapted to Gamma.

    Chart coordinates are (u_1, ..., u_r, u_{r+1}, ..., u_n) with Gamma the
    slice {u_{r+1} = ... = u_n = 0}.  ``h`` and ``F`` accept an (m, n) array
    of chart points and return (m,) arrays.  Gamma coordinates are treated
    as periodic over ``gamma_bounds``; normals are valid within
    ``normal_halfwidth`` of the slice.
    """

    n: int
    r: int
    h: Callable[[np.ndarray], np.ndarray]
    F: Callable[[np.ndarray], np.ndarray]
    gamma_bounds: tuple[tuple[float, float], ...]
    normal_halfwidth: tuple[float, ...]

    def __post_init__(self):
        if not (0 <= self.r < self.n):
            raise InvalidArgumentError("need 0 <= r < n")
        if len(self.gamma_bounds) != self.r:
            raise InvalidArgumentError("gamma_bounds must have r entries")
        if len(self.normal_halfwidth) != self.n - self.r:
            raise InvalidArgumentError("normal_halfwidth must have n - r entries")


def _chart_points(datum: MorseBottDatum, u_gamma, offsets: np.ndarray) -> np.ndarray:
    u_gamma = np.atleast_1d(np.asarray(u_gamma, dtype=float))
    pts = np.zeros((offsets.shape[0], datum.n))
    pts[:, : datum.r] = u_gamma
    pts[:, datum.r :] = offsets
    return pts


def complementary_hessian(datum: MorseBottDatum, u_gamma) -> np.ndarray:
    """Central finite-difference Hessian of h in the normal coordinates.

    Symmetrized; raises a degeneracy error when not positive definite,
    which signals that the fiber dimension r was underestimated.
    """
    m = datum.n - datum.r
    steps = np.full(m, FD_STEP)  # normal coordinates vanish on Gamma
    offsets = []
    for i in range(m):
        for j in range(i, m):
            if i == j:
                for s in (steps[i], -steps[i], 0.0):
                    o = np.zeros(m)
                    o[i] = s
                    offsets.append(o)
            else:
                for si in (steps[i], -steps[i]):
                    for sj in (steps[j], -steps[j]):
                        o = np.zeros(m)
                        o[i], o[j] = si, sj
                        offsets.append(o)
    vals = datum.h(_chart_points(datum, u_gamma, np.array(offsets)))
    H = np.empty((m, m))
    k = 0
    for i in range(m):
        for j in range(i, m):
            if i == j:
                fp, fm, f0 = vals[k], vals[k + 1], vals[k + 2]
                H[i, i] = (fp - 2.0 * f0 + fm) / steps[i] ** 2
                k += 3
            else:
                fpp, fpm, fmp, fmm = vals[k : k + 4]
                H[i, j] = H[j, i] = (fpp - fpm - fmp + fmm) / (
                    4.0 * steps[i] * steps[j]
                )
                k += 4
    H = 0.5 * (H + H.T)
    if np.linalg.eigvalsh(H)[0] <= 0.0:
        raise DegeneracyError(
            "complementary Hessian not positive definite; r underestimated?"
        )
    return H


def full_hessian_kernel_dimension(
    datum: MorseBottDatum, u_gamma, tol: float = 1e-3
) -> int:
    """Near-zero eigenvalue count of the full n x n chart Hessian of h."""
    n = datum.n
    steps = np.full(n, FD_STEP)
    offsets = []
    for i in range(n):
        for j in range(i, n):
            if i == j:
                for s in (steps[i], -steps[i], 0.0):
                    o = np.zeros(n)
                    o[i] = s
                    offsets.append(o)
            else:
                for si in (steps[i], -steps[i]):
                    for sj in (steps[j], -steps[j]):
                        o = np.zeros(n)
                        o[i], o[j] = si, sj
                        offsets.append(o)
    base = np.zeros(n)
    base[: datum.r] = np.atleast_1d(np.asarray(u_gamma, dtype=float))
    vals = datum.h(base[None, :] + np.array(offsets))
    H = np.empty((n, n))
    k = 0
    for i in range(n):
        for j in range(i, n):
            if i == j:
                H[i, i] = (vals[k] - 2.0 * vals[k + 2] + vals[k + 1]) / steps[i] ** 2
                k += 3
            else:
                H[i, j] = H[j, i] = (
                    vals[k] - vals[k + 1] - vals[k + 2] + vals[k + 3]
                ) / (4.0 * steps[i] * steps[j])
                k += 4
    eig = np.abs(np.linalg.eigvalsh(0.5 * (H + H.T)))
    return int(np.sum(eig < tol * max(eig.max(), 1.0)))


def nu_density(datum: MorseBottDatum, u_gamma) -> float:
    """F / sqrt(det H^c h) at a Gamma chart point."""
    H = complementary_hessian(datum, u_gamma)
    base = _chart_points(datum, u_gamma, np.zeros((1, datum.n - datum.r)))
    Fval = float(datum.F(base)[0])
    return Fval / math.sqrt(float(np.linalg.det(H)))


def laplace_expand(
    datum: MorseBottDatum,
    g: Callable[[np.ndarray], np.ndarray],
    t_list: Sequence[float],
    gamma_points: int = 16,
    normal_points: int = 25,
    nsig: float = 8.0,
) -> tuple[float, float]:
    """Fit int g e^{-h/t} F du ~ constant * t^power * e^{-h_min/t}.

    The tube integral over the chart is evaluated on a tensor grid whose
    normal extent shrinks with sqrt(t); the fitted power is (n-r)/2 and the
    constant is (2 pi)^{(n-r)/2} * int_Gamma g nu for a Morse-Bott h.
    """
    t_list = sorted(float(t) for t in t_list)
    if len(t_list) < 2 or t_list[0] <= 0.0:
        raise InvalidArgumentError("need >= 2 positive t values")
    r, m = datum.r, datum.n - datum.r

    gamma_axes = []
    for lo, hi in datum.gamma_bounds:
        pts = lo + (hi - lo) * np.arange(gamma_points) / gamma_points
        gamma_axes.append((pts, (hi - lo) / gamma_points))  # periodic trapezoid

    # h_min over the Gamma slice
    if r > 0:
        mesh = np.meshgrid(*[a for a, _ in gamma_axes], indexing="ij")
        gpts = np.stack([x.ravel() for x in mesh], axis=1)
    else:
        gpts = np.zeros((1, 0))
    slice_pts = np.zeros((gpts.shape[0], datum.n))
    slice_pts[:, :r] = gpts
    h_min = float(np.min(datum.h(slice_pts)))

    # normal length scale from the transverse Hessian at a reference point
    ref = gpts[0] if r > 0 else np.zeros(0)
    lam_min = float(np.linalg.eigvalsh(complementary_hessian(datum, ref))[0])

    logs = []
    for t in t_list:
        axes = [a for a, _ in gamma_axes]
        weights = [wt for _, wt in gamma_axes]
        for i in range(m):
            L = min(datum.normal_halfwidth[i], nsig * math.sqrt(2.0 * t / lam_min))
            pts = np.linspace(-L, L, normal_points)
            axes.append(pts)
            weights.append(pts[1] - pts[0])
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([x.ravel() for x in mesh], axis=1)
        vals = (
            np.asarray(g(pts), dtype=float)
            * np.asarray(datum.F(pts), dtype=float)
            * np.exp(-(datum.h(pts) - h_min) / t)
        )
        integral = float(np.sum(vals)) * float(np.prod(weights))
        if integral <= 0.0:
            raise PoorAsymptoticRegimeError("nonpositive tube integral")
        logs.append(math.log(integral))

    x = np.log(np.asarray(t_list))
    y = np.asarray(logs)
    A = np.column_stack([x, np.ones_like(x)])
    (slope, intercept), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = float(np.max(np.abs(A @ np.array([slope, intercept]) - y)))
    if resid > 1e-2:
        raise PoorAsymptoticRegimeError(
            f"tube-integral fit residual {resid:.2e}; shrink the t list"
        )
    return float(slope), float(math.exp(intercept))


def synthetic_quadratic_datum(
    circumference: float = 2.0 * math.pi,
    hessian_diag: tuple[float, ...] = (2.0, 2.0),
) -> MorseBottDatum:
    """n = 1 + len(hessian_diag), r = 1 datum with h = sum c_i u_i^2 / ...

    h(u) = sum_i (c_i/2) u_{1+i}^2 with H^c = diag(c), F = 1, Gamma a circle
    of the given circumference.
    """
    c = np.asarray(hessian_diag, dtype=float)

    def h(u: np.ndarray) -> np.ndarray:
        return 0.5 * np.sum(c * u[:, 1:] ** 2, axis=1)

    def F(u: np.ndarray) -> np.ndarray:
        return np.ones(u.shape[0])

    return MorseBottDatum(
        n=1 + len(hessian_diag),
        r=1,
        h=h,
        F=F,
        gamma_bounds=((0.0, circumference),),
        normal_halfwidth=(4.0,) * len(hessian_diag),
    )


# --- the bi-Heisenberg case-II tube -----------------------------------------


def _batch_distance(
    rho1: np.ndarray,
    rho2: np.ndarray,
    zabs: np.ndarray,
    params: StructureParams,
    warm: tuple[float, float, float],
) -> np.ndarray:
    """Vectorized distances through the reduced Newton solver, with scalar
    multi-start fallback for stragglers."""
    n = rho1.shape[0]
    init = (
        np.full(n, warm[0]),
        np.full(n, warm[1]),
        np.full(n, warm[2]),
    )
    _, _, t, ok = solve_radial_batch(rho1, rho2, zabs, params, init)
    if not ok.all():
        for i in np.flatnonzero(~ok):
            sols = solve_radial(float(rho1[i]), float(rho2[i]), float(zabs[i]), params)
            t[i] = sols[0][2]
    return t


def case2_tube_datum(params: StructureParams, y: Point5):
    """Adapted-chart data for the midpoint circle of a z-axis case-II point.

    Returns (full_datum, tube_datum).  The full datum has chart coordinates
    (theta, radial offset, z offset, x_2, y_2) around the midpoint circle
    and serves the Hessian and nu computations.  The tube datum folds the
    (x_2, y_2) plane into a signed polar radius (h depends on them only
    through their norm, by block rotation invariance), with the polar factor
    pi |rho_2| absorbed into F, so that Laplace integration runs on a 3-D
    normal grid while keeping the 4-normal-direction t-scaling t^2.
    """
    if params.case is not Case.NON_ISOTROPIC_CONTACT:
        raise UnsupportedCaseError("case-II tube requires 0 < alpha2 < alpha1")
    if y.horizontal_norm != 0.0 or y.z == 0.0:
        raise WrongStratumError("y must be a nonzero z-axis point")
    cls = classify(y, params)
    d = cls.distance
    w = abs(cls.recovered_w)
    thalf = 0.5 * d
    mid = exp0(cls.fiber.at(0.0), thalf, params)
    R = mid.block_norm(1)
    phi0 = math.atan2(mid.y1, mid.x1)
    zmid = mid.z
    zy = y.z

    def geometry(u: np.ndarray):
        rho1 = R + u[:, 1]
        rho2 = np.hypot(u[:, 3], u[:, 4])
        zq = zmid + u[:, 2]
        return rho1, rho2, zq

    def h(u: np.ndarray) -> np.ndarray:
        rho1, rho2, zq = geometry(u)
        # the chart is theta-independent up to a block rotation, an isometry
        t1 = _batch_distance(rho1, rho2, np.abs(zq), params, (0.0, w, thalf))
        t2 = _batch_distance(rho1, rho2, np.abs(zy - zq), params, (0.0, w, thalf))
        return 0.5 * (t1 * t1 + t2 * t2)

    def F_full(u: np.ndarray) -> np.ndarray:
        return R + u[:, 1]  # polar Jacobian of the first block

    full = MorseBottDatum(
        n=5,
        r=1,
        h=h,
        F=F_full,
        gamma_bounds=((0.0, 2.0 * math.pi),),
        normal_halfwidth=(0.4 * R, 0.4 * abs(zmid), 0.5 * R, 0.5 * R),
    )

    def h_tube(u: np.ndarray) -> np.ndarray:
        v = np.zeros((u.shape[0], 5))
        v[:, :3] = u[:, :3]
        v[:, 3] = u[:, 3]
        return h(v)

    def F_tube(u: np.ndarray) -> np.ndarray:
        # pi |rho2| so that the symmetric rho2 grid integrates to the
        # 2 pi rho2 d rho2 polar measure of the (x2, y2) plane
        return (R + u[:, 1]) * math.pi * np.abs(u[:, 3])

    tube = MorseBottDatum(
        n=4,
        r=1,
        h=h_tube,
        F=F_tube,
        gamma_bounds=((0.0, 2.0 * math.pi),),
        normal_halfwidth=(0.4 * R, 0.4 * abs(zmid), 0.5 * R),
    )
    return full, tube
