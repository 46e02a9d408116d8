"""Sub-Riemannian distance from the origin.

Rotating each horizontal block independently about the z-axis is an isometry
fixing the origin, so the inverse-exponential problem reduces to matching the
two block radii and the vertical coordinate.  With the cut-time fraction
beta = t / t_cut as an unknown the system is box-constrained:

    rho1 = r1 t sinc(pi beta)
    rho2 = r2 t sinc(pi beta alpha2/alpha1)
    z    = (t^2/2) [r1^2 alpha1 g(2 pi beta) + r2^2 alpha2 g(2 pi beta a2/a1)]

with g(s) = (s - sin s)/s^2 and r2 = sqrt(1 - r1^2).  A damped multi-start
least-squares search over (r1, beta, t) recovers all minimizers; angles are
reconstructed afterwards from the target block angles.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares

from .cut import CutClassification, MinimizerFiber, classify, cut_time
from .errors import (
    CoverageError,
    DiagonalPointError,
    SolverNoConvergenceError,
    WrongStratumError,
)
from .expmap import _area_ratio, _sinc, exp0_arrays
from .geometry import TWO_PI, Covector, Point5, StructureParams

_SERIES_CUTOFF = 1e-4


def _sinc_prime(x):
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < _SERIES_CUTOFF
    xb = np.where(small, 1.0, x)
    generic = (np.cos(xb) - _sinc(xb)) / xb
    series = x * (-1.0 / 3.0 + x * x / 30.0)
    return np.where(small, series, generic)


def _area_ratio_prime(s):
    s = np.asarray(s, dtype=float)
    small = np.abs(s) < _SERIES_CUTOFF
    sb = np.where(small, 1.0, s)
    generic = (1.0 - np.cos(sb)) / (sb * sb) - 2.0 * (sb - np.sin(sb)) / (sb**3)
    s2 = s * s
    series = 1.0 / 6.0 - s2 / 40.0 + s2 * s2 / 1008.0
    return np.where(small, series, generic)


def distance_vertical(z: float, params: StructureParams) -> float:
    """Distance from the origin to (0,0,0,0,z): sqrt(4 pi |z| / alpha1)."""
    return math.sqrt(4.0 * math.pi * abs(z) / max(params.alpha1, params.alpha2))


def distance_horizontal(q: Point5) -> float:
    """Distance on the z = 0 stratum: the straight line realizes it."""
    if q.z != 0.0:
        raise WrongStratumError("closed horizontal form requires z = 0")
    return q.horizontal_norm


class Method(enum.Enum):
    CLOSED_FORM_VERTICAL = "ClosedFormVertical"
    CLOSED_FORM_HORIZONTAL = "ClosedFormHorizontal"
    SOLVER = "Solver"
    ORACLE = "Oracle"


@dataclass(frozen=True)
class DistanceResult:
    distance: float
    minimizers: list = field(default_factory=list)  # (Covector, time) pairs
    method: Method = Method.SOLVER
    fiber: MinimizerFiber | None = None
    classification: CutClassification | None = None


def _radial_residual(psi, beta, t, rho1, rho2, zabs, a1, a2, zweight):
    # r1 = sin(psi), r2 = cos(psi): smooth through both fiber boundaries,
    # unlike r2 = sqrt(1 - r1^2) whose slope blows up at r1 = 1
    r1 = np.sin(psi)
    r2 = np.cos(psi)
    r2sq = r2 * r2
    s1 = TWO_PI * beta
    s2 = s1 * (a2 / a1)
    f1 = r1 * t * _sinc(0.5 * s1) - rho1
    f2 = r2 * t * _sinc(0.5 * s2) - rho2
    f3 = 0.5 * t * t * (
        r1 * r1 * a1 * _area_ratio(s1) + r2sq * a2 * _area_ratio(s2)
    ) - zabs
    return f1, f2, f3 * zweight


def _reconstruct_covector(
    q: Point5, r1: float, w: float, t: float, params: StructureParams
) -> Covector:
    """Angles from the target block angles; block angle = theta + s/2 + pi/2."""
    r2 = math.sqrt(max(1.0 - r1 * r1, 0.0))
    thetas = []
    for i, r in ((1, r1), (2, r2)):
        x, y = q.block(i)
        a = params.alpha1 if i == 1 else params.alpha2
        if r * t > 1e-13 and math.hypot(x, y) > 1e-13:
            s = a * w * t
            thetas.append(math.atan2(y, x) - 0.5 * s - 0.5 * math.pi)
        else:
            thetas.append(0.0)
    return Covector(r1, r2, thetas[0], thetas[1], w)


def solve_radial(
    rho1: float,
    rho2: float,
    zabs: float,
    params: StructureParams,
    extra_starts: list | None = None,
):
    """All (r1, w, t) roots of the reduced system, deduplicated, sorted by t.

    Raises SolverNoConvergenceError when no start reaches the residual floor.
    """
    a1, a2 = params.alpha1, params.alpha2
    scale = 1.0 + math.hypot(math.hypot(rho1, rho2), abs(zabs))
    zweight = 1.0 / scale
    hyp = math.hypot(rho1, rho2)
    vert = distance_vertical(zabs, params)
    t0 = math.sqrt(hyp * hyp + vert * vert)

    def fun(u):
        f1, f2, f3 = _radial_residual(
            u[0], u[1], u[2], rho1, rho2, zabs, a1, a2, zweight
        )
        return np.array([float(f1), float(f2), float(f3)])

    starts = []
    r1_guess = rho1 / hyp if hyp > 0 else 0.5
    for beta in (0.05, 0.2, 0.4, 0.6, 0.8, 0.95, 0.999):
        for r1s in {r1_guess, 0.5, 0.05, 0.95}:
            starts.append((math.asin(min(max(r1s, 0.0), 1.0)), beta, t0))
            starts.append((math.asin(min(max(r1s, 0.0), 1.0)), beta, 0.5 * t0))
    if extra_starts:
        starts = [(math.asin(min(max(s[0], 0.0), 1.0)), s[1], s[2]) for s in extra_starts] + starts

    half_pi = 0.5 * math.pi
    sols = []
    best = math.inf
    for u0 in starts:
        res = least_squares(
            fun,
            np.clip(u0, [0.0, 1e-9, 1e-9 * t0], [half_pi, 1.0, 10.0 * t0]),
            bounds=([0.0, 0.0, 1e-12], [half_pi, 1.0, 10.0 * t0]),
            xtol=1e-15,
            ftol=1e-15,
            gtol=1e-15,
        )
        r = float(np.linalg.norm(res.fun))
        best = min(best, r)
        if r < 1e-10 * scale:
            psi, beta, t = res.x
            w = TWO_PI * beta / (a1 * t)
            sols.append((float(math.sin(psi)), float(w), float(t)))
    if not sols:
        raise SolverNoConvergenceError("inverse exponential solver failed", best)
    dedup: dict[tuple, tuple] = {}
    for r1s, w, t in sols:
        key = (round(r1s / 1e-6), round(w / 1e-6), round(t / 1e-6))
        dedup.setdefault(key, (r1s, w, t))
    return sorted(dedup.values(), key=lambda s: (s[2], s[0], s[1]))


def distance(q: Point5, params: StructureParams) -> DistanceResult:
    """Distance from the origin with the minimizing covectors."""
    if q.horizontal_norm == 0.0 and q.z == 0.0:
        return DistanceResult(0.0, [], Method.CLOSED_FORM_HORIZONTAL)

    try:
        cls = classify(q, params)
    except DiagonalPointError:
        cls = None

    if cls is not None and cls.is_cut:
        d = cls.distance
        minimizers = [(p, d) for p in cls.fiber.samples()]
        on_axis = q.horizontal_norm < 1e-10 * (1.0 + abs(q.z))
        method = Method.CLOSED_FORM_VERTICAL if on_axis else Method.SOLVER
        return DistanceResult(d, minimizers, method, cls.fiber, cls)

    if q.z == 0.0:
        d = q.horizontal_norm
        rho1, rho2 = q.block_norm(1), q.block_norm(2)
        p = _reconstruct_covector(q, rho1 / d, 0.0, d, params)
        return DistanceResult(d, [(p, d)], Method.CLOSED_FORM_HORIZONTAL)

    rho1, rho2 = q.block_norm(1), q.block_norm(2)
    sols = solve_radial(rho1, rho2, abs(q.z), params)
    tmin = sols[0][2]
    minimizers = []
    for r1s, w, t in sols:
        if t > tmin * (1.0 + 1e-9):
            continue
        wsigned = math.copysign(w, q.z) if w != 0.0 else 0.0
        p = _reconstruct_covector(q, r1s, wsigned, t, params)
        minimizers.append((p, t))
    return DistanceResult(tmin, minimizers, Method.SOLVER, None, cls)


def solve_radial_batch(rho1, rho2, zabs, params: StructureParams, init):
    """Vectorized damped Newton for the reduced system, unknowns (r2, w, t).

    ``init`` is a (3, N) array of warm starts; intended for dense tube
    evaluations around a known geodesic where convergence is benign.
    Returns (r2, w, t) arrays and a converged mask.
    """
    a1, a2 = params.alpha1, params.alpha2
    rho1, rho2, zabs = np.broadcast_arrays(
        np.asarray(rho1, float), np.asarray(rho2, float), np.asarray(zabs, float)
    )
    r2 = np.array(init[0], dtype=float).copy()
    w = np.array(init[1], dtype=float).copy()
    t = np.array(init[2], dtype=float).copy()

    def residual_jacobian(r2, w, t):
        r2sq = np.clip(r2 * r2, 0.0, 1.0)
        r1 = np.sqrt(np.clip(1.0 - r2sq, 1e-300, 1.0))
        s1, s2 = a1 * w * t, a2 * w * t
        sc1, sc2 = _sinc(0.5 * s1), _sinc(0.5 * s2)
        scp1, scp2 = _sinc_prime(0.5 * s1), _sinc_prime(0.5 * s2)
        g1, g2 = _area_ratio(s1), _area_ratio(s2)
        gp1, gp2 = _area_ratio_prime(s1), _area_ratio_prime(s2)
        f1 = r1 * t * sc1 - rho1
        f2 = r2 * t * sc2 - rho2
        f3 = 0.5 * t * t * (r1 * r1 * a1 * g1 + r2 * r2 * a2 * g2) - zabs
        j = np.empty((3, 3) + r2.shape)
        j[0, 0] = -(r2 / r1) * t * sc1
        j[0, 1] = r1 * t * scp1 * (0.5 * a1 * t)
        j[0, 2] = r1 * sc1 + r1 * t * scp1 * (0.5 * a1 * w)
        j[1, 0] = t * sc2
        j[1, 1] = r2 * t * scp2 * (0.5 * a2 * t)
        j[1, 2] = r2 * sc2 + r2 * t * scp2 * (0.5 * a2 * w)
        j[2, 0] = t * t * r2 * (a2 * g2 - a1 * g1)
        j[2, 1] = 0.5 * t**3 * (r1 * r1 * a1 * a1 * gp1 + r2 * r2 * a2 * a2 * gp2)
        j[2, 2] = t * (r1 * r1 * a1 * g1 + r2 * r2 * a2 * g2) + 0.5 * t * t * w * (
            r1 * r1 * a1 * a1 * gp1 + r2 * r2 * a2 * a2 * gp2
        )
        return (f1, f2, f3), j

    scale = 1.0 + np.sqrt(rho1**2 + rho2**2 + zabs**2)
    converged = np.zeros(r2.shape, dtype=bool)
    for _ in range(60):
        (f1, f2, f3), j = residual_jacobian(r2, w, t)
        resnorm = np.sqrt(f1 * f1 + f2 * f2 + f3 * f3)
        converged = resnorm < 1e-12 * scale
        if converged.all():
            break
        f = np.stack([f1, f2, f3])
        # explicit 3x3 solve (Cramer), vectorized over trailing axes
        det = (
            j[0, 0] * (j[1, 1] * j[2, 2] - j[1, 2] * j[2, 1])
            - j[0, 1] * (j[1, 0] * j[2, 2] - j[1, 2] * j[2, 0])
            + j[0, 2] * (j[1, 0] * j[2, 1] - j[1, 1] * j[2, 0])
        )
        det = np.where(np.abs(det) < 1e-300, 1e-300, det)
        inv = np.empty_like(j)
        inv[0, 0] = j[1, 1] * j[2, 2] - j[1, 2] * j[2, 1]
        inv[0, 1] = j[0, 2] * j[2, 1] - j[0, 1] * j[2, 2]
        inv[0, 2] = j[0, 1] * j[1, 2] - j[0, 2] * j[1, 1]
        inv[1, 0] = j[1, 2] * j[2, 0] - j[1, 0] * j[2, 2]
        inv[1, 1] = j[0, 0] * j[2, 2] - j[0, 2] * j[2, 0]
        inv[1, 2] = j[0, 2] * j[1, 0] - j[0, 0] * j[1, 2]
        inv[2, 0] = j[1, 0] * j[2, 1] - j[1, 1] * j[2, 0]
        inv[2, 1] = j[0, 1] * j[2, 0] - j[0, 0] * j[2, 1]
        inv[2, 2] = j[0, 0] * j[1, 1] - j[0, 1] * j[1, 0]
        step = np.einsum("ij...,j...->i...", inv, f) / det
        # damp large steps; keep iterates inside the admissible box
        norm = np.sqrt((step * step).sum(axis=0))
        damp = np.where(norm > 0.5, 0.5 / np.maximum(norm, 1e-300), 1.0)
        step = step * damp * (~converged)
        r2 = np.clip(r2 - step[0], 0.0, 1.0)
        w = w - step[1]
        t = np.maximum(t - step[2], 1e-12)
    return r2, w, t, converged


def brute_force_oracle(
    q: Point5, params: StructureParams, grid_density: int = 32
) -> float:
    """Grid scan over (r1, theta1, theta2, w, t) followed by local refinement.

    The theta minimization over the grid is done per block (the residual
    splits), which gives the exact product-grid minimum without materializing
    the full 5-D array.
    """
    if grid_density < 32:
        raise ValueError("grid_density must be >= 32")
    a1 = max(params.alpha1, params.alpha2)
    rho1b, rho2b = q.block_norm(1), q.block_norm(2)
    hyp = q.horizontal_norm
    vert = distance_vertical(q.z, params)
    t_hi = 1.2 * (hyp + vert) + 1e-6
    d_lo = max(hyp, vert, 0.05 * t_hi)
    w_hi = TWO_PI / (a1 * d_lo)
    g = grid_density
    r1g = np.linspace(0.0, 1.0, g)
    tg = np.linspace(t_hi / g, t_hi, g)
    wg = np.linspace(-w_hi, w_hi, g if g % 2 == 1 else g + 1)
    thg = np.linspace(0.0, TWO_PI, g, endpoint=False)
    zscale = 1.0 / (1.0 + abs(q.z))

    candidates = []  # (grid residual, start vector), best one per w slice
    r1m, tm = np.meshgrid(r1g, tg, indexing="ij")
    r2m = np.sqrt(np.clip(1.0 - r1m * r1m, 0.0, 1.0))
    for w in wg:
        x1, y1, x2, y2, z = exp0_arrays(
            r1m[..., None],
            r2m[..., None],
            thg[None, None, :],
            0.0,
            w,
            tm[..., None],
            params.alpha1,
            params.alpha2,
        )
        # block 2 angles: same theta grid, rotated block; evaluate separately
        res1 = (x1 - q.x1) ** 2 + (y1 - q.y1) ** 2
        res1_min = res1.min(axis=-1)
        idx1 = res1.argmin(axis=-1)
        x2b, y2b, _, _, _ = exp0_arrays(
            r2m[..., None],
            r1m[..., None],
            thg[None, None, :],
            0.0,
            w,
            tm[..., None],
            params.alpha2,
            params.alpha1,
        )
        res2 = (x2b - q.x2) ** 2 + (y2b - q.y2) ** 2
        res2_min = res2.min(axis=-1)
        idx2 = res2.argmin(axis=-1)
        total = res1_min + res2_min + ((z[..., 0] - q.z) * zscale) ** 2
        flat = np.argmin(total)
        i, jdx = np.unravel_index(flat, total.shape)
        candidates.append(
            (
                float(total[i, jdx]),
                (
                    float(r1g[i]),
                    float(thg[idx1[i, jdx]]),
                    float(thg[idx2[i, jdx]]),
                    float(w),
                    float(tg[jdx]),
                ),
            )
        )

    qa = q.as_array()
    wscale = np.array([1.0, 1.0, 1.0, 1.0, zscale])

    def mismatch(u):
        r1s = u[0]
        r2s = math.sqrt(max(1.0 - r1s * r1s, 0.0))
        coords = exp0_arrays(
            r1s, r2s, u[1], u[2], u[3], u[4], params.alpha1, params.alpha2
        )
        return (np.array([float(c) for c in coords]) - qa) * wscale

    candidates.sort(key=lambda c: c[0])
    bound = 1e-4 * (1.0 + float(np.linalg.norm(qa)))
    times = []
    best_residual = math.inf
    for _, start in candidates[:8]:
        res = least_squares(
            mismatch,
            np.array(start),
            bounds=(
                [0.0, -4 * TWO_PI, -4 * TWO_PI, -2.0 * w_hi, 1e-12],
                [1.0, 4 * TWO_PI, 4 * TWO_PI, 2.0 * w_hi, 2.0 * t_hi],
            ),
            xtol=1e-15,
            ftol=1e-15,
            gtol=1e-15,
        )
        residual = float(np.linalg.norm(res.fun))
        best_residual = min(best_residual, residual)
        if residual < bound:
            times.append(float(res.x[4]))
    if not times:
        raise CoverageError(
            f"oracle grid too coarse: residual {best_residual:.3e} > {bound:.3e}"
        )
    return min(times)
