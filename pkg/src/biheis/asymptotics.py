"""Small-time exponent and constant extraction from heat-kernel samples.

The kernel obeys p_t(q) = (C + O(t)) t^{-k} e^{-d^2(0,q)/4t} with an exponent
k set by the position of q relative to the cut locus: 3 on the diagonal,
5/2 off the cut locus, 4 at isotropic cut points and 3 at non-isotropic or
product cut points.  Equivalently k = (n + r)/2 where r is the dimension of
the minimizing-covector fiber.  Fits run on log-kernel samples so that the
t-grids can extend far below the underflow threshold of e^{-d^2/4t}.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .cut import classify
from .errors import (
    DiagonalPointError,
    InvalidArgumentError,
    InvalidSampleError,
    PoorAsymptoticRegimeError,
)
from .geometry import Case, Point5, StructureParams
from .distance import distance
from .heatkernel import (
    log_closed_form_half,
    log_closed_form_iso,
    log_heisenberg_vertical,
    log_kernel_z0,
    log_vertical_kernel,
)

GRID_RATIO = 0.5
GRID_POINTS = 6
T_SCALE = 1e-4  # smallest t as a fraction of the natural time scale


@dataclass(frozen=True)
class AsymptoticFit:
    """Fitted power law p_t ~ C_hat * t^{-k_hat} * e^{-d^2/4t}."""

    k_hat: float
    C_hat: float
    residual: float
    d_squared: float


def exponent_fit(samples, d_squared: float, *, log_input: bool = False) -> AsymptoticFit:
    """Linear regression of log p + d^2/4t against log t.

    ``samples`` is a list of (t, p_t) pairs, or (t, log p_t) pairs when
    ``log_input`` is set.  The residual is the maximum leave-one-out
    deviation of the fitted log-values.
    """
    if len(samples) < 6:
        raise InvalidArgumentError("need at least 6 samples on a geometric grid")
    if d_squared < 0.0:
        raise InvalidArgumentError("d_squared must be nonnegative")
    ts = np.array([s[0] for s in samples], dtype=float)
    ps = np.array([s[1] for s in samples], dtype=float)
    if np.any(ts <= 0.0):
        raise InvalidSampleError("sample times must be positive")
    if log_input:
        logp = ps
    else:
        if np.any(ps <= 0.0):
            raise InvalidSampleError("kernel samples must be positive")
        logp = np.log(ps)
    x = np.log(ts)
    y = logp + d_squared / (4.0 * ts)

    def _fit(xs, ys):
        A = np.column_stack([xs, np.ones_like(xs)])
        sol, *_ = np.linalg.lstsq(A, ys, rcond=None)
        return sol  # (slope, intercept)

    slope, intercept = _fit(x, y)
    # leave-one-out deviation, in log units (= relative deviation of p)
    dev = 0.0
    n = len(x)
    for i in range(n):
        mask = np.arange(n) != i
        s_i, b_i = _fit(x[mask], y[mask])
        dev = max(dev, abs(s_i * x[i] + b_i - y[i]))
    return AsymptoticFit(
        k_hat=float(-slope),
        C_hat=float(math.exp(intercept)),
        residual=float(dev),
        d_squared=float(d_squared),
    )


class PhiForm(enum.Enum):
    ISO = "Iso"
    HALF = "Half"


_PHI_TIMES = (1e-2, 5e-3, 2.5e-3)


def phi_limit(form: PhiForm, z: float) -> float:
    """Limit phi(0) of phi(t) = t^k e^{d^2/4t} p_t on the z-axis.

    Evaluated through the log-domain closed forms at the reference times
    rescaled by |z| (the Carnot dilation maps the axis point to z = 1), then
    Richardson-extrapolated at first order; the expansion is C + O(t).
    Returns the z = 1 normalized constant: 1/16 for Iso, 1/32 for Half.
    """
    if z == 0.0:
        raise InvalidArgumentError("phi is defined off the diagonal, z != 0")
    zabs = abs(z)
    if form is PhiForm.ISO:
        k, log_form = 4.0, log_closed_form_iso
    else:
        k, log_form = 3.0, log_closed_form_half
    d2 = 4.0 * math.pi * zabs

    def phi(u: float) -> float:
        t = zabs * u
        return zabs ** (3.0 - k) * math.exp(
            k * math.log(t) + d2 / (4.0 * t) + log_form(zabs, t)
        )

    vals = [phi(u) for u in _PHI_TIMES]
    # first-order Richardson on the two smallest times (halving grid)
    return 2.0 * vals[2] - vals[1]


@dataclass(frozen=True)
class HeatAsymptoticsReport:
    regime: str
    predicted_k: float
    fiber_dimension: int
    fit: AsymptoticFit
    tolerance: float
    passed: bool

    @property
    def margin(self) -> float:
        return abs(self.fit.k_hat - self.predicted_k)


def _grid(t_small: float) -> list[float]:
    return [t_small / GRID_RATIO**j for j in range(GRID_POINTS)]


def verify_theorem_heat(
    params: StructureParams, q: Point5, tolerance: float = 0.02
) -> HeatAsymptoticsReport:
    """Fit the small-time exponent at q and compare with the predicted one.

    The prediction is (n + r)/2 with n = 5 and r the minimizing-fiber
    dimension (1 on the diagonal, 0 off the cut locus, 3 or 1 on it).
    Sampling regimes with a reliable small-t evaluator: the diagonal, the
    z = 0 stratum, the z-axis for frequency ratios 1 and 1/2, and product
    points with a vanishing first block.
    """
    rho1, rho2, zabs = q.block_norm(1), q.block_norm(2), abs(q.z)

    if rho1 == 0.0 and rho2 == 0.0 and zabs == 0.0:
        regime, r = "diagonal", 1
        d2 = 0.0
        samples = [(t, log_kernel_z0(q, t, params) if params.case is not Case.PRODUCT
                    else _log_product(q, t, params)) for t in _grid(T_SCALE)]
    else:
        try:
            cls = classify(q, params)
        except DiagonalPointError:  # pragma: no cover - handled above
            raise
        if cls.is_cut:
            r = cls.fiber_dimension
            d2 = cls.distance**2
            regime = f"cut-{cls.case.value}"
            samples = _cut_samples(q, params, d2)
        else:
            r = 0
            d2 = distance(q, params).distance ** 2
            regime = "off-cut"
            if zabs != 0.0:
                raise PoorAsymptoticRegimeError(
                    "no reliable small-t evaluator off the cut locus with z != 0"
                )
            if params.case is Case.PRODUCT:
                samples = [(t, _log_product(q, t, params)) for t in _grid(T_SCALE * max(d2, 1.0))]
            else:
                samples = [
                    (t, log_kernel_z0(q, t, params))
                    for t in _grid(T_SCALE * max(d2, 1.0))
                ]

    predicted = 0.5 * (5.0 + r)
    fit = exponent_fit(samples, d2, log_input=True)
    passed = abs(fit.k_hat - predicted) <= tolerance
    return HeatAsymptoticsReport(
        regime=regime,
        predicted_k=predicted,
        fiber_dimension=r,
        fit=fit,
        tolerance=tolerance,
        passed=passed,
    )


def _log_product(q: Point5, t: float, params: StructureParams) -> float:
    """log of the product-case kernel for points with a vanishing first block
    or vanishing z (the regimes with stable small-t evaluation)."""
    rho1, rho2, zabs = q.block_norm(1), q.block_norm(2), abs(q.z)
    flat = -rho2 * rho2 / (4.0 * t) - math.log(4.0 * math.pi * t)
    if zabs == 0.0:
        from .heatkernel import _log_integral_z0  # non-oscillatory path

        pref = math.log(2.0 / (4.0 * math.pi * t) ** 2)
        return pref + _log_integral_z0((params.alpha1,), (rho1,), t) + flat
    if rho1 != 0.0:
        raise PoorAsymptoticRegimeError(
            "product-case sampling needs a vanishing first block when z != 0"
        )
    return log_heisenberg_vertical(zabs, t, params.alpha1) + flat


def _cut_samples(q: Point5, params: StructureParams, d2: float):
    zabs = abs(q.z)
    # the O(t) correction on the z-axis lives on the scale t/|z|
    ts = _grid(T_SCALE * max(zabs, 1e-6))
    if params.case is Case.PRODUCT:
        return [(t, _log_product(q, t, params)) for t in ts]
    if q.block_norm(1) != 0.0 or q.block_norm(2) != 0.0:
        raise PoorAsymptoticRegimeError(
            "contact-case cut sampling is reliable only on the z-axis"
        )
    ratio = params.alpha2 / params.alpha1
    if abs(ratio - 1.0) > 1e-14 and abs(ratio - 0.5) > 1e-14:
        raise PoorAsymptoticRegimeError(
            "no closed form for this frequency ratio; oscillatory quadrature "
            "cannot reach the small-t regime"
        )
    return [(t, log_vertical_kernel(zabs, t, params)) for t in ts]
