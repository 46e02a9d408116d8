"""Heat kernel of the sub-Laplacian: the Gaveau-type integral, the vertical
closed forms, their log-domain variants, and the product-case kernel.

The general kernel is

    p_t(q) = 2/(4 pi t)^3 * int_R V(tau B) exp(-W(tau B) x.x / 4t) cos(z tau/t) dtau

with V(A) = sqrt(det(A/sin A)) and W(A) = A/tan A, in the d/dt u = Delta u
normalization.  On the real integration path both act through the block
frequencies: V = prod a_j tau / sinh(a_j tau) and W multiplies each block by
a_j tau / tanh(a_j tau).

For z != 0 the cosine factor makes the real-axis integral the victim of
catastrophic cancellation: the answer is smaller than the integrand peak by
exp(-pi |z| / (alpha_1 t)).  The integrand extends holomorphically to the
strip |Im tau| < pi/alpha_1, so the path is shifted to Im tau = c with c
chosen by a coarse steepest-descent scan; the shift converts almost all of
the cancellation into an explicit factor exp(-|z| c / t) and the remaining
oscillatory integral is handled by QUADPACK's cos/sin-weighted rule.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.integrate

from .errors import AccuracyError, InvalidArgumentError, WrongCaseError
from .geometry import Case, Point5, StructureParams

T_FLOOR_DEFAULT = 0.05
_TAIL_EPS = 1e-18


@dataclass(frozen=True)
class BlockSpectrum:
    """Positive block frequencies of the skew generator, nonincreasing."""

    frequencies: tuple[float, ...]
    corank: int = 1

    def __post_init__(self):
        if self.corank != 1:
            raise InvalidArgumentError("only corank 1 is supported")
        freqs = self.frequencies
        if not freqs or any(a <= 0.0 for a in freqs):
            raise InvalidArgumentError("frequencies must be positive")
        if any(freqs[i] < freqs[i + 1] for i in range(len(freqs) - 1)):
            raise InvalidArgumentError("frequencies must be nonincreasing")

    @staticmethod
    def from_params(params: StructureParams) -> "BlockSpectrum":
        if params.case is Case.PRODUCT:
            return BlockSpectrum((params.alpha1,))
        return BlockSpectrum((params.alpha1, params.alpha2))


@dataclass(frozen=True)
class KernelQuery:
    point: Point5
    time: float
    params: StructureParams
    precision: float = 1e-10

    def __post_init__(self):
        if self.time <= 0.0:
            raise InvalidArgumentError("time must be positive")
        if not (1e-12 <= self.precision <= 1e-3):
            raise InvalidArgumentError("precision must lie in [1e-12, 1e-3]")


def _ratio_sinh(lam: np.ndarray) -> np.ndarray:
    """lam / sinh(lam), elementwise, with lam/sinh(lam) -> 1 at 0."""
    lam = np.asarray(lam, dtype=float)
    small = np.abs(lam) < 1e-6
    lb = np.where(small, 1.0, lam)
    with np.errstate(over="ignore"):  # sinh overflow in the tail gives 1/inf = 0
        return np.where(small, 1.0 - lam * lam / 6.0, lb / np.sinh(lb))


def _ratio_tanh(lam: np.ndarray) -> np.ndarray:
    """lam / tanh(lam) with value 1 at 0."""
    lam = np.asarray(lam, dtype=float)
    small = np.abs(lam) < 1e-6
    lb = np.where(small, 1.0, lam)
    return np.where(small, 1.0 + lam * lam / 3.0, lb / np.tanh(lb))


def _skew_frequencies(A: np.ndarray) -> np.ndarray:
    """Positive imaginary parts of the eigenvalues of a real skew matrix."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InvalidArgumentError("matrix must be square")
    if np.max(np.abs(A + A.T)) > 1e-12 * (1.0 + np.max(np.abs(A))):
        raise InvalidArgumentError("matrix must be skew-symmetric")
    d = np.linalg.eigvalsh(1j * A)
    return d[d > 1e-14]


def matrix_V(A: np.ndarray) -> float:
    """sqrt(det(A / sin A)) for real skew A, via the spectrum.

    Eigenvalues come in pairs +-i lam with lam real, where A/sin A acts as
    lam/sinh(lam); zero eigenvalues contribute 1.
    """
    lams = _skew_frequencies(A)
    return float(np.prod(_ratio_sinh(lams)))


def matrix_W(A: np.ndarray) -> np.ndarray:
    """A / tan A for real skew A: symmetric, equal to the identity at A = 0."""
    A = np.asarray(A, dtype=float)
    _skew_frequencies(A)  # validates shape and skewness
    d, U = np.linalg.eigh(1j * A)
    W = (U * _ratio_tanh(d)) @ U.conj().T
    W = W.real
    return 0.5 * (W + W.T)


def _tail_cutoff(total_freq: float, eps: float = _TAIL_EPS) -> float:
    # envelope <= C tau^2 e^{-total_freq * tau}; solve e^{-A T} T^2 = eps
    # by fixed point T = (log(1/eps) + 2 log T) / A
    T = max(30.0 / total_freq, 1.0)
    for _ in range(3):
        T = (math.log(1.0 / eps) + 2.0 * math.log(T)) / total_freq
    return T


def _reduced_query(q: Point5, params: StructureParams):
    """(rho_1, rho_2, |z|): the kernel depends on the point only through these."""
    return q.block_norm(1), q.block_norm(2), abs(q.z)


def _log_integral_z0(
    freqs: tuple[float, ...], rhos: tuple[float, ...], t: float
) -> float:
    """log of int_R prod v_j(tau) exp(-sum rho_j^2 w_j(tau)/4t) dtau.

    The peak exp(-sum rho_j^2 / 4t) at tau = 0 is factored out and the rest
    is integrated after the substitution tau = sqrt(t) u, which keeps the
    integrand O(1)-wide for every t.  Non-oscillatory, so any t > 0 works.
    """
    a = np.asarray(freqs)
    r2 = np.asarray([r * r for r in rhos])
    s = math.sqrt(t)

    def f(u: float) -> float:
        lam = a * (s * u)
        v = float(np.prod(_ratio_sinh(lam)))
        expo = float(np.dot(r2, _ratio_tanh(lam) - 1.0)) / (4.0 * t)
        return v * math.exp(-expo) if expo < 700.0 else 0.0

    val, _ = scipy.integrate.quad(f, 0.0, np.inf, epsabs=0.0, epsrel=1e-12, limit=200)
    return -float(np.sum(r2)) / (4.0 * t) + math.log(2.0 * s * val)


def _pick_shift(
    freqs: tuple[float, ...], rhos: tuple[float, ...], z: float, t: float
) -> float:
    """Height of the shifted contour: coarse scan of the saddle objective."""
    amax = max(freqs)
    cs = np.linspace(0.02, 0.95, 160) * (math.pi / amax)
    obj = -abs(z) * cs / t
    for a, r in zip(freqs, rhos):
        sin_ac = np.sin(a * cs)
        obj += np.log(np.abs(a * cs / sin_ac))
        # w(ic) = a c cot(a c): negative past a c = pi/2, inflating the peak
        obj -= (r * r) * (a * cs / np.tan(a * cs)) / (4.0 * t)
    return float(cs[int(np.argmin(obj))])


def _integral_oscillatory(
    freqs: tuple[float, ...],
    rhos: tuple[float, ...],
    z: float,
    t: float,
    precision: float,
) -> float:
    """int_R prod v_j exp(-sum rho_j^2 w_j / 4t) cos(z tau / t) dtau, z != 0."""
    omega = abs(z) / t
    c = _pick_shift(freqs, rhos, z, t)
    a = np.asarray(freqs)
    r2 = np.asarray([r * r for r in rhos])

    def g(sigma: float) -> complex:
        lam = a * complex(sigma, c)
        v = np.prod(lam / np.sinh(lam))
        w = lam / np.tanh(lam)
        return v * np.exp(-np.dot(r2, w) / (4.0 * t))

    T = _tail_cutoff(float(np.sum(a)))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.integrate.IntegrationWarning)
        re_part, err1 = scipy.integrate.quad(
            lambda s: g(s).real, 0.0, T,
            weight="cos", wvar=omega, epsabs=0.0, epsrel=1e-12, limit=400,
        )
        im_part, err2 = scipy.integrate.quad(
            lambda s: g(s).imag, 0.0, T,
            weight="sin", wvar=omega, epsabs=0.0, epsrel=1e-12, limit=400,
        )
    value = 2.0 * math.exp(-omega * c) * (re_part - im_part)
    err = 2.0 * math.exp(-omega * c) * (err1 + err2)
    if value <= 0.0 or err > precision * abs(value):
        achieved = err / abs(value) if value != 0.0 else math.inf
        raise AccuracyError(
            f"oscillatory quadrature achieved relative error {achieved:.2e} "
            f"(target {precision:.2e}) at z/t = {omega:.3g}",
            achieved=achieved,
        )
    return value


def kernel(query: KernelQuery, t_floor: float = T_FLOOR_DEFAULT) -> float:
    """Heat kernel p_t(q) for a contact structure, by quadrature.

    Depends on the point only through (rho_1, rho_2, |z|), which makes the
    block-rotation invariance and z-evenness exact.  For z != 0 the time must
    stay above ``t_floor``: below it the shifted-contour quadrature can no
    longer certify the requested precision.
    """
    params = query.params
    if params.case is Case.PRODUCT:
        raise WrongCaseError("use product_kernel for alpha2 = 0")
    rho1, rho2, zabs = _reduced_query(query.point, params)
    t = query.time
    pref = 2.0 / (4.0 * math.pi * t) ** 3
    freqs = (params.alpha1, params.alpha2)
    rhos = (rho1, rho2)
    if zabs == 0.0:
        return pref * math.exp(_log_integral_z0(freqs, rhos, t))
    if t < t_floor:
        raise AccuracyError(
            f"t = {t:.3g} below the oscillatory-regime floor {t_floor:.3g}; "
            "use the closed forms on the z-axis",
            achieved=math.inf,
        )
    return pref * _integral_oscillatory(freqs, rhos, zabs, t, query.precision)


def log_kernel_z0(q: Point5, t: float, params: StructureParams) -> float:
    """log p_t(q) for z = 0 points; stable for arbitrarily small t."""
    if params.case is Case.PRODUCT:
        raise WrongCaseError("use product log forms for alpha2 = 0")
    rho1, rho2, zabs = _reduced_query(q, params)
    if zabs != 0.0:
        raise InvalidArgumentError("point must lie in the z = 0 stratum")
    pref = 2.0 / (4.0 * math.pi * t) ** 3
    return math.log(pref) + _log_integral_z0(
        (params.alpha1, params.alpha2), (rho1, rho2), t
    )


# --- closed forms on the vertical axis -------------------------------------


def closed_form_iso(z: float, t: float) -> float:
    """Vertical-axis kernel for alpha = (1, 1)."""
    return math.exp(log_closed_form_iso(z, t))


def log_closed_form_iso(z: float, t: float) -> float:
    """log of the alpha = (1, 1) vertical kernel, stable for all z/t.

    With X = pi|z|/t and E = e^{-X} the kernel is

        p = (pi|z| (1+E)/(1-E) - 2t) e^{-X} / (16 pi t^4 (1-E)^2),

    and for X < 0.05 the even series p = (1 - X^2/10 + X^4/168)/(96 pi t^3)
    avoids the cancellation in the numerator.
    """
    if t <= 0.0:
        raise InvalidArgumentError("time must be positive")
    X = math.pi * abs(z) / t
    if X < 0.05:
        return math.log((1.0 - X * X / 10.0 + X**4 / 168.0) / (96.0 * math.pi * t**3))
    E = math.exp(-X)
    num = math.pi * abs(z) * (1.0 + E) / (1.0 - E) - 2.0 * t
    return (
        math.log(num)
        - X
        - math.log(16.0 * math.pi * t**4)
        - 2.0 * math.log1p(-E)
    )


def closed_form_half(z: float, t: float) -> float:
    """Vertical-axis kernel for alpha = (1, 1/2)."""
    return math.exp(log_closed_form_half(z, t))


def log_closed_form_half(z: float, t: float) -> float:
    """log of the alpha = (1, 1/2) vertical kernel, stable for all z/t.

    Dividing numerator and denominator by e^{3X}, X = pi|z|/t, E = e^{-X}:

        p = e^{-X} [pi t (1+E^4)/2 - 4 pi |z| E (1-E^2) + 4 t E (1+E^2)
                    - 3 pi t E^2] / (16 pi t^4 (1+E^2)^3).
    """
    if t <= 0.0:
        raise InvalidArgumentError("time must be positive")
    X = math.pi * abs(z) / t
    E = math.exp(-X)
    bracket = (
        0.5 * math.pi * t * (1.0 + E**4)
        - 4.0 * math.pi * abs(z) * E * (1.0 - E * E)
        + 4.0 * t * E * (1.0 + E * E)
        - 3.0 * math.pi * t * E * E
    )
    return (
        -X
        + math.log(bracket)
        - math.log(16.0 * math.pi * t**4)
        - 3.0 * math.log1p(E * E)
    )


def log_heisenberg_vertical(z: float, t: float, alpha: float) -> float:
    """log p_t of the 3-D Heisenberg factor on its vertical axis.

    p = 1/(16 t^2 cosh^2(pi alpha' z / 2t)) with alpha' scaling; derived from
    int lam/sinh(lam) cos(b lam) dlam = pi^2 / (2 cosh^2(pi b / 2)).
    """
    # frequency alpha rescales as p^{(alpha)}_t(z) = alpha^{-1} p^{(1)}_t(z alpha)
    X = 0.5 * math.pi * abs(z) * alpha / t
    logcosh = X - math.log(2.0) + math.log1p(math.exp(-2.0 * X))
    return -math.log(16.0 * t * t / alpha) - 2.0 * logcosh


def vertical_kernel(z: float, t: float, params: StructureParams) -> float:
    """Kernel on the z-axis; closed forms when the frequency ratio is 1 or 1/2."""
    return math.exp(log_vertical_kernel(z, t, params))


def log_vertical_kernel(z: float, t: float, params: StructureParams) -> float:
    if params.case is Case.PRODUCT:
        # Heisenberg factor times the flat plane factor at the plane origin
        return log_heisenberg_vertical(z, t, params.alpha1) - math.log(
            4.0 * math.pi * t
        )
    a1, a2 = params.alpha1, params.alpha2
    ratio = a2 / a1
    # frequency scaling: p^{(c alpha)}_t(z) = p^{(alpha)}_t(z/c) / c
    if abs(ratio - 1.0) < 1e-14:
        return log_closed_form_iso(z / a1, t) - math.log(a1)
    if abs(ratio - 0.5) < 1e-14:
        return log_closed_form_half(z / a1, t) - math.log(a1)
    if z == 0.0:
        return math.log(2.0 / (4.0 * math.pi * t) ** 3) + _log_integral_z0(
            (a1, a2), (0.0, 0.0), t
        )
    pref = 2.0 / (4.0 * math.pi * t) ** 3
    return math.log(pref) + math.log(
        _integral_oscillatory((a1, a2), (0.0, 0.0), z, t, 1e-10)
    )


def product_kernel(q: Point5, t: float, params: StructureParams) -> float:
    """Kernel for alpha2 = 0: Heisenberg factor times the flat R^2 factor."""
    if params.case is not Case.PRODUCT:
        raise WrongCaseError("product kernel requires alpha2 = 0")
    a1 = params.alpha1
    rho1, rho2, zabs = _reduced_query(q, params)
    flat = math.exp(-rho2 * rho2 / (4.0 * t)) / (4.0 * math.pi * t)
    if zabs == 0.0:
        pH = (2.0 / (4.0 * math.pi * t) ** 2) * math.exp(
            _log_integral_z0((a1,), (rho1,), t)
        )
    elif rho1 == 0.0:
        pH = math.exp(log_heisenberg_vertical(zabs, t, a1))
    else:
        pH = (2.0 / (4.0 * math.pi * t) ** 2) * _integral_oscillatory(
            (a1,), (rho1,), zabs, t, 1e-10
        )
    return pH * flat
