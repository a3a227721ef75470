r"""Point-splitting limits behind the anomalous c-numbers.

The half delta functions on the circle of length ``L``::

    delta_pm(z) = (1/L) / (exp(2*pi*(eps -+ i z)/L) - 1)

are integrated against a shrinking even mollifier ``chi_theta``. Limits are
iterated: ``eps -> 0`` first at every ``theta`` (Richardson in ``eps``),
then ``theta -> 0`` (Richardson in ``theta**2``). The targets are::

    C_A  = -a L / pi - 1
    C_A' = -a^2 L / (2 pi)
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property, lru_cache

import numpy as np
from scipy import integrate

QUAD_TOL = 1e-12


class QuadratureError(RuntimeError):
    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class ExtrapolationError(RuntimeError):
    def __init__(self, message, sequence=()):
        super().__init__(f"{message}: {list(sequence)}")
        self.sequence = list(sequence)


def delta_pm(z, eps: float, L: float, sign: int = 1):
    """Regularized positive (``sign=+1``) or negative (``sign=-1``) frequency half of the periodic delta."""
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    if eps < 0:
        raise ValueError("eps must be >= 0")
    z = np.asarray(z, dtype=float)
    arg = 2 * np.pi * (eps - 1j * sign * z) / L
    if eps == 0 and np.any(np.isclose(np.remainder(z + L / 2, L) - L / 2, 0.0, atol=0.0)):
        raise ZeroDivisionError("pole of delta_pm at eps=0, z = 0 mod L")
    with np.errstate(over="ignore"):
        out = 1.0 / (L * np.expm1(arg))
    out = np.asarray(out)
    return out[()] if out.ndim == 0 else out


def kernel_difference(z, eps: float, L: float):
    """``L*(delta_+ - delta_-)`` in trigonometric form, stable for tiny and large ``eps``."""
    z = np.asarray(z, dtype=float)
    x = 2 * np.pi * z / L
    t = 2 * np.pi * eps / L
    if t < 20:
        u = np.expm1(t)
        denom = u * u + 4 * (1 + u) * np.sin(x / 2) ** 2
        out = 2j * (1 + u) * np.sin(x) / denom
    else:
        r = math.exp(-t)
        out = 2j * r * np.sin(x) / (1 + r * r - 2 * r * np.cos(x))
    out = np.asarray(out)
    return out[()] if out.ndim == 0 else out


def kernel_difference_printed_form(z, eps: float, L: float):
    """Same kernel written as ``2i e^{2 pi eps/L} sin / (e^{4 pi eps/L} + 1 - 2 e^{2 pi eps/L} cos)``."""
    z = np.asarray(z, dtype=float)
    x = 2 * np.pi * z / L
    q = math.exp(2 * math.pi * eps / L)
    return 2j * q * np.sin(x) / (q * q + 1 - 2 * q * np.cos(x))


# Mollifier profiles on (-1, 1), unnormalized.

def _bump(u):
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    inside = np.abs(u) < 1
    out[inside] = np.exp(-1.0 / (1.0 - u[inside] ** 2))
    return out


def _bump_d(u):
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    inside = np.abs(u) < 1
    v = u[inside]
    out[inside] = np.exp(-1.0 / (1.0 - v * v)) * (-2 * v / (1.0 - v * v) ** 2)
    return out


def _poly(u):
    u = np.asarray(u, dtype=float)
    return np.where(np.abs(u) < 1, (1 - u * u) ** 4, 0.0)


def _poly_d(u):
    u = np.asarray(u, dtype=float)
    return np.where(np.abs(u) < 1, -8 * u * (1 - u * u) ** 3, 0.0)


def _skewed(u):
    return _bump(u) * (1 + 0.5 * np.asarray(u, dtype=float))


def _skewed_d(u):
    u = np.asarray(u, dtype=float)
    return _bump_d(u) * (1 + 0.5 * u) + 0.5 * _bump(u)


_PROFILES = {
    "bump": (_bump, _bump_d, True),
    "poly": (_poly, _poly_d, True),
    "skewed": (_skewed, _skewed_d, False),
}


@dataclass(frozen=True)
class Mollifier:
    """Unit-mass profile ``chi`` supported on ``(-w, w)``, rescaled as ``chi_theta(z) = chi(z/theta)/theta``.

    ``"bump"`` is ``exp(-1/(1-u^2))``, ``"poly"`` is ``(1-u^2)^4``;
    ``"skewed"`` is a non-even bump kept only as a negative control.
    """

    kind: str = "bump"
    L: float = 2 * math.pi
    w: float | None = None

    def __post_init__(self):
        if self.kind not in _PROFILES:
            raise ValueError(f"unknown mollifier {self.kind!r}; choose from {sorted(_PROFILES)}")
        if self.w is None:
            object.__setattr__(self, "w", self.L / 8)
        if not 0 < self.w <= self.L / 4:
            raise ValueError("mollifier half-width must lie in (0, L/4]")

    @property
    def even(self) -> bool:
        return _PROFILES[self.kind][2]

    @cached_property
    def norm(self) -> float:
        f = _PROFILES[self.kind][0]
        if self.kind == "poly":
            mass = 256.0 / 315.0
        else:
            # the bump is flat to all orders at +-1; quad flags roundoff near 1e-16
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", integrate.IntegrationWarning)
                mass, err = integrate.quad(lambda u: float(f(u)), -1, 1, epsabs=1e-15,
                                           epsrel=1e-14, limit=200)
            if err > 1e-12:
                raise QuadratureError(f"mollifier mass error {err:.3g}", err)
        return 1.0 / (mass * self.w)

    def support(self, theta: float) -> float:
        return theta * self.w

    def check_theta(self, theta: float) -> None:
        if not theta > 0:
            raise ValueError("theta must be positive")
        if self.support(theta) >= self.L / 4:
            raise ValueError(f"support {self.support(theta)} of chi_theta exceeds L/4")

    def __call__(self, z, theta: float = 1.0):
        f = _PROFILES[self.kind][0]
        return self.norm / theta * f(np.asarray(z) / (theta * self.w))

    def derivative(self, z, theta: float = 1.0):
        d = _PROFILES[self.kind][1]
        return self.norm / (theta * theta * self.w) * d(np.asarray(z) / (theta * self.w))


@dataclass(frozen=True)
class RegulatorPoint:
    eps: float
    theta: float
    a: float
    L: float

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError("eps must be > 0")
        if not self.theta > 0:
            raise ValueError("theta must be > 0")
        if not self.L > 0:
            raise ValueError("L must be > 0")


def _quad(f, lo: float, hi: float, breaks=(), tol: float = QUAD_TOL) -> complex:
    """Adaptive Gauss-Kronrod over ``[lo, hi]`` split at ``breaks``; absolute tolerance ``tol``."""
    edges = sorted({lo, hi, *[b for b in breaks if lo < b < hi]})
    pieces = list(zip(edges[:-1], edges[1:]))
    total = 0j
    for a, b in pieces:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", integrate.IntegrationWarning)
            val, err = integrate.quad(f, a, b, complex_func=True, epsabs=tol / len(pieces),
                                      epsrel=0.0, limit=400)
        # roundoff warnings are tolerated when the error estimate still meets tol
        achieved = abs(err)
        if achieved > 10 * tol:
            detail = f": {caught[0].message}" if caught else ""
            raise QuadratureError(f"achieved {achieved:.3g} > {tol:.1g} on [{a}, {b}]{detail}",
                                  achieved)
        total += val
    return total


def _breaks(s: float, eps: float) -> tuple[float, ...]:
    inner = min(s / 2, 50 * eps)
    return (-inner, 0.0, inner)


def eval_I(sign: int, point: RegulatorPoint, chi: Mollifier) -> complex:
    """``int (e^{iaz} - 1) / (e^{2 pi (eps -+ i z)/L} - 1) chi_theta(z) dz``."""
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    chi.check_theta(point.theta)
    if point.a == 0:
        return 0j
    a, L, eps, th = point.a, point.L, point.eps, point.theta

    def f(z):
        return np.expm1(1j * a * z) / np.expm1(2 * np.pi * (eps - 1j * sign * z) / L) * chi(z, th)

    s = chi.support(th)
    return _quad(f, -s, s, _breaks(s, eps))


def eval_II(sign: int, point: RegulatorPoint, chi: Mollifier) -> complex:
    chi.check_theta(point.theta)
    L, eps, th = point.L, point.eps, point.theta

    def f(z):
        return 1.0 / np.expm1(2 * np.pi * (eps - 1j * sign * z) / L) * chi(z, th)

    s = chi.support(th)
    return _quad(f, -s, s, _breaks(s, eps))


def eval_II_difference(point: RegulatorPoint, chi: Mollifier) -> complex:
    """``II_+ - II_-``: the odd kernel ``L (delta_+ - delta_-)`` against ``chi_theta``."""
    chi.check_theta(point.theta)
    L, eps, th = point.L, point.eps, point.theta

    def f(z):
        return kernel_difference(z, eps, L) * chi(z, th)

    s = chi.support(th)
    return _quad(f, -s, s, _breaks(s, eps))


def eval_constant_term(a: float, theta: float, chi: Mollifier) -> complex:
    """Collapsed ``-1/L`` term: ``-int e^{iaz} chi_theta(z) dz``."""
    chi.check_theta(theta)
    s = chi.support(theta)
    return -_quad(lambda z: np.exp(1j * a * z) * chi(z, theta), -s, s, (0.0,))


@dataclass(frozen=True)
class Schedule:
    """Geometric regulator schedule.

    ``theta_j = theta0 * 2**-j`` for ``j < n_theta`` and
    ``eps_{j,k} = (L/2pi) * theta_j**2 * 2**-k`` for ``k0 <= k < k0 + n_eps``,
    so ``eps`` vanishes faster than ``theta`` and is driven to zero first at
    every ``theta``.
    """

    theta0: float = 2 * math.pi / 16
    n_theta: int = 5
    n_eps: int = 5
    k0: int = 4

    def __post_init__(self):
        if self.n_theta < 2 or self.n_eps < 2:
            raise ValueError("need at least two levels in theta and in eps")
        if not self.theta0 > 0:
            raise ValueError("theta0 must be positive")
        if self.k0 < 0:
            raise ValueError("k0 must be >= 0")

    def thetas(self) -> list[float]:
        return [self.theta0 * 2.0 ** -j for j in range(self.n_theta)]

    def epsilons(self, theta: float, L: float) -> list[float]:
        scale = L / (2 * math.pi) * theta * theta
        return [scale * 2.0 ** -k for k in range(self.k0, self.k0 + self.n_eps)]

    def check(self, chi: Mollifier) -> None:
        """``eps`` must be small against the mollifier width and shrink relative to it."""
        ratios = []
        for th in self.thetas():
            chi.check_theta(th)
            ratios.append(self.epsilons(th, chi.L)[0] / chi.support(th))
        if ratios[0] >= 1 or any(r2 >= r1 for r1, r2 in zip(ratios, ratios[1:])):
            raise ValueError(f"schedule does not take eps -> 0 before theta -> 0: {ratios}")


def richardson(values, ratio: float, first_order: int, step: int):
    """Romberg table for ``h -> 0`` with ``h`` shrinking by ``ratio`` per level.

    Error terms are assumed to be ``h**first_order``, ``h**(first_order+step)``, ...
    Returns the full triangular table; ``table[-1][-1]`` is the best estimate.
    """
    table = [list(values)]
    p = first_order
    while len(table[-1]) > 1:
        prev = table[-1]
        f = ratio ** p
        table.append([(f * prev[i + 1] - prev[i]) / (f - 1) for i in range(len(prev) - 1)])
        p += step
    return table


def _diagonal(table) -> list:
    return [row[-1] for row in table]


def _check_convergence(diag, floor: float) -> None:
    diffs = [abs(b - a) for a, b in zip(diag, diag[1:])]
    for d1, d2 in zip(diffs, diffs[1:]):
        if d2 > d1 and d2 > floor:
            raise ExtrapolationError("theta extrapolation not converging monotonically", diag)


@dataclass
class LimitResult:
    """Iterated-limit estimate with its convergence table."""

    estimate: float
    imag: float
    rows: list = field(default_factory=list)
    theta_sequence: list = field(default_factory=list)
    theta_extrapolants: list = field(default_factory=list)

    def __float__(self):
        return self.estimate

    def to_csv(self) -> str:
        lines = ["theta,eps,estimate,extrapolant"]
        for th, eps, est, ext in self.rows:
            lines.append(f"{th:.17g},{eps:.17g},{est:.17g},{ext:.17g}")
        return "\n".join(lines) + "\n"


def _iterated_limit(inner, schedule: Schedule, chi: Mollifier, L: float, floor: float) -> LimitResult:
    """``lim_{theta->0} lim_{eps->0} inner(eps, theta)``."""
    schedule.check(chi)
    rows, theta_values = [], []
    for th in schedule.thetas():
        epss = schedule.epsilons(th, L)
        vals = [inner(eps, th) for eps in epss]
        # ``inner`` is analytic in eps at fixed theta: full Romberg in eps
        table = richardson(vals, 2.0, 1, 1)
        limit = table[-1][0]
        for eps, v, ext in zip(epss, vals, _diagonal(table)):
            rows.append((th, eps, v.real, ext.real))
        theta_values.append(limit)
    table = richardson(theta_values, 2.0, 2, 2)
    diag = _diagonal(table)
    _check_convergence([d.real for d in diag], floor)
    best = table[-1][0]
    return LimitResult(float(best.real), float(best.imag), rows,
                       [float(v.real) for v in theta_values], [float(d.real) for d in diag])


def _theta_limit(inner, schedule: Schedule, chi: Mollifier, floor: float) -> LimitResult:
    schedule.check(chi)
    ths = schedule.thetas()
    vals = [inner(th) for th in ths]
    table = richardson(vals, 2.0, 2, 2)
    diag = _diagonal(table)
    _check_convergence([d.real for d in diag], floor)
    rows = [(th, 0.0, v.real, d.real) for th, v, d in zip(ths, vals, diag)]
    best = table[-1][0]
    return LimitResult(float(best.real), float(best.imag), rows, [float(v.real) for v in vals],
                       [float(d.real) for d in diag])


def _require_even(chi: Mollifier) -> None:
    if not chi.even:
        raise ValueError("the anomaly constants are defined for even mollifiers only")


@lru_cache(maxsize=128)
def axial_kernel_limit(a: float, L: float, chi: Mollifier, schedule: Schedule,
                       floor: float = 1e-10) -> LimitResult:
    """``lim lim (I_+ + II_+) - (I_- + II_-)``, the ``delta_+ - delta_-`` part of ``C_A`` (target ``-aL/pi``)."""

    def inner(eps, th):
        pt = RegulatorPoint(eps, th, a, L)
        return eval_I(1, pt, chi) - eval_I(-1, pt, chi) + eval_II_difference(pt, chi)

    return _iterated_limit(inner, schedule, chi, L, floor)


def constant_term_limit(a: float, L: float, chi: Mollifier, schedule: Schedule,
                        floor: float = 1e-10) -> LimitResult:
    """``lim_theta -int e^{iaz} chi_theta dz`` (target ``-1``); no ``eps`` dependence."""
    return _theta_limit(lambda th: eval_constant_term(a, th, chi), schedule, chi, floor)


def compute_CA(a: float, L: float, chi: Mollifier | None = None,
               schedule: Schedule | None = None, *, full: bool = False):
    """Axial anomaly constant from the iterated point-splitting limit (target ``-aL/pi - 1``).

    With ``full=True`` returns a dict holding both parts and their
    convergence tables.
    """
    chi = Mollifier("bump", L) if chi is None else chi
    schedule = Schedule() if schedule is None else schedule
    _require_even(chi)
    kernel = axial_kernel_limit(a, L, chi, schedule)
    const = constant_term_limit(a, L, chi, schedule)
    estimate = kernel.estimate + const.estimate
    if not full:
        return estimate
    return {"estimate": estimate, "kernel": kernel, "constant": const}


def _em1mx(x):
    """``e^{ix} - 1 - ix`` without cancellation for small ``x``."""
    x = np.asarray(x, dtype=float)
    shape = x.shape
    x = np.atleast_1d(x)
    small = np.abs(x) < 0.05
    out = np.expm1(1j * x) - 1j * x
    xs = x[small]
    series = np.zeros(xs.shape, dtype=complex)
    term = np.ones(xs.shape, dtype=complex)
    for k in range(1, 12):
        term = term * (1j * xs) / k
        if k >= 2:
            series += term
    out[small] = series
    return out.reshape(shape)[()] if shape == () else out


def ibp_integrand(z, a: float, L: float):
    """``d/dz [cot(pi z/L) (e^{iaz} - 1 - iaz)]``, which tends to ``-a^2 L/(2 pi)`` at ``z = 0``."""
    z = np.asarray(z, dtype=float)
    y = np.pi * z / L
    cot = np.cos(y) / np.sin(y)
    csc2 = 1.0 / np.sin(y) ** 2
    return -(np.pi / L) * csc2 * _em1mx(a * z) + cot * 1j * a * np.expm1(1j * a * z)


def chi_prime_term_ibp(a: float, L: float, chi: Mollifier, schedule: Schedule,
                       floor: float = 1e-10) -> LimitResult:
    """``lim_theta -int d/dz[cot(pi z/L)(e^{iaz}-1-iaz)] chi_theta dz`` (target ``a^2 L/(2 pi)``)."""

    def inner(th):
        s = chi.support(th)
        return -_quad(lambda z: ibp_integrand(z, a, L) * chi(z, th), -s, s, (0.0,))

    return _theta_limit(inner, schedule, chi, floor)


def chi_prime_term_direct(a: float, L: float, chi: Mollifier, schedule: Schedule,
                          floor: float = 1e-9) -> LimitResult:
    """Same limit before integrating by parts: ``-i int K_eps(z) (e^{iaz}-1) chi'_theta(z) dz``."""

    def inner(eps, th):
        s = chi.support(th)

        def f(z):
            return -1j * kernel_difference(z, eps, L) * np.expm1(1j * a * z) * chi.derivative(z, th)

        return _quad(f, -s, s, _breaks(s, eps))

    return _iterated_limit(inner, schedule, chi, L, floor)


def compute_CA_prime(a: float, L: float, chi: Mollifier | None = None,
                     schedule: Schedule | None = None, *, full: bool = False):
    """Kinetic anomaly constant (target ``-a^2 L/(2 pi)``).

    Sum of ``a`` times the ``delta_+ - delta_-`` limit (``-a^2 L/pi``) and
    the integrated-by-parts ``chi'`` term (``+a^2 L/(2 pi)``). With
    ``full=True`` returns a dict with both parts and their convergence tables.
    """
    chi = Mollifier("bump", L) if chi is None else chi
    schedule = Schedule() if schedule is None else schedule
    _require_even(chi)
    if a == 0:
        zero = LimitResult(0.0, 0.0)
        return {"estimate": 0.0, "first": zero, "chi_prime": zero} if full else 0.0
    first = axial_kernel_limit(a, L, chi, schedule)
    second = chi_prime_term_ibp(a, L, chi, schedule)
    estimate = a * first.estimate + second.estimate
    if not full:
        return estimate
    return {"estimate": estimate, "first": first, "chi_prime": second}
