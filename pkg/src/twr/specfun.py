"""Special functions and quadrature used by the analytic evaluators.

The incomplete gamma and error functions are thin, domain-checked wrappers
over :mod:`scipy.special` and :mod:`math`; quadrature is
:func:`scipy.integrate.quad` behind a tolerance/budget contract.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate, special

__all__ = [
    "Transform", "QuadratureSpec", "QuadResult", "NonConvergence",
    "lower_inc_gamma", "erfc", "gamma_fn", "integrate_semi_infinite",
    "integrate_interval", "exp_moments", "DEFAULT_QUAD",
]


class NonConvergence(RuntimeWarning):
    """The quadrature budget ran out before the tolerance was met."""


class Transform(str, enum.Enum):
    NONE = "none"
    # x = u**2 removes an integrable x**-1/2 endpoint singularity.
    SQRT = "sqrt"
    # x = u / (1 - u) maps (0, inf) onto (0, 1).
    EXP_TAIL = "exp_tail"


@dataclass(frozen=True)
class QuadratureSpec:
    abs_tol: float = 1e-10
    rel_tol: float = 1e-8
    max_subdivisions: int = 2000
    transform: Transform = Transform.NONE

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("quadrature tolerances must be positive")
        if self.max_subdivisions < 16:
            raise ValueError("max_subdivisions must be >= 16")
        object.__setattr__(self, "transform", Transform(self.transform))


DEFAULT_QUAD = QuadratureSpec()


@dataclass(frozen=True)
class QuadResult:
    value: float
    error: float
    converged: bool = True

    def __iter__(self):
        return iter((self.value, self.error))


def lower_inc_gamma(a: float, x: float) -> float:
    """Lower incomplete gamma function ``int_0^x t**(a-1) exp(-t) dt``."""
    if not a > 0:
        raise ValueError(f"lower_inc_gamma needs a > 0, got {a}")
    if not x >= 0:
        raise ValueError(f"lower_inc_gamma needs x >= 0, got {x}")
    if x == 0:
        return 0.0
    return float(special.gammainc(a, x) * special.gamma(a))


def erfc(x):
    """Complementary error function; accepts scalars or arrays."""
    if np.ndim(x) == 0:
        return math.erfc(float(x))
    return special.erfc(np.asarray(x, dtype=float))


def gamma_fn(x: float) -> float:
    if not x > 0:
        raise ValueError(f"gamma_fn needs x > 0, got {x}")
    return math.gamma(x)


def _quad(f, a, b, spec: QuadratureSpec, points=None) -> QuadResult:
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, err = integrate.quad(f, a, b, epsabs=spec.abs_tol, epsrel=spec.rel_tol,
                                      limit=spec.max_subdivisions, points=points)
            ok = True
        except integrate.IntegrationWarning:
            ok = False
    if not ok:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            val, err = integrate.quad(f, a, b, epsabs=spec.abs_tol, epsrel=spec.rel_tol,
                                      limit=spec.max_subdivisions, points=points)
        ok = err <= max(spec.abs_tol, spec.rel_tol * abs(val))
        if not ok:
            warnings.warn(f"quadrature did not converge (estimate {val:.6g} +/- {err:.2g})",
                          NonConvergence, stacklevel=3)
    return QuadResult(float(val), float(err), ok)


def integrate_interval(f: Callable[[float], float], a: float, b: float,
                       spec: QuadratureSpec = DEFAULT_QUAD, points=None) -> QuadResult:
    return _quad(f, a, b, spec, points)


def integrate_semi_infinite(f: Callable[[float], float], spec: QuadratureSpec = DEFAULT_QUAD,
                            upper: float | None = None) -> QuadResult:
    """Integrate ``f`` over ``(0, inf)``.

    With ``Transform.SQRT`` the integral is rewritten as
    ``int 2 u f(u**2) du``, which is regular when ``f ~ x**-1/2`` at 0.
    ``upper`` truncates the range (in the original variable) when the
    integrand is known to be negligible beyond it.
    """
    tr = spec.transform
    if tr is Transform.SQRT:
        g = lambda u: 2.0 * u * f(u * u) if u > 0 else 0.0
        if upper is None:
            return _quad(g, 0.0, math.inf, spec)
        hi = math.sqrt(upper)
        return _quad(g, 0.0, hi, spec, points=_breaks(hi))
    if tr is Transform.EXP_TAIL:
        def g(u):
            if u >= 1.0:
                return 0.0
            w = 1.0 - u
            return f(u / w) / (w * w)
        hi = 1.0 if upper is None else upper / (1.0 + upper)
        return _quad(g, 0.0, hi, spec)
    if upper is None:
        return _quad(f, 0.0, math.inf, spec)
    return _quad(f, 0.0, upper, spec, points=_breaks(upper))


def _breaks(hi: float):
    # Geometric breakpoints help QUADPACK find narrow features near 0.
    pts = hi * np.geomspace(1e-4, 0.5, 8)
    return list(pts)


def exp_moments(x: float, n: int) -> tuple[np.ndarray, float]:
    """Scaled moments ``J_l = int_0^1 u**l exp(-x u) du`` for ``l < n``.

    Returns ``(m, shift)`` with ``J_l = m[l] * exp(shift)``; ``shift`` is 0
    for ``x >= 0`` and ``-x`` otherwise, so ``m`` never overflows. Both
    branches use recurrences run in their stable direction.
    """
    if n < 1:
        raise ValueError("need at least one moment")
    ls = np.arange(n)
    if x == 0.0:
        return 1.0 / (ls + 1.0), 0.0
    if x > min(4 * n + 100, 600):
        # Far tail: P(l+1, x) is far from underflow, so the incomplete-gamma
        # form is accurate; the recurrence start exp(-x) would underflow.
        lg = np.array([math.lgamma(l + 1.0) - (l + 1.0) * math.log(x) for l in ls])
        p = np.array([lower_inc_gamma(l + 1.0, x) / math.gamma(l + 1.0) if l < 170
                      else special.gammainc(l + 1.0, x) for l in ls])
        return np.exp(lg) * p, 0.0
    if x > 0:
        return _moments_pos(x, n), 0.0
    return _moments_neg(-x, n), -x


def _moments_pos(x: float, n: int) -> np.ndarray:
    # T_l = (l+1) J_l = exp(-x) * 1F1(1; l+2; x), in (0, 1].
    # T_{l-1} = exp(-x) + x T_l / (l+1) adds positive terms only, so the
    # downward sweep is stable for every x >= 0.
    top = 2 * max(n, int(math.ceil(x))) + 40
    ex = math.exp(-x)
    # Laplace estimate near u = 1; its error is damped by the sweep.
    t = ex * (top + 1.0) / (top + 1.0 - x)
    out = np.empty(n)
    for l in range(top, 0, -1):
        if l <= n - 1:
            out[l] = t
        t = ex + x * t / (l + 1.0)
    out[0] = t
    return out / (np.arange(n) + 1.0)


def _moments_neg(y: float, n: int) -> np.ndarray:
    # U_l = (l+1) exp(-y) int_0^1 u**l exp(y u) du = 1F1(1; l+2; -y).
    # Upward U_l = (l+1)(1 - U_{l-1})/y is stable while l < y; downward
    # U_{l-1} = 1 - y U_l/(l+1) is stable while l > y.
    out = np.empty(n)
    split = min(n, int(math.floor(y)) + 1)
    u = -math.expm1(-y) / y
    out[0] = u
    for l in range(1, split):
        u = (l + 1.0) * (1.0 - u) / y
        out[l] = u
    if split < n:
        top = 2 * max(n, int(math.ceil(y))) + 40
        u = (top + 1.0) / (top + 1.0 + y)
        for l in range(top, split - 1, -1):
            if l <= n - 1:
                out[l] = u
            u = 1.0 - y * u / (l + 1.0)
        # u is now U_{split-1}; keep the upward value there.
    return out / (np.arange(n) + 1.0)
