"""CDF of the per-terminal SINR upper bound.

The upper bound replaces the harmonic relay term by ``min(Y1, Y2)``, so
conditioned on the interference powers the SINR is a sum of two
independent exponentials. Averaging over the hyper-exponential
interference laws gives ``F(g) = 1 - F_direct(g) - F_relay(g)``, where the
relay part reduces to a one-dimensional integral over ``z in [0, g]``.

Four evaluators are provided:

``lower_bound``
    The closed form with the integral expanded as a power series whose
    moments are lower incomplete gamma functions.
``approx``
    The series-free approximation that evaluates the kernel denominator at
    ``z = g``.
``asymptotic``
    The second-order small-``g`` expansion, quadratic in ``g``.
``quad_oracle``
    Adaptive quadrature of the ``z``-integral; the reference for the other
    three.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .scenario import (NodeId, ProfileEntry, Scenario, build_profile, swap_roles)
from .specfun import QuadratureSpec, exp_moments, integrate_interval

__all__ = [
    "Method", "CdfContext", "SeriesControl", "AnalyticValue", "SeriesDivergence",
    "context_for_terminal", "interference_pdf", "cdf_lower_bound", "cdf_approx",
    "cdf_asymptotic", "cdf_quad_oracle", "cdf_for_terminal", "cdf_asymptotic_moments",
    "evaluate", "relay_integrand",
]

ASYMPTOTIC_VALIDITY = 0.1
ORACLE_QUAD = QuadratureSpec(abs_tol=1e-13, rel_tol=1e-11, max_subdivisions=500)


class SeriesDivergence(ArithmeticError):
    """The power series for the relay integral did not converge."""


class Method(str, enum.Enum):
    LOWER_BOUND = "lower_bound"
    APPROX = "approx"
    ASYMPTOTIC = "asymptotic"
    QUAD_ORACLE = "quad_oracle"


@dataclass(frozen=True)
class SeriesControl:
    tail_tol: float = 1e-10
    max_terms: int = 200

    def __post_init__(self):
        if not self.tail_tol > 0:
            raise ValueError("tail_tol must be positive")
        if self.max_terms < 8:
            raise ValueError("max_terms must be >= 8")


@dataclass(frozen=True)
class AnalyticValue:
    value: float
    method: Method
    diagnostics: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not (self.diagnostics.get("diverged") or self.diagnostics.get("nonconverged"))

    def __float__(self):
        return float(self.value)


@dataclass(frozen=True)
class CdfContext:
    """Everything the T1 CDF depends on.

    ``gap[i]`` and ``relay_rate[i]`` (i = 0, 1) are the decay-rate
    combinations ``1/g0 - relay_rate[i]`` and
    ``1/g1 + (w1 + i)/(w2 g2)``; ``pole[j, k]`` is the partial-fraction
    offset ``w2 g2 gap[0] / xi_R[k] + 1/xi_T[j]``.
    """

    gbar0: float
    gbar1: float
    gbar2: float
    omega1: float
    omega2: float
    term: ProfileEntry
    relay: ProfileEntry

    @property
    def relay_rate(self) -> tuple[float, float]:
        base = 1.0 / self.gbar1
        s = self.omega2 * self.gbar2
        return base + self.omega1 / s, base + (self.omega1 + 1.0) / s

    @property
    def gap(self) -> tuple[float, float]:
        l1, l2 = self.relay_rate
        return 1.0 / self.gbar0 - l1, 1.0 / self.gbar0 - l2

    @property
    def pole(self) -> np.ndarray:
        g1 = self.gap[0]
        return (self.omega2 * self.gbar2 * g1 / self.relay.xi[None, :]
                + 1.0 / self.term.xi[:, None])


def context_for_terminal(s: Scenario, terminal=NodeId.T1, tie_policy: str = "reject") -> CdfContext:
    terminal = NodeId(terminal)
    if terminal is NodeId.R:
        raise ValueError("the CDF is defined for terminals T1 and T2 only")
    if terminal is NodeId.T2:
        s = swap_roles(s)
    g0, g1, g2 = s.mean_snrs
    return CdfContext(gbar0=g0, gbar1=g1, gbar2=g2, omega1=s.omega1, omega2=s.omega2,
                      term=build_profile(s.interferers[NodeId.T1], tie_policy),
                      relay=build_profile(s.interferers[NodeId.R], tie_policy))


def interference_pdf(entry: ProfileEntry, t):
    """Density of the total interference power, ``sum_k phi_k exp(-t/xi_k)``."""
    return entry.pdf(t)


def _direct_term(ctx: CdfContext, g: float) -> float:
    """``Pr(direct SINR > g)`` averaged over the terminal interference."""
    x = ctx.term
    return math.exp(-g / ctx.gbar0) * float(np.sum(x.phi / (g / ctx.gbar0 + 1.0 / x.xi)))


def _lambda_terms(ctx: CdfContext, g: float, K: np.ndarray) -> np.ndarray:
    l1, l2 = ctx.relay_rate
    inv_xt = 1.0 / ctx.term.xi[:, None]
    first = math.exp(-l2 * g) / (l1 * g + inv_xt)
    second = math.exp(-g / ctx.gbar0) / (g / ctx.gbar0 + inv_xt)
    return ctx.gbar2 / K * (first - second)


def _assemble(ctx: CdfContext, g: float, psi_relay, psi_term, scale: float) -> float:
    """Relay part ``F_relay(g)`` from the two families of kernel integrals.

    ``psi_relay[k]`` / ``psi_term[j]`` already carry ``exp(-relay_rate[1] g)``
    through ``scale``.
    """
    K = g / ctx.gbar0 + ctx.pole
    g1 = ctx.gap[0]
    m = scale * (psi_relay[None, :] * (1.0 / K + 1.0 / K ** 2)
                 + psi_term[:, None] * (1.0 / (ctx.omega2 * K) + g1 * ctx.gbar2 / K ** 2))
    m = m + _lambda_terms(ctx, g, K)
    w = ctx.term.phi[:, None] * ctx.relay.phi[None, :]
    return ctx.omega2 / ctx.gbar0 * float(np.sum(w * m))


def _series(g: float, c: np.ndarray, r: np.ndarray, mom: np.ndarray, ctl: SeriesControl):
    """Sum ``(g/c) sum_l (-r)**l J_l`` for each kernel, with truncation."""
    n = len(mom)
    if np.any(np.abs(r) >= 1.0):
        raise SeriesDivergence(f"kernel ratio {np.max(np.abs(r)):.3g} >= 1")
    powers = (-r[:, None]) ** np.arange(n)[None, :]
    terms = (g / c)[:, None] * powers * mom[None, :]
    partial = np.cumsum(terms, axis=1)
    small = np.abs(terms) <= ctl.tail_tol * np.abs(partial)
    used = 0
    for row in small:
        run = np.convolve(row.astype(int), np.ones(3, dtype=int), mode="valid") == 3
        hit = np.flatnonzero(run)
        if hit.size == 0:
            raise SeriesDivergence(f"series not converged within {n} terms")
        used = max(used, int(hit[0]) + 3)
    return partial[:, used - 1], used


def _relay_kernels(ctx: CdfContext, g: float):
    """Linear denominators ``c + (z-coefficient) z`` of both kernel families."""
    l1, _ = ctx.relay_rate
    c_relay = g / ctx.gbar2 + ctx.omega2 / ctx.relay.xi
    c_term = l1 * g + 1.0 / ctx.term.xi
    return c_relay, -1.0 / ctx.gbar2, c_term, ctx.gap[0]


def cdf_lower_bound(ctx: CdfContext, g: float, ctl: SeriesControl = SeriesControl()) -> AnalyticValue:
    """Series form of the upper-bound SINR CDF (a lower bound on the true CDF)."""
    if g < 0:
        raise ValueError("SINR threshold must be >= 0")
    if g == 0:
        return AnalyticValue(0.0, Method.LOWER_BOUND, {"terms": 0})
    _, l2 = ctx.relay_rate
    gap2 = ctx.gap[1]
    mom, shift = exp_moments(gap2 * g, ctl.max_terms)
    scale = math.exp(-l2 * g + shift)
    c_relay, a_relay, c_term, a_term = _relay_kernels(ctx, g)
    try:
        psi_relay, n1 = _series(g, c_relay, a_relay * g / c_relay, mom, ctl)
        psi_term, n2 = _series(g, c_term, a_term * g / c_term, mom, ctl)
    except SeriesDivergence as exc:
        return AnalyticValue(math.nan, Method.LOWER_BOUND, {"diverged": True, "reason": str(exc)})
    F = 1.0 - _direct_term(ctx, g) - _assemble(ctx, g, psi_relay, psi_term, scale)
    return AnalyticValue(F, Method.LOWER_BOUND, {"terms": max(n1, n2)})


def _decay_integral(ctx: CdfContext, g: float) -> float:
    """``exp(-relay_rate[1] g) * int_0^g exp(-gap[1] z) dz``, cancellation-free."""
    _, l2 = ctx.relay_rate
    gap2 = ctx.gap[1]
    x = gap2 * g
    if abs(x) < 1e-6:
        return math.exp(-l2 * g) * g * (1.0 - 0.5 * x)
    if gap2 > 0:
        return math.exp(-l2 * g) * -math.expm1(-x) / gap2
    return math.exp(-g / ctx.gbar0) * math.expm1(x) / gap2


def cdf_approx(ctx: CdfContext, g: float) -> AnalyticValue:
    """Series-free approximation of the upper-bound CDF."""
    if g < 0:
        raise ValueError("SINR threshold must be >= 0")
    if g == 0:
        return AnalyticValue(0.0, Method.APPROX, {})
    c_relay, a_relay, c_term, a_term = _relay_kernels(ctx, g)
    e = _decay_integral(ctx, g)
    psi_relay = 1.0 / (c_relay + a_relay * g)
    psi_term = 1.0 / (c_term + a_term * g)
    F = 1.0 - _direct_term(ctx, g) - _assemble(ctx, g, psi_relay, psi_term, e)
    return AnalyticValue(F, Method.APPROX, {})


def cdf_asymptotic_moments(ctx: CdfContext, g: float) -> float:
    """Small-``g`` expansion written with interference moments only."""
    t, r = ctx.term, ctx.relay
    b = t.gamma2 + 2.0 * t.gamma1 + 1.0
    c = (r.gamma1 + 1.0) * (t.gamma1 + 1.0)
    return g * g / (2.0 * ctx.gbar0) * ((ctx.omega1 * b + c) / (ctx.omega2 * ctx.gbar2)
                                        + b / ctx.gbar1)


def cdf_asymptotic(ctx: CdfContext, g: float) -> AnalyticValue:
    """Quadratic small-``g`` expansion of the upper-bound CDF.

    Evaluated from the partial-fraction weights directly and cross-checked
    against :func:`cdf_asymptotic_moments`. Not clamped to [0, 1]; the
    ``valid`` flag drops once the value exceeds 0.1.
    """
    if g < 0:
        raise ValueError("SINR threshold must be >= 0")
    l1, l2 = ctx.relay_rate
    t, r = ctx.term, ctx.relay
    cross = np.sum(t.phi[:, None] * r.phi[None, :] * r.xi[None, :] ** 2
                   / (ctx.omega2 * ctx.gbar2) * (t.xi + t.xi ** 2)[:, None])
    own = np.sum(t.phi * (l2 * t.xi + (l1 + l2) * t.xi ** 2 + 2.0 * l1 * t.xi ** 3))
    F = g * g / (2.0 * ctx.gbar0) * float(cross + own)
    alt = cdf_asymptotic_moments(ctx, g)
    rel = abs(F - alt) / abs(alt) if alt else abs(F)
    return AnalyticValue(F, Method.ASYMPTOTIC,
                         {"moment_form": alt, "form_mismatch": rel,
                          "valid": F <= ASYMPTOTIC_VALIDITY})


def relay_integrand(ctx: CdfContext, g: float):
    """Integrand of ``F_relay(g)`` over ``z in [0, g]`` after the closed-form
    averaging over both interference powers."""
    l1, l2 = ctx.relay_rate
    gap1, gap2 = ctx.gap
    s = ctx.omega2 * ctx.gbar2
    t, r = ctx.term, ctx.relay
    kappa = s / r.xi
    inv_xt = 1.0 / t.xi

    def f(z):
        relay = np.sum(r.phi * s / (g - z + kappa))
        B = gap1 * z + l1 * g + inv_xt
        term = np.sum(t.phi * (1.0 / B + 1.0 / (B * B)))
        return math.exp(-l2 * g - gap2 * z) * relay * term / ctx.gbar0

    return f


def cdf_quad_oracle(ctx: CdfContext, g: float, spec: QuadratureSpec = ORACLE_QUAD) -> AnalyticValue:
    """Reference CDF: the relay integral is done by adaptive quadrature."""
    if g < 0:
        raise ValueError("SINR threshold must be >= 0")
    if g == 0:
        return AnalyticValue(0.0, Method.QUAD_ORACLE, {"quad_error": 0.0})
    res = integrate_interval(relay_integrand(ctx, g), 0.0, g, spec)
    F = 1.0 - _direct_term(ctx, g) - res.value
    return AnalyticValue(F, Method.QUAD_ORACLE,
                         {"quad_error": res.error, "nonconverged": not res.converged})


def cdf_for_terminal(s: Scenario, terminal, g: float, method="lower_bound",
                     ctl: SeriesControl = SeriesControl(), fallback: bool = False) -> AnalyticValue:
    """CDF of the upper-bound SINR at ``terminal`` (T2 via role swap).

    With ``fallback=True`` a diverged series is replaced by the quadrature
    oracle and the substitution is recorded in the diagnostics.
    """
    ctx = context_for_terminal(s, terminal)
    return evaluate(ctx, g, method, ctl, fallback)


def evaluate(ctx: CdfContext, g: float, method="lower_bound",
             ctl: SeriesControl = SeriesControl(), fallback: bool = False) -> AnalyticValue:
    method = Method(method)
    if method is Method.LOWER_BOUND:
        out = cdf_lower_bound(ctx, g, ctl)
        if fallback and out.diagnostics.get("diverged"):
            sub = cdf_quad_oracle(ctx, g)
            return AnalyticValue(sub.value, Method.LOWER_BOUND,
                                 {**sub.diagnostics, "substituted": True})
        return out
    if method is Method.APPROX:
        return cdf_approx(ctx, g)
    if method is Method.ASYMPTOTIC:
        return cdf_asymptotic(ctx, g)
    return cdf_quad_oracle(ctx, g)
