"""Analytic protocol outage, sum BER and ergodic sum rate.

Sum BER and rate are evaluated from their defining CDF integrals by
adaptive quadrature rather than through hypergeometric closed forms:

* BER at one terminal: ``a sqrt(b/pi) int_0^inf F(g) exp(-b g) g**-0.5 dg``,
  integrated in ``u = sqrt(g)`` so the endpoint singularity disappears.
* Rate at one terminal: ``1/(3 ln 2) int_0^inf (1 - F(g)) / (1 + g) dg``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .scenario import NodeId, Scenario, build_profile
from .sinrcdf import AnalyticValue, Method, SeriesControl, context_for_terminal, evaluate
from .specfun import QuadratureSpec, Transform, gamma_fn, integrate_interval, integrate_semi_infinite

__all__ = [
    "ModulationConstants", "BPSK", "QPSK", "OptimCoefficients", "protocol_outage",
    "protocol_outage_asymptotic", "sum_ber", "sum_ber_asymptotic", "ergodic_sum_rate",
    "ber_weight", "DEFAULT_GAMMA_TH",
]

DEFAULT_GAMMA_TH = 7.0
# exp(-36.84) ~ 1e-16: beyond u_max = sqrt(36.84/b) the BER weight is negligible.
_BER_EXP_CUTOFF = 36.84
_RATE_TAIL = 1e-12
_BER_QUAD = QuadratureSpec(abs_tol=1e-12, rel_tol=1e-9, max_subdivisions=400, transform=Transform.SQRT)
_RATE_QUAD = QuadratureSpec(abs_tol=1e-10, rel_tol=1e-9, max_subdivisions=400)


@dataclass(frozen=True)
class ModulationConstants:
    """Conditional bit error probability ``a * erfc(sqrt(b * g))``."""

    a: float
    b: float

    def __post_init__(self):
        if not (0.0 < self.a <= 1.0):
            raise ValueError(f"a must lie in (0, 1], got {self.a}")
        if not self.b > 0:
            raise ValueError(f"b must be positive, got {self.b}")


BPSK = ModulationConstants(0.5, 1.0)
QPSK = ModulationConstants(0.5, 0.5)


@dataclass(frozen=True)
class OptimCoefficients:
    """Interference moment combinations of the high-SNR outage.

    ``B_i = E[G_Ti**2] + 2 E[G_Ti] + 1`` and
    ``C_i = (E[G_R] + 1)(E[G_Ti] + 1)``; all equal 1 without interference.
    """

    B1: float
    B2: float
    C1: float
    C2: float

    @classmethod
    def from_scenario(cls, s: Scenario) -> "OptimCoefficients":
        t1 = build_profile(s.interferers[NodeId.T1])
        t2 = build_profile(s.interferers[NodeId.T2])
        r = build_profile(s.interferers[NodeId.R])
        b = lambda p: p.gamma2 + 2.0 * p.gamma1 + 1.0
        c = lambda p: (r.gamma1 + 1.0) * (p.gamma1 + 1.0)
        return cls(B1=b(t1), B2=b(t2), C1=c(t1), C2=c(t2))


def protocol_outage(s: Scenario, gamma_th: float = DEFAULT_GAMMA_TH, method="lower_bound",
                    ctl: SeriesControl = SeriesControl(), fallback: bool = True) -> AnalyticValue:
    """``F1 + F2 - F1 F2`` with per-terminal CDFs from ``method``."""
    if not gamma_th > 0:
        raise ValueError("gamma_th must be positive")
    method = Method(method)
    if method not in (Method.LOWER_BOUND, Method.APPROX, Method.QUAD_ORACLE):
        raise ValueError(f"protocol_outage does not support method {method.value!r}")
    f1 = evaluate(context_for_terminal(s, NodeId.T1), gamma_th, method, ctl, fallback)
    f2 = evaluate(context_for_terminal(s, NodeId.T2), gamma_th, method, ctl, fallback)
    p = f1.value + f2.value - f1.value * f2.value
    return AnalyticValue(p, method, {"T1": f1.value, "T2": f2.value,
                                     "diverged": not (f1.ok and f2.ok),
                                     "substituted": bool(f1.diagnostics.get("substituted")
                                                         or f2.diagnostics.get("substituted"))})


def _asy_terms(s: Scenario, co: OptimCoefficients, gamma_th: float) -> tuple[float, float]:
    g0, g1, g2 = s.mean_snrs
    w1, w2 = s.omega1, s.omega2
    k = gamma_th ** 2 / (2.0 * g0)
    t1 = k * ((w1 * co.B1 + co.C1) / (w2 * g2) + co.B1 / g1)
    t2 = k * ((w2 * co.B2 + co.C2) / (w1 * g1) + co.B2 / g2)
    return t1, t2


def protocol_outage_asymptotic(s: Scenario, gamma_th: float = DEFAULT_GAMMA_TH) -> AnalyticValue:
    """High-SNR protocol outage, the sum of the two per-terminal quadratic terms.

    Invariant under a common scaling of signal and interference powers.
    """
    if not gamma_th > 0:
        raise ValueError("gamma_th must be positive")
    t1, t2 = _asy_terms(s, OptimCoefficients.from_scenario(s), gamma_th)
    return AnalyticValue(t1 + t2, Method.ASYMPTOTIC, {"T1": t1, "T2": t2})


def ber_weight(mod: ModulationConstants, g: float) -> float:
    """Density ``a sqrt(b/pi) exp(-b g) / sqrt(g)`` that turns a CDF into a BER."""
    return mod.a * math.sqrt(mod.b / math.pi) * math.exp(-mod.b * g) / math.sqrt(g)


def _terminal_ber(s, terminal, mod, method, ctl):
    ctx = context_for_terminal(s, terminal)
    subs = 0

    def F(g):
        nonlocal subs
        v = evaluate(ctx, g, method, ctl, fallback=True)
        subs += bool(v.diagnostics.get("substituted"))
        return v.value

    c = mod.a * math.sqrt(mod.b / math.pi)
    res = integrate_semi_infinite(lambda g: c * F(g) * math.exp(-mod.b * g) / math.sqrt(g),
                                  _BER_QUAD, upper=_BER_EXP_CUTOFF / mod.b)
    return res, subs


def sum_ber(s: Scenario, mod: ModulationConstants = BPSK, method="lower_bound",
            ctl: SeriesControl = SeriesControl()) -> AnalyticValue:
    """Sum of the two terminals' average BER from their SINR CDFs."""
    method = Method(method)
    if method not in (Method.LOWER_BOUND, Method.APPROX, Method.QUAD_ORACLE):
        raise ValueError(f"sum_ber does not support method {method.value!r}")
    r1, s1 = _terminal_ber(s, NodeId.T1, mod, method, ctl)
    r2, s2 = _terminal_ber(s, NodeId.T2, mod, method, ctl)
    return AnalyticValue(r1.value + r2.value, method,
                         {"T1": r1.value, "T2": r2.value, "quad_error": r1.error + r2.error,
                          "nonconverged": not (r1.converged and r2.converged),
                          "series_substitutions": s1 + s2})


def sum_ber_asymptotic(s: Scenario, mod: ModulationConstants = BPSK,
                       gamma_th_ref: float = DEFAULT_GAMMA_TH) -> AnalyticValue:
    """High-SNR sum BER, proportional to the asymptotic protocol outage.

    The outage grows as ``gamma_th**2`` so the result does not depend on
    ``gamma_th_ref``.
    """
    if not gamma_th_ref > 0:
        raise ValueError("gamma_th_ref must be positive")
    p = protocol_outage_asymptotic(s, gamma_th_ref)
    k = mod.a * gamma_fn(2.5) / (math.sqrt(math.pi) * mod.b ** 2 * gamma_th_ref ** 2)
    return AnalyticValue(k * p.value, Method.ASYMPTOTIC, {"slope": k, "outage": p.value})


def _rate_upper(ctx, ccdf) -> float:
    hi = max(ctx.gbar0, 1.0)
    while ccdf(hi) > _RATE_TAIL:
        hi *= 2.0
        if hi > 1e12:
            break
    return hi


def _terminal_rate(s, terminal, method):
    ctx = context_for_terminal(s, terminal)

    def ccdf(g):
        return max(0.0, 1.0 - evaluate(ctx, g, method, fallback=True).value)

    hi = _rate_upper(ctx, ccdf)
    pts = [hi * x for x in (1e-4, 1e-3, 1e-2, 0.05, 0.2, 0.5)]
    res = integrate_interval(lambda g: ccdf(g) / (1.0 + g), 0.0, hi, _RATE_QUAD, points=pts)
    return res, hi


def ergodic_sum_rate(s: Scenario, method="approx") -> AnalyticValue:
    """Ergodic sum rate (bit/s/Hz) with a 1/3 pre-log per flow.

    The default integrates the series-free approximate CDF. Passing
    ``method="lower_bound"`` (or ``"quad_oracle"``) integrates the exact
    upper-bound CDF instead, which is slower but tracks simulation more
    closely at high SNR.
    """
    method = Method(method)
    if method is Method.ASYMPTOTIC:
        raise ValueError("the quadratic CDF expansion cannot be integrated to infinity")
    k = 1.0 / (3.0 * math.log(2.0))
    r1, h1 = _terminal_rate(s, NodeId.T1, method)
    r2, h2 = _terminal_rate(s, NodeId.T2, method)
    return AnalyticValue(k * (r1.value + r2.value), method,
                         {"T1": k * r1.value, "T2": k * r2.value,
                          "quad_error": k * (r1.error + r2.error), "cutoff": max(h1, h2),
                          "nonconverged": not (r1.converged and r2.converged)})
