"""Relay power split and relay position that minimize high-SNR outage.

The asymptotic protocol outage is ``gamma_th**2 / (2 P) * L(omega, D)``
with

    L = (B2 - B1)/g2 + (B1 + C1)/(omega g2) + (B1 - B2)/g1 + (B2 + C2)/((1 - omega) g1),

``g1 = P (1 - D)**-v`` and ``g2 = P D**-v``. ``L`` is convex in ``omega``
for fixed ``D`` and in ``D`` for fixed ``omega``, and each single-variable
minimizer has a closed form. :func:`joint_optimize` alternates them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize as _sopt

from . import _faults
from .metrics import OptimCoefficients
from .scenario import Scenario

__all__ = [
    "DegenerateRatio", "ObjectiveL", "OptResult", "omega_opt", "d_opt",
    "joint_optimize", "grid_search", "CLAMP",
]

CLAMP = 1e-4


class DegenerateRatio(ArithmeticError):
    """The closed-form relay position is undefined (non-positive ratio)."""


def _clamp(x: float) -> float:
    return min(max(x, CLAMP), 1.0 - CLAMP)


@dataclass(frozen=True)
class ObjectiveL:
    coeffs: OptimCoefficients
    P: float
    v: float

    @classmethod
    def from_scenario(cls, s: Scenario) -> "ObjectiveL":
        return cls(OptimCoefficients.from_scenario(s), s.P, s.v)

    def gbars(self, D):
        """``(g1, g2)`` for relay position ``D`` (arrays broadcast)."""
        return self.P * (1.0 - D) ** -self.v, self.P * D ** -self.v

    def __call__(self, omega, D):
        c = self.coeffs
        g1, g2 = self.gbars(D)
        return ((c.B2 - c.B1) / g2 + (c.B1 + c.C1) / (omega * g2)
                + (c.B1 - c.B2) / g1 + (c.B2 + c.C2) / ((1.0 - omega) * g1))

    def outage(self, omega, D, gamma_th: float = 7.0):
        """Asymptotic protocol outage at ``(omega, D)``."""
        return gamma_th ** 2 / (2.0 * self.P) * self(omega, D)


@dataclass(frozen=True)
class OptResult:
    omega_opt: float
    d_opt: float
    objective: float
    iterations: int
    trace: list = field(default_factory=list)
    half_steps: list = field(default_factory=list)
    fallbacks: int = 0

    def as_dict(self) -> dict:
        return {"omega_opt": self.omega_opt, "d_opt": self.d_opt, "objective": self.objective,
                "iterations": self.iterations,
                "trace": [{"iteration": i, "omega": w, "D": d, "objective": o}
                          for i, (w, d, o) in enumerate(self.trace)],
                "fallbacks": self.fallbacks}


def omega_opt(coeffs: OptimCoefficients, g1: float, g2: float) -> float:
    """Power split minimizing ``L`` at fixed link SNRs ``g1, g2``."""
    if not (g1 > 0 and g2 > 0):
        raise ValueError("mean SNRs must be positive")
    s1, s2 = coeffs.B1 + coeffs.C1, coeffs.B2 + coeffs.C2
    if _faults.active(_faults.SWAP_BC_OMEGA):
        s1, s2 = coeffs.B2 + coeffs.C2, coeffs.B1 + coeffs.C1
    a = math.sqrt(s1 * g1)
    b = math.sqrt(s2 * g2)
    return a / (a + b)


def _position_ratio(c: OptimCoefficients, w: float) -> tuple[float, float]:
    num = w * (1 - w) * (c.B2 - c.B1) + (1 - w) * (c.B1 + c.C1)
    den = w * (1 - w) * (c.B1 - c.B2) + w * (c.B2 + c.C2)
    return num, den


def d_opt(coeffs: OptimCoefficients, omega: float, P: float = 1.0, v: float = 3.0) -> float:
    """Relay position minimizing ``L`` at fixed power split ``omega``.

    ``P`` scales ``L`` uniformly and does not move the minimizer; it is
    accepted for symmetry with :class:`ObjectiveL`.
    """
    if not 0.0 < omega < 1.0:
        raise ValueError("omega must lie in (0, 1)")
    if v <= 1.0:
        raise ValueError("path-loss exponent must exceed 1")
    num, den = _position_ratio(coeffs, omega)
    if not (den > 0 and num > 0):
        raise DegenerateRatio(f"position ratio {num:.3g}/{den:.3g} is not positive")
    return 1.0 / ((num / den) ** (1.0 / (v - 1.0)) + 1.0)


def _d_by_search(obj: ObjectiveL, omega: float) -> float:
    res = _sopt.minimize_scalar(lambda d: obj(omega, d), bounds=(CLAMP, 1 - CLAMP),
                                method="bounded", options={"xatol": 1e-10})
    return float(res.x)


def joint_optimize(s: Scenario, max_iter: int = 3) -> OptResult:
    """Alternate the closed-form power split and position updates.

    Starts from ``D = 0.5`` and runs exactly ``max_iter`` rounds. ``trace[0]``
    is the unoptimized point ``(0.5, 0.5)``; ``trace[l]`` holds
    ``(omega_l, D_l, L)`` after round ``l``. ``half_steps[l-1]`` is the
    objective after the power update of round ``l``, before the position
    update.
    """
    if int(max_iter) != max_iter or max_iter < 1:
        raise ValueError("max_iter must be a positive integer")
    obj = ObjectiveL.from_scenario(s)
    w, D = 0.5, 0.5
    trace = [(w, D, float(obj(w, D)))]
    half = []
    fallbacks = 0
    for _ in range(int(max_iter)):
        g1, g2 = obj.gbars(D)
        w = _clamp(omega_opt(obj.coeffs, g1, g2))
        half.append((w, D, float(obj(w, D))))
        try:
            D = _clamp(d_opt(obj.coeffs, w, s.P, s.v))
        except DegenerateRatio:
            D = _clamp(_d_by_search(obj, w))
            fallbacks += 1
        trace.append((w, D, float(obj(w, D))))
    return OptResult(omega_opt=w, d_opt=D, objective=trace[-1][2], iterations=int(max_iter),
                     trace=trace, half_steps=half, fallbacks=fallbacks)


def grid_search(s: Scenario, resolution: int = 200) -> OptResult:
    """Exhaustive minimum of ``L`` on a ``resolution x resolution`` interior grid.

    Grid nodes are ``k / (resolution + 1)``; ties go to the smallest
    ``(omega, D)`` in lexicographic order.
    """
    if resolution < 10:
        raise ValueError("resolution must be >= 10")
    obj = ObjectiveL.from_scenario(s)
    x = np.linspace(1.0, resolution, resolution) / (resolution + 1.0)
    vals = obj(x[:, None], x[None, :])
    i, j = np.unravel_index(int(np.argmin(vals)), vals.shape)
    w, D = float(x[i]), float(x[j])
    return OptResult(omega_opt=w, d_opt=D, objective=float(vals[i, j]), iterations=0,
                     trace=[(w, D, float(vals[i, j]))])
