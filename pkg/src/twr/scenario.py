"""Experiment parameterization for three-phase two-way AF relaying.

A :class:`Scenario` fixes the transmit power, the line geometry
(T1 -- R -- T2 with unit end-to-end distance), the path-loss exponent,
the relay power split and, for every node, the co-channel interferers.
All powers are linear and normalized to a unit noise variance.
"""

from __future__ import annotations

import enum
import json
import math
import warnings
from dataclasses import dataclass, field, replace
from types import MappingProxyType
from typing import Mapping, Sequence

import numpy as np

__all__ = [
    "NodeId", "InterfererSpec", "Scenario", "ProfileEntry",
    "InterferenceProfile", "ScenarioError", "ScenarioFormatError", "TieError", "ConditioningWarning",
    "channel_variances", "default_interferer_variances", "build_profile",
    "build_interference_profile", "swap_roles", "scenario_from_dict",
    "load_scenario", "db_to_linear",
]

CONDITIONING_THRESHOLD = 1e-3


class ScenarioError(ValueError):
    """Invalid scenario parameters."""


class ScenarioFormatError(ScenarioError):
    """Structurally malformed scenario document (missing or mistyped fields)."""


class TieError(ScenarioError):
    """Two interferer means coincide and the tie policy is ``"reject"``."""


class ConditioningWarning(UserWarning):
    """Interferer means are so close that the partial fractions cancel badly."""


class NodeId(str, enum.Enum):
    T1 = "T1"
    T2 = "T2"
    R = "R"

    def peer(self) -> "NodeId":
        if self is NodeId.R:
            raise ValueError("the relay has no peer terminal")
        return NodeId.T2 if self is NodeId.T1 else NodeId.T1


def db_to_linear(db: float | None) -> float:
    if db is None:
        return 0.0
    return 10.0 ** (float(db) / 10.0)


def channel_variances(D: float, v: float) -> tuple[float, float, float]:
    """Return ``(Omega0, Omega1, Omega2)`` for relay position ``D``.

    ``d(T1,T2) = 1``, ``d(T1,R) = 1 - D`` and ``d(T2,R) = D``.
    """
    if not 0.0 < D < 1.0:
        raise ScenarioError(f"relay position D must lie in (0, 1), got {D}")
    if v < 2.0:
        raise ScenarioError(f"path-loss exponent must be >= 2, got {v}")
    return 1.0, (1.0 - D) ** (-v), D ** (-v)


def default_interferer_variances(L: int) -> list[float]:
    """Interferer channel variances spread evenly over [0.1, 1]."""
    if L < 1:
        raise ScenarioError(f"interferer count must be >= 1, got {L}")
    if L == 1:
        return [1.0]
    return [0.1 + 0.9 * (k - 1) / (L - 1) for k in range(1, L + 1)]


@dataclass(frozen=True)
class InterfererSpec:
    """Interferers seen by one node: ``count`` sources of power ``power``.

    ``power == 0`` is the interference-free benchmark; only the Monte Carlo
    estimators accept it.
    """

    count: int
    power: float
    variances: tuple[float, ...] = ()

    def __post_init__(self):
        if self.count < 1:
            raise ScenarioError(f"interferer count must be >= 1, got {self.count}")
        if not self.variances:
            object.__setattr__(self, "variances",
                               tuple(default_interferer_variances(self.count)))
        else:
            object.__setattr__(self, "variances", tuple(float(x) for x in self.variances))
        if len(self.variances) != self.count:
            raise ScenarioError(
                f"expected {self.count} interferer variances, got {len(self.variances)}")
        if any(not x > 0 for x in self.variances):
            raise ScenarioError("interferer variances must be positive")
        if not (self.power >= 0 and math.isfinite(self.power)):
            raise ScenarioError(f"interferer power must be finite and >= 0, got {self.power}")

    @property
    def means(self) -> tuple[float, ...]:
        """Mean received power of each interferer, ``P_I * Omega_k``."""
        return tuple(self.power * x for x in self.variances)


@dataclass(frozen=True)
class Scenario:
    P: float
    v: float
    D: float
    omega: float
    interferers: Mapping[NodeId, InterfererSpec] = field(default_factory=dict)

    def __post_init__(self):
        if not (self.P > 0 and math.isfinite(self.P)):
            raise ScenarioError(f"transmit power must be positive, got {self.P}")
        if not 0.0 < self.omega < 1.0:
            raise ScenarioError(f"relay power split must lie in (0, 1), got {self.omega}")
        channel_variances(self.D, self.v)
        specs = {NodeId(k): s for k, s in dict(self.interferers).items()}
        missing = set(NodeId) - set(specs)
        if missing:
            raise ScenarioError(f"missing interferer specs for {sorted(m.value for m in missing)}")
        object.__setattr__(self, "interferers", MappingProxyType(specs))

    def __eq__(self, other):
        if not isinstance(other, Scenario):
            return NotImplemented
        return (self.P, self.v, self.D, self.omega) == (other.P, other.v, other.D, other.omega) \
            and dict(self.interferers) == dict(other.interferers)

    def __hash__(self):
        return hash((self.P, self.v, self.D, self.omega,
                     tuple(self.interferers[n] for n in NodeId)))

    @property
    def omega1(self) -> float:
        return 1.0 - self.omega

    @property
    def omega2(self) -> float:
        return self.omega

    @property
    def mean_snrs(self) -> tuple[float, float, float]:
        """``(gbar0, gbar1, gbar2)``: mean SNR of the direct, T1-R and T2-R links."""
        o0, o1, o2 = channel_variances(self.D, self.v)
        return self.P * o0, self.P * o1, self.P * o2

    @property
    def interference_free(self) -> bool:
        return all(self.interferers[n].power == 0 for n in NodeId)

    def with_(self, **changes) -> "Scenario":
        return replace(self, **changes)


def swap_roles(s: Scenario) -> Scenario:
    """View the scenario from T2: T1 and T2 exchange places."""
    specs = dict(s.interferers)
    specs[NodeId.T1], specs[NodeId.T2] = specs[NodeId.T2], specs[NodeId.T1]
    return Scenario(P=s.P, v=s.v, D=1.0 - s.D, omega=1.0 - s.omega, interferers=specs)


@dataclass(frozen=True)
class ProfileEntry:
    """Hyper-exponential law of the total interference power at one node.

    The density is ``sum_k phi[k] * exp(-t / xi[k])``.
    """

    xi: np.ndarray
    phi: np.ndarray
    gamma1: float
    gamma2: float
    ill_conditioned: bool = False

    def pdf(self, t):
        t = np.asarray(t, dtype=float)
        return np.sum(self.phi * np.exp(-t[..., None] / self.xi), axis=-1)


def _resolve_ties(xi: np.ndarray, policy: str) -> np.ndarray:
    xi = xi.copy()
    seen: dict[float, int] = {}
    for i, x in enumerate(xi):
        j = seen.get(x, 0)
        if j:
            if policy == "reject":
                raise TieError(
                    f"interferer means must be pairwise distinct (repeated {x:g})")
            xi[i] = x * (1.0 + j * 1e-9)
        seen[x] = j + 1
    if policy == "perturb" and len(set(xi.tolist())) != len(xi):
        raise TieError("perturbation failed to separate interferer means")
    return xi


def build_profile(spec: InterfererSpec, tie_policy: str = "reject") -> ProfileEntry:
    """Partial-fraction coefficients and moments for one node.

    The weights are those of the hypoexponential density,
    ``phi_k = xi_k**(L-2) / prod_{i != k} (xi_k - xi_i)``; for ``L <= 2``
    this is ``prod_{i != k} 1/(xi_k - xi_i)`` (``1/xi`` when ``L == 1``).
    """
    if tie_policy not in ("reject", "perturb"):
        raise ValueError(f"unknown tie policy {tie_policy!r}")
    if spec.power <= 0:
        raise ScenarioError("the analytic interference profile needs a positive interferer power")
    xi = _resolve_ties(np.asarray(spec.means, dtype=float), tie_policy)
    L = len(xi)
    phi = np.empty(L)
    for k in range(L):
        others = np.delete(xi, k)
        phi[k] = xi[k] ** (L - 2) / np.prod(xi[k] - others)
    ill = False
    if L > 1:
        gaps = np.abs(xi[:, None] - xi[None, :])[~np.eye(L, dtype=bool)]
        ill = gaps.min() / xi.max() < CONDITIONING_THRESHOLD
        if ill:
            warnings.warn(f"interferer means {xi.tolist()} are nearly equal; "
                          "partial-fraction weights lose precision", ConditioningWarning,
                          stacklevel=2)
    g1 = float(xi.sum())
    g2 = float(g1 ** 2 + np.sum(xi ** 2))
    norm = float(np.sum(phi * xi))
    if not abs(norm - 1.0) <= 1e-6:
        raise ScenarioError(f"interference density does not normalize (integral {norm:.3g})")
    return ProfileEntry(xi=xi, phi=phi, gamma1=g1, gamma2=g2, ill_conditioned=bool(ill))


@dataclass(frozen=True)
class InterferenceProfile:
    entries: Mapping[NodeId, ProfileEntry]

    def __getitem__(self, node) -> ProfileEntry:
        return self.entries[NodeId(node)]


def build_interference_profile(s: Scenario, tie_policy: str = "reject") -> InterferenceProfile:
    return InterferenceProfile(
        MappingProxyType({n: build_profile(s.interferers[n], tie_policy) for n in NodeId}))


def _parse_interferer(name: str, doc: Mapping) -> InterfererSpec:
    try:
        L = int(doc["L"])
        power = db_to_linear(doc.get("P_I_dB"))
    except (KeyError, TypeError, ValueError) as exc:
        raise ScenarioFormatError(f"interferers.{name}: {exc!r}") from exc
    variances: Sequence[float] = doc.get("variances") or ()
    return InterfererSpec(count=L, power=power, variances=tuple(variances))


def scenario_from_dict(doc: Mapping) -> Scenario:
    """Build a scenario from its JSON form.

    ``P_dB`` and ``P_I_dB`` are converted to linear power here and nowhere
    else; ``P_I_dB: null`` means an interference-free node. ``v`` defaults
    to 3.
    """
    if not isinstance(doc, Mapping):
        raise ScenarioFormatError("scenario document must be a JSON object")
    try:
        P = db_to_linear(doc["P_dB"])
        D = float(doc["D"])
        omega = float(doc["omega"])
        v = float(doc.get("v", 3.0))
        raw = doc["interferers"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ScenarioFormatError(f"bad scenario field: {exc!r}") from exc
    if not isinstance(raw, Mapping):
        raise ScenarioFormatError("interferers must be an object keyed by T1, T2, R")
    specs = {}
    for name in ("T1", "T2", "R"):
        if name not in raw:
            raise ScenarioFormatError(f"interferers.{name} is missing")
        specs[NodeId(name)] = _parse_interferer(name, raw[name])
    return Scenario(P=P, v=v, D=D, omega=omega, interferers=specs)


def load_scenario(path) -> Scenario:
    """Read a scenario JSON file.

    Raises ``json.JSONDecodeError``/``OSError`` for unreadable input and
    :class:`ScenarioError` for invalid content.
    """
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    return scenario_from_dict(doc)
