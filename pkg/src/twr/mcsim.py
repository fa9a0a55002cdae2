"""Seeded Monte Carlo estimates of outage, sum BER and sum rate.

Only received powers matter for every metric here, so a realization is a
row of exponential variates: the three desired-link gains followed by the
individual interferer powers at T1, T2 and R.

Reproducibility
---------------
Draw ``j`` belongs to block ``j // BLOCK``; block ``b`` is generated by a
Philox stream keyed on ``(seed, b)``. Per-block sums are merged in block
order, so estimates are bit-identical for any worker count.
"""

from __future__ import annotations

import enum
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import special

from . import _faults
from .scenario import NodeId, Scenario

__all__ = [
    "ChannelDraw", "SinrTriple", "MetricEstimate", "SinrKind", "OutageKind",
    "sample_draw", "sinr", "estimate_outage", "estimate_sum_ber", "estimate_sum_rate",
    "empirical_cdf", "outage_curve", "simulate", "block_rng", "worker_count", "BLOCK", "DEFAULT_N",
]

BLOCK = 1 << 16
DEFAULT_N = 10**6


class SinrKind(str, enum.Enum):
    EXACT = "exact"
    HARMONIC = "harmonic"
    MIN_BOUND = "min_bound"


class OutageKind(str, enum.Enum):
    SYSTEM = "system"
    PROTOCOL = "protocol"
    T1 = "T1"
    T2 = "T2"


@dataclass(frozen=True)
class ChannelDraw:
    """Received powers of one or many realizations (scalars or equal-length arrays)."""

    gamma0: np.ndarray
    gamma1: np.ndarray
    gamma2: np.ndarray
    Gamma_T1: np.ndarray
    Gamma_T2: np.ndarray
    Gamma_R: np.ndarray


@dataclass(frozen=True)
class SinrTriple:
    exact: np.ndarray
    harmonic: np.ndarray
    min_bound: np.ndarray

    def __getitem__(self, kind) -> np.ndarray:
        return getattr(self, SinrKind(kind).value)


@dataclass(frozen=True)
class MetricEstimate:
    mean: float
    stderr: float
    n: int
    seed: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("an estimate needs at least one sample")
        object.__setattr__(self, "mean", float(self.mean))
        object.__setattr__(self, "stderr", float(self.stderr))


def block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(block,))))


def worker_count() -> int:
    raw = os.environ.get("TWR_THREADS", "0").strip() or "0"
    n = int(raw)
    if n < 0:
        raise ValueError("TWR_THREADS must be >= 0")
    return n or (os.cpu_count() or 1)


def _layout(s: Scenario):
    g = np.array(s.mean_snrs)
    groups = [np.array(s.interferers[n].means) for n in (NodeId.T1, NodeId.T2, NodeId.R)]
    return np.concatenate([g] + groups), [len(x) for x in groups]


def sample_draw(s: Scenario, rng: np.random.Generator, size: int | None = None) -> ChannelDraw:
    """Draw ``size`` realizations (one scalar draw if ``size`` is None)."""
    scale, counts = _layout(s)
    m = 1 if size is None else int(size)
    x = rng.standard_exponential((m, len(scale))) * scale
    edges = np.cumsum([3] + counts)
    gt1 = x[:, edges[0]:edges[1]].sum(axis=1)
    gt2 = x[:, edges[1]:edges[2]].sum(axis=1)
    gr = x[:, edges[2]:edges[3]].sum(axis=1)
    cols = (x[:, 0], x[:, 1], x[:, 2], gt1, gt2, gr)
    if size is None:
        cols = tuple(float(c[0]) for c in cols)
    return ChannelDraw(*cols)


def _ratio(num, den):
    num = np.asarray(num, dtype=float)
    den = np.asarray(den, dtype=float)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(den > 0, num / np.where(den > 0, den, 1.0), 0.0)
    return out if out.ndim else float(out)


def sinr(d: ChannelDraw, s: Scenario, terminal=NodeId.T1) -> SinrTriple:
    """Exact, harmonic and min-bound SINR at ``terminal`` for draw(s) ``d``."""
    terminal = NodeId(terminal)
    if terminal is NodeId.R:
        raise ValueError("SINR is defined at the terminals only")
    if terminal is NodeId.T1:
        w1, w2 = s.omega1, s.omega2
        g0, gi, gj, gt = d.gamma0, d.gamma1, d.gamma2, d.Gamma_T1
    else:
        w1, w2 = s.omega2, s.omega1
        g0, gi, gj, gt = d.gamma0, d.gamma2, d.gamma1, d.Gamma_T2
    gr = d.Gamma_R
    den_relay = gr + w1 * gt + w1 + 1.0
    if _faults.active(_faults.DROP_OMEGA_GAMMA_T):
        den_relay = gr + w1 + 1.0
    y_d = g0 / (gt + 1.0)
    y1 = gi / (gt + 1.0)
    y2 = w2 * gj / den_relay
    extra = (gr + 1.0) / den_relay
    prod = y1 * y2
    harmonic = y_d + _ratio(prod, y1 + y2)
    exact = y_d + _ratio(prod, y1 + y2 + extra)
    bound = y_d + np.minimum(y1, y2)
    if np.ndim(bound) == 0:
        bound = float(bound)
    return SinrTriple(exact=exact, harmonic=harmonic, min_bound=bound)


# --- block engine -----------------------------------------------------------

def _run(s: Scenario, n: int, seed: int, kernel: Callable[[ChannelDraw], np.ndarray]):
    """Sum the per-block vectors ``kernel(draws)`` over ``n`` draws, in block order."""
    if n < 1:
        raise ValueError("need n >= 1")
    nblocks = -(-n // BLOCK)

    def one(b):
        m = min(BLOCK, n - b * BLOCK)
        d = sample_draw(s, block_rng(seed, b), m)
        return kernel(d)

    workers = min(worker_count(), nblocks)
    if workers <= 1:
        parts = [one(b) for b in range(nblocks)]
    else:
        with ThreadPoolExecutor(workers) as ex:
            parts = list(ex.map(one, range(nblocks)))
    total = parts[0].copy()
    for p in parts[1:]:
        total += p
    return total


def _pair(d, s, kind):
    kind = SinrKind(kind)
    return sinr(d, s, NodeId.T1)[kind], sinr(d, s, NodeId.T2)[kind]


def _mean_se(total, total_sq, n):
    mean = total / n
    var = max(total_sq / n - mean * mean, 0.0) * n / max(n - 1, 1)
    return mean, math.sqrt(var / n)


def _outage_from_sums(sums, n, kind: OutageKind, seed):
    c1, c2, c12, csys = sums
    p1, p2, p12 = c1 / n, c2 / n, c12 / n
    if kind is OutageKind.T1:
        return MetricEstimate(p1, _mean_se(c1, c1, n)[1], n, seed)
    if kind is OutageKind.T2:
        return MetricEstimate(p2, _mean_se(c2, c2, n)[1], n, seed)
    if kind is OutageKind.SYSTEM:
        return MetricEstimate(csys / n, _mean_se(csys, csys, n)[1], n, seed)
    # Delta method on p1 + p2 - p1 p2 with the sample covariance of (I1, I2).
    v1 = p1 * (1 - p1)
    v2 = p2 * (1 - p2)
    cov = p12 - p1 * p2
    g1, g2 = 1 - p2, 1 - p1
    var = (g1 * g1 * v1 + g2 * g2 * v2 + 2 * g1 * g2 * cov) / max(n - 1, 1)
    return MetricEstimate(p1 + p2 - p1 * p2, math.sqrt(max(var, 0.0)), n, seed)


def _outage_kernel(s, gamma_th, sinr_kind):
    def k(d):
        a, b = _pair(d, s, sinr_kind)
        i1, i2 = a < gamma_th, b < gamma_th
        return np.array([i1.sum(), i2.sum(), (i1 & i2).sum(), (i1 | i2).sum()], dtype=float)
    return k


def _outage_curve_kernel(s, gammas, sinr_kind):
    def k(d):
        a, b = _pair(d, s, sinr_kind)
        i1 = a[:, None] < gammas[None, :]
        i2 = b[:, None] < gammas[None, :]
        return np.concatenate([i1.sum(0), i2.sum(0), (i1 & i2).sum(0), (i1 | i2).sum(0)]).astype(float)
    return k


def outage_curve(s: Scenario, gammas: Sequence[float], n: int = DEFAULT_N, seed: int = 0,
                 kind="protocol", sinr_kind="exact") -> list[MetricEstimate]:
    """:func:`estimate_outage` at several thresholds on one shared set of draws."""
    g = np.asarray(gammas, dtype=float)
    if np.any(~(g > 0)):
        raise ValueError("thresholds must be positive")
    sums = _run(s, n, seed, _outage_curve_kernel(s, g, sinr_kind)).reshape(4, len(g))
    return [_outage_from_sums(sums[:, i], n, OutageKind(kind), seed) for i in range(len(g))]


def estimate_outage(s: Scenario, gamma_th: float, n: int = DEFAULT_N, seed: int = 0,
                    kind="protocol", sinr_kind="exact") -> MetricEstimate:
    """Empirical outage probability.

    ``kind`` is ``"system"`` (either terminal below threshold), ``"protocol"``
    (``p1 + p2 - p1 p2`` from per-terminal rates on shared draws), or a
    terminal name for the per-terminal rate.
    """
    if not gamma_th > 0:
        raise ValueError("gamma_th must be positive")
    sums = _run(s, n, seed, _outage_kernel(s, gamma_th, sinr_kind))
    return _outage_from_sums(sums, n, OutageKind(kind), seed)


def _ber_kernel(s, a, b, sinr_kind):
    def k(d):
        y1, y2 = _pair(d, s, sinr_kind)
        e = a * (special.erfc(np.sqrt(b * y1)) + special.erfc(np.sqrt(b * y2)))
        return np.array([e.sum(), (e * e).sum()])
    return k


def estimate_sum_ber(s: Scenario, a: float = 0.5, b: float = 1.0, n: int = DEFAULT_N,
                     seed: int = 0, sinr_kind="exact") -> MetricEstimate:
    """Mean of ``a erfc(sqrt(b Y_T1)) + a erfc(sqrt(b Y_T2))``."""
    if not (0 < a <= 1 and b > 0):
        raise ValueError("need 0 < a <= 1 and b > 0")
    t, t2 = _run(s, n, seed, _ber_kernel(s, a, b, sinr_kind))
    return MetricEstimate(*_mean_se(t, t2, n), n, seed)


def _rate_kernel(s, sinr_kind):
    def k(d):
        y1, y2 = _pair(d, s, sinr_kind)
        r = (np.log2(1.0 + y1) + np.log2(1.0 + y2)) / 3.0
        return np.array([r.sum(), (r * r).sum()])
    return k


def estimate_sum_rate(s: Scenario, n: int = DEFAULT_N, seed: int = 0,
                      sinr_kind="exact") -> MetricEstimate:
    """Mean of ``(log2(1 + Y_T1) + log2(1 + Y_T2)) / 3``."""
    t, t2 = _run(s, n, seed, _rate_kernel(s, sinr_kind))
    return MetricEstimate(*_mean_se(t, t2, n), n, seed)


def empirical_cdf(s: Scenario, gammas: Sequence[float], terminal=NodeId.T1, n: int = DEFAULT_N,
                  seed: int = 0, sinr_kind="min_bound") -> list[MetricEstimate]:
    """Empirical ``Pr(Y_terminal < g)`` for every ``g`` in ``gammas`` on shared draws."""
    g = np.asarray(gammas, dtype=float)
    terminal = NodeId(terminal)

    def k(d):
        y = sinr(d, s, terminal)[SinrKind(sinr_kind)]
        return (y[:, None] < g[None, :]).sum(axis=0).astype(float)

    counts = _run(s, n, seed, k)
    return [MetricEstimate(c / n, _mean_se(c, c, n)[1], n, seed) for c in counts]


def simulate(s: Scenario, n: int = DEFAULT_N, seed: int = 0, sinr_kind="exact",
             gamma_th: float | None = 7.0, ber: tuple[float, float] | None = (0.5, 1.0),
             rate: bool = True) -> dict[str, MetricEstimate]:
    """All requested metrics from one shared set of draws.

    Keys: ``outage_sys``, ``outage_pro``, ``outage_T1``, ``outage_T2``,
    ``ber``, ``rate`` (only those requested).
    """
    kernels = []
    if gamma_th is not None:
        kernels.append(("outage", 4, _outage_kernel(s, gamma_th, sinr_kind)))
    if ber is not None:
        kernels.append(("ber", 2, _ber_kernel(s, ber[0], ber[1], sinr_kind)))
    if rate:
        kernels.append(("rate", 2, _rate_kernel(s, sinr_kind)))
    if not kernels:
        return {}

    def k(d):
        return np.concatenate([f(d) for _, _, f in kernels])

    sums = _run(s, n, seed, k)
    out, pos = {}, 0
    for name, width, _ in kernels:
        part = sums[pos:pos + width]
        pos += width
        if name == "outage":
            for key, kind in (("outage_sys", OutageKind.SYSTEM), ("outage_pro", OutageKind.PROTOCOL),
                              ("outage_T1", OutageKind.T1), ("outage_T2", OutageKind.T2)):
                out[key] = _outage_from_sums(part, n, kind, seed)
        else:
            out[name] = MetricEstimate(*_mean_se(part[0], part[1], n), n, seed)
    return out
