"""Parameter sweeps producing one CSV row per point.

A sweep document looks like::

    {"variable": "P_dB", "range": [0, 40, 9],
     "metrics": ["outage_pro_mc", "outage_lb"],
     "gamma_th": 7, "modulation": {"a": 0.5, "b": 1},
     "mc": {"n": 1000000, "seed": 1}, "sinr_kind": "min_bound",
     "fixed_ratio": true,
     "optimize": {"mode": "joint", "max_iter": 3}}

``fixed_ratio`` makes every interferer power follow ``P`` when ``P_dB`` is
swept. ``optimize`` replaces ``(omega, D)`` at each point by the optimizer
output. Sweeping ``iterations`` runs the alternating optimizer for that
many rounds (0 keeps the scenario's own split and position).
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import mcsim, metrics, optimizer
from .scenario import InterfererSpec, NodeId, Scenario, ScenarioError, db_to_linear

__all__ = ["SweepSpec", "SweepSpecError", "METRICS", "VARIABLES", "parse_sweep", "run_sweep",
           "render_csv", "apply_optimizer"]

MC_METRICS = ("outage_sys_mc", "outage_pro_mc", "ber_mc", "rate_mc")
ANALYTIC_METRICS = ("outage_lb", "outage_app", "outage_asy", "ber_lb", "ber_app", "ber_asy", "rate_app")
METRICS = MC_METRICS + ANALYTIC_METRICS
VARIABLES = ("P_dB", "gamma_th", "omega", "D", "iterations")
OPT_MODES = ("omega", "location", "joint", "grid")


class SweepSpecError(ValueError):
    """Malformed sweep document."""


@dataclass(frozen=True)
class SweepSpec:
    variable: str
    start: float
    stop: float
    steps: int
    metrics: tuple
    n: int = mcsim.DEFAULT_N
    seed: int = 0
    sinr_kind: str = "min_bound"
    gamma_th: float = metrics.DEFAULT_GAMMA_TH
    mod: metrics.ModulationConstants = metrics.BPSK
    fixed_ratio: bool = False
    optimize: dict = field(default_factory=dict)

    def points(self) -> np.ndarray:
        pts = np.linspace(self.start, self.stop, self.steps)
        return np.round(pts) if self.variable == "iterations" else pts

    def columns(self) -> list[str]:
        cols = [self.variable]
        for m in self.metrics:
            cols.append(m)
            if m in MC_METRICS:
                cols.append(m + "_se")
        return cols


def parse_sweep(doc, seed_override: int | None = None) -> SweepSpec:
    if not isinstance(doc, dict):
        raise SweepSpecError("sweep document must be a JSON object")
    try:
        variable = doc["variable"]
        start, stop, steps = doc["range"]
        names = tuple(doc["metrics"])
        mc = doc.get("mc", {}) or {}
        mod = doc.get("modulation") or {"a": 0.5, "b": 1.0}
        spec = SweepSpec(variable=variable, start=float(start), stop=float(stop), steps=int(steps),
                         metrics=names, n=int(mc.get("n", mcsim.DEFAULT_N)),
                         seed=int(mc.get("seed", 0) if seed_override is None else seed_override),
                         sinr_kind=str(doc.get("sinr_kind", "min_bound")),
                         gamma_th=float(doc.get("gamma_th", metrics.DEFAULT_GAMMA_TH)),
                         mod=metrics.ModulationConstants(float(mod["a"]), float(mod["b"])),
                         fixed_ratio=bool(doc.get("fixed_ratio", False)),
                         optimize=dict(doc.get("optimize") or {}))
    except (KeyError, TypeError, ValueError) as exc:
        raise SweepSpecError(f"bad sweep document: {exc!r}") from exc
    if spec.variable not in VARIABLES:
        raise SweepSpecError(f"unknown sweep variable {spec.variable!r}")
    if spec.steps < 2:
        raise SweepSpecError("a sweep needs at least 2 steps")
    bad = [m for m in spec.metrics if m not in METRICS]
    if bad or not spec.metrics:
        raise SweepSpecError(f"unknown or missing metrics {bad}")
    if len(set(spec.metrics)) != len(spec.metrics):
        raise SweepSpecError("duplicate metric names")
    if spec.sinr_kind not in {k.value for k in mcsim.SinrKind}:
        raise SweepSpecError(f"unknown sinr_kind {spec.sinr_kind!r}")
    if spec.optimize and spec.optimize.get("mode") not in OPT_MODES:
        raise SweepSpecError(f"optimize.mode must be one of {OPT_MODES}")
    if spec.n < 1:
        raise SweepSpecError("mc.n must be positive")
    return spec


def check_compatible(s: Scenario, spec: SweepSpec):
    """Analytic metrics need interference at every node."""
    if any(m in ANALYTIC_METRICS for m in spec.metrics) and any(
            s.interferers[n].power <= 0 for n in NodeId):
        raise ScenarioError("analytic metrics need a positive interferer power at every node")
    if spec.variable == "gamma_th" and spec.start <= 0:
        raise ScenarioError("gamma_th sweep must start above 0")


def apply_optimizer(s: Scenario, opt: dict) -> Scenario:
    """Scenario with ``(omega, D)`` set by the requested optimizer mode."""
    mode = opt.get("mode")
    obj = optimizer.ObjectiveL.from_scenario(s)
    if mode == "omega":
        return s.with_(omega=optimizer.omega_opt(obj.coeffs, *obj.gbars(s.D)))
    if mode == "location":
        return s.with_(D=optimizer.d_opt(obj.coeffs, s.omega, s.P, s.v))
    if mode == "grid":
        r = optimizer.grid_search(s, int(opt.get("resolution", 200)))
    else:
        r = optimizer.joint_optimize(s, int(opt.get("max_iter", 3)))
    return s.with_(omega=r.omega_opt, D=r.d_opt)


def _point_scenario(base: Scenario, spec: SweepSpec, x: float) -> tuple[Scenario, float]:
    s, g = base, spec.gamma_th
    if spec.variable == "P_dB":
        P = db_to_linear(x)
        if spec.fixed_ratio:
            k = P / base.P
            specs = {n: InterfererSpec(sp.count, sp.power * k, sp.variances)
                     for n, sp in base.interferers.items()}
            s = Scenario(P=P, v=base.v, D=base.D, omega=base.omega, interferers=specs)
        else:
            s = base.with_(P=P)
    elif spec.variable == "gamma_th":
        g = float(x)
    elif spec.variable == "omega":
        s = base.with_(omega=float(x))
    elif spec.variable == "D":
        s = base.with_(D=float(x))
    if spec.variable == "iterations":
        it = int(x)
        if it > 0:
            r = optimizer.joint_optimize(s, it)
            s = s.with_(omega=r.omega_opt, D=r.d_opt)
    elif spec.optimize:
        s = apply_optimizer(s, spec.optimize)
    return s, g


def _analytic(name: str, s: Scenario, g: float, mod) -> float:
    if name == "outage_asy":
        return metrics.protocol_outage_asymptotic(s, g).value
    if name == "ber_asy":
        return metrics.sum_ber_asymptotic(s, mod).value
    if name in ("outage_lb", "outage_app"):
        v = metrics.protocol_outage(s, g, "lower_bound" if name == "outage_lb" else "approx")
    elif name in ("ber_lb", "ber_app"):
        v = metrics.sum_ber(s, mod, "lower_bound" if name == "ber_lb" else "approx")
    else:
        v = metrics.ergodic_sum_rate(s)
    if v.diagnostics.get("nonconverged") or (v.diagnostics.get("diverged")
                                             and not v.diagnostics.get("substituted")):
        return math.nan
    return v.value


def _evaluate_point(base: Scenario, spec: SweepSpec, x: float) -> list[float]:
    s, g = _point_scenario(base, spec, x)
    want = set(spec.metrics)
    mc = {}
    if want & set(MC_METRICS):
        mc = mcsim.simulate(
            s, n=spec.n, seed=spec.seed, sinr_kind=spec.sinr_kind,
            gamma_th=g if want & {"outage_sys_mc", "outage_pro_mc"} else None,
            ber=(spec.mod.a, spec.mod.b) if "ber_mc" in want else None,
            rate="rate_mc" in want)
    key = {"outage_sys_mc": "outage_sys", "outage_pro_mc": "outage_pro", "ber_mc": "ber", "rate_mc": "rate"}
    row = [float(x)]
    for m in spec.metrics:
        if m in MC_METRICS:
            est = mc[key[m]]
            row += [est.mean, est.stderr]
        else:
            try:
                row.append(_analytic(m, s, g, spec.mod))
            except ArithmeticError:
                row.append(math.nan)
    return row


def run_sweep(base: Scenario, spec: SweepSpec, workers: int | None = None) -> tuple[list[str], list[list[float]]]:
    """Evaluate every sweep point; rows come back in sweep order."""
    check_compatible(base, spec)
    pts = spec.points()
    workers = mcsim.worker_count() if workers is None else workers
    if workers <= 1 or len(pts) == 1:
        rows = [_evaluate_point(base, spec, x) for x in pts]
    else:
        with ThreadPoolExecutor(min(workers, len(pts))) as ex:
            rows = list(ex.map(lambda x: _evaluate_point(base, spec, x), pts))
    return spec.columns(), rows


def _fmt(v: float) -> str:
    if isinstance(v, float) and math.isnan(v):
        return "nan"
    return f"{v:.9g}"


def render_csv(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(float(v)) for v in r])
    return buf.getvalue()
