"""Named scenario + sweep bundles for the standard figure reproductions.

All bundles keep the signal-to-interference ratios fixed while ``P``
varies, put the relay at the midpoint with an even power split unless an
optimizer block says otherwise, use the default interferer variance
schedule and a path-loss exponent of 3.
"""

from __future__ import annotations

import copy

from .scenario import InterfererSpec, NodeId, Scenario, db_to_linear, scenario_from_dict

__all__ = [
    "PRESETS", "PRESET_VERSION", "get_preset", "asymmetric_scenario", "fig3_scenario",
    "fig4_scenario", "fig5_scenario", "fig6_scenario",
]

PRESET_VERSION = 1


def asymmetric_scenario(P_db: float, relay_db: float, t1_db: float, t2_db: float, L: int = 5,
                        omega: float = 0.5, D: float = 0.5, v: float = 3.0) -> Scenario:
    """Scenario whose interferer powers sit ``*_db`` below the transmit power."""
    P = db_to_linear(P_db)
    spec = lambda ratio_db: InterfererSpec(L, P / db_to_linear(ratio_db))
    return Scenario(P=P, v=v, D=D, omega=omega,
                    interferers={NodeId.T1: spec(t1_db), NodeId.T2: spec(t2_db), NodeId.R: spec(relay_db)})


def fig3_scenario(P_db: float) -> Scenario:
    return asymmetric_scenario(P_db, 20.0, 20.0, 20.0, L=2)


def fig4_scenario(P_db: float) -> Scenario:
    return asymmetric_scenario(P_db, 20.0, 20.0, 20.0, L=5)


def fig5_scenario(P_db: float, relay_db: float = 30.0, terminal_db: float = 30.0) -> Scenario:
    return asymmetric_scenario(P_db, relay_db, terminal_db, terminal_db, L=5)


def fig6_scenario(P_db: float = 20.0) -> Scenario:
    return asymmetric_scenario(P_db, 25.0, 25.0, 15.0, L=5)


def _scenario_doc(P_db, relay_db, t1_db, t2_db, L):
    node = lambda r: {"L": L, "P_I_dB": P_db - r}
    return {"P_dB": P_db, "v": 3.0, "D": 0.5, "omega": 0.5,
            "interferers": {"T1": node(t1_db), "T2": node(t2_db), "R": node(relay_db)}}


_P_RANGE = [0.0, 40.0, 9]
_MC = {"n": 10**6, "seed": 1}

PRESETS = {
    "fig2": {
        "scenario": _scenario_doc(0.0, 20.0, 20.0, 20.0, L=2),
        "sweep": {"variable": "P_dB", "range": _P_RANGE, "gamma_th": 7.0, "fixed_ratio": True,
                  "metrics": ["outage_sys_mc", "outage_pro_mc"], "mc": _MC, "sinr_kind": "exact"},
    },
    "fig3": {
        "scenario": _scenario_doc(0.0, 20.0, 20.0, 20.0, L=2),
        "sweep": {"variable": "P_dB", "range": _P_RANGE, "gamma_th": 7.0, "fixed_ratio": True,
                  "metrics": ["outage_pro_mc", "outage_lb", "outage_app", "outage_asy"],
                  "mc": _MC, "sinr_kind": "min_bound"},
    },
    "fig4": {
        "scenario": _scenario_doc(0.0, 20.0, 20.0, 20.0, L=5),
        "sweep": {"variable": "P_dB", "range": _P_RANGE, "fixed_ratio": True,
                  "modulation": {"a": 0.5, "b": 1.0},
                  "metrics": ["ber_mc", "ber_lb", "ber_app", "ber_asy"],
                  "mc": _MC, "sinr_kind": "min_bound"},
    },
    "fig5": {
        "scenario": _scenario_doc(0.0, 30.0, 30.0, 30.0, L=5),
        "sweep": {"variable": "P_dB", "range": _P_RANGE, "fixed_ratio": True,
                  "metrics": ["rate_mc", "rate_app"], "mc": _MC, "sinr_kind": "min_bound"},
    },
    "fig6": {
        "scenario": _scenario_doc(20.0, 25.0, 25.0, 15.0, L=5),
        "sweep": {"variable": "iterations", "range": [0, 3, 4], "gamma_th": 7.0,
                  "metrics": ["outage_pro_mc", "outage_lb", "outage_asy"],
                  "mc": _MC, "sinr_kind": "min_bound"},
    },
    "fig7": {
        "scenario": _scenario_doc(0.0, 25.0, 25.0, 15.0, L=5),
        "sweep": {"variable": "P_dB", "range": _P_RANGE, "gamma_th": 7.0, "fixed_ratio": True,
                  "optimize": {"mode": "joint", "max_iter": 3},
                  "metrics": ["outage_pro_mc", "outage_lb", "outage_asy"],
                  "mc": _MC, "sinr_kind": "min_bound"},
    },
    "fig8": {
        "scenario": _scenario_doc(0.0, 20.0, 20.0, 10.0, L=5),
        "sweep": {"variable": "P_dB", "range": _P_RANGE, "fixed_ratio": True,
                  "modulation": {"a": 0.5, "b": 1.0},
                  "optimize": {"mode": "joint", "max_iter": 3},
                  "metrics": ["ber_mc", "ber_lb", "ber_asy"], "mc": _MC, "sinr_kind": "min_bound"},
    },
}


def get_preset(name: str) -> tuple[Scenario, dict]:
    """``(scenario, sweep document)`` for a named bundle; raises ``KeyError``."""
    bundle = PRESETS[name]
    return scenario_from_dict(bundle["scenario"]), copy.deepcopy(bundle["sweep"])
