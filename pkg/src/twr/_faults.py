"""Opt-in fault injection used to check that the validation battery bites.

Set ``TWR_MUTATION`` to a comma-separated list of fault names. Unknown
names are rejected so a typo cannot silently disable a check.
"""

from __future__ import annotations

import os

DROP_OMEGA_GAMMA_T = "drop_omega_gamma_t"
SWAP_BC_OMEGA = "swap_bc_omega"
KNOWN = frozenset({DROP_OMEGA_GAMMA_T, SWAP_BC_OMEGA})


def active(name: str) -> bool:
    raw = os.environ.get("TWR_MUTATION", "")
    names = {x.strip() for x in raw.split(",") if x.strip()}
    unknown = names - KNOWN
    if unknown:
        raise ValueError(f"unknown TWR_MUTATION value(s): {sorted(unknown)}")
    return name in names
