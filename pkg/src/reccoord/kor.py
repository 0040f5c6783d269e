"""Keys of Repartition: rule-based splitting of a requested volume over offers.

Each key takes a vector of nonnegative per-member capacity offers (kW) and a
requested volume (kW) for one timestep and one direction, and returns the
activated power per member.  Every key guarantees

    0 <= activation[u] <= offers[u]      and      sum(activation) <= request.

The arithmetic runs on exact rationals so that equal splits and caps compose
without float drift; results are converted back to floats at the end.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

import numpy as np


def _to_fractions(offers: Sequence[float]) -> list[Fraction]:
    out = []
    for cap in offers:
        f = Fraction(float(cap))
        if f < 0:
            raise ValueError(f"offer {cap} is negative")
        out.append(f)
    return out


def _request_fraction(request: float) -> Fraction:
    r = Fraction(float(request))
    if r < 0:
        raise ValueError(f"request {request} is negative")
    return r


def equal_key(offers: Sequence[float], request: float) -> np.ndarray:
    """Split the request equally over members that offered anything.

    Shares capped by an offer are *not* redistributed, so the dispatched total
    can undershoot the request; the cascade key exists to close that gap.
    """
    caps = _to_fractions(offers)
    req = _request_fraction(request)
    providers = sum(1 for c in caps if c > 0)
    if providers == 0 or req == 0:
        return np.zeros(len(caps))
    share = req / providers
    return np.array([float(min(share, c)) if c > 0 else 0.0 for c in caps])


def prorate_key(offers: Sequence[float], request: float) -> np.ndarray:
    """Split the request proportionally to each member's offered capacity."""
    caps = _to_fractions(offers)
    req = _request_fraction(request)
    total = sum(caps, Fraction(0))
    if total == 0 or req == 0:
        return np.zeros(len(caps))
    return np.array([float(min(c / total * req, c)) for c in caps])


def cascade_key(offers: Sequence[float], request: float) -> np.ndarray:
    """Iterated equal splits over members with remaining capacity.

    Re-offers the undershoot of each equal round to the members that still
    have headroom, so the dispatched total is exactly
    ``min(request, sum(offers))``.

    The rational arithmetic makes zero-thresholds safe: every round either
    saturates a member exactly or exhausts the request exactly, so the loop
    runs at most ``len(offers) + 1`` times.
    """
    caps = _to_fractions(offers)
    req = _request_fraction(request)
    act = [Fraction(0)] * len(caps)
    remaining_req = req
    while remaining_req > 0:
        providers = [u for u, c in enumerate(caps) if c - act[u] > 0]
        if not providers:
            break
        share = remaining_req / len(providers)
        for u in providers:
            act[u] = min(caps[u], act[u] + share)
        remaining_req = req - sum(act, Fraction(0))
    return np.array([float(a) for a in act])


KEYS = {
    "equal": equal_key,
    "prorate": prorate_key,
    "cascade": cascade_key,
}


def get_key(name: str):
    try:
        return KEYS[name]
    except KeyError:
        raise ValueError(f"unknown repartition key {name!r}; choose from {sorted(KEYS)}") from None
