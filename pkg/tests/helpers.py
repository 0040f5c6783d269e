"""Hand-built scenario fixtures shared across the test modules."""

from __future__ import annotations

import numpy as np

from reccoord.scenario import (BssParams, EvParams, Horizon, HpParams, Member,
                               Prices, Scenario, WbParams)


def flat_prices(n: int, imp: float = 0.4, exp: float = 0.1, fee: float = 0.01) -> Prices:
    return Prices(
        import_price=np.full(n, imp),
        export_price=np.full(n, exp),
        community_fee=np.full(n, fee),
    )


def series(n: int, **at) -> np.ndarray:
    """Zeros of length ``n`` with keyword overrides like ``t3=2.0``."""
    out = np.zeros(n)
    for key, value in at.items():
        out[int(key[1:])] = value
    return out


def make_member(member_id: str, n: int, fixed=None, pv=None, bss=None, ev=None,
                wb=None, hp=None) -> Member:
    return Member(
        id=member_id,
        fixed_load_kw=np.zeros(n) if fixed is None else np.asarray(fixed, dtype=float),
        pv_max_kw=np.zeros(n) if pv is None else np.asarray(pv, dtype=float),
        bss=bss, ev=ev, wb=wb, hp=hp,
    )


def make_scenario(members, steps: int = 4, num_days: int = 1,
                  imp: float = 0.4, exp: float = 0.1, fee: float = 0.01) -> Scenario:
    n = steps * num_days
    return Scenario(
        horizon=Horizon(steps_per_day=steps, dt_hours=24.0 / steps, num_days=num_days),
        prices=flat_prices(n, imp, exp, fee),
        members=tuple(members),
    )


def simple_wb(n: int, power_ref, temp_init: float = 60.0, limit: float = 50.0,
              temp_max: float = 80.0, coeff: float = 1.0, pmax: float = 4.0,
              usage_loss=None, usage_event=None, envelope=None,
              reluctance: float = 1.0) -> WbParams:
    return WbParams(
        thermal_coeff=coeff,
        max_power_kw=pmax,
        temp_init=temp_init,
        temp_max=np.full(n, temp_max),
        temp_limit=np.full(n, limit),
        usage_event=np.zeros(n) if usage_event is None else np.asarray(usage_event, dtype=float),
        usage_loss_kw=np.zeros(n) if usage_loss is None else np.asarray(usage_loss, dtype=float),
        envelope_loss_kw=np.zeros(n) if envelope is None else np.asarray(envelope, dtype=float),
        power_ref_kw=np.asarray(power_ref, dtype=float),
        reluctance_eur=reluctance,
    )


def simple_hp(n: int, power_ref, temp_init: float = 20.5, limit: float = 19.5,
              coeff: float = 0.2, cop: float = 3.0, pmax: float = 4.0,
              wall_loss=None, reluctance: float = 1.0) -> HpParams:
    return HpParams(
        thermal_coeff=coeff,
        max_power_kw=pmax,
        cop=cop,
        temp_init=temp_init,
        temp_limit=np.full(n, limit),
        wall_loss_kw=np.zeros(n) if wall_loss is None else np.asarray(wall_loss, dtype=float),
        power_ref_kw=np.asarray(power_ref, dtype=float),
        reluctance_eur=reluctance,
    )


def simple_ev(n: int, power_ref, plugged=None, arrival=None, departure=None,
              soc_arrival=None, soc_ref=None, capacity: float = 10.0,
              pmax: float = 5.0, eta: float = 1.0, soc_init: float = 0.2,
              reluctance: float = 1.0) -> EvParams:
    return EvParams(
        capacity_kwh=capacity,
        max_charge_kw=pmax,
        efficiency=eta,
        soc_init=soc_init,
        plugged=np.ones(n) if plugged is None else np.asarray(plugged, dtype=float),
        arrival=np.zeros(n) if arrival is None else np.asarray(arrival, dtype=float),
        departure=np.zeros(n) if departure is None else np.asarray(departure, dtype=float),
        soc_arrival=np.zeros(n) if soc_arrival is None else np.asarray(soc_arrival, dtype=float),
        soc_ref=np.zeros(n) if soc_ref is None else np.asarray(soc_ref, dtype=float),
        power_ref_kw=np.asarray(power_ref, dtype=float),
        reluctance_eur=reluctance,
    )


def simple_bss(capacity: float = 10.0, pmax: float = 5.0, eta: float = 1.0,
               soc_init: float = 0.5, soc_min: float = 0.0,
               soc_max: float = 1.0) -> BssParams:
    return BssParams(capacity_kwh=capacity, max_power_kw=pmax, efficiency=eta,
                     soc_init=soc_init, soc_min=soc_min, soc_max=soc_max)
