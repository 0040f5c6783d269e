"""Forward simulation of the four equivalent-battery device models.

These are exact recurrences over power schedules: given a schedule they
reproduce the state trajectory (SoC fraction for batteries and vehicles,
degrees Celsius for thermal devices) with no clipping and no feasibility
repair.  Planners use them to cross-check optimizer output, so they must stay
independent of any LP machinery.

Conventions:

* the state stored at index ``t`` is the state at the *end* of step ``t``;
* the predecessor of step 0 is the device's initial state (overridable for
  day-to-day carry-over);
* thermal coefficients are degC per kWh and multiply the net energy flux.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .scenario import BssParams, EvParams, HpParams, WbParams


@dataclass(frozen=True)
class Discomfort:
    """Nonnegative per-step hinge penalties (EUR) and their total."""

    per_step: np.ndarray
    total: float

    def __post_init__(self) -> None:
        arr = np.asarray(self.per_step, dtype=np.float64)
        arr.flags.writeable = False
        object.__setattr__(self, "per_step", arr)


def _as_schedule(power_kw, n_expected: int | None = None) -> np.ndarray:
    arr = np.asarray(power_kw, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"schedule must be 1-D, got shape {arr.shape}")
    if n_expected is not None and len(arr) != n_expected:
        raise ValueError(f"schedule length {len(arr)} != series length {n_expected}")
    return arr


def simulate_bss(params: BssParams, charge_kw, discharge_kw, dt_hours: float,
                 soc_start: float | None = None) -> np.ndarray:
    """Battery SoC trajectory under charge/discharge schedules.

    Charging is derated and discharging inflated by the efficiency, both
    applied on the storage side.
    """
    charge = _as_schedule(charge_kw)
    discharge = _as_schedule(discharge_kw, len(charge))
    s0 = params.soc_init if soc_start is None else soc_start
    eta = params.efficiency
    delta = dt_hours * (eta * charge - discharge / eta) / params.capacity_kwh
    return s0 + np.cumsum(delta)


def simulate_ev(params: EvParams, power_kw, dt_hours: float,
                soc_start: float | None = None) -> np.ndarray:
    """EV SoC trajectory; at arrival steps the incoming state is replaced by
    the post-trip arrival SoC before charging is applied."""
    power = _as_schedule(power_kw, len(params.plugged))
    s = params.soc_init if soc_start is None else soc_start
    out = np.empty(len(power))
    gain = dt_hours * params.efficiency / params.capacity_kwh
    for t in range(len(power)):
        if params.arrival[t] == 1.0:
            s = params.soc_arrival[t]
        s = s + gain * power[t]
        out[t] = s
    return out


def simulate_wb(params: WbParams, power_kw, dt_hours: float,
                temp_start: float | None = None) -> np.ndarray:
    """Boiler temperature trajectory: heating minus usage and envelope losses."""
    power = _as_schedule(power_kw, len(params.usage_loss_kw))
    t0 = params.temp_init if temp_start is None else temp_start
    net = power - params.usage_loss_kw - params.envelope_loss_kw
    return t0 + np.cumsum(dt_hours * net * params.thermal_coeff)


def simulate_hp(params: HpParams, power_kw, dt_hours: float,
                temp_start: float | None = None) -> np.ndarray:
    """Indoor temperature trajectory: thermal output (COP * electrical input)
    minus wall losses."""
    power = _as_schedule(power_kw, len(params.wall_loss_kw))
    t0 = params.temp_init if temp_start is None else temp_start
    net = params.cop * power - params.wall_loss_kw
    return t0 + np.cumsum(dt_hours * net * params.thermal_coeff)


def _hinge(state: np.ndarray, reference: np.ndarray, reluctance: float) -> Discomfort:
    state = np.asarray(state, dtype=np.float64)
    reference = np.asarray(reference, dtype=np.float64)
    if state.shape != reference.shape:
        raise ValueError(f"state length {state.shape} != reference length {reference.shape}")
    per_step = reluctance * np.maximum(0.0, reference - state)
    return Discomfort(per_step=per_step, total=float(per_step.sum()))


def discomfort_ev(trajectory, soc_ref, reluctance_eur: float) -> Discomfort:
    """Linear penalty for running below the SoC reference trajectory."""
    return _hinge(trajectory, soc_ref, reluctance_eur)


def discomfort_thermal(trajectory, temp_limit, reluctance_eur: float) -> Discomfort:
    """Linear penalty for cooling below the temperature limit (overheating is free)."""
    return _hinge(trajectory, temp_limit, reluctance_eur)
