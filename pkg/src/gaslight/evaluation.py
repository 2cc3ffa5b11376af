"""Uniform cost accounting for every clearing design.

All designs are charged with the same true cost data: thermal energy,
gas production and storage withdrawal at the day-ahead stage, and
regulation plus shedding in each balancing scenario.  Gas-fired units are
never charged their own offers; their fuel is paid through gas.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

from .system import EnergySystem, ScenarioSet


@dataclass
class CostReport:
    total: float
    day_ahead: float
    balancing: float
    per_scenario: dict[str, float]
    gfpp_share: float | None
    tpp_share: float | None
    shed_e: float = 0.0
    shed_g: float = 0.0
    spill: float = 0.0

    def as_row(self) -> dict:
        return {
            "total": self.total, "day_ahead": self.day_ahead, "balancing": self.balancing,
            "gfpp_share": self.gfpp_share, "tpp_share": self.tpp_share,
            "shed_e": self.shed_e, "shed_g": self.shed_g, "spill": self.spill,
        }


def day_ahead_cost(schedule, system: EnergySystem) -> float:
    c = 0.0
    for t in system.periods:
        c += sum(u.cost * schedule.p[u.id, t] for u in system.thermal_units)
        c += sum(k.cost * schedule.g[k.id, t] for k in system.producers)
        if schedule.gas is not None:
            c += sum(s.cost * schedule.gas.gout[s.id, t] for s in system.storages)
    return c


def balancing_cost(outcome, system: EnergySystem) -> float:
    cfg = system.config
    c = 0.0
    for t in system.periods:
        c += sum(u.cost_up * outcome.pu[u.id, t] - u.cost_down * outcome.pd[u.id, t] for u in system.thermal_units)
        c += sum(k.cost_up * outcome.gu[k.id, t] - k.cost_down * outcome.gd[k.id, t] for k in system.producers)
        c += sum(s.cost_up * outcome.su[s.id, t] - s.cost_down * outcome.sd[s.id, t] for s in system.storages)
        c += cfg.shed_penalty_e * sum(outcome.shed_e[n, t] for n in system.power.buses)
        c += cfg.shed_penalty_g * sum(outcome.shed_g[m, t] for m in system.gas.node_ids)
    return c


def production_shares(schedule, system: EnergySystem) -> tuple[float | None, float | None]:
    """Percent of day-ahead dispatchable energy from gas-fired and other thermal units.

    ``(None, None)`` when nothing dispatchable runs.
    """
    gas = sum(schedule.p[u.id, t] for u in system.gas_units for t in system.periods)
    thermal = sum(schedule.p[u.id, t] for u in system.thermal_units for t in system.periods)
    total = gas + thermal
    if total <= 1e-9:
        return None, None
    return 100.0 * gas / total, 100.0 * thermal / total


def expected_cost(run, system: EnergySystem, scenarios: ScenarioSet) -> CostReport:
    missing = [s for s in scenarios.ids if s not in run.outcomes]
    if missing:
        raise KeyError(f"no balancing outcome for scenarios {missing}")
    da = day_ahead_cost(run.schedule, system)
    per = {sid: balancing_cost(run.outcomes[sid], system) for sid in scenarios.ids}
    bal = sum(p * per[sid] for sid, p in scenarios.items())
    gfpp, tpp = production_shares(run.schedule, system)

    def expect(attr):
        return sum(p * sum(getattr(run.outcomes[sid], attr).values()) for sid, p in scenarios.items())

    return CostReport(da + bal, da, bal, per, gfpp, tpp, expect("shed_e"), expect("shed_g"), expect("spill"))


@dataclass
class RatioResult:
    value: float | None
    in_order: bool
    note: str = ""


def performance_ratio(ec_ss: float, ec: float, ec_ideal: float) -> RatioResult:
    """Share of the ideal-storage saving that linepack recovers, in percent."""
    if math.isclose(ec_ss, ec_ideal, rel_tol=0.0, abs_tol=1e-12):
        return RatioResult(None, ec_ss >= ec >= ec_ideal, "undefined: steady-state and ideal costs coincide")
    value = (ec_ss - ec) / (ec_ss - ec_ideal) * 100.0
    ok = ec_ss >= ec >= ec_ideal
    note = "" if ok else f"out of order: ec_ss={ec_ss!r}, ec={ec!r}, ec_ideal={ec_ideal!r}"
    return RatioResult(value, ok, note)


def weighted(values: Mapping[str, float], scenarios: ScenarioSet) -> float:
    return sum(p * values[sid] for sid, p in scenarios.items())
