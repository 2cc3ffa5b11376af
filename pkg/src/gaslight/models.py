"""Builders for the clearing optimizations and extraction of their results.

Day-ahead quantities enter the balancing builders through :class:`DayAhead`,
whose entries are floats for the sequential designs and columns of the same
model for the stochastic one.  Balancing stages are indexed by scenario id;
every row of a balancing stage carries the scenario as its first index.

Nodal balances are written ``supply - demand == 0`` with constants moved to
the right-hand side, so their duals read directly as prices.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Mapping

from .gas import (GasState, GasVariables, PointSet, add_gas_variables, all_pressure_points, build_gas_network,
                  compute_big_m, extract_gas_state, pipeline_net_outflow, rid, storage_net_output)
from .lp import INF, LinExpr, MilpModel, ModelError, lsum
from .system import EnergySystem, ScenarioSet

log = logging.getLogger(__name__)

FORECAST = "forecast"
INSTALLED = "installed"


class ModelSizeError(ModelError):
    """The stochastic program would exceed the configured column limit."""


# --------------------------------------------------------------------------
# coupling helpers
# --------------------------------------------------------------------------


def gfpp_fuel_demand(p: Mapping, system: EnergySystem) -> dict:
    """Gas demand ``phi * p`` of the gas-fired units, summed per gas node and period."""
    out = {(m, t): 0.0 for m in system.gas.node_ids for t in system.periods}
    for u in system.gas_units:
        for t in system.periods:
            out[u.gas_node, t] += u.phi * p[u.id, t]
    return out


def gfpp_fuel_deviation(dp: Mapping, system: EnergySystem) -> dict:
    """Signed change of gas demand ``phi * dp`` per gas node and period."""
    return gfpp_fuel_demand(dp, system)


def derive_gfpp_offers(lam_g: Mapping, system: EnergySystem, mis_factor: float | None = None) -> dict:
    """Energy and regulation offers of gas-fired units from a gas price surface.

    Returns ``{unit: [(C, C_up, C_down) per period]}``.
    """
    cfg = system.config
    k = cfg.mis_factor if mis_factor is None else mis_factor
    out = {}
    for u in system.gas_units:
        rows = []
        for t in system.periods:
            if (u.gas_node, t) not in lam_g:
                raise KeyError(f"no gas price for node {u.gas_node} in period {t + 1}")
            c = k * lam_g[u.gas_node, t] * u.phi
            rows.append((c, cfg.reg_up_factor * c, cfg.reg_down_factor * c))
        out[u.id] = rows
    return out


# --------------------------------------------------------------------------
# handles
# --------------------------------------------------------------------------


@dataclass
class ElVars:
    p: dict = field(default_factory=dict)
    w: dict = field(default_factory=dict)
    delta: dict = field(default_factory=dict)
    f: dict = field(default_factory=dict)
    shift: dict = field(default_factory=dict)


@dataclass
class GasDaVars:
    g: dict = field(default_factory=dict)
    net: GasVariables | None = None


@dataclass
class RtVars:
    scenario: str
    weight: float
    pu: dict = field(default_factory=dict)
    pd: dict = field(default_factory=dict)
    shed_e: dict = field(default_factory=dict)
    spill: dict = field(default_factory=dict)
    delta: dict = field(default_factory=dict)
    f: dict = field(default_factory=dict)
    shift: dict = field(default_factory=dict)
    gu: dict = field(default_factory=dict)
    gd: dict = field(default_factory=dict)
    su: dict = field(default_factory=dict)
    sd: dict = field(default_factory=dict)
    shed_g: dict = field(default_factory=dict)
    net: GasVariables | None = None


@dataclass
class DayAhead:
    """Day-ahead quantities seen by a balancing stage (floats or columns)."""

    p: Mapping
    w: Mapping
    f: Mapping
    g: Mapping = field(default_factory=dict)
    gas: GasVariables | GasState | None = None
    shift: Mapping = field(default_factory=dict)


# --------------------------------------------------------------------------
# electricity
# --------------------------------------------------------------------------


def _line_terms(system: EnergySystem, f: Mapping, n: str, t: int) -> LinExpr:
    """Power leaving bus ``n`` over its lines."""
    terms = []
    for ln in system.power.lines:
        if ln.from_bus == n:
            terms.append(f[ln.id, t])
        elif ln.to_bus == n:
            terms.append(-1.0 * f[ln.id, t])
    return lsum(terms)


def _add_network(model: MilpModel, system: EnergySystem, prefix: tuple, suffix: str, delta: dict, f: dict):
    pg = system.power
    for t in system.periods:
        for n in pg.buses:
            lo, hi = (0.0, 0.0) if n == pg.reference_bus else (-INF, INF)
            delta[n, t] = model.add_var(rid("delta" + suffix, *prefix, n, t + 1), lo, hi)
        for ln in pg.lines:
            f[ln.id, t] = model.add_var(rid("f" + suffix, *prefix, ln.id, t + 1), -ln.capacity, ln.capacity)
            model.add_constraint(rid("flow" + suffix, *prefix, ln.id, t + 1),
                                 f[ln.id, t] - ln.susceptance * (delta[ln.from_bus, t] - delta[ln.to_bus, t]), "==")


def add_el_da(model: MilpModel, system: EnergySystem, gfpp_offers: Mapping | None = None,
              wind_bound: str = FORECAST) -> ElVars:
    """Day-ahead electricity variables, rows and energy cost.

    Gas-fired units are charged their offer only when ``gfpp_offers`` is
    given (decoupled clearing); otherwise their cost arrives via gas.
    """
    ev = ElVars()
    for u in system.units:
        for t in system.periods:
            ev.p[u.id, t] = model.add_var(rid("p", u.id, t + 1), 0.0, u.pmax)
    for j in system.wind:
        for t in system.periods:
            cap = j.forecast[t] if wind_bound == FORECAST else j.capacity
            ev.w[j.id, t] = model.add_var(rid("w", j.id, t + 1), 0.0, cap)
    _add_network(model, system, (), "", ev.delta, ev.f)
    if system.config.ideal_storage:
        for n in system.power.buses:
            for t in system.periods:
                ev.shift[n, t] = model.add_var(rid("shift", n, t + 1), -INF, INF)
            model.add_constraint(rid("shiftsum", n), lsum(ev.shift[n, t] for t in system.periods), "==")
    for t in system.periods:
        for n in system.power.buses:
            supply = lsum([ev.p[u.id, t] for u in system.units if u.bus == n]
                          + [ev.w[j.id, t] for j in system.wind if j.bus == n])
            if ev.shift:
                supply = supply + ev.shift[n, t]
            model.add_constraint(rid("elbal", n, t + 1),
                                 supply - _line_terms(system, ev.f, n, t), "==", system.power.load(n, t))
    obj = []
    for u in system.thermal_units:
        obj += [u.cost * ev.p[u.id, t] for t in system.periods]
    if gfpp_offers is not None:
        for u in system.gas_units:
            if u.id not in gfpp_offers:
                raise ModelError(f"missing day-ahead offer for gas-fired unit {u.id}")
            obj += [gfpp_offers[u.id][t][0] * ev.p[u.id, t] for t in system.periods]
    model.add_objective(lsum(obj))
    return ev


def add_el_rt(model: MilpModel, system: EnergySystem, da: DayAhead, realization: Mapping, scenario: str,
              weight: float = 1.0, gfpp_offers: Mapping | None = None, caps: Mapping | None = None) -> RtVars:
    """Electric balancing stage of one scenario.

    ``gfpp_offers`` charges gas-fired regulation at its offers (decoupled
    clearing).  ``caps`` bounds the upward regulation of gas-fired units per
    ``(unit, t)``.
    """
    rv = RtVars(scenario, weight)
    sc = (scenario,)
    for u in system.units:
        for t in system.periods:
            up_cap = u.reserve_up
            if caps and (u.id, t) in caps:
                up_cap = min(up_cap, max(0.0, caps[u.id, t]))
            pu = rv.pu[u.id, t] = model.add_var(rid("pu", scenario, u.id, t + 1), 0.0, up_cap)
            pd = rv.pd[u.id, t] = model.add_var(rid("pd", scenario, u.id, t + 1), 0.0, u.reserve_down)
            p0 = da.p[u.id, t]
            model.add_constraint(rid("headup", scenario, u.id, t + 1), pu - pd + p0, "<=", u.pmax)
            model.add_constraint(rid("headdn", scenario, u.id, t + 1), pd - pu - p0, "<=")
    for n in system.power.buses:
        for t in system.periods:
            rv.shed_e[n, t] = model.add_var(rid("shed_e", scenario, n, t + 1), 0.0, system.power.load(n, t))
    for j in system.wind:
        for t in system.periods:
            rv.spill[j.id, t] = model.add_var(rid("spill", scenario, j.id, t + 1), 0.0, realization[j.id][t])
    _add_network(model, system, sc, "_rt", rv.delta, rv.f)
    if system.config.ideal_storage:
        for n in system.power.buses:
            for t in system.periods:
                rv.shift[n, t] = model.add_var(rid("shift_rt", scenario, n, t + 1), -INF, INF)
            model.add_constraint(rid("shiftsum_rt", scenario, n), lsum(rv.shift[n, t] for t in system.periods), "==")
    for t in system.periods:
        for n in system.power.buses:
            reg = lsum([rv.pu[u.id, t] - rv.pd[u.id, t] for u in system.units if u.bus == n])
            wind = lsum([realization[j.id][t] - rv.spill[j.id, t] - da.w[j.id, t] for j in system.wind if j.bus == n])
            lines = _line_terms(system, da.f, n, t) - _line_terms(system, rv.f, n, t)
            expr = reg + rv.shed_e[n, t] + wind + lines
            if rv.shift:
                expr = expr + rv.shift[n, t]
            model.add_constraint(rid("elbal_rt", scenario, n, t + 1), expr, "==")
    pen = system.config.shed_penalty_e
    obj = []
    for t in system.periods:
        for u in system.thermal_units:
            obj += [u.cost_up * rv.pu[u.id, t], -u.cost_down * rv.pd[u.id, t]]
        if gfpp_offers is not None:
            for u in system.gas_units:
                _, cu, cd = gfpp_offers[u.id][t]
                obj += [cu * rv.pu[u.id, t], -cd * rv.pd[u.id, t]]
        obj += [pen * rv.shed_e[n, t] for n in system.power.buses]
    model.add_objective(weight * lsum(obj))
    return rv


# --------------------------------------------------------------------------
# gas
# --------------------------------------------------------------------------


def _gas_setup(system: EnergySystem, points=None, big_m=None):
    points = all_pressure_points(system) if points is None else points
    big_m = compute_big_m(system, points) if big_m is None else big_m
    return points, big_m


def add_gas_da(model: MilpModel, system: EnergySystem, fuel: Mapping, points: dict[str, PointSet],
               big_m: tuple[float, float]) -> GasDaVars:
    """Day-ahead gas variables, network blocks, balance and cost.

    ``fuel`` is the gas-fired demand per ``(node, t)``: numbers, or
    expressions in the electric columns of the same model.
    """
    gd = GasDaVars()
    for k in system.producers:
        for t in system.periods:
            gd.g[k.id, t] = model.add_var(rid("g", k.id, t + 1), 0.0, k.gmax)
    gd.net = add_gas_variables(model, system)
    build_gas_network(model, system, gd.net, points, big_m)
    grid = system.gas
    for t in system.periods:
        for m in grid.node_ids:
            prod = lsum(gd.g[k.id, t] for k in system.producers if k.node == m)
            supply = prod + storage_net_output(gd.net, system, m, t)
            expr = supply - fuel.get((m, t), 0.0) - pipeline_net_outflow(gd.net, grid, m, t)
            model.add_constraint(rid("gasbal", m, t + 1), expr, "==", grid.load(m, t))
    obj = []
    for t in system.periods:
        obj += [k.cost * gd.g[k.id, t] for k in system.producers]
        obj += [s.cost * gd.net.gout[s.id, t] for s in system.storages]
    model.add_objective(lsum(obj))
    return gd


def add_gas_rt(model: MilpModel, system: EnergySystem, da: DayAhead, deviation: Mapping, scenario: str,
               weight: float = 1.0, points=None, big_m=None, rv: RtVars | None = None) -> RtVars:
    """Gas balancing stage of one scenario.

    ``deviation`` is the gas-fired demand change per ``(node, t)``.  The
    network state of the stage is rebuilt in full; storage regulation is the
    change of net withdrawal against the day-ahead schedule.
    """
    points, big_m = _gas_setup(system, points, big_m)
    rv = RtVars(scenario, weight) if rv is None else rv
    grid = system.gas
    for k in system.producers:
        for t in system.periods:
            gu = rv.gu[k.id, t] = model.add_var(rid("gu", scenario, k.id, t + 1), 0.0, k.reserve_up)
            gdn = rv.gd[k.id, t] = model.add_var(rid("gd", scenario, k.id, t + 1), 0.0, k.reserve_down)
            g0 = da.g[k.id, t]
            model.add_constraint(rid("gheadup", scenario, k.id, t + 1), gu + g0, "<=", k.gmax)
            model.add_constraint(rid("gheaddn", scenario, k.id, t + 1), gdn - g0, "<=")
    for m in grid.node_ids:
        for t in system.periods:
            rv.shed_g[m, t] = model.add_var(rid("shed_g", scenario, m, t + 1), 0.0, grid.load(m, t))
    rv.net = add_gas_variables(model, system, scenario)
    build_gas_network(model, system, rv.net, points, big_m)
    for s in system.storages:
        for t in system.periods:
            su = rv.su[s.id, t] = model.add_var(rid("su", scenario, s.id, t + 1))
            sd = rv.sd[s.id, t] = model.add_var(rid("sd", scenario, s.id, t + 1))
            now = rv.net.gout[s.id, t] - rv.net.gin[s.id, t]
            before = da.gas.gout[s.id, t] - da.gas.gin[s.id, t]
            model.add_constraint(rid("streg", scenario, s.id, t + 1), su - sd - now + before, "==")
    for t in system.periods:
        for m in grid.node_ids:
            reg = lsum(rv.gu[k.id, t] - rv.gd[k.id, t] for k in system.producers if k.node == m)
            reg = reg + lsum(rv.su[s.id, t] - rv.sd[s.id, t] for s in system.storages if s.node == m)
            pipes = pipeline_net_outflow(da.gas, grid, m, t) - pipeline_net_outflow(rv.net, grid, m, t)
            expr = reg + pipes - deviation.get((m, t), 0.0) + rv.shed_g[m, t]
            model.add_constraint(rid("gasbal_rt", scenario, m, t + 1), expr, "==")
    pen = system.config.shed_penalty_g
    obj = []
    for t in system.periods:
        for k in system.producers:
            obj += [k.cost_up * rv.gu[k.id, t], -k.cost_down * rv.gd[k.id, t]]
        for s in system.storages:
            obj += [s.cost_up * rv.su[s.id, t], -s.cost_down * rv.sd[s.id, t]]
        obj += [pen * rv.shed_g[m, t] for m in grid.node_ids]
    model.add_objective(weight * lsum(obj))
    return rv


def _gfpp_fuel_expr(system: EnergySystem, amount: Mapping) -> dict:
    out = {}
    for u in system.gas_units:
        for t in system.periods:
            key = (u.gas_node, t)
            out[key] = out.get(key, 0.0) + u.phi * amount(u.id, t)
    return out


# --------------------------------------------------------------------------
# model builders
# --------------------------------------------------------------------------


def build_el_da(system: EnergySystem, gfpp_offers: Mapping) -> MilpModel:
    model = MilpModel("el_da")
    model.handles["el"] = add_el_da(model, system, gfpp_offers)
    return model


def build_gas_da(system: EnergySystem, d_p: Mapping, points=None, big_m=None) -> MilpModel:
    nodes = set(system.gas.node_ids)
    for m, _t in d_p:
        if m not in nodes:
            raise ModelError(f"gas-fired demand at unknown gas node {m!r}")
    points, big_m = _gas_setup(system, points, big_m)
    model = MilpModel("gas_da")
    model.handles["gas"] = add_gas_da(model, system, d_p, points, big_m)
    model.handles["big_m"] = big_m
    return model


def build_coupled_da(system: EnergySystem, points=None, big_m=None, wind_bound: str = FORECAST) -> MilpModel:
    points, big_m = _gas_setup(system, points, big_m)
    model = MilpModel("coupled_da")
    ev = add_el_da(model, system, None, wind_bound)
    fuel = _gfpp_fuel_expr(system, lambda uid, t: ev.p[uid, t])
    model.handles["el"] = ev
    model.handles["gas"] = add_gas_da(model, system, fuel, points, big_m)
    model.handles["big_m"] = big_m
    return model


def _check_da(system: EnergySystem, da: DayAhead, gas: bool, el: bool) -> None:
    missing = []
    if el:
        missing += [("p", u.id, t) for u in system.units for t in system.periods if (u.id, t) not in da.p]
        missing += [("w", j.id, t) for j in system.wind for t in system.periods if (j.id, t) not in da.w]
        missing += [("f", ln.id, t) for ln in system.power.lines for t in system.periods if (ln.id, t) not in da.f]
    if gas:
        if da.gas is None:
            raise ModelError("day-ahead gas schedule is missing")
        missing += [("g", k.id, t) for k in system.producers for t in system.periods if (k.id, t) not in da.g]
    if missing:
        raise ModelError(f"day-ahead schedule lacks {missing[:5]}")


def build_el_rt(system: EnergySystem, da: DayAhead, realization: Mapping, scenario: str = "s",
                gfpp_offers: Mapping | None = None, caps: Mapping | None = None) -> MilpModel:
    _check_da(system, da, gas=False, el=True)
    model = MilpModel(f"el_rt[{scenario}]")
    model.handles["rt"] = {scenario: add_el_rt(model, system, da, realization, scenario, 1.0, gfpp_offers, caps)}
    return model


def build_gas_rt(system: EnergySystem, da: DayAhead, d_pr: Mapping, scenario: str = "s",
                 points=None, big_m=None) -> MilpModel:
    _check_da(system, da, gas=True, el=False)
    points, big_m = _gas_setup(system, points, big_m)
    model = MilpModel(f"gas_rt[{scenario}]")
    model.handles["rt"] = {scenario: add_gas_rt(model, system, da, d_pr, scenario, 1.0, points, big_m)}
    model.handles["big_m"] = big_m
    return model


def _add_coupled_rt(model, system, da, realization, scenario, weight, points, big_m) -> RtVars:
    rv = add_el_rt(model, system, da, realization, scenario, weight)
    dev = _gfpp_fuel_expr(system, lambda uid, t: rv.pu[uid, t] - rv.pd[uid, t])
    return add_gas_rt(model, system, da, dev, scenario, weight, points, big_m, rv)


def build_coupled_rt(system: EnergySystem, da: DayAhead, realization: Mapping, scenario: str = "s",
                     points=None, big_m=None) -> MilpModel:
    _check_da(system, da, gas=True, el=True)
    points, big_m = _gas_setup(system, points, big_m)
    model = MilpModel(f"coupled_rt[{scenario}]")
    model.handles["rt"] = {scenario: _add_coupled_rt(model, system, da, realization, scenario, 1.0, points, big_m)}
    model.handles["big_m"] = big_m
    return model


def build_stoch_coup(system: EnergySystem, scenarios: ScenarioSet, points=None, big_m=None) -> MilpModel:
    """Two-stage program: coupled day-ahead plus one coupled balancing stage per scenario."""
    scenarios.check_against(system)
    points, big_m = _gas_setup(system, points, big_m)
    model = build_coupled_da(system, points, big_m, wind_bound=INSTALLED)
    model.name = "stoch_coup"
    per_stage = model.n_cols
    need = per_stage * (1 + len(scenarios))
    if need > system.config.max_columns:
        raise ModelSizeError(f"stochastic program needs about {need} columns for {len(scenarios)} scenarios, "
                             f"limit is {system.config.max_columns}")
    ev, gd = model.handles["el"], model.handles["gas"]
    da = DayAhead(ev.p, ev.w, ev.f, gd.g, gd.net, ev.shift)
    model.handles["rt"] = {}
    for sid, prob in scenarios.items():
        model.handles["rt"][sid] = _add_coupled_rt(model, system, da, scenarios.wind[sid], sid, prob, points, big_m)
    return model


# --------------------------------------------------------------------------
# extraction
# --------------------------------------------------------------------------


@dataclass
class DispatchSchedule:
    p: dict
    w: dict
    f: dict
    delta: dict
    g: dict
    gas: GasState | None
    lam_e: dict
    lam_g: dict
    shift: dict = field(default_factory=dict)

    def day_ahead(self) -> DayAhead:
        return DayAhead(self.p, self.w, self.f, self.g, self.gas, self.shift)


@dataclass
class BalancingOutcome:
    scenario: str
    pu: dict
    pd: dict
    shed_e: dict
    spill: dict
    f: dict
    delta: dict
    gu: dict
    gd: dict
    su: dict
    sd: dict
    shed_g: dict
    gas: GasState | None
    lam_e: dict
    lam_g: dict
    cost: float = 0.0
    shift: dict = field(default_factory=dict)

    def dp(self, uid: str, t: int) -> float:
        return self.pu[uid, t] - self.pd[uid, t]


def _duals(sol, system, tag, keys, scenario=None, scale=1.0):
    out = {}
    for n, t in keys:
        name = rid(tag, n, t + 1) if scenario is None else rid(tag, scenario, n, t + 1)
        if sol.duals is not None and name in sol.duals:
            out[n, t] = sol.duals[name] / scale
    return out


def extract_el_da(sol, ev: ElVars, system: EnergySystem) -> dict:
    keys = [(n, t) for n in system.power.buses for t in system.periods]
    return dict(p=sol.values(ev.p), w=sol.values(ev.w), f=sol.values(ev.f), delta=sol.values(ev.delta),
                shift=sol.values(ev.shift), lam_e=_duals(sol, system, "elbal", keys))


def extract_gas_da(sol, gd: GasDaVars, system: EnergySystem) -> dict:
    keys = [(m, t) for m in system.gas.node_ids for t in system.periods]
    return dict(g=sol.values(gd.g), gas=extract_gas_state(sol, gd.net), lam_g=_duals(sol, system, "gasbal", keys))


def extract_rt(sol, rv: RtVars, system: EnergySystem, el: bool = True, gas: bool = True) -> dict:
    """Values and per-scenario prices of one balancing stage (duals divided by the stage weight)."""
    out = {}
    if el:
        keys = [(n, t) for n in system.power.buses for t in system.periods]
        out.update(pu=sol.values(rv.pu), pd=sol.values(rv.pd), shed_e=sol.values(rv.shed_e),
                   spill=sol.values(rv.spill), f=sol.values(rv.f), delta=sol.values(rv.delta),
                   shift=sol.values(rv.shift),
                   lam_e=_duals(sol, system, "elbal_rt", keys, rv.scenario, rv.weight))
    if gas:
        keys = [(m, t) for m in system.gas.node_ids for t in system.periods]
        out.update(gu=sol.values(rv.gu), gd=sol.values(rv.gd), su=sol.values(rv.su), sd=sol.values(rv.sd),
                   shed_g=sol.values(rv.shed_g), gas=extract_gas_state(sol, rv.net),
                   lam_g=_duals(sol, system, "gasbal_rt", keys, rv.scenario, rv.weight))
    return out
