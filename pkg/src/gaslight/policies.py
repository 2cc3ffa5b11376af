"""The three clearing designs and their price extraction."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

from . import lp
from .evaluation import CostReport, balancing_cost, day_ahead_cost, expected_cost
from .gas import all_pressure_points, compute_big_m
from .models import (BalancingOutcome, DayAhead, DispatchSchedule, build_coupled_da, build_coupled_rt,
                     build_el_da, build_el_rt, build_gas_da, build_gas_rt, build_stoch_coup, derive_gfpp_offers,
                     extract_el_da, extract_gas_da, extract_rt, gfpp_fuel_demand, gfpp_fuel_deviation)
from .system import EnergySystem, ScenarioSet

log = logging.getLogger(__name__)

SEQ_DEC = "Seq-Dec"
SEQ_DEC_UP = "Seq-Dec↑"
SEQ_DEC_DOWN = "Seq-Dec↓"
SEQ_COUP = "Seq-Coup"
STOCH_COUP = "Stoch-Coup"

TOL = 1e-6  # value-extraction tolerance, natural units
OBJ_RTOL = 1e-6


class StageError(RuntimeError):
    """A clearing stage did not solve to optimality."""

    def __init__(self, stage: str, status: str, detail: str = ""):
        msg = f"{stage}: {status}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)
        self.stage = stage
        self.status = status


@dataclass
class StageResult:
    milp: lp.Solution
    lp: lp.Solution

    @property
    def objective(self) -> float:
        return self.lp.objective


def solve_and_price(model: lp.MilpModel, system: EnergySystem, stage: str) -> StageResult:
    """Solve the MILP, then re-solve with its binaries fixed to read the duals.

    The primal values of the LP resolve are the ones reported, so quantities
    and prices come from the same point.
    """
    cfg = system.config
    milp_sol = lp.solve_milp(model, cfg.mip_gap, feas_tol=cfg.feas_tol)
    if milp_sol.status != lp.OPTIMAL:
        raise StageError(stage, milp_sol.status, "; ".join(model.notes) or milp_sol.message)
    try:
        lp_sol = lp.solve_lp_fixed(model, milp_sol, feas_tol=cfg.feas_tol)
    except lp.SolverError as exc:
        raise StageError(stage, lp.INFEASIBLE, f"fixed-binary resolve failed: {exc}") from exc
    scale = max(1.0, abs(milp_sol.objective))
    # fixing the MILP's own binaries can only match or improve its continuous part
    if lp_sol.objective - milp_sol.objective > OBJ_RTOL * scale or \
            milp_sol.objective - lp_sol.objective > max(cfg.mip_gap, OBJ_RTOL) * scale:
        raise StageError(stage, "price-mismatch",
                         f"LP objective {lp_sol.objective!r} vs MILP {milp_sol.objective!r}")
    return StageResult(milp_sol, lp_sol)


# --------------------------------------------------------------------------
# runs
# --------------------------------------------------------------------------


@dataclass
class CurtailStep:
    scenario: str
    iteration: int
    gas_shed: float
    caps: dict


@dataclass
class PolicyRun:
    tag: str
    schedule: DispatchSchedule
    outcomes: dict[str, BalancingOutcome]
    report: CostReport | None = None
    objectives: dict = field(default_factory=dict)
    trace: list[CurtailStep] = field(default_factory=list)
    flagged: list[str] = field(default_factory=list)
    steady_state: bool = False
    big_m: tuple[float, float] | None = None

    @property
    def label(self) -> str:
        return ("Steady-state " if self.steady_state else "") + self.tag


def _outcome(sid: str, el: dict, gas: dict, system: EnergySystem) -> BalancingOutcome:
    oc = BalancingOutcome(
        sid, el["pu"], el["pd"], el["shed_e"], el["spill"], el["f"], el["delta"], gas["gu"], gas["gd"], gas["su"],
        gas["sd"], gas["shed_g"], gas["gas"], el["lam_e"], gas["lam_g"], shift=el.get("shift", {}),
    )
    oc.cost = balancing_cost(oc, system)
    return oc


def _schedule(el: dict, gas: dict) -> DispatchSchedule:
    return DispatchSchedule(el["p"], el["w"], el["f"], el["delta"], gas["g"], gas["gas"], el["lam_e"],
                            gas["lam_g"], el.get("shift", {}))


def _finish(run: PolicyRun, system: EnergySystem, scenarios: ScenarioSet) -> PolicyRun:
    run.report = expected_cost(run, system, scenarios)
    run.steady_state = system.config.steady_state
    return run


def run_seq_coup(system: EnergySystem, scenarios: ScenarioSet) -> PolicyRun:
    scenarios.check_against(system)
    points = all_pressure_points(system)
    big_m = compute_big_m(system, points)
    da_model = build_coupled_da(system, points, big_m)
    da_res = solve_and_price(da_model, system, "coupled day-ahead")
    h = da_model.handles
    schedule = _schedule(extract_el_da(da_res.lp, h["el"], system), extract_gas_da(da_res.lp, h["gas"], system))
    run = PolicyRun(SEQ_COUP, schedule, {}, big_m=big_m)
    run.objectives["day_ahead"] = da_res.objective
    da = schedule.day_ahead()
    for sid in scenarios.ids:
        model = build_coupled_rt(system, da, scenarios.wind[sid], sid, points, big_m)
        res = solve_and_price(model, system, f"coupled balancing, scenario {sid}")
        rv = model.handles["rt"][sid]
        vals = extract_rt(res.lp, rv, system)
        run.outcomes[sid] = _outcome(sid, vals, vals, system)
        run.objectives[sid] = res.objective
    return _finish(run, system, scenarios)


def run_stoch_coup(system: EnergySystem, scenarios: ScenarioSet) -> PolicyRun:
    points = all_pressure_points(system)
    big_m = compute_big_m(system, points)
    model = build_stoch_coup(system, scenarios, points, big_m)
    res = solve_and_price(model, system, "stochastic program")
    h = model.handles
    schedule = _schedule(extract_el_da(res.lp, h["el"], system), extract_gas_da(res.lp, h["gas"], system))
    run = PolicyRun(STOCH_COUP, schedule, {}, big_m=big_m)
    run.objectives["total"] = res.objective
    for sid in scenarios.ids:
        vals = extract_rt(res.lp, h["rt"][sid], system)
        run.outcomes[sid] = _outcome(sid, vals, vals, system)
    return _finish(run, system, scenarios)


def seq_coup_gas_prices(system: EnergySystem) -> dict:
    """Day-ahead gas prices of the coupled deterministic clearing."""
    model = build_coupled_da(system)
    res = solve_and_price(model, system, "coupled day-ahead (price reference)")
    return extract_gas_da(res.lp, model.handles["gas"], system)["lam_g"]


def _attribute_shed(shed_g: dict, dp: dict, system: EnergySystem) -> dict:
    """Gas-fired units whose extra fuel draw explains each residential shed.

    Returns ``{(unit, t): reduction of its upward regulation in MW}``.
    Units at the shed node in the same period come first, then units anywhere
    in that period, then the nearest earlier period with upward regulation,
    then the nearest later one: linepack and the end-of-day target let a draw
    in one hour surface as shed in another.
    """
    units = system.gas_units
    cut: dict = {}
    for (m, t), amount in shed_g.items():
        if amount <= TOL:
            continue
        groups = [
            [(u, t) for u in units if u.gas_node == m and dp[u.id, t] > TOL],
            [(u, t) for u in units if dp[u.id, t] > TOL],
        ]
        for tp in list(range(t - 1, -1, -1)) + list(range(t + 1, system.T)):
            groups.append([(u, tp) for u in units if dp[u.id, tp] > TOL])
        contrib = next((g for g in groups if g), [])
        if not contrib:
            continue
        draw = sum(u.phi * dp[u.id, tp] for u, tp in contrib)
        for u, tp in contrib:
            share = u.phi * dp[u.id, tp] / draw
            cut[u.id, tp] = cut.get((u.id, tp), 0.0) + amount * share / u.phi
    return cut


def run_seq_dec(system: EnergySystem, scenarios: ScenarioSet, gfpp_offers: dict | None = None,
                mis_factor: float | None = None, tag: str = SEQ_DEC) -> PolicyRun:
    """Decoupled sequential clearing with the gas-shed curtailment loop.

    Without ``gfpp_offers`` the offers are derived from the coupled
    deterministic gas prices scaled by ``mis_factor``.
    """
    scenarios.check_against(system)
    if gfpp_offers is None:
        gfpp_offers = derive_gfpp_offers(seq_coup_gas_prices(system), system, mis_factor)
    points = all_pressure_points(system)
    big_m = compute_big_m(system, points)

    el_model = build_el_da(system, gfpp_offers)
    el_res = solve_and_price(el_model, system, "electricity day-ahead")
    el = extract_el_da(el_res.lp, el_model.handles["el"], system)
    d_p = gfpp_fuel_demand(el["p"], system)
    gas_model = build_gas_da(system, d_p, points, big_m)
    gas_res = solve_and_price(gas_model, system, "gas day-ahead")
    gas = extract_gas_da(gas_res.lp, gas_model.handles["gas"], system)
    schedule = _schedule(el, gas)
    run = PolicyRun(tag, schedule, {}, big_m=big_m)
    run.objectives.update(el_day_ahead=el_res.objective, gas_day_ahead=gas_res.objective)
    da = schedule.day_ahead()
    max_iter = system.config.max_curtail_iter

    for sid in scenarios.ids:
        caps: dict = {}
        # a cut that leaves shed behind is doubled next time: linepack can make
        # one kcf less drawn in one hour relieve less than one kcf elsewhere
        boost: dict = {}
        for it in range(1, max_iter + 1):
            el_rt = build_el_rt(system, da, scenarios.wind[sid], sid, gfpp_offers, caps)
            er = solve_and_price(el_rt, system, f"electricity balancing, scenario {sid}")
            ev = extract_rt(er.lp, el_rt.handles["rt"][sid], system, gas=False)
            dp = {(u.id, t): ev["pu"][u.id, t] - ev["pd"][u.id, t] for u in system.gas_units for t in system.periods}
            d_pr = gfpp_fuel_deviation(dp, system)
            gas_rt = build_gas_rt(system, da, d_pr, sid, points, big_m)
            gr = solve_and_price(gas_rt, system, f"gas balancing, scenario {sid}")
            gv = extract_rt(gr.lp, gas_rt.handles["rt"][sid], system, el=False)
            cut = _attribute_shed(gv["shed_g"], dp, system)
            run.trace.append(CurtailStep(sid, it, sum(gv["shed_g"].values()), dict(caps)))
            if not cut:
                break
            for key, red in cut.items():
                boost[key] = boost.get(key, 0.5) * 2.0
                old = caps.get(key, system.unit(key[0]).reserve_up)
                caps[key] = max(0.0, min(old, dp[key] - red * boost[key]))
        else:
            run.flagged.append(sid)
            log.warning("%s: curtailment loop hit %d iterations in scenario %s with residual gas shed %.6g",
                        tag, max_iter, sid, sum(gv["shed_g"].values()))
        run.outcomes[sid] = _outcome(sid, ev, gv, system)
        run.objectives[sid] = (er.objective, gr.objective)
    return _finish(run, system, scenarios)


def run_policy(system: EnergySystem, scenarios: ScenarioSet, policy: str, offers_prices: dict | None = None
               ) -> PolicyRun:
    """Dispatch by tag; Seq-Dec variants reuse ``offers_prices`` when given."""
    key = policy.lower().replace("_", "-")
    if key in ("stoch-coup", STOCH_COUP.lower()):
        return run_stoch_coup(system, scenarios)
    if key in ("seq-coup", SEQ_COUP.lower()):
        return run_seq_coup(system, scenarios)
    mis = {"seq-dec": 1.0, "seq-dec↑": 1.1, "seq-dec-up": 1.1, "seq-dec↓": 0.9, "seq-dec-down": 0.9}
    tags = {1.0: SEQ_DEC, 1.1: SEQ_DEC_UP, 0.9: SEQ_DEC_DOWN}
    if key in mis:
        factor = mis[key] * system.config.mis_factor
        prices = offers_prices if offers_prices is not None else seq_coup_gas_prices(system)
        offers = derive_gfpp_offers(prices, system, factor)
        return run_seq_dec(system, scenarios, offers, tag=tags[mis[key]])
    raise ValueError(f"unknown policy {policy!r}")


def gfpp_caused_shed(run: PolicyRun, system: EnergySystem) -> float:
    """Residential gas shed that coincides with upward gas-fired regulation drawing fuel."""
    total = 0.0
    for oc in run.outcomes.values():
        dp = {(u.id, t): oc.dp(u.id, t) for u in system.gas_units for t in system.periods}
        total += sum(oc.shed_g[m, t] for (m, t) in oc.shed_g
                     if oc.shed_g[m, t] > TOL and _attribute_shed({(m, t): oc.shed_g[m, t]}, dp, system))
    return total


def is_close(a: float, b: float, rel: float = 1e-6) -> bool:
    return math.isclose(a, b, rel_tol=rel, abs_tol=rel)
