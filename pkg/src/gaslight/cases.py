"""Bundled and engineered desk-scale systems."""
from __future__ import annotations

import dataclasses
from importlib import resources
from pathlib import Path

import numpy as np

from .system import (GAS, THERMAL, DispatchableUnit, EnergySystem, GasGrid, GasNode, GasProducer, GasStorage,
                     Line, Pipeline, PowerGrid, RunConfig, ScenarioSet, WindFarm, load_scenarios, load_system)


def data_path(name: str) -> Path:
    return Path(str(resources.files("gaslight") / "data" / name))


def case3x3() -> tuple[EnergySystem, ScenarioSet]:
    system = load_system(data_path("case3x3.sys"))
    return system, load_scenarios(data_path("case3x3_scenarios.csv"), system)


def thermal(uid, bus, pmax, cost, up=None, down=None, r_up=None, r_down=None):
    up = cost * 1.2 if up is None else up
    down = cost * 0.85 if down is None else down
    return DispatchableUnit(uid, THERMAL, bus, pmax, pmax if r_up is None else r_up,
                            pmax if r_down is None else r_down, cost, up, down)


def gfpp(uid, bus, pmax, node, phi, r_up=None, r_down=None):
    return DispatchableUnit(uid, GAS, bus, pmax, pmax if r_up is None else r_up, pmax if r_down is None else r_down,
                            gas_node=node, phi=phi)


def producer(kid, node, gmax, cost, up=None, down=None, r_up=None, r_down=None):
    return GasProducer(kid, node, gmax, gmax if r_up is None else r_up, gmax if r_down is None else r_down, cost,
                       cost * 1.2 if up is None else up, cost * 0.85 if down is None else down)


def single_node(T, units, wind, producers, load_e, load_g, shed_e=500.0, shed_g=100.0, **cfg) -> EnergySystem:
    """One bus and one gas node, no lines or pipelines."""
    power = PowerGrid(("B1",), (), "B1", {"B1": tuple(map(float, load_e))})
    gas = GasGrid((GasNode("N1", 30.0, 60.0),), loads={"N1": tuple(map(float, load_g))})
    config = RunConfig(T, shed_e, shed_g, **cfg)
    return EnergySystem(power, gas, tuple(units), tuple(wind), tuple(producers), (), config, "single-node")


# --------------------------------------------------------------------------
# engineered fixtures
# --------------------------------------------------------------------------


def tight_gas() -> tuple[EnergySystem, ScenarioSet]:
    """case3x3 with thin gas reserves and a deep wind shortfall.

    Upward regulation offered by the gas-fired unit looks cheap, but
    producers can only add 20 kcf/h each and the storage is frozen, so the
    fuel it would draw exceeds what the network can bring.
    """
    base, _ = case3x3()
    producers = tuple(dataclasses.replace(k, reserve_up=20.0) for k in base.producers)
    storages = tuple(dataclasses.replace(s, inj_rate=1e-3, wd_rate=1e-3) for s in base.storages)
    units = tuple(dataclasses.replace(u, reserve_up=80.0) if u.is_gas else u for u in base.units)
    system = dataclasses.replace(base, producers=producers, storages=storages, units=units, name="tight-gas")
    fc = np.array(system.wind[0].forecast)
    scen = ScenarioSet.equiprobable({
        "low": {"W1": tuple(np.round(fc * 0.3, 3))},
        "high": {"W1": tuple(np.minimum(np.round(fc * 1.3, 3), 120.0))},
    })
    return system, scen


def scarce_up() -> tuple[EnergySystem, ScenarioSet]:
    """The marginal thermal unit offers no upward reserve.

    Its energy offer (23 $/MWh) sits between 0.9x and 1x of the gas-fired
    unit's derived offer (3 $/kcf x 8 kcf/MWh = 24 $/MWh), so an
    under-estimated gas price moves the gas-fired unit into the day-ahead
    schedule and leaves only the reserve-less unit idle.
    """
    T = 3
    units = [
        thermal("T1", "B1", 50, 10, 12, 8, r_up=0.0),
        thermal("T2", "B1", 40, 23, 25, 21, r_up=0.0),
        gfpp("GF", "B1", 40, "N1", 8.0),
    ]
    wind = [WindFarm("W", "B1", 60.0, (20.0, 25.0, 20.0))]
    prods = [producer("P", "N1", 2000, 3.0, 3.3, 2.7)]
    system = single_node(T, units, wind, prods, [100, 105, 100], [50, 50, 50])
    scen = ScenarioSet.equiprobable({
        "low": {"W": (2.0, 4.0, 3.0)},
        "high": {"W": (30.0, 35.0, 30.0)},
    })
    return system, scen


def flat() -> tuple[EnergySystem, ScenarioSet]:
    """Time-invariant loads, wind and costs with no intertemporal gas assets."""
    T = 4
    units = [thermal("T1", "B1", 80, 20), thermal("T2", "B1", 60, 40), gfpp("GF", "B1", 50, "N1", 7.0)]
    wind = [WindFarm("W", "B1", 60.0, (30.0,) * T)]
    prods = [producer("P", "N1", 800, 3.5)]
    system = single_node(T, units, wind, prods, [120] * T, [100] * T)
    scen = ScenarioSet.equiprobable({"a": {"W": (15.0,) * T}, "b": {"W": (30.0,) * T}, "c": {"W": (45.0,) * T}})
    return system, scen


def brute_force() -> tuple[EnergySystem, ScenarioSet]:
    """One bus, one gas node, one thermal unit, one gas-fired unit, one producer, two periods."""
    T = 2
    units = [thermal("T", "B1", 100, 20, 25, 15, r_up=50, r_down=50), gfpp("GF", "B1", 60, "N1", 2.0, 40, 40)]
    wind = [WindFarm("W", "B1", 50.0, (20.0, 30.0))]
    prods = [producer("P", "N1", 300, 5.0, 6.0, 4.0, r_up=30, r_down=100)]
    system = single_node(T, units, wind, prods, [90, 110], [20, 20])
    scen = ScenarioSet(("dry", "wet"), (0.4, 0.6), {"dry": {"W": (5.0, 12.0)}, "wet": {"W": (32.0, 45.0)}})
    return system, scen


def uncongested() -> tuple[EnergySystem, ScenarioSet]:
    """Three buses with ample line capacity, one period; the peaker sets the price."""
    power = PowerGrid(("B1", "B2", "B3"),
                      (Line("B1", "B2", 10.0, 500.0), Line("B2", "B3", 10.0, 500.0), Line("B1", "B3", 10.0, 500.0)),
                      "B1", {"B1": (90.0,), "B2": (50.0,), "B3": (30.0,)})
    gas = GasGrid((GasNode("N1", 30.0, 60.0),), loads={"N1": (10.0,)})
    units = (thermal("G1", "B1", 150, 20), thermal("G2", "B3", 80, 45))
    system = EnergySystem(power, gas, units, (), (producer("P", "N1", 100, 2.0),), (), RunConfig(1), "uncongested")
    return system, ScenarioSet.expected(system)


def shedding() -> tuple[EnergySystem, ScenarioSet]:
    """A wind collapse larger than every reserve: both loads are partly shed.

    Shedding gas (100 $/kcf x 4.5 kcf/MWh) to run the gas-fired unit is
    cheaper than shedding power (500 $/MWh), so the gas-fired unit runs on
    shed gas until its reserve is exhausted and the remaining shortfall sheds
    power.
    """
    T = 1
    units = [thermal("T", "B1", 100, 20, 25, 15, r_up=10, r_down=10), gfpp("GF", "B1", 40, "N1", 4.5, 20, 20)]
    wind = [WindFarm("W", "B1", 80.0, (60.0,))]
    prods = [producer("P", "N1", 200, 5.0, 6.0, 4.0, r_up=5, r_down=5)]
    system = single_node(T, units, wind, prods, [150], [120])
    scen = ScenarioSet(("calm", "normal"), (0.2, 0.8), {"calm": {"W": (0.0,)}, "normal": {"W": (60.0,)}})
    return system, scen


def random_system(seed: int, T: int = 3, n_scen: int = 3) -> tuple[EnergySystem, ScenarioSet]:
    """Small random coupled system: 2 buses, 2 gas nodes, 1 pipeline, feasible by construction."""
    rng = np.random.default_rng(seed)
    load_e = {b: tuple(np.round(rng.uniform(20, 60, T), 2)) for b in ("B1", "B2")}
    peak = max(sum(v[t] for v in load_e.values()) for t in range(T))
    c1, c2 = (float(x) for x in np.round(rng.uniform(10, 40, 2), 2))
    units = (
        thermal("T1", "B1", round(peak * 0.7, 2), c1, r_up=round(peak * 0.3, 2), r_down=round(peak * 0.3, 2)),
        thermal("T2", "B2", round(peak * 0.6, 2), c2),
        gfpp("GF", "B2", round(float(rng.uniform(20, 50)), 2), "N2", round(float(rng.uniform(6, 10)), 2)),
    )
    cap = round(float(rng.uniform(30, 70)), 2)
    fc = tuple(np.round(rng.uniform(0.2, 0.8, T) * cap, 2))
    power = PowerGrid(("B1", "B2"), (Line("B1", "B2", 10.0, round(float(rng.uniform(30, 100)), 2)),), "B1", load_e)
    lo2 = float(rng.uniform(25, 35))
    nodes = (GasNode("N1", 40.0, 70.0), GasNode("N2", round(lo2, 2), 65.0))
    load_g = {"N1": tuple(np.round(rng.uniform(50, 150, T), 2)), "N2": tuple(np.round(rng.uniform(50, 200, T), 2))}
    pipes = (Pipeline("N1", "N2", round(float(rng.uniform(10, 25)), 2), round(float(rng.uniform(20, 60)), 2)),)
    gas = GasGrid(nodes, pipes, (), load_g)
    prods = (
        producer("P1", "N1", 1500, round(float(rng.uniform(1.5, 3)), 3), r_up=round(float(rng.uniform(20, 200)), 2),
                 r_down=300),
        producer("P2", "N2", 600, round(float(rng.uniform(3, 5)), 3), r_up=round(float(rng.uniform(20, 200)), 2),
                 r_down=300),
    )
    stor = ()
    if rng.random() < 0.5:
        stor = (GasStorage("S", "N2", 100.0, 900.0, 500.0, 60.0, 60.0, 2.0, 2.5, 1.5),)
    config = RunConfig(T, 500.0, 100.0, oa_points=8)
    system = EnergySystem(power, gas, units, (WindFarm("W", "B1", cap, fc),), prods, stor, config, f"random-{seed}")
    real = {}
    for s in range(n_scen):
        real[f"s{s + 1}"] = {"W": tuple(np.round(np.clip(np.array(fc) * rng.uniform(0.3, 1.7, T), 0, cap), 2))}
    return system, ScenarioSet.equiprobable(real)


FIXTURES = {
    "case3x3": case3x3,
    "tight-gas": tight_gas,
    "scarce-up": scarce_up,
    "flat": flat,
    "brute-force": brute_force,
    "uncongested": uncongested,
    "shedding": shedding,
}
