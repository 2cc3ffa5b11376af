"""Market clearing for coupled electricity and natural-gas systems with linepack.

Three designs are provided: decoupled sequential clearing (Seq-Dec),
coupled sequential clearing (Seq-Coup) and a coupled two-stage stochastic
program (Stoch-Coup).  All solve mixed-integer programs over a DC power grid
and a gas network whose pipeline physics are outer-approximated.
"""
from .evaluation import CostReport, expected_cost, performance_ratio, production_shares
from .experiments import ideal_storage_baseline, run_experiment_suite
from .gas import compute_big_m, generate_pressure_points, oa_coefficients, weymouth_flow
from .lp import MilpModel, Solution, solve_lp_fixed, solve_milp
from .models import (DispatchSchedule, build_coupled_da, build_coupled_rt, build_el_da, build_el_rt, build_gas_da,
                     build_gas_rt, build_stoch_coup, derive_gfpp_offers, gfpp_fuel_demand, gfpp_fuel_deviation)
from .policies import PolicyRun, run_policy, run_seq_coup, run_seq_dec, run_stoch_coup
from .system import EnergySystem, RunConfig, ScenarioSet, load_scenarios, load_system

__version__ = "0.1.0"

__all__ = [
    "CostReport", "DispatchSchedule", "EnergySystem", "MilpModel", "PolicyRun", "RunConfig", "ScenarioSet",
    "Solution", "build_coupled_da", "build_coupled_rt", "build_el_da", "build_el_rt", "build_gas_da",
    "build_gas_rt", "build_stoch_coup", "compute_big_m", "derive_gfpp_offers", "expected_cost",
    "generate_pressure_points", "gfpp_fuel_demand", "gfpp_fuel_deviation", "ideal_storage_baseline",
    "load_scenarios", "load_system", "oa_coefficients", "performance_ratio", "production_shares",
    "run_experiment_suite", "run_policy", "run_seq_coup", "run_seq_dec", "run_stoch_coup", "solve_lp_fixed",
    "solve_milp", "weymouth_flow",
]
