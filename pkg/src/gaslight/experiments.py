"""Experiment grid: every design under linepack, steady-state and initial-linepack variants."""
from __future__ import annotations

import logging
from dataclasses import dataclass

from . import lp
from .evaluation import CostReport, RatioResult, performance_ratio
from .policies import (SEQ_COUP, SEQ_DEC, SEQ_DEC_DOWN, SEQ_DEC_UP, STOCH_COUP, PolicyRun, StageError,
                       run_policy, run_stoch_coup, seq_coup_gas_prices)
from .system import EnergySystem, ScenarioSet

log = logging.getLogger(__name__)

LINEPACK = "linepack"
STEADY = "steady-state"
PLUS5 = "+5% initial linepack"
MINUS5 = "-5% initial linepack"
IDEAL = "ideal storage"

POLICIES = (STOCH_COUP, SEQ_COUP, SEQ_DEC, SEQ_DEC_UP, SEQ_DEC_DOWN)


@dataclass
class Cell:
    policy: str
    variant: str
    run: PolicyRun | None = None
    error: str = ""

    @property
    def ok(self) -> bool:
        return self.run is not None

    @property
    def report(self) -> CostReport | None:
        return self.run.report if self.run else None


def grid_cells(grid: str = "full") -> list[tuple[str, str]]:
    """(policy, variant) pairs of a grid; ``paper`` drops the mis-estimated steady-state cells."""
    if grid not in ("full", "paper"):
        raise ValueError(f"unknown grid {grid!r}; expected 'full' or 'paper'")
    cells = [(p, LINEPACK) for p in POLICIES]
    steady = POLICIES if grid == "full" else (STOCH_COUP, SEQ_COUP, SEQ_DEC)
    cells += [(p, STEADY) for p in steady]
    cells += [(STOCH_COUP, PLUS5), (STOCH_COUP, MINUS5)]
    return cells


def variant_system(system: EnergySystem, variant: str) -> EnergySystem:
    if variant == LINEPACK:
        return system
    if variant == STEADY:
        return system.with_config(steady_state=True)
    if variant == PLUS5:
        return system.with_config(linepack_scale=system.config.linepack_scale * 1.05)
    if variant == MINUS5:
        return system.with_config(linepack_scale=system.config.linepack_scale * 0.95)
    if variant == IDEAL:
        return system.with_config(ideal_storage=True)
    raise ValueError(f"unknown variant {variant!r}")


def ideal_storage_baseline(system: EnergySystem, scenarios: ScenarioSet) -> PolicyRun:
    """Stoch-Coup with a lossless, unbounded electric storage at every bus."""
    run = run_stoch_coup(variant_system(system, IDEAL), scenarios)
    run.tag = STOCH_COUP
    return run


def run_experiment_suite(system: EnergySystem, scenarios: ScenarioSet, grid: str = "full",
                         include_ideal: bool = True) -> list[Cell]:
    """Run every cell of the grid; a failing cell is recorded and the rest continue."""
    cells = [Cell(p, v) for p, v in grid_cells(grid)]
    if include_ideal:
        cells.append(Cell(STOCH_COUP, IDEAL))
    prices: dict[str, dict] = {}
    for cell in cells:
        sysv = variant_system(system, cell.variant)
        try:
            if cell.variant == IDEAL:
                cell.run = ideal_storage_baseline(system, scenarios)
                continue
            offers = None
            if cell.policy in (SEQ_DEC, SEQ_DEC_UP, SEQ_DEC_DOWN):
                if cell.variant not in prices:
                    prices[cell.variant] = seq_coup_gas_prices(sysv)
                offers = prices[cell.variant]
            cell.run = run_policy(sysv, scenarios, cell.policy, offers)
        except (StageError, lp.SolverError, ValueError) as exc:
            cell.error = str(exc)
            log.error("cell %s / %s failed: %s", cell.policy, cell.variant, exc)
    return cells


def find(cells: list[Cell], policy: str, variant: str) -> Cell | None:
    return next((c for c in cells if c.policy == policy and c.variant == variant), None)


@dataclass
class Check:
    name: str
    passed: bool | None  # None: a cell it needs failed
    detail: str


def _le(a: float, b: float, rel: float) -> bool:
    return a <= b + rel * max(1.0, abs(b))


def ordering_checks(cells: list[Cell], rel: float = 1e-5) -> list[Check]:
    """The orderings that hold for any system, evaluated on a finished grid."""

    def total(policy, variant):
        c = find(cells, policy, variant)
        return c.report.total if c is not None and c.ok else None

    pairs = [
        ("StochCoup<=SeqCoup", (STOCH_COUP, LINEPACK), (SEQ_COUP, LINEPACK)),
        ("SteadyStochCoup<=SteadySeqCoup", (STOCH_COUP, STEADY), (SEQ_COUP, STEADY)),
        ("Ideal<=StochCoup", (STOCH_COUP, IDEAL), (STOCH_COUP, LINEPACK)),
        ("StochCoup<=SteadyStochCoup", (STOCH_COUP, LINEPACK), (STOCH_COUP, STEADY)),
        ("Plus5<=StochCoup", (STOCH_COUP, PLUS5), (STOCH_COUP, LINEPACK)),
        ("StochCoup<=Minus5", (STOCH_COUP, LINEPACK), (STOCH_COUP, MINUS5)),
    ]
    out = []
    for name, lo, hi in pairs:
        a, b = total(*lo), total(*hi)
        if a is None or b is None:
            if find(cells, *lo) is None or find(cells, *hi) is None:
                continue
            out.append(Check(name, None, "cell failed"))
        else:
            out.append(Check(name, _le(a, b, rel), f"{a:.6f} vs {b:.6f}"))
    return out


def linepack_ratio(cells: list[Cell]) -> RatioResult | None:
    ss, lpk, ideal = (find(cells, STOCH_COUP, v) for v in (STEADY, LINEPACK, IDEAL))
    if not all(c is not None and c.ok for c in (ss, lpk, ideal)):
        return None
    return performance_ratio(ss.report.total, lpk.report.total, ideal.report.total)
