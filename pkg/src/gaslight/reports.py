"""CSV report files and the run manifest; column orders are documented in docs/formats.md."""
from __future__ import annotations

import csv
import json
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable

from .experiments import Cell, Check
from .policies import PolicyRun
from .system import EnergySystem, ScenarioSet

DA = "day-ahead"

COSTS_COLUMNS = ["policy", "scenario", "probability", "total", "day_ahead", "balancing", "gfpp_share",
                 "tpp_share", "shed_e", "shed_g", "spill"]
DISPATCH_COLUMNS = ["stage", "kind", "id", "period", "quantity", "value"]
PRICE_COLUMNS = ["stage", "node", "period", "price"]
GAS_STATE_COLUMNS = ["stage", "kind", "id", "period", "value"]
MATRIX_COLUMNS = ["policy", "variant", "status", "total", "day_ahead", "balancing", "gfpp_share", "tpp_share",
                  "shed_e", "shed_g", "spill", "error"]

RUN_FILES = ("costs.csv", "dispatch.csv", "prices_el.csv", "prices_gas.csv", "gas_state.csv", "manifest.json")


def fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        if v == 0.0:
            return "0"  # folds -0.0
        return f"{v:.12g}"
    return str(v)


def write_csv(path: Path, columns: list[str], rows: Iterable[dict]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([fmt(r.get(c)) for c in columns])


def _parse(v: str):
    if v == "":
        return None
    try:
        return int(v)
    except ValueError:
        pass
    try:
        return float(v)
    except ValueError:
        return v


def read_csv(path) -> list[dict]:
    """Rows as dicts; numbers come back as int/float and empty cells as None."""
    with open(path, newline="", encoding="utf-8") as fh:
        return [{k: _parse(v) for k, v in row.items()} for row in csv.DictReader(fh)]


# --------------------------------------------------------------------------
# one policy run
# --------------------------------------------------------------------------


def cost_rows(run: PolicyRun, scenarios: ScenarioSet) -> list[dict]:
    rep = run.report
    rows = [dict(policy=run.label, scenario="expected", probability=1.0, **rep.as_row())]
    for sid, p in scenarios.items():
        oc = run.outcomes[sid]
        rows.append(dict(policy=run.label, scenario=sid, probability=p, total=rep.day_ahead + rep.per_scenario[sid],
                         day_ahead=rep.day_ahead, balancing=rep.per_scenario[sid],
                         shed_e=sum(oc.shed_e.values()), shed_g=sum(oc.shed_g.values()),
                         spill=sum(oc.spill.values())))
    return rows


def _long(stage, kind, quantity, values: dict) -> list[dict]:
    return [dict(stage=stage, kind=kind, id=k, period=t + 1, quantity=quantity, value=v)
            for (k, t), v in values.items()]


def dispatch_rows(run: PolicyRun, system: EnergySystem) -> list[dict]:
    s = run.schedule
    rows = _long(DA, "unit", "p", s.p) + _long(DA, "wind", "w", s.w) + _long(DA, "producer", "g", s.g)
    rows += _long(DA, "line", "f", s.f)
    if s.shift:
        rows += _long(DA, "bus", "shift", s.shift)
    if s.gas is not None and system.storages:
        rows += _long(DA, "storage", "gin", s.gas.gin) + _long(DA, "storage", "gout", s.gas.gout)
    for sid, oc in run.outcomes.items():
        rows += _long(sid, "unit", "up", oc.pu) + _long(sid, "unit", "down", oc.pd)
        rows += _long(sid, "producer", "up", oc.gu) + _long(sid, "producer", "down", oc.gd)
        rows += _long(sid, "storage", "up", oc.su) + _long(sid, "storage", "down", oc.sd)
        rows += _long(sid, "wind", "spill", oc.spill)
        rows += _long(sid, "bus", "shed", oc.shed_e) + _long(sid, "gas_node", "shed", oc.shed_g)
        rows += _long(sid, "line", "f", oc.f)
        if oc.shift:
            rows += _long(sid, "bus", "shift", oc.shift)
    return rows


def price_rows(run: PolicyRun, gas: bool) -> list[dict]:
    def rows(stage, lam):
        return [dict(stage=stage, node=n, period=t + 1, price=v) for (n, t), v in lam.items()]

    out = rows(DA, run.schedule.lam_g if gas else run.schedule.lam_e)
    for sid, oc in run.outcomes.items():
        out += rows(sid, oc.lam_g if gas else oc.lam_e)
    return out


def gas_state_rows(run: PolicyRun) -> list[dict]:
    def rows(stage, st):
        if st is None:
            return []
        out = []
        for kind, vals in (("pressure", st.pr), ("linepack", st.h), ("flow", st.q), ("storage", st.e),
                           ("compressor", st.qc)):
            out += [dict(stage=stage, kind=kind, id=k, period=t + 1, value=v) for (k, t), v in vals.items()]
        return out

    out = rows(DA, run.schedule.gas)
    for sid, oc in run.outcomes.items():
        out += rows(sid, oc.gas)
    return out


def manifest(command: str, argv: list[str], **fields) -> dict:
    from . import __version__
    return dict(command=command, argv=list(argv), **fields, engine_version=__version__,
                timestamp=datetime.now(timezone.utc).isoformat(timespec="seconds"))


def write_manifest(out: Path, data: dict) -> None:
    (out / "manifest.json").write_text(json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def read_manifest(path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def write_run(out: Path, run: PolicyRun, system: EnergySystem, scenarios: ScenarioSet, meta: dict) -> list[Path]:
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "costs.csv", COSTS_COLUMNS, cost_rows(run, scenarios))
    write_csv(out / "dispatch.csv", DISPATCH_COLUMNS, dispatch_rows(run, system))
    write_csv(out / "prices_el.csv", PRICE_COLUMNS, price_rows(run, gas=False))
    write_csv(out / "prices_gas.csv", PRICE_COLUMNS, price_rows(run, gas=True))
    write_csv(out / "gas_state.csv", GAS_STATE_COLUMNS, gas_state_rows(run))
    write_manifest(out, meta)
    return [out / f for f in RUN_FILES]


# --------------------------------------------------------------------------
# experiment grid
# --------------------------------------------------------------------------


def matrix_rows(cells: list[Cell]) -> list[dict]:
    rows = []
    for c in cells:
        row = dict(policy=c.policy, variant=c.variant, status="ok" if c.ok else "failed", error=c.error)
        if c.ok:
            row.update(c.report.as_row())
        rows.append(row)
    return rows


def checks_text(checks: list[Check], ratio=None) -> str:
    lines = []
    for ch in checks:
        verdict = {True: "PASS", False: "FAIL", None: "SKIP"}[ch.passed]
        lines.append(f"{ch.name}: {verdict} ({ch.detail})")
    if ratio is not None:
        if ratio.value is None:
            lines.append(f"linepack ratio: undefined ({ratio.note})")
        else:
            lines.append(f"linepack ratio: {ratio.value:.4f}%" + (f" ({ratio.note})" if ratio.note else ""))
    return "\n".join(lines) + "\n"


def write_matrix(out: Path, cells: list[Cell], checks: list[Check], ratio, meta: dict) -> None:
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "matrix.csv", MATRIX_COLUMNS, matrix_rows(cells))
    (out / "checks.txt").write_text(checks_text(checks, ratio), encoding="utf-8")
    write_manifest(out, meta)
