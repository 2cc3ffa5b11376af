"""Domain types for a coupled power/gas system and their text formats.

A system file is a sequence of ``[section]`` blocks.  ``[config]`` holds
``key = value`` lines; every other section is a comma-separated table whose
first line is the header.  Time series are written as extra columns named
``1 .. T``.  ``#`` starts a comment.  See ``docs/formats.md``.

Scenario files are CSV with columns ``scenario,farm,period,value_mw`` (or
``value_pu`` for traces normalized to the farm capacity), optionally
followed by a second table headed ``scenario,weight``.

The time step is one hour throughout, so MW and MWh/period coincide, as do
kcf/h and kcf/period.
"""
from __future__ import annotations

import csv
import dataclasses
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

THERMAL = "thermal"
GAS = "gas"

PROB_TOL = 1e-9


class SystemFileError(ValueError):
    """Malformed system or scenario text; carries line and field context."""

    def __init__(self, msg: str, line: int | None = None, fieldname: str | None = None, path=None):
        where = []
        if path is not None:
            where.append(str(path))
        if line is not None:
            where.append(f"line {line}")
        if fieldname:
            where.append(f"field {fieldname!r}")
        super().__init__(f"{': '.join(where)}: {msg}" if where else msg)
        self.line = line
        self.fieldname = fieldname


class ValidationError(ValueError):
    """A domain invariant does not hold."""


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ValidationError(msg)


def _series(values: Iterable[float]) -> tuple[float, ...]:
    return tuple(float(v) for v in values)


# --------------------------------------------------------------------------
# power side
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Line:
    from_bus: str
    to_bus: str
    susceptance: float
    capacity: float

    @property
    def id(self) -> str:
        return f"{self.from_bus}-{self.to_bus}"


@dataclass(frozen=True)
class PowerGrid:
    buses: tuple[str, ...]
    lines: tuple[Line, ...]
    reference_bus: str
    loads: dict[str, tuple[float, ...]] = field(default_factory=dict)

    def __post_init__(self):
        _require(len(set(self.buses)) == len(self.buses), "duplicate bus ids")
        _require(self.reference_bus in self.buses, f"reference bus {self.reference_bus!r} is not a bus")
        for ln in self.lines:
            for b in (ln.from_bus, ln.to_bus):
                _require(b in self.buses, f"line {ln.id} endpoint {b!r} is not a bus")
            _require(ln.from_bus != ln.to_bus, f"line {ln.id} is a self-loop")
            _require(ln.susceptance > 0, f"line {ln.id}: susceptance must be > 0")
            _require(ln.capacity > 0, f"line {ln.id}: capacity must be > 0")
        for b, ser in self.loads.items():
            _require(b in self.buses, f"electric load at unknown bus {b!r}")
            _require(all(v >= 0 for v in ser), f"electric load at {b} must be >= 0")

    def load(self, bus: str, t: int) -> float:
        ser = self.loads.get(bus)
        return ser[t] if ser else 0.0


@dataclass(frozen=True)
class DispatchableUnit:
    id: str
    kind: str
    bus: str
    pmax: float
    reserve_up: float
    reserve_down: float
    cost: float | None = None
    cost_up: float | None = None
    cost_down: float | None = None
    gas_node: str | None = None
    phi: float | None = None

    def __post_init__(self):
        _require(self.kind in (THERMAL, GAS), f"unit {self.id}: kind must be thermal or gas")
        _require(self.pmax >= 0, f"unit {self.id}: pmax must be >= 0")
        _require(0 <= self.reserve_up <= self.pmax, f"unit {self.id}: 0 <= reserve_up <= pmax violated")
        _require(0 <= self.reserve_down <= self.pmax, f"unit {self.id}: 0 <= reserve_down <= pmax violated")
        if self.kind == THERMAL:
            _require(None not in (self.cost, self.cost_up, self.cost_down),
                     f"unit {self.id}: thermal units need cost, cost_up and cost_down")
        else:
            _require(self.gas_node is not None, f"unit {self.id}: gas-fired unit needs a gas node")
            _require(self.phi is not None and self.phi > 0, f"unit {self.id}: phi must be > 0")
        if None not in (self.cost, self.cost_up, self.cost_down):
            _require(self.cost_down <= self.cost <= self.cost_up,
                     f"unit {self.id}: cost_down <= cost <= cost_up violated")

    @property
    def is_gas(self) -> bool:
        return self.kind == GAS


@dataclass(frozen=True)
class WindFarm:
    id: str
    bus: str
    capacity: float
    forecast: tuple[float, ...]

    def __post_init__(self):
        _require(self.capacity >= 0, f"wind farm {self.id}: capacity must be >= 0")
        _require(all(0 <= v <= self.capacity + 1e-9 for v in self.forecast),
                 f"wind farm {self.id}: forecast must lie in [0, capacity]")


# --------------------------------------------------------------------------
# gas side
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class GasNode:
    id: str
    pr_min: float
    pr_max: float

    def __post_init__(self):
        _require(0 < self.pr_min < self.pr_max, f"gas node {self.id}: need 0 < pr_min < pr_max")


@dataclass(frozen=True)
class Pipeline:
    from_node: str
    to_node: str
    k_flow: float
    k_linepack: float
    h0: float | None = None

    @property
    def id(self) -> str:
        return f"{self.from_node}-{self.to_node}"

    def linepack_bounds(self, nodes: dict[str, GasNode]) -> tuple[float, float]:
        m, u = nodes[self.from_node], nodes[self.to_node]
        return (self.k_linepack * (m.pr_min + u.pr_min) / 2, self.k_linepack * (m.pr_max + u.pr_max) / 2)


@dataclass(frozen=True)
class Compressor:
    """Directed compressor branch ``from_node -> to_node`` with ``pr_to <= factor * pr_from``."""

    from_node: str
    to_node: str
    factor: float
    capacity: float

    @property
    def id(self) -> str:
        return f"{self.from_node}>{self.to_node}"


@dataclass(frozen=True)
class GasGrid:
    nodes: tuple[GasNode, ...]
    pipelines: tuple[Pipeline, ...] = ()
    compressors: tuple[Compressor, ...] = ()
    loads: dict[str, tuple[float, ...]] = field(default_factory=dict)
    terminal_linepack: float | None = None

    def __post_init__(self):
        ids = [n.id for n in self.nodes]
        _require(len(set(ids)) == len(ids), "duplicate gas node ids")
        nodes = self.node_map
        seen = set()
        pipes = []
        for p in self.pipelines:
            for n in (p.from_node, p.to_node):
                _require(n in nodes, f"pipeline {p.id} endpoint {n!r} is not a gas node")
            _require(p.from_node != p.to_node, f"pipeline {p.id} is a self-loop")
            key = frozenset((p.from_node, p.to_node))
            _require(key not in seen, f"pipeline {p.id} duplicates another pipeline")
            seen.add(key)
            _require(p.k_flow > 0 and p.k_linepack > 0, f"pipeline {p.id}: K_f and K_h must be > 0")
            lo, hi = p.linepack_bounds(nodes)
            if p.h0 is None:
                # midpoint of the pressure-consistent range
                p = dataclasses.replace(p, h0=(lo + hi) / 2)
            _require(lo - 1e-9 <= p.h0 <= hi + 1e-9,
                     f"pipeline {p.id}: initial linepack {p.h0} outside [{lo:g}, {hi:g}]")
            pipes.append(p)
        object.__setattr__(self, "pipelines", tuple(pipes))
        for c in self.compressors:
            for n in (c.from_node, c.to_node):
                _require(n in nodes, f"compressor {c.id} endpoint {n!r} is not a gas node")
            _require(c.factor >= 1, f"compressor {c.id}: factor must be >= 1")
            _require(c.capacity >= 0, f"compressor {c.id}: capacity must be >= 0")
        for n, ser in self.loads.items():
            _require(n in nodes, f"gas load at unknown node {n!r}")
            _require(all(v >= 0 for v in ser), f"gas load at {n} must be >= 0")
        if self.terminal_linepack is None:
            object.__setattr__(self, "terminal_linepack", float(sum(p.h0 for p in pipes)))
        _require(self.terminal_linepack >= 0, "terminal linepack must be >= 0")

    @property
    def node_map(self) -> dict[str, GasNode]:
        return {n.id: n for n in self.nodes}

    @property
    def node_ids(self) -> tuple[str, ...]:
        return tuple(n.id for n in self.nodes)

    def load(self, node: str, t: int) -> float:
        ser = self.loads.get(node)
        return ser[t] if ser else 0.0

    def max_linepack(self) -> float:
        nodes = self.node_map
        return sum(p.linepack_bounds(nodes)[1] for p in self.pipelines)


@dataclass(frozen=True)
class GasProducer:
    id: str
    node: str
    gmax: float
    reserve_up: float
    reserve_down: float
    cost: float
    cost_up: float
    cost_down: float

    def __post_init__(self):
        _require(0 <= self.reserve_up <= self.gmax, f"producer {self.id}: 0 <= reserve_up <= gmax violated")
        _require(0 <= self.reserve_down <= self.gmax, f"producer {self.id}: 0 <= reserve_down <= gmax violated")
        _require(self.cost_down <= self.cost <= self.cost_up,
                 f"producer {self.id}: cost_down <= cost <= cost_up violated")


@dataclass(frozen=True)
class GasStorage:
    id: str
    node: str
    e_min: float
    e_max: float
    e0: float | None
    inj_rate: float
    wd_rate: float
    cost: float
    cost_up: float
    cost_down: float

    def __post_init__(self):
        _require(0 <= self.e_min <= self.e_max, f"storage {self.id}: need 0 <= e_min <= e_max")
        if self.e0 is None:
            object.__setattr__(self, "e0", (self.e_min + self.e_max) / 2)
        _require(self.e_min <= self.e0 <= self.e_max, f"storage {self.id}: e0 outside [e_min, e_max]")
        _require(self.inj_rate > 0 and self.wd_rate > 0, f"storage {self.id}: rates must be > 0")
        _require(self.cost_down <= self.cost <= self.cost_up,
                 f"storage {self.id}: cost_down <= cost <= cost_up violated")


# --------------------------------------------------------------------------
# configuration and system
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class RunConfig:
    horizon: int
    shed_penalty_e: float = 1000.0
    shed_penalty_g: float = 200.0
    big_m_flow: float | None = None
    big_m_oa: float | None = None
    oa_points: int = 20
    steady_state: bool = False
    ideal_storage: bool = False
    mis_factor: float = 1.0
    reg_up_factor: float = 1.1
    reg_down_factor: float = 0.91
    linepack_scale: float = 1.0
    mip_gap: float = 1e-6
    feas_tol: float = 1e-7
    max_curtail_iter: int = 20
    max_columns: int = 500_000

    def __post_init__(self):
        _require(int(self.horizon) == self.horizon and self.horizon >= 1, "horizon must be an integer >= 1")
        _require(self.oa_points >= 2, "oa_points must be >= 2")
        for k in ("mis_factor", "reg_up_factor", "reg_down_factor", "linepack_scale"):
            _require(getattr(self, k) > 0, f"{k} must be > 0")
        _require(self.shed_penalty_e > 0 and self.shed_penalty_g > 0, "shed penalties must be > 0")
        _require(self.mip_gap >= 0 and self.feas_tol > 0, "solver tolerances must be positive")
        _require(self.max_curtail_iter >= 1, "max_curtail_iter must be >= 1")


@dataclass(frozen=True)
class EnergySystem:
    power: PowerGrid
    gas: GasGrid
    units: tuple[DispatchableUnit, ...]
    wind: tuple[WindFarm, ...]
    producers: tuple[GasProducer, ...]
    storages: tuple[GasStorage, ...]
    config: RunConfig
    name: str = "system"

    def __post_init__(self):
        T = self.config.horizon
        buses = set(self.power.buses)
        gnodes = set(self.gas.node_ids)
        for coll in (self.units, self.wind, self.producers, self.storages):
            ids = [x.id for x in coll]
            _require(len(set(ids)) == len(ids), f"duplicate ids {sorted(i for i in ids if ids.count(i) > 1)}")
        for u in self.units:
            _require(u.bus in buses, f"unit {u.id}: bus {u.bus!r} is not a bus")
            if u.is_gas:
                _require(u.gas_node in gnodes, f"unit {u.id}: gas node {u.gas_node!r} is not a gas node")
        for w in self.wind:
            _require(w.bus in buses, f"wind farm {w.id}: bus {w.bus!r} is not a bus")
            _require(len(w.forecast) == T, f"wind farm {w.id}: forecast has {len(w.forecast)} periods, expected {T}")
        for k in self.producers:
            _require(k.node in gnodes, f"producer {k.id}: node {k.node!r} is not a gas node")
        for s in self.storages:
            _require(s.node in gnodes, f"storage {s.id}: node {s.node!r} is not a gas node")
        for b, ser in self.power.loads.items():
            _require(len(ser) == T, f"electric load at {b}: {len(ser)} periods, expected {T}")
        for n, ser in self.gas.loads.items():
            _require(len(ser) == T, f"gas load at {n}: {len(ser)} periods, expected {T}")
        cfg = self.config
        offers = [v for u in self.units for v in (u.cost, u.cost_up) if v is not None]
        offers += [v for k in self.producers for v in (k.cost, k.cost_up)]
        offers += [v for s in self.storages for v in (s.cost, s.cost_up)]
        if offers:
            _require(cfg.shed_penalty_e > max(offers) and cfg.shed_penalty_g > max(offers),
                     "shed penalties must exceed every offer")

    # -- views -------------------------------------------------------------

    @property
    def T(self) -> int:
        return self.config.horizon

    @property
    def periods(self) -> range:
        return range(self.config.horizon)

    @property
    def thermal_units(self) -> tuple[DispatchableUnit, ...]:
        return tuple(u for u in self.units if not u.is_gas)

    @property
    def gas_units(self) -> tuple[DispatchableUnit, ...]:
        return tuple(u for u in self.units if u.is_gas)

    def unit(self, uid: str) -> DispatchableUnit:
        return next(u for u in self.units if u.id == uid)

    def with_config(self, **changes) -> "EnergySystem":
        return dataclasses.replace(self, config=dataclasses.replace(self.config, **changes))

    def initial_linepack(self) -> dict[str, float]:
        """Per-pipeline initial linepack after applying ``linepack_scale``."""
        s = self.config.linepack_scale
        return {p.id: p.h0 * s for p in self.gas.pipelines}


@dataclass(frozen=True)
class ScenarioSet:
    ids: tuple[str, ...]
    probabilities: tuple[float, ...]
    wind: dict[str, dict[str, tuple[float, ...]]]

    def __post_init__(self):
        _require(len(self.ids) >= 1, "scenario set is empty")
        _require(len(set(self.ids)) == len(self.ids), "duplicate scenario ids")
        _require(len(self.ids) == len(self.probabilities), "one probability per scenario")
        _require(all(p > 0 for p in self.probabilities), "scenario probabilities must be > 0")
        _require(abs(sum(self.probabilities) - 1.0) <= PROB_TOL,
                 f"scenario probabilities sum to {sum(self.probabilities)!r}, not 1")
        _require(set(self.wind) == set(self.ids), "realizations must cover every scenario")

    def __len__(self):
        return len(self.ids)

    def prob(self, sid: str) -> float:
        return self.probabilities[self.ids.index(sid)]

    def items(self):
        return zip(self.ids, self.probabilities)

    def check_against(self, system: EnergySystem) -> None:
        farms = {w.id: w for w in system.wind}
        for sid in self.ids:
            real = self.wind[sid]
            _require(set(real) == set(farms), f"scenario {sid}: farms {sorted(real)} != {sorted(farms)}")
            for fid, ser in real.items():
                _require(len(ser) == system.T, f"scenario {sid}, farm {fid}: {len(ser)} periods, expected {system.T}")
                cap = farms[fid].capacity
                for t, v in enumerate(ser):
                    _require(0 <= v <= cap + 1e-9,
                             f"scenario {sid}, farm {fid}, period {t + 1}: {v} outside [0, {cap}]")

    @classmethod
    def expected(cls, system: EnergySystem) -> "ScenarioSet":
        """The singleton set whose only realization is the forecast."""
        return cls(("expected",), (1.0,), {"expected": {w.id: w.forecast for w in system.wind}})

    @classmethod
    def equiprobable(cls, realizations: dict[str, dict[str, Iterable[float]]]) -> "ScenarioSet":
        ids = tuple(realizations)
        return cls(ids, tuple(1.0 / len(ids) for _ in ids),
                   {s: {f: _series(v) for f, v in r.items()} for s, r in realizations.items()})


# --------------------------------------------------------------------------
# system text format
# --------------------------------------------------------------------------

_TABLES = {
    "buses": ["id"],
    "lines": ["from", "to", "susceptance", "capacity"],
    "units": ["id", "kind", "bus", "pmax", "reserve_up", "reserve_down", "cost", "cost_up", "cost_down",
              "gas_node", "phi"],
    "wind": ["id", "bus", "capacity"],
    "gas_nodes": ["id", "pr_min", "pr_max"],
    "pipelines": ["from", "to", "k_flow", "k_linepack", "h0"],
    "compressors": ["from", "to", "factor", "capacity"],
    "producers": ["id", "node", "gmax", "reserve_up", "reserve_down", "cost", "cost_up", "cost_down"],
    "storages": ["id", "node", "e_min", "e_max", "e0", "inj_rate", "wd_rate", "cost", "cost_up", "cost_down"],
    "loads_e": ["bus"],
    "loads_g": ["node"],
}
_SERIES_TABLES = {"wind", "loads_e", "loads_g"}
_GRID_KEYS = {"name", "reference_bus", "terminal_linepack"}
_CONFIG_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}


@dataclass
class _Table:
    header: list[str]
    rows: list[tuple[int, dict[str, str]]]
    line: int


def _split_sections(text: str, path=None) -> tuple[dict[str, tuple[int, str]], dict[str, _Table]]:
    config: dict[str, tuple[int, str]] = {}
    tables: dict[str, _Table] = {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip().lower()
            if section != "config" and section not in _TABLES:
                raise SystemFileError(f"unknown section [{section}]", lineno, path=path)
            if section in tables or (section == "config" and config):
                raise SystemFileError(f"section [{section}] appears twice", lineno, path=path)
            continue
        if section is None:
            raise SystemFileError("content before the first [section]", lineno, path=path)
        if section == "config":
            if "=" not in line:
                raise SystemFileError("expected 'key = value'", lineno, path=path)
            key, value = (s.strip() for s in line.split("=", 1))
            if key not in _CONFIG_FIELDS and key not in _GRID_KEYS:
                raise SystemFileError("unknown config key", lineno, key, path=path)
            config[key] = (lineno, value)
            continue
        cells = [c.strip() for c in next(csv.reader([line]))]
        tab = tables.get(section)
        if tab is None:
            tables[section] = _Table([c.lower() for c in cells], [], lineno)
            missing = [c for c in _TABLES[section] if c not in tables[section].header]
            optional = {"cost", "cost_up", "cost_down", "gas_node", "phi", "h0", "e0"}
            missing = [c for c in missing if c not in optional]
            if missing:
                raise SystemFileError(f"[{section}] header lacks columns {missing}", lineno, path=path)
            continue
        if len(cells) != len(tab.header):
            raise SystemFileError(f"expected {len(tab.header)} cells, got {len(cells)}", lineno, path=path)
        tab.rows.append((lineno, dict(zip(tab.header, cells))))
    return config, tables


def _num(row: dict[str, str], key: str, lineno: int, path, optional: bool = False) -> float | None:
    raw = row.get(key, "")
    if raw == "":
        if optional:
            return None
        raise SystemFileError("missing value", lineno, key, path=path)
    try:
        return float(raw)
    except ValueError:
        raise SystemFileError(f"not a number: {raw!r}", lineno, key, path=path) from None


def _series_from_row(row: dict[str, str], header: list[str], fixed: list[str], lineno: int, path):
    cols = [c for c in header if c not in fixed]
    try:
        periods = [int(c) for c in cols]
    except ValueError:
        raise SystemFileError(f"time-series columns must be period numbers, got {cols}", lineno, path=path) from None
    if periods != list(range(1, len(periods) + 1)):
        raise SystemFileError("time-series columns must be 1..T in order", lineno, path=path)
    return tuple(_num(row, c, lineno, path) for c in cols)


def parse_system(text: str, path=None) -> EnergySystem:
    """Parse system text; raises :class:`SystemFileError` or :class:`ValidationError`."""
    config, tables = _split_sections(text, path)

    def rows(sec):
        tab = tables.get(sec)
        return tab.rows if tab else []

    def header(sec):
        return tables[sec].header if sec in tables else []

    cfg_kwargs = {}
    for key, (lineno, raw) in config.items():
        if key in _GRID_KEYS:
            continue
        f = _CONFIG_FIELDS[key]
        try:
            if f.type in ("bool",) or f.default is False or f.default is True:
                if raw.lower() not in ("true", "false", "1", "0", "yes", "no"):
                    raise ValueError
                cfg_kwargs[key] = raw.lower() in ("true", "1", "yes")
            elif key in ("horizon", "oa_points", "max_curtail_iter", "max_columns"):
                cfg_kwargs[key] = int(raw)
            else:
                cfg_kwargs[key] = None if raw.lower() == "none" else float(raw)
        except ValueError:
            raise SystemFileError(f"bad value {raw!r}", lineno, key, path=path) from None
    if "horizon" not in cfg_kwargs:
        raise SystemFileError("[config] must set horizon", path=path)

    try:
        cfg = RunConfig(**cfg_kwargs)
        T = cfg.horizon

        def checked_series(row, sec, fixed, lineno):
            ser = _series_from_row(row, header(sec), fixed, lineno, path)
            if len(ser) != T:
                raise SystemFileError(f"{len(ser)} periods given, horizon is {T}", lineno, path=path)
            return ser

        buses = tuple(r["id"] for _, r in rows("buses"))
        lines = tuple(
            Line(r["from"], r["to"], _num(r, "susceptance", ln, path), _num(r, "capacity", ln, path))
            for ln, r in rows("lines")
        )
        loads_e = {r["bus"]: checked_series(r, "loads_e", ["bus"], ln) for ln, r in rows("loads_e")}
        ref = config.get("reference_bus", (None, buses[0] if buses else ""))[1]
        power = PowerGrid(buses, lines, ref, loads_e)

        units = []
        for ln, r in rows("units"):
            kind = r["kind"].lower()
            units.append(DispatchableUnit(
                r["id"], kind, r["bus"], _num(r, "pmax", ln, path), _num(r, "reserve_up", ln, path),
                _num(r, "reserve_down", ln, path), _num(r, "cost", ln, path, True),
                _num(r, "cost_up", ln, path, True), _num(r, "cost_down", ln, path, True),
                r.get("gas_node") or None, _num(r, "phi", ln, path, True),
            ))
        wind = tuple(
            WindFarm(r["id"], r["bus"], _num(r, "capacity", ln, path),
                     checked_series(r, "wind", ["id", "bus", "capacity"], ln))
            for ln, r in rows("wind")
        )
        nodes = tuple(GasNode(r["id"], _num(r, "pr_min", ln, path), _num(r, "pr_max", ln, path))
                      for ln, r in rows("gas_nodes"))
        pipes = tuple(
            Pipeline(r["from"], r["to"], _num(r, "k_flow", ln, path), _num(r, "k_linepack", ln, path),
                     _num(r, "h0", ln, path, True))
            for ln, r in rows("pipelines")
        )
        comps = tuple(
            Compressor(r["from"], r["to"], _num(r, "factor", ln, path), _num(r, "capacity", ln, path))
            for ln, r in rows("compressors")
        )
        loads_g = {r["node"]: checked_series(r, "loads_g", ["node"], ln) for ln, r in rows("loads_g")}
        ht = config.get("terminal_linepack")
        ht_val = None
        if ht is not None and ht[1].lower() != "none":
            try:
                ht_val = float(ht[1])
            except ValueError:
                raise SystemFileError(f"bad value {ht[1]!r}", ht[0], "terminal_linepack", path=path) from None
        gas = GasGrid(nodes, pipes, comps, loads_g, ht_val)
        producers = tuple(
            GasProducer(r["id"], r["node"], *(_num(r, k, ln, path) for k in _TABLES["producers"][2:]))
            for ln, r in rows("producers")
        )
        storages = tuple(
            GasStorage(r["id"], r["node"], _num(r, "e_min", ln, path), _num(r, "e_max", ln, path),
                       _num(r, "e0", ln, path, True),
                       *(_num(r, k, ln, path) for k in _TABLES["storages"][5:]))
            for ln, r in rows("storages")
        )
        name = config.get("name", (None, "system"))[1]
        return EnergySystem(power, gas, tuple(units), wind, producers, storages, cfg, name)
    except ValidationError as exc:
        if path is not None:
            raise ValidationError(f"{path}: {exc}") from None
        raise


def load_system(path) -> EnergySystem:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise SystemFileError(f"cannot read: {exc.strerror}", path=path) from exc
    return parse_system(text, path)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v) if not v.is_integer() or abs(v) >= 1e16 else str(int(v))
    return str(v)


def dump_system(system: EnergySystem) -> str:
    """Serialize to the system text format; ``parse_system`` inverts it."""
    T = system.T
    periods = [str(t) for t in range(1, T + 1)]
    out = io.StringIO()
    out.write(f"# {system.name}\n[config]\n")
    out.write(f"name = {system.name}\nreference_bus = {system.power.reference_bus}\n")
    out.write(f"terminal_linepack = {_fmt(system.gas.terminal_linepack)}\n")
    for f in dataclasses.fields(RunConfig):
        out.write(f"{f.name} = {_fmt(getattr(system.config, f.name)) or 'none'}\n")

    def table(name, header, rows):
        out.write(f"\n[{name}]\n")
        w = csv.writer(out, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])

    table("buses", ["id"], [[b] for b in system.power.buses])
    table("lines", _TABLES["lines"], [[l.from_bus, l.to_bus, l.susceptance, l.capacity] for l in system.power.lines])
    table("units", _TABLES["units"], [
        [u.id, u.kind, u.bus, u.pmax, u.reserve_up, u.reserve_down, u.cost, u.cost_up, u.cost_down, u.gas_node, u.phi]
        for u in system.units])
    table("wind", _TABLES["wind"] + periods, [[w.id, w.bus, w.capacity, *w.forecast] for w in system.wind])
    table("loads_e", ["bus"] + periods, [[b, *s] for b, s in system.power.loads.items()])
    table("gas_nodes", _TABLES["gas_nodes"], [[n.id, n.pr_min, n.pr_max] for n in system.gas.nodes])
    table("pipelines", _TABLES["pipelines"],
          [[p.from_node, p.to_node, p.k_flow, p.k_linepack, p.h0] for p in system.gas.pipelines])
    table("compressors", _TABLES["compressors"],
          [[c.from_node, c.to_node, c.factor, c.capacity] for c in system.gas.compressors])
    table("producers", _TABLES["producers"], [
        [k.id, k.node, k.gmax, k.reserve_up, k.reserve_down, k.cost, k.cost_up, k.cost_down]
        for k in system.producers])
    table("storages", _TABLES["storages"], [
        [s.id, s.node, s.e_min, s.e_max, s.e0, s.inj_rate, s.wd_rate, s.cost, s.cost_up, s.cost_down]
        for s in system.storages])
    table("loads_g", ["node"] + periods, [[n, *s] for n, s in system.gas.loads.items()])
    return out.getvalue()


def save_system(system: EnergySystem, path) -> None:
    Path(path).write_text(dump_system(system), encoding="utf-8")


# --------------------------------------------------------------------------
# scenario format
# --------------------------------------------------------------------------


def parse_scenarios(text: str, system: EnergySystem, path=None) -> ScenarioSet:
    reader = csv.reader(io.StringIO(text))
    header = None
    mode = "values"
    values: dict[str, dict[str, dict[int, float]]] = {}
    weights: dict[str, float] = {}
    scale = False
    caps = {w.id: w.capacity for w in system.wind}
    for lineno, cells in enumerate(reader, start=1):
        cells = [c.strip() for c in cells]
        if not cells or not any(cells) or cells[0].startswith("#"):
            continue
        low = [c.lower() for c in cells]
        if low[:4] in (["scenario", "farm", "period", "value_mw"], ["scenario", "farm", "period", "value_pu"]):
            if header is not None:
                raise SystemFileError("value table appears twice", lineno, path=path)
            header = low
            scale = low[3] == "value_pu"
            continue
        if low == ["scenario", "weight"]:
            mode = "weights"
            continue
        if header is None:
            raise SystemFileError("missing header 'scenario,farm,period,value_mw'", lineno, path=path)
        if mode == "weights":
            if len(cells) != 2:
                raise SystemFileError("expected 'scenario,weight'", lineno, path=path)
            try:
                weights[cells[0]] = float(cells[1])
            except ValueError:
                raise SystemFileError(f"not a number: {cells[1]!r}", lineno, "weight", path=path) from None
            continue
        if len(cells) != 4:
            raise SystemFileError(f"expected 4 cells, got {len(cells)}", lineno, path=path)
        sid, farm, per, val = cells
        if farm not in caps:
            raise SystemFileError(f"unknown wind farm {farm!r}", lineno, "farm", path=path)
        try:
            t = int(per)
        except ValueError:
            raise SystemFileError(f"not an integer: {per!r}", lineno, "period", path=path) from None
        try:
            v = float(val)
        except ValueError:
            raise SystemFileError(f"not a number: {val!r}", lineno, header[3], path=path) from None
        if scale:
            v *= caps[farm]
        values.setdefault(sid, {}).setdefault(farm, {})[t] = v
    if not values and not (weights and not caps):
        raise SystemFileError("no scenario values", path=path)
    # a system without wind farms still has scenarios, named by the weight table
    for sid in weights:
        values.setdefault(sid, {})
    T = system.T
    wind = {}
    for sid, farms in values.items():
        wind[sid] = {}
        for farm in caps:
            ser = farms.get(farm)
            if ser is None:
                raise ValidationError(f"scenario {sid}: no values for farm {farm}")
            if sorted(ser) != list(range(1, T + 1)):
                raise ValidationError(f"scenario {sid}, farm {farm}: periods {sorted(ser)} != 1..{T}")
            wind[sid][farm] = tuple(ser[t] for t in range(1, T + 1))
    ids = tuple(values)
    if weights:
        if set(weights) != set(ids):
            raise ValidationError("weights must be given for every scenario or none")
        probs = tuple(weights[s] for s in ids)
    else:
        probs = tuple(1.0 / len(ids) for _ in ids)
    sset = ScenarioSet(ids, probs, wind)
    sset.check_against(system)
    return sset


def load_scenarios(path, system: EnergySystem) -> ScenarioSet:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise SystemFileError(f"cannot read: {exc.strerror}", path=path) from exc
    return parse_scenarios(text, system, path)


def dump_scenarios(scen: ScenarioSet) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["scenario", "farm", "period", "value_mw"])
    for sid in scen.ids:
        for farm, ser in scen.wind[sid].items():
            for t, v in enumerate(ser, start=1):
                w.writerow([sid, farm, t, _fmt(float(v))])
    w.writerow([])
    w.writerow(["scenario", "weight"])
    for sid, p in scen.items():
        w.writerow([sid, repr(float(p))])
    return out.getvalue()


def as_array(series: tuple[float, ...] | None, T: int) -> np.ndarray:
    return np.zeros(T) if series is None else np.asarray(series, dtype=float)


def is_close(a: float, b: float, rel: float = 1e-6, abs_: float = 1e-9) -> bool:
    return math.isclose(a, b, rel_tol=rel, abs_tol=abs_)
