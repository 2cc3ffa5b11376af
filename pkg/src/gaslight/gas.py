"""Gas-network constraint blocks.

Pipelines are undirected in the data; each one carries a single direction
binary ``y`` per period (``y = 1`` means flow from ``from_node`` to
``to_node``) and two nonnegative directed flows ``q+`` / ``q-``.  The
Weymouth law is replaced by tangent planes at fixed pressure pairs, which
over-estimate the flow everywhere and touch it at the pair.

A tangent plane at ratio ``b/a = tanh(theta0)`` evaluated at a pressure pair
with ratio ``tanh(theta)`` equals ``weymouth * cosh(theta - theta0)``, so the
approximation error only depends on the spacing in ``theta``.  The pressure
pairs are therefore laid out uniformly in ``theta``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .lp import INF, LinExpr, MilpModel, ModelError, Var, lsum
from .system import EnergySystem, GasGrid, GasNode, Pipeline

log = logging.getLogger(__name__)

FORWARD = "forward"
REVERSE = "reverse"
EPS_PT = 1e-6  # minimal pressure gap of a point pair, psig


def rid(tag: str, *idx) -> str:
    """Stable symbolic id ``tag[i,j,...]``."""
    return f"{tag}[{','.join(str(i) for i in idx)}]"


def weymouth_flow(k_flow: float, pr_m: float, pr_u: float) -> float:
    """Steady flow from the high-pressure end; oracle only, never in a model."""
    if pr_m < pr_u:
        raise ValueError(f"weymouth_flow needs pr_m >= pr_u, got {pr_m} < {pr_u}")
    return k_flow * math.sqrt(pr_m * pr_m - pr_u * pr_u)


# --------------------------------------------------------------------------
# pressure points and plane coefficients
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class PressurePointPair:
    pipeline: str
    direction: str
    pr_m: float
    pr_u: float

    def __post_init__(self):
        if self.direction == FORWARD and not self.pr_m > self.pr_u:
            raise ValueError("forward point needs pr_m > pr_u")
        if self.direction == REVERSE and not self.pr_u > self.pr_m:
            raise ValueError("reverse point needs pr_u > pr_m")
        if self.direction not in (FORWARD, REVERSE):
            raise ValueError(f"unknown direction {self.direction!r}")

    @property
    def high(self) -> float:
        return self.pr_m if self.direction == FORWARD else self.pr_u

    @property
    def low(self) -> float:
        return self.pr_u if self.direction == FORWARD else self.pr_m


@dataclass(frozen=True)
class PointSet:
    """Forward and reverse pressure pairs of one pipeline."""

    pipeline: str
    forward: tuple[PressurePointPair, ...]
    reverse: tuple[PressurePointPair, ...]
    infeasible: frozenset = frozenset()

    def __iter__(self):
        return iter(self.forward + self.reverse)

    def __len__(self):
        return len(self.forward) + len(self.reverse)


def _end_gap(theta_last: float) -> float:
    return math.exp(-theta_last)


def _theta_range(lo_high: float, hi_high: float, lo_low: float, hi_low: float, count: int):
    """Range of ``theta = atanh(low/high)`` to cover, or ``None`` if no flow is possible."""
    if hi_high <= lo_low:
        return None
    th_lo = math.atanh(lo_low / hi_high)
    rho_top = hi_low / lo_high
    if rho_top < 1.0:
        return th_lo, math.atanh(rho_top)
    # equal end pressures are reachable, where the flow vanishes.  The last
    # plane then leaves a residual ``a * exp(-theta_last)``; pick the upper
    # end so that residual matches the interior midpoint error.
    cosh_lo = math.cosh(th_lo)

    def excess(th_hi):
        d = (th_hi - th_lo) / count
        return _end_gap(th_hi - d / 2) - (math.cosh(d / 2) - 1) / cosh_lo

    a, b = th_lo + 1e-9, th_lo + 50.0
    for _ in range(200):
        mid = (a + b) / 2
        if excess(mid) > 0:
            a = mid
        else:
            b = mid
    return th_lo, b


def _pairs_for_direction(pipe_id, direction, b_high, b_low, count):
    """Pairs for flow from the node with bounds ``b_high`` to ``b_low``."""
    lo_h, hi_h = b_high
    lo_l, hi_l = b_low
    rng = _theta_range(lo_h, hi_h, lo_l, hi_l, count)
    if rng is None:
        return ()
    th_lo, th_hi = rng
    d = (th_hi - th_lo) / count
    out = []
    for v in range(count):
        rho = math.tanh(th_lo + (v + 0.5) * d)
        high = hi_h
        low = rho * high
        if low > hi_l:
            low = hi_l
            high = low / rho
        if high - low <= EPS_PT:
            low = high - 2 * EPS_PT
        if direction == FORWARD:
            out.append(PressurePointPair(pipe_id, FORWARD, high, low))
        else:
            out.append(PressurePointPair(pipe_id, REVERSE, low, high))
    return tuple(out)


def pressure_points(bounds_m: tuple[float, float], bounds_u: tuple[float, float], count: int,
                    pipeline_id: str = "") -> PointSet:
    if count < 2:
        raise ValueError("count must be >= 2")
    for lo, hi in (bounds_m, bounds_u):
        if not 0 < lo < hi:
            raise ValueError(f"invalid pressure bounds ({lo}, {hi})")
    fwd = _pairs_for_direction(pipeline_id, FORWARD, bounds_m, bounds_u, count)
    rev = _pairs_for_direction(pipeline_id, REVERSE, bounds_u, bounds_m, count)
    flags = frozenset(d for d, pts in ((FORWARD, fwd), (REVERSE, rev)) if not pts)
    for d in flags:
        log.info("pipeline %s: %s flow impossible under the pressure bounds", pipeline_id, d)
    return PointSet(pipeline_id, fwd, rev, flags)


def generate_pressure_points(pipeline: Pipeline, count: int, nodes: dict[str, GasNode]) -> PointSet:
    m, u = nodes[pipeline.from_node], nodes[pipeline.to_node]
    return pressure_points((m.pr_min, m.pr_max), (u.pr_min, u.pr_max), count, pipeline.id)


@dataclass(frozen=True)
class OaCoefficients:
    """Tangent-plane ``q <= ki * pr_high - ko * pr_low`` of one point.

    Forward points give ``KI+``/``KO+`` (high end is ``from_node``), reverse
    points give ``KI-``/``KO-``.
    """

    direction: str
    ki: float
    ko: float

    def __post_init__(self):
        if not (self.ki > 0 and self.ko > 0 and self.ki > self.ko):
            raise ValueError("tangent-plane coefficients need ki > ko > 0")

    @property
    def ki_plus(self) -> float:
        return self._pick(FORWARD, self.ki)

    @property
    def ko_plus(self) -> float:
        return self._pick(FORWARD, self.ko)

    @property
    def ki_minus(self) -> float:
        return self._pick(REVERSE, self.ki)

    @property
    def ko_minus(self) -> float:
        return self._pick(REVERSE, self.ko)

    def _pick(self, direction, value):
        if self.direction != direction:
            raise AttributeError(f"{self.direction} point has no {direction} coefficients")
        return value

    def plane(self, pr_high: float, pr_low: float) -> float:
        return self.ki * pr_high - self.ko * pr_low


def oa_coefficients(k_flow: float, point: PressurePointPair) -> OaCoefficients:
    a, b = point.high, point.low
    root = math.sqrt(a * a - b * b)
    return OaCoefficients(point.direction, k_flow * a / root, k_flow * b / root)


def compute_big_m(system: EnergySystem, points: dict[str, PointSet] | None = None) -> tuple[float, float]:
    """``(M_flow, M_oa)``: cap on any directed flow, and OA-row relaxation."""
    nodes = system.gas.node_map
    m_flow = 0.0
    m_oa = 0.0
    if points is None:
        points = all_pressure_points(system)
    for p in system.gas.pipelines:
        m, u = nodes[p.from_node], nodes[p.to_node]
        if m.pr_max > u.pr_min:
            m_flow = max(m_flow, weymouth_flow(p.k_flow, m.pr_max, u.pr_min))
        if u.pr_max > m.pr_min:
            m_flow = max(m_flow, weymouth_flow(p.k_flow, u.pr_max, m.pr_min))
        pr_max = max(m.pr_max, u.pr_max)
        for pt in points[p.id]:
            c = oa_coefficients(p.k_flow, pt)
            m_oa = max(m_oa, (c.ki + c.ko) * pr_max)
    cfg = system.config
    if cfg.big_m_flow is not None:
        m_flow = cfg.big_m_flow
    if cfg.big_m_oa is not None:
        m_oa = cfg.big_m_oa
    log.info("big-M: flow %.6g, outer approximation %.6g", m_flow, m_oa)
    return m_flow, m_oa


def all_pressure_points(system: EnergySystem) -> dict[str, PointSet]:
    nodes = system.gas.node_map
    return {p.id: generate_pressure_points(p, system.config.oa_points, nodes) for p in system.gas.pipelines}


def oa_max_error(k_flow: float, bounds_m, bounds_u, points: PointSet, grid: int = 100) -> float:
    """Largest gap between the planes and the Weymouth flow on a ``grid x grid`` pressure grid."""
    pm = np.linspace(*bounds_m, grid)
    pu = np.linspace(*bounds_u, grid)
    PM, PU = np.meshgrid(pm, pu, indexing="ij")
    worst = 0.0
    for direction, hi, lo in ((FORWARD, PM, PU), (REVERSE, PU, PM)):
        pts = points.forward if direction == FORWARD else points.reverse
        mask = hi >= lo
        if not pts or not mask.any():
            continue
        H, L = hi[mask], lo[mask]
        exact = k_flow * np.sqrt(H * H - L * L)
        env = np.full(H.shape, np.inf)
        for pt in pts:
            c = oa_coefficients(k_flow, pt)
            env = np.minimum(env, c.ki * H - c.ko * L)
        worst = max(worst, float(np.max(env - exact)))
    return worst


# --------------------------------------------------------------------------
# variable families
# --------------------------------------------------------------------------


@dataclass
class GasVariables:
    """Column handles of one stage; ``scenario`` is ``None`` for the day-ahead stage."""

    scenario: str | None
    periods: range
    pr: dict = field(default_factory=dict)
    q: dict = field(default_factory=dict)  # signed flow from_node -> to_node
    q_rev: dict = field(default_factory=dict)  # signed flow to_node -> from_node
    qp: dict = field(default_factory=dict)
    qm: dict = field(default_factory=dict)
    y: dict = field(default_factory=dict)
    qin_f: dict = field(default_factory=dict)
    qout_f: dict = field(default_factory=dict)
    qin_r: dict = field(default_factory=dict)
    qout_r: dict = field(default_factory=dict)
    h: dict = field(default_factory=dict)
    qc: dict = field(default_factory=dict)
    e: dict = field(default_factory=dict)
    gin: dict = field(default_factory=dict)
    gout: dict = field(default_factory=dict)
    built: set = field(default_factory=set)

    def tag(self, base: str) -> str:
        return base if self.scenario is None else base + "_rt"

    def rid(self, base: str, *idx) -> str:
        return rid(self.tag(base), *idx) if self.scenario is None else rid(self.tag(base), self.scenario, *idx)

    def mark(self, block: str) -> None:
        if block in self.built:
            raise ModelError(f"duplicate {block} block for stage {self.scenario or 'day-ahead'}")
        self.built.add(block)


def add_gas_variables(model: MilpModel, system: EnergySystem, scenario: str | None = None) -> GasVariables:
    gv = GasVariables(scenario, system.periods)
    grid = system.gas
    for t in system.periods:
        tt = t + 1
        for n in grid.nodes:
            gv.pr[n.id, t] = model.add_var(gv.rid("pr", n.id, tt), n.pr_min, n.pr_max)
        for p in grid.pipelines:
            k = (p.id, t)
            gv.q[k] = model.add_var(gv.rid("q", p.id, tt), -INF, INF)
            gv.q_rev[k] = model.add_var(gv.rid("q", f"{p.to_node}-{p.from_node}", tt), -INF, INF)
            gv.qp[k] = model.add_var(gv.rid("qp", p.id, tt))
            gv.qm[k] = model.add_var(gv.rid("qm", p.id, tt))
            gv.y[k] = model.add_var(gv.rid("y", p.id, tt), binary=True)
            gv.qin_f[k] = model.add_var(gv.rid("qin", p.id, tt))
            gv.qout_f[k] = model.add_var(gv.rid("qout", p.id, tt))
            gv.qin_r[k] = model.add_var(gv.rid("qin", f"{p.to_node}-{p.from_node}", tt))
            gv.qout_r[k] = model.add_var(gv.rid("qout", f"{p.to_node}-{p.from_node}", tt))
            gv.h[k] = model.add_var(gv.rid("h", p.id, tt))
        for c in grid.compressors:
            gv.qc[c.id, t] = model.add_var(gv.rid("qc", c.id, tt), 0.0, c.capacity)
        for s in system.storages:
            gv.e[s.id, t] = model.add_var(gv.rid("e", s.id, tt), s.e_min, s.e_max)
            gv.gin[s.id, t] = model.add_var(gv.rid("gin", s.id, tt), 0.0, s.inj_rate)
            gv.gout[s.id, t] = model.add_var(gv.rid("gout", s.id, tt), 0.0, s.wd_rate)
    return gv


# --------------------------------------------------------------------------
# blocks
# --------------------------------------------------------------------------


def build_flow_direction_block(model: MilpModel, gv: GasVariables, grid: GasGrid, periods, big_m_flow: float):
    gv.mark("direction")
    ids = []
    for t in periods:
        for p in grid.pipelines:
            k = (p.id, t)
            qp, qm, y = gv.qp[k], gv.qm[k], gv.y[k]
            ids.append(model.add_constraint(gv.rid("qdef", p.id, t + 1), gv.q[k] - qp + qm, "=="))
            ids.append(model.add_constraint(gv.rid("qdef", f"{p.to_node}-{p.from_node}", t + 1),
                                            gv.q_rev[k] - qm + qp, "=="))
            ids.append(model.add_constraint(gv.rid("qfwd", p.id, t + 1), qp - big_m_flow * y, "<="))
            ids.append(model.add_constraint(gv.rid("qrev", p.id, t + 1), qm + big_m_flow * y, "<=", big_m_flow))
    return ids


def build_oa_block(model: MilpModel, gv: GasVariables, grid: GasGrid, points: dict[str, PointSet],
                   big_m: float):
    """Big-M relaxed tangent planes in both directions.

    Each pipeline contributes four row families per point.  Under the single
    binary the rows written for the ``to -> from`` orientation coincide with
    the ``from -> to`` ones, so each plane appears twice, as in the
    bidirectional formulation.  The relaxation constant of a row is the
    smaller of ``big_m`` and what that row needs to be slack at every feasible
    pressure pair, which keeps the integrality tolerance from leaking flow.
    """
    if "direction" not in gv.built:
        raise ModelError("flow-direction block must be built before the outer-approximation block")
    gv.mark("oa")
    nodes = grid.node_map
    ids = []
    for p in grid.pipelines:
        pts = points[p.id]
        m, u = nodes[p.from_node], nodes[p.to_node]
        fwd = [oa_coefficients(p.k_flow, pt) for pt in pts.forward]
        rev = [oa_coefficients(p.k_flow, pt) for pt in pts.reverse]
        for t in gv.periods:
            k = (p.id, t)
            pm, pu, y = gv.pr[p.from_node, t], gv.pr[p.to_node, t], gv.y[k]
            for v, c in enumerate(fwd):
                need = max(0.0, c.ko * u.pr_max - c.ki * m.pr_min)
                M = min(big_m, need)
                plane = c.ki * pm - c.ko * pu
                # active when y = 1
                ids.append(model.add_constraint(gv.rid("oa_a", p.id, v, t + 1), gv.qp[k] - plane + M * y, "<=", M))
                ids.append(model.add_constraint(gv.rid("oa_c", p.id, v, t + 1), gv.qp[k] - plane + M * y, "<=", M))
            for v, c in enumerate(rev):
                need = max(0.0, c.ko * m.pr_max - c.ki * u.pr_min)
                M = min(big_m, need)
                plane = c.ki * pu - c.ko * pm
                # active when y = 0
                ids.append(model.add_constraint(gv.rid("oa_b", p.id, v, t + 1), gv.qm[k] - plane - M * y, "<="))
                ids.append(model.add_constraint(gv.rid("oa_d", p.id, v, t + 1), gv.qm[k] - plane - M * y, "<="))
            # a direction without points carries no flow
            if not fwd:
                model.ub[gv.qp[k].index] = 0.0
            if not rev:
                model.ub[gv.qm[k].index] = 0.0
    return ids


def build_flow_average_block(model: MilpModel, gv: GasVariables, grid: GasGrid, periods, steady_state: bool):
    gv.mark("average")
    ids = []
    for t in periods:
        for p in grid.pipelines:
            k = (p.id, t)
            ids.append(model.add_constraint(gv.rid("qavg", p.id, t + 1),
                                            gv.qp[k] - 0.5 * gv.qin_f[k] - 0.5 * gv.qout_f[k], "=="))
            ids.append(model.add_constraint(gv.rid("qavg", f"{p.to_node}-{p.from_node}", t + 1),
                                            gv.qm[k] - 0.5 * gv.qin_r[k] - 0.5 * gv.qout_r[k], "=="))
            if steady_state:
                ids.append(model.add_constraint(gv.rid("steady", p.id, t + 1), gv.qin_f[k] - gv.qout_f[k], "=="))
                ids.append(model.add_constraint(gv.rid("steady", f"{p.to_node}-{p.from_node}", t + 1),
                                                gv.qin_r[k] - gv.qout_r[k], "=="))
    return ids


def build_compressor_block(model: MilpModel, gv: GasVariables, grid: GasGrid, periods):
    gv.mark("compressor")
    names = set(grid.node_ids)
    ids = []
    for c in grid.compressors:
        if c.from_node not in names or c.to_node not in names:
            raise ModelError(f"compressor {c.id} is not a branch of the network")
        for t in periods:
            ids.append(model.add_constraint(gv.rid("comp", c.id, t + 1),
                                            gv.pr[c.to_node, t] - c.factor * gv.pr[c.from_node, t], "<="))
    return ids


def max_attainable_linepack(grid: GasGrid) -> float:
    return grid.max_linepack()


def build_linepack_block(model: MilpModel, gv: GasVariables, grid: GasGrid, periods,
                         h0: dict[str, float], terminal: float | None):
    gv.mark("linepack")
    ids = []
    for p in grid.pipelines:
        for t in periods:
            k = (p.id, t)
            pm, pu = gv.pr[p.from_node, t], gv.pr[p.to_node, t]
            ids.append(model.add_constraint(gv.rid("lpdef", p.id, t + 1),
                                            gv.h[k] - 0.5 * p.k_linepack * pm - 0.5 * p.k_linepack * pu, "=="))
            prev = gv.h[p.id, t - 1] if t > periods[0] else LinExpr(const=h0[p.id])
            flow = gv.qin_f[k] + gv.qin_r[k] - gv.qout_f[k] - gv.qout_r[k]
            ids.append(model.add_constraint(gv.rid("lpbal", p.id, t + 1), gv.h[k] - prev - flow, "=="))
    if grid.pipelines and terminal is not None:
        last = periods[-1]
        name = gv.tag("linepack_terminal") if gv.scenario is None else rid(gv.tag("linepack_terminal"), gv.scenario)
        cap = max_attainable_linepack(grid)
        if terminal > cap + 1e-9:
            msg = (f"{name}: terminal linepack target {terminal:g} kcf exceeds the attainable "
                   f"{cap:g} kcf at maximum pressures; the model is infeasible")
            log.warning(msg)
            model.notes.append(msg)
        ids.append(model.add_constraint(name, lsum(gv.h[p.id, last] for p in grid.pipelines), ">=", terminal))
    return ids


def build_storage_block(model: MilpModel, gv: GasVariables, system: EnergySystem, periods,
                        e0: dict[str, float] | None = None):
    gv.mark("storage")
    ids = []
    for s in system.storages:
        init = s.e0 if e0 is None else e0[s.id]
        if not s.e_min - 1e-9 <= init <= s.e_max + 1e-9:
            raise ModelError(f"storage {s.id}: initial volume {init} outside [{s.e_min}, {s.e_max}]")
        for t in periods:
            k = (s.id, t)
            prev = gv.e[s.id, t - 1] if t > periods[0] else LinExpr(const=init)
            ids.append(model.add_constraint(gv.rid("stbal", s.id, t + 1),
                                            gv.e[k] - prev - gv.gin[k] + gv.gout[k], "=="))
        # end-of-day volume back to at least the start
        last = gv.e[s.id, periods[-1]].index
        model.lb[last] = max(model.lb[last], min(init, model.ub[last]))
    return ids


def build_gas_network(model: MilpModel, system: EnergySystem, gv: GasVariables,
                      points: dict[str, PointSet], big_m: tuple[float, float]) -> None:
    """All network and storage blocks of one stage."""
    cfg = system.config
    grid = system.gas
    periods = system.periods
    build_flow_direction_block(model, gv, grid, periods, big_m[0])
    build_oa_block(model, gv, grid, points, big_m[1])
    build_flow_average_block(model, gv, grid, periods, cfg.steady_state)
    build_compressor_block(model, gv, grid, periods)
    build_linepack_block(model, gv, grid, periods, system.initial_linepack(), grid.terminal_linepack)
    build_storage_block(model, gv, system, periods)


def pipeline_net_outflow(gv: GasVariables, grid: GasGrid, node: str, t: int) -> LinExpr:
    """Gas leaving ``node`` into pipes and compressors minus gas arriving from them."""
    terms = []
    for p in grid.pipelines:
        k = (p.id, t)
        if p.from_node == node:
            terms += [gv.qin_f[k], -gv.qout_r[k]]
        elif p.to_node == node:
            terms += [gv.qin_r[k], -gv.qout_f[k]]
    for c in grid.compressors:
        if c.from_node == node:
            terms.append(gv.qc[c.id, t])
        elif c.to_node == node:
            terms.append(-gv.qc[c.id, t])
    return lsum(terms)


def storage_net_output(gv: GasVariables, system: EnergySystem, node: str, t: int) -> LinExpr:
    return lsum(gv.gout[s.id, t] - gv.gin[s.id, t] for s in system.storages if s.node == node)


# --------------------------------------------------------------------------
# extraction
# --------------------------------------------------------------------------


@dataclass
class GasState:
    """Solved gas-network state of one stage, keyed like :class:`GasVariables`."""

    pr: dict
    q: dict
    qp: dict
    qm: dict
    y: dict
    qin_f: dict
    qout_f: dict
    qin_r: dict
    qout_r: dict
    h: dict
    qc: dict
    e: dict
    gin: dict
    gout: dict

    def pipeline_net(self, pid: str, t: int) -> float:
        k = (pid, t)
        return self.qin_f[k] + self.qin_r[k] - self.qout_f[k] - self.qout_r[k]

    def total_linepack(self, t: int, pipelines) -> float:
        return sum(self.h[p.id, t] for p in pipelines)


def extract_gas_state(sol, gv: GasVariables) -> GasState:
    names = ["pr", "q", "qp", "qm", "y", "qin_f", "qout_f", "qin_r", "qout_r", "h", "qc", "e", "gin", "gout"]
    return GasState(**{n: sol.values(getattr(gv, n)) for n in names})
