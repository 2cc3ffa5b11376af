import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gaslight import cases, gas
from gaslight.gas import (FORWARD, REVERSE, PressurePointPair, add_gas_variables, build_compressor_block,
                          build_flow_average_block, build_flow_direction_block, build_linepack_block,
                          build_oa_block, build_storage_block, compute_big_m, generate_pressure_points,
                          oa_coefficients, oa_max_error, pressure_points, weymouth_flow)
from gaslight.lp import MilpModel, ModelError, solve_lp_fixed, solve_milp
from gaslight.models import build_gas_da
from gaslight.system import (EnergySystem, GasGrid, GasNode, GasStorage, Compressor, Pipeline, PowerGrid,
                             RunConfig)


def make_system(nodes, pipes=(), comps=(), storages=(), T=1, loads=None, **cfg):
    power = PowerGrid(("B1",), (), "B1", {})
    grid = GasGrid(tuple(nodes), tuple(pipes), tuple(comps), loads or {})
    return EnergySystem(power, grid, (), (), (), tuple(storages), RunConfig(T, **cfg), "t")


def two_node(T=1, **cfg):
    return make_system([GasNode("A", 30, 60), GasNode("B", 30, 60)], [Pipeline("A", "B", 10, 100)], T=T, **cfg)


# -- Weymouth oracle ----------------------------------------------------------


def test_weymouth_values():
    assert weymouth_flow(1, 2, 1) == pytest.approx(math.sqrt(3))
    assert weymouth_flow(2, 5, 3) == pytest.approx(8.0)
    assert weymouth_flow(7.5, 40, 40) == 0.0


def test_weymouth_domain():
    with pytest.raises(ValueError):
        weymouth_flow(1, 1, 2)


# -- pressure points ----------------------------------------------------------


def test_symmetric_bounds_two_points():
    ps = pressure_points((30, 60), (30, 60), 2)
    assert len(ps.forward) == 2 and len(ps.reverse) == 2
    for pt in ps:
        assert pt.high > pt.low + gas.EPS_PT / 2


def test_one_way_pipe():
    ps = pressure_points((50, 60), (10, 20), 3)
    assert len(ps.forward) == 3 and ps.reverse == ()
    assert REVERSE in ps.infeasible and FORWARD not in ps.infeasible


@settings(max_examples=60, deadline=None)
@given(lo_m=st.floats(1, 80), w_m=st.floats(0.5, 60), lo_u=st.floats(1, 80), w_u=st.floats(0.5, 60),
       count=st.integers(2, 25))
def test_points_respect_bounds_and_invariant(lo_m, w_m, lo_u, w_u, count):
    bm, bu = (lo_m, lo_m + w_m), (lo_u, lo_u + w_u)
    ps = pressure_points(bm, bu, count)
    for pt in ps:
        assert bm[0] - 1e-9 <= pt.pr_m <= bm[1] + 1e-9
        assert bu[0] - 1e-9 <= pt.pr_u <= bu[1] + 1e-9
    assert len(ps.forward) in (0, count) and len(ps.reverse) in (0, count)


def test_point_count_validation():
    with pytest.raises(ValueError):
        pressure_points((30, 60), (30, 60), 1)


def test_pair_invariant():
    with pytest.raises(ValueError):
        PressurePointPair("p", FORWARD, 1.0, 2.0)
    with pytest.raises(ValueError):
        PressurePointPair("p", REVERSE, 2.0, 1.0)


# -- coefficients -------------------------------------------------------------


def test_oa_coefficient_values():
    c = oa_coefficients(1.0, PressurePointPair("p", FORWARD, 2.0, 1.0))
    assert c.ki_plus == pytest.approx(2 / math.sqrt(3))
    assert c.ko_plus == pytest.approx(1 / math.sqrt(3))
    assert c.plane(2, 1) == pytest.approx(weymouth_flow(1, 2, 1))
    d = oa_coefficients(2.0, PressurePointPair("p", FORWARD, 2.0, 1.0))
    assert (d.ki, d.ko) == pytest.approx((2 * c.ki, 2 * c.ko))
    r = oa_coefficients(1.0, PressurePointPair("p", REVERSE, 1.0, 2.0))
    assert (r.ki_minus, r.ko_minus) == pytest.approx((c.ki, c.ko))
    with pytest.raises(AttributeError):
        r.ki_plus


@settings(max_examples=100, deadline=None)
@given(k=st.floats(0.01, 100), low=st.floats(1, 100), gap=st.floats(1e-3, 100))
def test_tangency_and_cover(k, low, gap):
    pt = PressurePointPair("p", FORWARD, low + gap, low)
    c = oa_coefficients(k, pt)
    assert c.ki > c.ko > 0
    exact = weymouth_flow(k, pt.pr_m, pt.pr_u)
    assert c.plane(pt.high, pt.low) == pytest.approx(exact, rel=1e-9)
    # the plane never falls below the surface
    for a, b in ((low + 2 * gap, low), (low + gap, low + gap / 2), (low * 3 + gap, low * 0.5)):
        assert c.plane(a, b) >= weymouth_flow(k, a, b) * (1 - 1e-12) - 1e-9


def test_oa_error_small_on_fixture_pipes(case3x3):
    system, _ = case3x3
    nodes = system.gas.node_map
    for p in system.gas.pipelines:
        ps = generate_pressure_points(p, 20, nodes)
        bm = (nodes[p.from_node].pr_min, nodes[p.from_node].pr_max)
        bu = (nodes[p.to_node].pr_min, nodes[p.to_node].pr_max)
        m_flow = compute_big_m(system)[0]
        assert oa_max_error(p.k_flow, bm, bu, ps) <= 0.02 * m_flow


def test_oa_error_brute_force_grid_independent():
    # recompute the envelope with plain loops on a coarser grid
    ps = pressure_points((30, 60), (30, 60), 20)
    worst = 0.0
    for a in np.linspace(30, 60, 31):
        for b in np.linspace(30, 60, 31):
            hi, lo, pts = (a, b, ps.forward) if a >= b else (b, a, ps.reverse)
            env = min(oa_coefficients(1.0, pt).plane(hi, lo) for pt in pts)
            worst = max(worst, env - math.sqrt(hi * hi - lo * lo))
    assert worst <= 0.02 * weymouth_flow(1.0, 60, 30)
    assert worst <= oa_max_error(1.0, (30, 60), (30, 60), ps, grid=301) + 1e-9


# -- big-M ---------------------------------------------------------------------


def test_big_m_single_pipe():
    s = make_system([GasNode("A", 1, 2), GasNode("B", 1, 2)], [Pipeline("A", "B", 1, 1)])
    m_flow, m_oa = compute_big_m(s)
    assert m_flow == pytest.approx(math.sqrt(3))
    assert m_oa >= m_flow


def test_big_m_stable(case3x3):
    system, _ = case3x3
    assert compute_big_m(system) == compute_big_m(system)


def test_big_m_override():
    s = two_node(big_m_flow=5000.0)
    assert compute_big_m(s)[0] == 5000.0


# -- block shapes ----------------------------------------------------------------


def block_model(system):
    model = MilpModel()
    gv = add_gas_variables(model, system)
    return model, gv


def test_direction_block_counts():
    s = two_node()
    model, gv = block_model(s)
    rows = build_flow_direction_block(model, gv, s.gas, s.periods, 100.0)
    assert model.n_binaries == 1 and len(rows) == 4
    s2 = make_system([GasNode("A", 30, 60), GasNode("B", 30, 60), GasNode("C", 30, 60)],
                     [Pipeline("A", "B", 10, 100), Pipeline("B", "C", 10, 100)], T=24)
    model, gv = block_model(s2)
    rows = build_flow_direction_block(model, gv, s2.gas, s2.periods, 100.0)
    assert model.n_binaries == 48 and len(rows) == 192


def test_duplicate_block_rejected():
    s = two_node()
    model, gv = block_model(s)
    build_flow_direction_block(model, gv, s.gas, s.periods, 100.0)
    with pytest.raises(ModelError):
        build_flow_direction_block(model, gv, s.gas, s.periods, 100.0)


def test_oa_block_counts_and_order():
    s = two_node()
    model, gv = block_model(s)
    pts = gas.all_pressure_points(s)
    with pytest.raises(ModelError):
        build_oa_block(model, gv, s.gas, pts, 1e5)
    build_flow_direction_block(model, gv, s.gas, s.periods, 1e4)
    assert len(build_oa_block(model, gv, s.gas, pts, 1e5)) == 80


def test_oa_block_one_way_pipe():
    s = make_system([GasNode("A", 50, 60), GasNode("B", 10, 20)], [Pipeline("A", "B", 10, 10)])
    model, gv = block_model(s)
    build_flow_direction_block(model, gv, s.gas, s.periods, 1e4)
    build_oa_block(model, gv, s.gas, gas.all_pressure_points(s), 1e5)
    fams = {n.split("[")[0] for n in model.row_names if n.startswith("oa_")}
    assert fams == {"oa_a", "oa_c"}
    assert model.ub[gv.qm["A-B", 0].index] == 0.0


def test_flow_average_counts():
    s = two_node(T=3)
    model, gv = block_model(s)
    assert len(build_flow_average_block(model, gv, s.gas, s.periods, False)) == 2 * 1 * 3
    model, gv = block_model(s)
    assert len(build_flow_average_block(model, gv, s.gas, s.periods, True)) == 4 * 1 * 3


def _solve_lp(model):
    return solve_lp_fixed(model, {i: 0.0 for i in model.binary_indices()})


def test_flow_average_arithmetic():
    s = two_node()
    model, gv = block_model(s)
    build_flow_average_block(model, gv, s.gas, s.periods, False)
    k = ("A-B", 0)
    model.fix(gv.qin_f[k], 4)
    model.fix(gv.qout_f[k], 2)
    sol = _solve_lp(model)
    assert sol.value(gv.qp[k]) == pytest.approx(3.0)


def test_compressor_block():
    nodes = [GasNode("A", 30, 60), GasNode("B", 30, 70)]
    s = make_system(nodes, comps=[Compressor("A", "B", 1.5, 100)])
    model, gv = block_model(s)
    assert len(build_compressor_block(model, gv, s.gas, s.periods)) == 1
    model.fix(gv.pr["A", 0], 40)
    pb = gv.pr["B", 0]
    model.add_objective(-1 * pb)
    assert _solve_lp(model).value(pb) == pytest.approx(60.0)
    s0 = make_system(nodes)
    model, gv = block_model(s0)
    assert build_compressor_block(model, gv, s0.gas, s0.periods) == []


def test_compressor_unknown_branch():
    nodes = [GasNode("A", 30, 60), GasNode("B", 30, 70)]
    s = make_system(nodes, comps=[Compressor("A", "B", 1.0, 100)])
    model, gv = block_model(s)
    grid = type(s.gas).__new__(type(s.gas))
    object.__setattr__(grid, "nodes", (nodes[0],))
    object.__setattr__(grid, "compressors", (Compressor("A", "Z", 1.0, 1.0),))
    with pytest.raises(ModelError):
        build_compressor_block(model, gv, grid, s.periods)


def test_linepack_definition_value():
    s = make_system([GasNode("A", 30, 60), GasNode("B", 20, 60)], [Pipeline("A", "B", 10, 100, h0=4000)])
    model, gv = block_model(s)
    build_linepack_block(model, gv, s.gas, s.periods, {"A-B": 4000.0}, None)
    model.fix(gv.pr["A", 0], 50)
    model.fix(gv.pr["B", 0], 30)
    assert _solve_lp(model).value(gv.h["A-B", 0]) == pytest.approx(4000.0)


def test_linepack_constant_pressure_telescopes():
    s = two_node(T=4)
    model, gv = block_model(s)
    h0 = s.initial_linepack()
    build_linepack_block(model, gv, s.gas, s.periods, h0, None)
    for t in s.periods:
        model.fix(gv.pr["A", t], 45)
        model.fix(gv.pr["B", t], 45)
    sol = _solve_lp(model)
    k = "A-B"
    net = sum(sol.value(gv.qin_f[k, t]) + sol.value(gv.qin_r[k, t]) - sol.value(gv.qout_f[k, t])
              - sol.value(gv.qout_r[k, t]) for t in s.periods)
    assert net == pytest.approx(0.0, abs=1e-9)


def test_terminal_above_attainable_is_noted():
    s = two_node(T=2)
    model, gv = block_model(s)
    build_linepack_block(model, gv, s.gas, s.periods, s.initial_linepack(), s.gas.max_linepack() + 1)
    assert model.has_row("linepack_terminal")
    assert any("linepack_terminal" in n for n in model.notes)


def _storage_system(e0, inj=10.0, wd=10.0, n=1, T=3):
    sts = [GasStorage(f"S{i}", "A", 100, 500, e0, inj, wd, 1, 2, 0.5) for i in range(n)]
    return make_system([GasNode("A", 30, 60)], storages=sts, T=T)


def test_storage_frozen_and_floor():
    s = _storage_system(200.0, inj=1e-9, wd=1e-9)
    model, gv = block_model(s)
    build_storage_block(model, gv, s, s.periods)
    sol = _solve_lp(model)
    for t in s.periods:
        assert sol.value(gv.e["S0", t]) == pytest.approx(200.0, abs=1e-6)
    s = _storage_system(100.0)
    model, gv = block_model(s)
    build_storage_block(model, gv, s, s.periods)
    model.fix(gv.gin["S0", 0], 0)
    model.add_objective(-1 * gv.gout["S0", 0])
    assert _solve_lp(model).value(gv.gout["S0", 0]) == pytest.approx(0.0, abs=1e-9)


def test_storage_row_count_and_e0_error():
    s = _storage_system(300.0, n=2, T=24)
    model, gv = block_model(s)
    assert len(build_storage_block(model, gv, s, s.periods)) == 48
    model, gv = block_model(s)
    with pytest.raises(ModelError):
        build_storage_block(model, gv, s, s.periods, {"S0": 1.0, "S1": 300.0})


# -- solved-model properties --------------------------------------------------------


def _solved_gas_da(system, demand):
    model = build_gas_da(system, demand)
    milp = solve_milp(model)
    return model, solve_lp_fixed(model, milp)


def test_solved_invariants_case3x3(case3x3):
    system, _ = case3x3
    d_p = {(m, t): (300.0 if m == "N3" else 0.0) for m in system.gas.node_ids for t in system.periods}
    model, sol = _solved_gas_da(system, d_p)
    gv = model.handles["gas"].net
    m_flow = model.handles["big_m"][0]
    total = 0.0
    for p in system.gas.pipelines:
        for t in system.periods:
            k = (p.id, t)
            qp, qm = sol.value(gv.qp[k]), sol.value(gv.qm[k])
            assert qp <= 1e-6 or qm <= 1e-6
            assert sol.value(gv.q[k]) == pytest.approx(-sol.value(gv.q_rev[k]), abs=1e-9)
            pm, pu = sol.value(gv.pr[p.from_node, t]), sol.value(gv.pr[p.to_node, t])
            if qp > 1e-6:
                assert qp <= weymouth_flow(p.k_flow, pm, max(min(pu, pm), 0)) + 0.02 * m_flow
            if qm > 1e-6:
                assert qm <= weymouth_flow(p.k_flow, pu, max(min(pm, pu), 0)) + 0.02 * m_flow
            total += (sol.value(gv.qin_f[k]) + sol.value(gv.qin_r[k]) - sol.value(gv.qout_f[k])
                      - sol.value(gv.qout_r[k]))
    h0 = sum(system.initial_linepack().values())
    hT = sum(sol.value(gv.h[p.id, system.T - 1]) for p in system.gas.pipelines)
    assert total == pytest.approx(hT - h0, abs=1e-6)


def test_steady_state_never_cheaper(case3x3):
    system, _ = case3x3
    d_p = {(m, t): 0.0 for m in system.gas.node_ids for t in system.periods}
    base = solve_milp(build_gas_da(system, d_p)).objective
    steady = solve_milp(build_gas_da(system.with_config(steady_state=True), d_p)).objective
    assert steady >= base - 1e-6 * abs(base)


def test_steady_state_freezes_linepack(case3x3):
    system, _ = case3x3
    system = system.with_config(steady_state=True)
    d_p = {(m, t): 0.0 for m in system.gas.node_ids for t in system.periods}
    model, sol = _solved_gas_da(system, d_p)
    gv = model.handles["gas"].net
    h0 = system.initial_linepack()
    for p in system.gas.pipelines:
        for t in system.periods:
            assert sol.value(gv.h[p.id, t]) == pytest.approx(h0[p.id], abs=1e-6)
