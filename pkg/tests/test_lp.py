import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gaslight import lp
from gaslight.lp import MilpModel, lsum, solve_lp_fixed, solve_milp


def one_row_lp():
    m = MilpModel()
    x = m.add_var("x", lb=-lp.INF)
    m.add_objective(x)
    m.add_constraint("r", x, ">=", 3)
    return m


@pytest.mark.parametrize("backend", ["highs", "simplex"])
def test_min_x_with_floor(backend):
    sol = solve_milp(one_row_lp(), backend=backend)
    assert sol.status == lp.OPTIMAL
    assert sol.objective == pytest.approx(3.0)


def test_binary_enumeration_oracle():
    # min x s.t. x + y = 1, y binary: y=1 gives 0, y=0 gives 1
    m = MilpModel()
    x = m.add_var("x")
    y = m.add_var("y", binary=True)
    m.add_objective(x)
    m.add_constraint("c", x + y, "==", 1)
    sol = solve_milp(m)
    by_hand = min(1 - yv for yv in (0, 1))
    assert sol.objective == pytest.approx(by_hand)
    assert sol.value(y) == pytest.approx(1.0)


def test_x_plus_y_objective_is_one_everywhere():
    m = MilpModel()
    x = m.add_var("x")
    y = m.add_var("y", binary=True)
    m.add_objective(x + y)
    m.add_constraint("c", x + y, "==", 1)
    assert solve_milp(m).objective == pytest.approx(1.0)


def test_empty_model():
    sol = solve_milp(MilpModel())
    assert sol.status == lp.OPTIMAL and sol.objective == 0.0


def test_infeasible_and_unbounded_are_reported():
    m = MilpModel()
    x = m.add_var("x", 0, 1)
    m.add_constraint("r", x, ">=", 2)
    assert solve_milp(m).status == lp.INFEASIBLE
    u = MilpModel()
    z = u.add_var("z", lb=-lp.INF)
    u.add_objective(z)
    assert solve_milp(u).status in (lp.UNBOUNDED, lp.INFEASIBLE)


@pytest.mark.parametrize("backend", ["highs", "simplex"])
def test_single_balance_dual(backend):
    m = MilpModel()
    p = m.add_var("p")
    m.add_objective(10 * p)
    m.add_constraint("bal", p, "==", 5)
    sol = solve_lp_fixed(m, {}, backend=backend)
    assert sol.dual("bal") == pytest.approx(10.0)
    assert sol.objective == pytest.approx(50.0)


def test_constants_move_to_rhs_so_dual_is_price():
    m = MilpModel()
    p = m.add_var("p")
    m.add_objective(7 * p)
    m.add_constraint("bal", p - 5, "==")  # supply - demand == 0
    sol = solve_lp_fixed(m, {})
    assert sol.dual("bal") == pytest.approx(7.0)


def test_refix_reproduces_milp_objective():
    m = MilpModel()
    q = m.add_var("q", -10, 10)
    y = m.add_var("y", binary=True)
    m.add_constraint("up", q - 10 * y, "<=")
    m.add_constraint("dn", -q + 10 * y, "<=", 10)
    m.add_constraint("need", q, ">=", 3)
    m.add_objective(2 * q + y)
    ms = solve_milp(m)
    ls = solve_lp_fixed(m, ms)
    assert ls.objective == pytest.approx(ms.objective, rel=1e-6)


def test_missing_binary_is_an_error():
    m = MilpModel()
    m.add_var("y", binary=True)
    with pytest.raises(lp.SolverError):
        solve_lp_fixed(m, {})


def test_infeasible_assignment_is_an_error():
    m = MilpModel()
    y = m.add_var("y", binary=True)
    m.add_constraint("r", y, ">=", 1)
    with pytest.raises(lp.SolverError):
        solve_lp_fixed(m, {"y": 0})


def test_duplicate_ids_rejected():
    m = MilpModel()
    m.add_var("x")
    with pytest.raises(lp.ModelError):
        m.add_var("x")
    m.add_constraint("r", m.add_var("z"), ">=", 0)
    with pytest.raises(lp.ModelError):
        m.add_constraint("r", 0, ">=", 0)


def test_rows_tagged_and_lp_export(tmp_path):
    m = MilpModel()
    x = m.add_var("x[a,1]")
    y = m.add_var("y", binary=True)
    m.add_constraint("bal[a,1]", x + y, ">=", 1)
    m.add_constraint("other", x, "<=", 4)
    m.add_objective(3 * x + y)
    assert m.rows_tagged("bal") == ["bal[a,1]"]
    text = m.to_lp_string()
    for section in ("Minimize", "Subject To", "Bounds", "Binaries", "End"):
        assert section in text
    m.write_lp(tmp_path / "m.lp")
    assert (tmp_path / "m.lp").read_text() == text


def _random_lp(seed, n=4, rows=3):
    rng = np.random.default_rng(seed)
    m = MilpModel()
    xs = [m.add_var(f"x{i}", 0, float(rng.uniform(5, 10))) for i in range(n)]
    m.add_objective(lsum(float(c) * x for c, x in zip(rng.uniform(1, 5, n), xs)))
    for r in range(rows):
        a = rng.uniform(0.1, 2, n)
        m.add_constraint(f"r{r}", lsum(float(c) * x for c, x in zip(a, xs)), ">=", float(rng.uniform(1, 4)))
    return m


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000), s=st.floats(0.1, 50))
def test_scaling_equivariance(seed, s):
    m = _random_lp(seed)
    a = solve_lp_fixed(m, {})
    b = solve_lp_fixed(m.scaled(s), {})
    assert b.objective == pytest.approx(s * a.objective, rel=1e-7, abs=1e-9)
    for r in m.row_names:
        assert b.dual(r) == pytest.approx(s * a.dual(r), rel=1e-6, abs=1e-7)
    assert m.row_violation(b.x).max() <= 1e-7


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_complementary_slackness_and_strong_duality(seed):
    m = _random_lp(seed)
    sol = solve_lp_fixed(m, {})
    act = m.row_activity(sol.x)
    for i, r in enumerate(m.row_names):
        if abs(sol.dual(r)) > 1e-7:
            assert act[i] == pytest.approx(m.row_rhs[i], abs=1e-6)
    # with only lower-bounded rows and box columns, dual objective = y.b - sum of ub * reduced-cost excess
    y = np.array([sol.dual(r) for r in m.row_names])
    reduced = np.asarray(m.cost) - m.matrix().T @ y
    dual_obj = y @ np.asarray(m.row_rhs) + np.minimum(reduced, 0) @ np.asarray(m.ub)
    assert dual_obj == pytest.approx(sol.objective, rel=1e-6, abs=1e-8)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_simplex_fallback_agrees_with_highs(seed):
    m = _random_lp(seed)
    a = solve_lp_fixed(m, {}, backend="highs")
    b = solve_lp_fixed(m, {}, backend="simplex")
    assert b.objective == pytest.approx(a.objective, rel=1e-8)
    for r in m.row_names:
        assert b.dual(r) == pytest.approx(a.dual(r), rel=1e-6, abs=1e-7)


def test_simplex_backend_refuses_binaries():
    m = MilpModel()
    m.add_var("y", binary=True)
    with pytest.raises(lp.SolverError):
        solve_milp(m, backend="simplex")


def test_backend_by_environment(monkeypatch):
    monkeypatch.setenv("GASLIGHT_SOLVER", "simplex")
    assert isinstance(lp.get_backend(), lp.DenseSimplexBackend)
    monkeypatch.setenv("GASLIGHT_SOLVER", "nosuch")
    with pytest.raises(lp.SolverError):
        lp.get_backend()


def test_gap_limit_status_constant_exists():
    assert lp.GAP_LIMIT == "gap-limit"
    assert not math.isnan(solve_milp(one_row_lp()).mip_gap)
