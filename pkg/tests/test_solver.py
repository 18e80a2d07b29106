from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gfbp import operators as ops
from gfbp.errors import DivergenceError, ParameterError, ShapeError
from gfbp.oracle import GridSpec, grid_prox
from gfbp.problems import HeronConfig, build_heron
from gfbp.schedules import CustomSchedule, make_default
from gfbp.solver import (GfbpProblem, StoppingRule, TRACE_COLUMNS, ergodic_average,
                         gfbp_step, init_state, inner_displacement, residual_C, run)


def identity_penalty():
    return ops.CocoerciveOp(eval=lambda x: np.array(x, dtype=float), cocoercivity=1.0,
                            label="identity", potential=lambda x: 0.5 * float(x @ x))


def zero_problem(n=3, m=2):
    return GfbpProblem(blocks=[ops.zero_resolvent() for _ in range(m)], dim=n,
                       objective=lambda x: 0.0, constraint_value=lambda x: 0.0)


def test_problem_needs_a_block():
    with pytest.raises(ParameterError):
        GfbpProblem(blocks=[], dim=2)


def test_zero_operators_leave_point_unchanged():
    p = zero_problem()
    s = make_default(0.9)
    state = init_state([1.0, -2.0, 0.5], s)
    for _ in range(5):
        state = gfbp_step(p, s, state)
    np.testing.assert_array_equal(state.x, [1.0, -2.0, 0.5])
    assert inner_displacement(state) == 0.0


def test_zero_problem_stops_at_first_check():
    rep = run(zero_problem(), make_default(0.9), StoppingRule(1e-5), x1=[1.0, 2.0, 3.0])
    assert rep.reason == "relative_change"
    assert rep.iterations == 1
    np.testing.assert_array_equal(rep.x, [1.0, 2.0, 3.0])


def test_one_dimensional_step():
    # alpha_1 = 1, beta_1 = 0.5, C = identity, A = d|.|
    p = GfbpProblem(blocks=[ops.l1_block(1.0)], dim=1, penalty=identity_penalty())
    s = make_default(0.5)
    nxt = gfbp_step(p, s, init_state([3.0], s))
    np.testing.assert_allclose(nxt.sweep[0], [1.5])
    np.testing.assert_allclose(nxt.x, [0.5])
    ref = grid_prox(lambda U: np.abs(U[:, 0]), 1.0, 1.5, GridSpec(-5.0, 5.0, 4001))
    np.testing.assert_allclose(nxt.x, ref, atol=2 * 10.0 / 4000)
    assert nxt.k == 2
    assert nxt.penalty_norm == 3.0


def test_passty_reduction(rng):
    A, b = rng.standard_normal((3, 4)), rng.standard_normal(3)
    blocks = [ops.least_squares_block(A, b), ops.l1_block(0.4)]
    p = GfbpProblem(blocks=blocks, dim=4)
    s = make_default(0.9)
    state = init_state(rng.standard_normal(4), s)
    ref = state.x.copy()
    for k in range(1, 30):
        state = gfbp_step(p, s, state)
        ref = blocks[1].resolvent(s.alpha(k), blocks[0].resolvent(s.alpha(k), ref))
        assert np.array_equal(state.x, ref)


@settings(max_examples=50)
@given(k=st.integers(1, 1000), x=st.lists(st.floats(-10, 10), min_size=3, max_size=3))
def test_single_block_is_forward_backward_penalty_step(k, x):
    x = np.array(x)
    B = ops.CocoerciveOp(eval=lambda v: 0.5 * v, cocoercivity=2.0, label="B")
    C = ops.box_distance_gradient(-1.0, 1.0)
    block = ops.l1_block(0.3)
    p = GfbpProblem(blocks=[block], dim=3, smooth=B, penalty=C)
    s = make_default(0.9)
    state = replace(init_state(x, s), k=k)
    a, bta = s.alpha(k), s.beta(k)
    expected = block.resolvent(a, x - a * B(x) - a * bta * C(x))
    np.testing.assert_allclose(gfbp_step(p, s, state).x, expected, rtol=1e-15, atol=1e-15)


def test_ergodic_average_examples():
    s = CustomSchedule(lambda k: {1: 1.0, 2: 0.5}.get(k, 1.0 / k), lambda k: 1.0)
    state = init_state([0.0], s)
    np.testing.assert_array_equal(ergodic_average(state), [0.0])
    # x_2 = 3 through a resolvent that ignores its input
    p = GfbpProblem(blocks=[ops.ResolventOp(lambda a, v: np.array([3.0]))], dim=1)
    state = gfbp_step(p, s, state)
    np.testing.assert_allclose(ergodic_average(state), [1.0])


def test_ergodic_average_of_constant_iterates():
    s = make_default(0.9)
    state = init_state([2.0, -1.0], s)
    p = zero_problem(2, 1)
    for _ in range(10):
        state = gfbp_step(p, s, state)
    np.testing.assert_allclose(ergodic_average(state), [2.0, -1.0])


def test_max_only_runs_exact_count():
    p = GfbpProblem(blocks=[ops.l1_block(1.0)], dim=2, penalty=identity_penalty())
    rep = run(p, make_default(0.5), StoppingRule(1e-5, 7, "max_only"), x1=[3.0, -3.0])
    assert rep.iterations == 7
    assert rep.reason == "max_iters"
    assert [r.k for r in rep.trace] == list(range(1, 8))


def test_trace_thinning_keeps_first_and_last():
    p = GfbpProblem(blocks=[ops.l1_block(1.0)], dim=1, penalty=identity_penalty())
    rep = run(p, make_default(0.5), StoppingRule(1e-5, 25, "max_only"), trace_every=10, x1=[3.0])
    assert [r.k for r in rep.trace] == [1, 10, 20, 25]


def test_relative_change_requires_objective():
    p = GfbpProblem(blocks=[ops.l1_block(1.0)], dim=1)
    with pytest.raises(ParameterError):
        run(p, make_default(0.9), StoppingRule(1e-5))


def test_residual_mode():
    p = GfbpProblem(blocks=[ops.scaled_sq_norm_block(1.0)], dim=2)
    rep = run(p, make_default(0.9), StoppingRule(1e-8, 1000, "residual"), x1=[1.0, 1.0])
    assert rep.reason == "residual"
    assert rep.iterations < 1000


def test_stopping_rule_validation():
    with pytest.raises(ParameterError):
        StoppingRule(0.0)
    with pytest.raises(ParameterError):
        StoppingRule(1e-5, 0)
    with pytest.raises(ParameterError):
        StoppingRule(1e-5, 10, "sometimes")


def test_shape_mismatch():
    p = zero_problem(3)
    with pytest.raises(ShapeError):
        run(p, make_default(0.9), StoppingRule(1e-5, 3, "max_only"), x1=[1.0, 2.0])


def test_divergence_names_block():
    bad = ops.ResolventOp(lambda a, v: np.full_like(v, np.inf), label="blowup")
    p = GfbpProblem(blocks=[ops.l1_block(1.0), bad, ops.scaled_sq_norm_block(1.0)], dim=2)
    with pytest.raises(DivergenceError) as info:
        run(p, make_default(0.9), StoppingRule(1e-5, 5, "max_only"), x1=[1.0, 1.0])
    assert info.value.block == "block 2 (blowup)"
    assert info.value.k == 1


def test_divergence_in_forward_step():
    C = ops.CocoerciveOp(eval=lambda v: np.full_like(v, np.nan), cocoercivity=1.0)
    p = GfbpProblem(blocks=[ops.l1_block(1.0)], dim=2, penalty=C)
    with pytest.raises(DivergenceError) as info:
        gfbp_step(p, make_default(0.9), init_state([1.0, 1.0], make_default(0.9)))
    assert info.value.block == "forward step"


def test_determinism_and_trace_csv():
    cfg = HeronConfig(centers=[[3.0, 1.0], [-2.0, 4.0]], A=[[1.0, 2.0], [0.0, 1.0]])
    p = build_heron(cfg)
    s = make_default(0.9 * p.penalty.cocoercivity)
    rule = StoppingRule(1e-5, 200, "max_only")
    r1, r2 = run(p, s, rule, x1=[5.0, 5.0]), run(p, s, rule, x1=[5.0, 5.0])
    assert r1.trace_csv(include_timing=False) == r2.trace_csv(include_timing=False)
    header = r1.trace_csv().splitlines()[0]
    assert header == ",".join(TRACE_COLUMNS)
    summary = r1.summary()
    assert summary["termination"] == "max_iters"
    assert summary["stopping_rule"] == "max_only(max_iters=200)"


def test_heron_residual_decreases():
    p = build_heron(HeronConfig(centers=[[3.0, -2.0]], A=np.eye(2)))
    s = make_default(0.9)
    state = init_state([4.0, 4.0], s)
    first = residual_C(p, state.x)
    for _ in range(99):
        state = gfbp_step(p, s, state)
    assert state.k == 100
    assert residual_C(p, state.x) < first


def test_strong_convergence_to_unique_solution():
    # minimize |x| + x^2 over argmin 0.5*dist^2(., [1, 2]): unique solution 1
    p = GfbpProblem(blocks=[ops.l1_block(1.0), ops.scaled_sq_norm_block(1.0)], dim=1,
                    penalty=ops.box_distance_gradient(1.0, 2.0))
    assert p.strongly_monotone_last
    s = make_default(0.9)
    state = init_state([5.0], s)
    errs = []
    for _ in range(20000):
        state = gfbp_step(p, s, state)
        errs.append(abs(state.x[0] - 1.0))
    errs = np.array(errs)
    assert errs[-1] < 1e-2
    # eventually decreasing: no increase over the second half of the run
    assert np.all(np.diff(errs[len(errs) // 2:]) <= 1e-15)


def test_heron_ergodic_average_shrinks():
    # z_k decays only like 1/log k here; check the trend, not a threshold
    p = build_heron(HeronConfig(centers=[[3.0, -2.0]], A=np.eye(2)))
    s = make_default(0.9)
    state = init_state(np.zeros(2), s)
    norms = {}
    while state.k < 20000:
        state = gfbp_step(p, s, state)
        if state.k in (200, 2000, 20000):
            norms[state.k] = float(np.linalg.norm(ergodic_average(state)))
    assert norms[20000] < norms[2000] < norms[200]
    assert np.linalg.norm(state.x) < 1e-3
