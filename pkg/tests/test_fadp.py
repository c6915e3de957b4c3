"""Approximate dynamic programming driver tests on small synthetic problems."""

import numpy as np
import pytest

import cvxadp.fadp as fadp_mod
from cvxadp._rng import stream
from cvxadp.amap import AmapParams, TrainedEstimate
from cvxadp.fadp import (
    CostToGoStack,
    GreedyPolicy,
    SampleBank,
    SPProblem,
    backward_targets,
    evaluate_policy,
    forward_pass,
    greedy_action,
    load_stack,
    run_fadp,
    save_bank_csv,
    save_stack,
    stack_from_dict,
)
from cvxadp.lp import Polytope
from cvxadp.maxaffine import AffineMap, MaxAffineModel
from cvxadp.sampler import DegenerateRegionError


def estimate_of(model):
    return TrainedEstimate(model=model, preprocess=AffineMap.identity(model.d),
                           final_train_risk=0.0)


def box_problem(T=1, cost=None, zdraw=None):
    """x_t free in [0, 1]^2 at every stage, disturbances in R^1."""
    Q = np.concatenate([np.eye(2), -np.eye(2)])

    def stage_cost(t, x, z):
        if cost is not None:
            return cost(t, x, z)
        return float(x @ np.array([1.0, 2.0]) + z[0])

    return SPProblem(
        name="toybox",
        horizon=T,
        decision_dims=(2,) * (T + 1),
        initial_x=np.zeros(2),
        initial_z=np.array([0.3]),
        stage_cost=stage_cost,
        stage_Q=lambda t: Q,
        stage_W=lambda t, z: np.zeros((4, 2)),
        stage_c=lambda t, z: np.array([1.0, 1.0, 0.0, 0.0]),
        disturbance_sampler=zdraw or (lambda t, rng: np.array([0.3])),
    )


def chain_problem():
    """Two stages in R^1: x1 in [0,1], x2 in [x1 - z, x1 + z], z in [0.5, 1.5]."""

    def stage_Q(t):
        return np.array([[1.0], [-1.0]])

    def stage_W(t, z):
        if t == 1:
            return np.zeros((2, 1))
        return np.array([[-1.0], [1.0]])

    def stage_c(t, z):
        if t == 1:
            return np.array([1.0, 0.0])
        return np.array([z[0], z[0]])

    def stage_cost(t, x, z):
        if t == 1:
            return float(0.25 * x[0] + z[0])
        return float(abs(x[0]) + z[0])

    return SPProblem(
        name="chain",
        horizon=2,
        decision_dims=(1, 1, 1),
        initial_x=np.zeros(1),
        initial_z=np.array([1.0]),
        stage_cost=stage_cost,
        stage_Q=stage_Q,
        stage_W=stage_W,
        stage_c=stage_c,
        disturbance_sampler=lambda t, rng: rng.uniform(0.5, 1.5, size=1),
    )


# --- forward pass -----------------------------------------------------------


def test_forward_pass_shapes_and_seeds():
    prob = box_problem()
    bank = forward_pass(prob, n=40, m=3, seed=9)
    assert bank.n == 40 and bank.m == 3
    np.testing.assert_array_equal(bank.decisions[0], np.zeros((40, 2)))
    np.testing.assert_array_equal(bank.disturbances[0],
                                  np.tile([0.3], (3, 1)))
    assert bank.decisions[1].shape == (40, 2)
    assert bank.infos[0] is None and bank.infos[1].mode == "walk"
    assert bank.targets == [None, None]
    box = Polytope(prob.stage_Q(1), prob.stage_c(1, None))
    assert np.max(box.Q @ bank.decisions[1].T - box.c[:, None]) <= 1e-9


def test_forward_pass_disturbance_streams():
    prob = box_problem(zdraw=lambda t, rng: rng.normal(size=1))
    bank = forward_pass(prob, n=12, m=4, seed=5)
    want = np.stack([stream(5, "dist", 1, j).normal(size=1) for j in range(4)])
    np.testing.assert_array_equal(bank.disturbances[1], want)


def test_forward_pass_covers_region():
    prob = box_problem()
    bank = forward_pass(prob, n=400, m=1, seed=0)
    np.testing.assert_allclose(bank.decisions[1].mean(axis=0), 0.5, atol=0.1)


def test_forward_pass_validation():
    prob = box_problem()
    with pytest.raises(ValueError):
        forward_pass(prob, 0, 1, 0)
    with pytest.raises(ValueError):
        forward_pass(prob, 1, 0, 0)


def test_forward_pass_sampling_basis_pins_equality_pairs():
    # x1 + x2 = 1 as a row pair; the basis makes the flat axis-aligned
    Q = np.array([[1.0, 1.0], [-1.0, -1.0], [1.0, -1.0], [-1.0, 1.0]])
    c = np.array([1.0, -1.0, 1.0, 1.0])
    M = np.array([[0.5, 0.5], [0.5, -0.5]])
    prob = SPProblem(
        name="pinned", horizon=1, decision_dims=(2, 2),
        initial_x=np.zeros(2), initial_z=np.zeros(1),
        stage_cost=lambda t, x, z: 0.0,
        stage_Q=lambda t: Q,
        stage_W=lambda t, z: np.zeros((4, 2)),
        stage_c=lambda t, z: c,
        disturbance_sampler=lambda t, rng: np.zeros(1),
        sampling_basis=M,
    )
    bank = forward_pass(prob, n=60, m=1, seed=2)
    xs = bank.decisions[1]
    assert bank.infos[1].mode == "reduced"
    np.testing.assert_allclose(xs.sum(axis=1), 1.0, atol=1e-6)
    spread = xs[:, 0] - xs[:, 1]
    assert spread.max() - spread.min() > 0.5


def test_forward_pass_degenerate_error_names_stage(monkeypatch):
    def boom(region, count, config=None):
        raise DegenerateRegionError("synthetic failure")

    monkeypatch.setattr(fadp_mod, "sample_uniform", boom)
    with pytest.raises(DegenerateRegionError, match=r"stage 1: synthetic failure"):
        forward_pass(box_problem(), 5, 1, 0)


def test_problem_validation():
    with pytest.raises(ValueError):
        box_problem(T=0)
    kwargs = dict(
        name="bad", horizon=2, decision_dims=(2, 2),
        initial_x=np.zeros(2), initial_z=np.zeros(1),
        stage_cost=lambda t, x, z: 0.0,
        stage_Q=lambda t: np.eye(2),
        stage_W=lambda t, z: np.zeros((2, 2)),
        stage_c=lambda t, z: np.ones(2),
        disturbance_sampler=lambda t, rng: np.zeros(1),
    )
    with pytest.raises(ValueError):
        SPProblem(**kwargs)  # decision_dims too short for horizon 2


# --- backward targets -------------------------------------------------------


def test_backward_targets_terminal_stage_averages_cost():
    prob = box_problem(zdraw=lambda t, rng: rng.uniform(size=1))
    bank = forward_pass(prob, n=15, m=4, seed=1)
    y = backward_targets(prob, 1, bank, None)
    xs, zs = bank.decisions[1], bank.disturbances[1]
    want = np.array([np.mean([prob.stage_cost(1, x, z) for z in zs]) for x in xs])
    np.testing.assert_allclose(y, want, atol=1e-12)


def test_backward_targets_estimate_flag_contract():
    prob = box_problem()
    bank = forward_pass(prob, n=5, m=1, seed=0)
    est = estimate_of(MaxAffineModel([[0.0, 0.0]], [0.0]))
    with pytest.raises(ValueError):
        backward_targets(prob, 1, bank, est)  # t == T but estimate given
    prob2 = chain_problem()
    bank2 = forward_pass(prob2, n=5, m=2, seed=0)
    with pytest.raises(ValueError):
        backward_targets(prob2, 1, bank2, None)  # t < T but no estimate


def test_backward_targets_constant_next_estimate():
    prob = chain_problem()
    bank = forward_pass(prob, n=10, m=1, seed=3)
    const = estimate_of(MaxAffineModel([[0.0]], [5.0]))
    y = backward_targets(prob, 1, bank, const)
    xs, z = bank.decisions[1], bank.disturbances[1][0]
    want = np.array([prob.stage_cost(1, x, z) + 5.0 for x in xs])
    np.testing.assert_allclose(y, want, atol=1e-9)


def test_backward_targets_match_grid_oracle():
    prob = chain_problem()
    bank = forward_pass(prob, n=8, m=3, seed=4)
    next_est = estimate_of(MaxAffineModel([[1.0], [-1.0]], [0.0, 0.0]))  # |x|
    y = backward_targets(prob, 1, bank, next_est)
    grid = np.linspace(-4.0, 4.0, 400001)  # resolution 2e-5 over the support
    for i, x in enumerate(bank.decisions[1]):
        total = 0.0
        for z in bank.disturbances[1]:
            lo, hi = x[0] - z[0], x[0] + z[0]
            pts = grid[(grid >= lo) & (grid <= hi)]
            total += prob.stage_cost(1, x, z) + float(np.abs(pts).min())
        want = total / bank.m
        assert y[i] == pytest.approx(want, abs=1e-4)
        closed = np.mean([prob.stage_cost(1, x, z) + max(0.0, abs(x[0]) - z[0])
                          for z in bank.disturbances[1]])
        assert y[i] == pytest.approx(closed, abs=1e-9)


def test_backward_targets_linear_in_disturbance_weights():
    # duplicating every disturbance leaves the averaged targets unchanged
    prob = chain_problem()
    bank = forward_pass(prob, n=6, m=3, seed=8)
    next_est = estimate_of(MaxAffineModel([[1.0], [-1.0]], [0.0, 0.0]))
    y = backward_targets(prob, 1, bank, next_est)
    doubled = SampleBank(
        decisions=list(bank.decisions),
        disturbances=[bank.disturbances[0],
                      np.repeat(bank.disturbances[1], 2, axis=0),
                      bank.disturbances[2]],
        targets=[None] * 3)
    y2 = backward_targets(prob, 1, doubled, next_est)
    np.testing.assert_allclose(y2, y, rtol=1e-12)


def test_backward_targets_infeasibility_is_hard_error():
    prob = chain_problem()
    bank = forward_pass(prob, n=4, m=2, seed=0)
    # sabotage: a stage-2 region that is empty for every x1
    broken = SPProblem(**{**prob.__dict__,
                          "stage_c": lambda t, z: (np.array([1.0, 0.0]) if t == 1
                                                   else np.array([-1.0, -1.0]))})
    est = estimate_of(MaxAffineModel([[0.0]], [0.0]))
    with pytest.raises(fadp_mod.InfeasibleRegionError,
                       match=r"t=1, decision i=0, disturbance j=0"):
        backward_targets(broken, 1, bank, est)


# --- full driver ------------------------------------------------------------


def test_run_fadp_one_stage_linear_cost():
    prob = box_problem(cost=lambda t, x, z: float(x @ np.array([1.0, 2.0])))
    stack, bank = run_fadp(prob, n=30, m=2, seed=0)
    assert stack.horizon == 1
    assert stack.problem == "toybox"
    assert stack.estimate(1).final_train_risk <= 1e-8
    assert bank.targets[1] is not None
    # greedy decision heads to the cheap corner of the box
    region = prob.constraint_builder(1, prob.initial_x, prob.initial_z)
    x = greedy_action(stack.estimate(1), region)
    np.testing.assert_allclose(x, [0.0, 0.0], atol=1e-6)


def test_run_fadp_deterministic():
    prob = chain_problem()
    a_stack, a_bank = run_fadp(prob, n=14, m=3, seed=1)
    b_stack, b_bank = run_fadp(prob, n=14, m=3, seed=1)
    for t in (1, 2):
        np.testing.assert_array_equal(a_stack.estimate(t).model.slopes,
                                      b_stack.estimate(t).model.slopes)
        np.testing.assert_array_equal(a_bank.decisions[t], b_bank.decisions[t])
        np.testing.assert_array_equal(a_bank.targets[t], b_bank.targets[t])


def test_run_fadp_regressor_params_do_not_touch_samples():
    prob = chain_problem()
    _, bank_a = run_fadp(prob, n=14, m=3, seed=2,
                         regressor_params=AmapParams(patience=1))
    _, bank_b = run_fadp(prob, n=14, m=3, seed=2,
                         regressor_params=AmapParams(patience=5, seed=99))
    for t in (1, 2):
        np.testing.assert_array_equal(bank_a.decisions[t], bank_b.decisions[t])
        np.testing.assert_array_equal(bank_a.disturbances[t],
                                      bank_b.disturbances[t])


def test_run_fadp_replay_self_consistency():
    # recomputing every target from the saved stack reproduces the bank
    prob = chain_problem()
    stack, bank = run_fadp(prob, n=14, m=3, seed=3)
    for t in (2, 1):
        next_est = stack.estimate(t + 1) if t < prob.horizon else None
        replay = backward_targets(prob, t, bank, next_est)
        np.testing.assert_allclose(replay, bank.targets[t], atol=1e-9)


def test_stack_indexing():
    prob = box_problem()
    stack, _ = run_fadp(prob, n=12, m=1, seed=0)
    with pytest.raises(IndexError):
        stack.estimate(0)
    with pytest.raises(IndexError):
        stack.estimate(2)


# --- policies and evaluation ------------------------------------------------


def test_greedy_policy_horizon_mismatch():
    prob = chain_problem()
    stack, _ = run_fadp(box_problem(), n=12, m=1, seed=0)
    with pytest.raises(ValueError):
        GreedyPolicy(prob, stack)


def test_evaluate_policy_deterministic_one_stage():
    # constant disturbance, linear cost: revenue is exactly -min cost
    prob = box_problem(cost=lambda t, x, z: float(x @ np.array([1.0, 2.0]) + z[0]))
    stack, _ = run_fadp(prob, n=30, m=1, seed=0)
    report = evaluate_policy(prob, stack, episodes=4, seed=0)
    assert report.episodes == 4
    np.testing.assert_allclose(report.episode_revenues, -0.3, atol=1e-6)
    assert report.mean == pytest.approx(-0.3, abs=1e-6)
    assert report.std == pytest.approx(0.0, abs=1e-9)
    assert report.feasible_fraction == 1.0
    assert report.max_residual <= 1e-7


def test_evaluate_policy_single_episode_std_zero():
    prob = box_problem()
    report = evaluate_policy(prob, lambda t, xp, zp: np.zeros(2), episodes=1)
    assert report.std == 0.0
    assert report.episodes == 1
    assert len(report.episode_revenues) == 1


def test_evaluate_policy_common_random_numbers():
    # cost ignores the decision, so any two policies must tie exactly
    prob = box_problem(cost=lambda t, x, z: float(z[0]),
                       zdraw=lambda t, rng: rng.uniform(size=1))
    r1 = evaluate_policy(prob, lambda t, xp, zp: np.zeros(2), episodes=20, seed=4)
    r2 = evaluate_policy(prob, lambda t, xp, zp: np.full(2, 0.5), episodes=20, seed=4)
    assert r1.episode_revenues == r2.episode_revenues
    r3 = evaluate_policy(prob, lambda t, xp, zp: np.zeros(2), episodes=20, seed=5)
    assert r1.episode_revenues != r3.episode_revenues


def test_evaluate_policy_flags_infeasible_decisions():
    prob = box_problem()
    report = evaluate_policy(prob, lambda t, xp, zp: np.full(2, 1.5), episodes=3)
    assert report.feasible_fraction == 0.0
    assert report.max_residual == pytest.approx(0.5, abs=1e-12)


def test_evaluate_policy_validation():
    with pytest.raises(ValueError):
        evaluate_policy(box_problem(), lambda t, xp, zp: np.zeros(2), episodes=0)


# --- persistence ------------------------------------------------------------


def test_stack_round_trip(tmp_path):
    prob = chain_problem()
    stack, _ = run_fadp(prob, n=14, m=2, seed=6)
    path = tmp_path / "stack.json"
    save_stack(stack, path)
    back = load_stack(path)
    assert back.problem == "chain"
    assert back.horizon == 2
    for t in (1, 2):
        np.testing.assert_array_equal(back.estimate(t).model.slopes,
                                      stack.estimate(t).model.slopes)
        np.testing.assert_array_equal(back.estimate(t).model.intercepts,
                                      stack.estimate(t).model.intercepts)


def test_stack_rejects_foreign_document():
    with pytest.raises(ValueError):
        stack_from_dict({"format": "cvxadp-model"})


def test_save_bank_csv(tmp_path):
    prob = chain_problem()
    _, bank = run_fadp(prob, n=12, m=2, seed=7)
    out = tmp_path / "bank"
    save_bank_csv(bank, out)
    files = sorted(p.name for p in out.iterdir())
    assert files == ["stage_00.csv", "stage_01.csv", "stage_02.csv"]
    rows = (out / "stage_01.csv").read_text().strip().split("\n")
    assert len(rows) == 12
    cells = rows[0].split(",")
    assert len(cells) == 2  # decision coordinate plus target
    assert float(cells[1]) == pytest.approx(bank.targets[1][0])
    rows0 = (out / "stage_00.csv").read_text().strip().split("\n")
    assert len(rows0[0].split(",")) == 1  # stage 0 has no target
