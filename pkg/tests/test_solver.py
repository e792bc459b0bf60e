# -*- coding: utf-8 -*-
"""Serial solver tests"""

import threading
import time

import numpy as np
import pytest  # type: ignore

from miver.adapt import AdaptConfig
from miver.bench import GeneratorSpec, generate_instance
from miver.errors import InvalidArgumentError
from miver.model import Problem, brute_force_optimum, check_feasible, evaluate_objective
from miver.sampler import P_MIN
from miver.solver import MiverSolver, SolverConfig, solve, write_solution, write_trace


def knapsack() -> Problem:
    return Problem.create([10, 6, 4, 1], constraints=[([5, 4, 3, 1], 8)], name="knapsack")


def logical(**overrides) -> SolverConfig:
    values = {'clock': "logical"}
    values.update(overrides)
    return SolverConfig(**values)


# ----------------------------------------------------------------------
# 配置
# ----------------------------------------------------------------------
def test_config_requires_stop_condition():
    with pytest.raises(InvalidArgumentError):
        SolverConfig(max_steps=None)


@pytest.mark.parametrize('overrides', [
    {'population': 1},
    {'workers': 0},
    {'schedule': 'round_robin'},
    {'clock': 'cpu'},
    {'p0': 1.5},
    {'feasibility_retry_factor': 1.0},
    {'step_mode': 'pairs'},
])
def test_config_validation(overrides):
    with pytest.raises(InvalidArgumentError):
        SolverConfig(**overrides)


def test_config_accepts_adapt_dict():
    config = SolverConfig.from_dict({'seed': 3, 'adapt': {'strategy': 'additive'}, 'extra': True})
    assert isinstance(config.adapt, AdaptConfig)
    assert config.adapt.strategy == "additive"
    assert config.seed == 3


# ----------------------------------------------------------------------
# 单步
# ----------------------------------------------------------------------
def test_knapsack_reaches_enumeration_optimum():
    problem = knapsack()
    optimum = brute_force_optimum(problem)
    for seed in range(5):
        solution = solve(problem, logical(max_steps=200, seed=seed))
        assert solution.feasible
        assert solution.f == optimum.f
        assert check_feasible(problem, solution.x)


def test_unconstrained_finds_all_ones():
    a = np.arange(1, 11, dtype=np.float64)
    solution = solve(Problem.create(a), logical(max_steps=2000, target_value=float(a.sum()), seed=1))
    assert solution.x.tolist() == [1] * 10
    assert solution.f == pytest.approx(a.sum())
    assert solution.stop_reason == "target_value"


def test_zero_bound_returns_empty_selection():
    problem = Problem.create([1, 2, 3], constraints=[([1, 1, 1], 0)])
    solution = solve(problem, logical(max_steps=20))
    assert solution.feasible
    assert solution.x.tolist() == [0, 0, 0]
    assert solution.f == 0.0


def test_identical_batch_leaves_probabilities_unchanged():
    problem = knapsack()
    config = logical(max_steps=10, p0=P_MIN, adapt=AdaptConfig(rollback_mode="none"))
    solver = MiverSolver(problem, config)
    before = solver.pv.p.copy()
    solver.step()
    assert np.array_equal(solver.pv.p, before)


def test_step_bookkeeping_is_monotone():
    problem = generate_instance(GeneratorSpec(dim=30, n_constraints=3, seed=4))
    solver = MiverSolver(problem, logical(max_steps=300, seed=2))
    previous_modified = float('-inf')
    previous_feasible = None
    previous_no_result = 0
    for _ in range(300):
        report = solver.step()
        state = solver.state
        assert state.best_modified_value >= previous_modified
        if previous_feasible is not None:
            assert state.best_feasible_value >= previous_feasible
        if report.improved_modified:
            assert state.steps_no_result == 0
        else:
            assert state.steps_no_result == previous_no_result + 1
        previous_modified = state.best_modified_value
        previous_feasible = state.best_feasible_value
        previous_no_result = state.steps_no_result
    solver.evaluator.close()


def test_full_rollback_on_stagnation():
    problem = knapsack()
    config = logical(max_steps=400, adapt=AdaptConfig(rollback_mode="full", window=20))
    solution = solve(problem, config)
    assert solution.stats['full_rollbacks'] > 0


def test_no_full_rollback_when_disabled():
    config = logical(max_steps=200, adapt=AdaptConfig(rollback_mode="partial_each_step", window=5))
    solution = solve(knapsack(), config)
    assert solution.stats['full_rollbacks'] == 0



def test_counter_trigger_waits_until_window_exceeded():
    config = logical(max_steps=400, seed=1, adapt=AdaptConfig(rollback_mode="full", trigger="counter", window=20))
    solver = MiverSolver(knapsack(), config)
    rollbacks = []
    for _ in range(400):
        counter = solver.state.stagnant_steps
        report = solver.step()
        if report.full_rollback:
            rollbacks.append(counter)
    solver.evaluator.close()
    assert rollbacks
    assert set(rollbacks) == {21}
    assert solver.state.full_rollbacks == len(rollbacks)


def test_single_step_mode_draws_one_candidate():
    config = logical(max_steps=10, step_mode="single", p0=0.5, adapt=AdaptConfig(rollback_mode="none"))
    solver = MiverSolver(knapsack(), config)
    before = solver.pv.p.copy()
    report = solver.step()
    assert report.batch_best == report.batch_worst
    assert report.feasible_count <= 1
    assert np.array_equal(solver.pv.p, before)
    assert solver.state.round_best is not None
    solver.evaluator.close()

    solution = solve(knapsack(), logical(max_steps=2000, seed=4, step_mode="single"))
    assert solution.stats['steps'] == 2000
    assert solution.f == 14.0


def test_max_time_counts_wall_seconds_with_logical_clock():
    started = time.monotonic()
    solution = solve(knapsack(), logical(max_steps=None, max_time=0.2))
    assert solution.stop_reason == "max_time"
    assert time.monotonic() - started < 30.0
    assert solution.elapsed >= 0.2

# ----------------------------------------------------------------------
# 停止条件
# ----------------------------------------------------------------------
def test_stop_on_no_improvement():
    solution = solve(knapsack(), logical(max_steps=None, no_improve_stop=30))
    assert solution.stop_reason == "no_improve"


def test_stop_on_target_value():
    solution = solve(knapsack(), logical(max_steps=5000, target_value=14.0))
    assert solution.stop_reason == "target_value"
    assert solution.stats['steps'] < 5000


def test_stop_event_keeps_current_best():
    stop_event = threading.Event()
    solver = MiverSolver(knapsack(), logical(max_steps=10000), stop_event=stop_event)
    solver.step()
    stop_event.set()
    solution = solver.solve()
    assert solution.stop_reason == "stop_event"
    assert solution.stats['steps'] == 1


# ----------------------------------------------------------------------
# 不可行实例
# ----------------------------------------------------------------------
@pytest.mark.parametrize('seed', range(5))
def test_infeasible_instance(seed):
    problem = generate_instance(GeneratorSpec(dim=12, n_constraints=2, infeasible=True, seed=seed))
    solution = solve(problem, logical(max_steps=300, seed=seed))
    assert not solution.feasible
    assert solution.best_penalty > 0
    penalties = [point.best_penalty for point in solution.trace]
    assert all(b <= a for a, b in zip(penalties, penalties[1:]))


def test_feasibility_retries_are_bounded():
    problem = generate_instance(GeneratorSpec(dim=10, n_constraints=2, infeasible=True, seed=1))
    solution = solve(problem, logical(max_steps=150, feasibility_retry_steps=10))
    assert solution.stats['feasibility_retries'] == 5


# ----------------------------------------------------------------------
# 可复现性与输出
# ----------------------------------------------------------------------
def test_identical_inputs_give_identical_files(tmp_path):
    problem = generate_instance(GeneratorSpec(dim=40, n_constraints=3, variants=4, seed=9))
    outputs = []
    for run in range(3):
        solution = solve(problem, logical(max_steps=150, seed=5))
        solution_path = tmp_path / f'solution-{run}.json'
        trace_path = tmp_path / f'trace-{run}.csv'
        write_solution(solution, solution_path, extra={'problem': 'p.json'})
        write_trace(solution.trace, trace_path)
        outputs.append((solution_path.read_bytes(), trace_path.read_bytes()))
    assert outputs[0] == outputs[1] == outputs[2]


def test_worker_count_does_not_change_result():
    problem = generate_instance(GeneratorSpec(dim=60, n_constraints=4, seed=2))
    serial = solve(problem, logical(max_steps=100, seed=8, workers=1, chunk_size=4))
    threaded = solve(problem, logical(max_steps=100, seed=8, workers=4, chunk_size=4))
    assert np.array_equal(serial.x, threaded.x)
    assert serial.f == threaded.f
    assert serial.trace == threaded.trace
    assert serial.stats == threaded.stats


def test_solution_embeds_config_and_seed():
    solution = solve(knapsack(), logical(max_steps=20, seed=11))
    data = solution.to_dict()
    assert data['seed'] == 11
    assert data['config']['max_steps'] == 20
    assert data['config']['adapt']['strategy'] == "multiplicative"
    assert evaluate_objective(knapsack(), solution.x) == pytest.approx(solution.f)


def test_trace_is_sampled():
    solution = solve(knapsack(), logical(max_steps=100, trace_every=10))
    steps = [point.steps for point in solution.trace]
    assert steps == sorted(steps)
    assert {10, 20, 100} <= set(steps)


# ----------------------------------------------------------------------
# 小规模实例与穷举结果比较
# ----------------------------------------------------------------------
def _oracle_runs(instances, seeds, max_steps):
    hits = runs = 0
    for dim, n_constraints, instance_seed in instances:
        problem = generate_instance(GeneratorSpec(dim=dim, n_constraints=n_constraints, seed=instance_seed))
        optimum = brute_force_optimum(problem)
        for seed in seeds:
            solution = solve(problem, logical(max_steps=max_steps, seed=seed))
            assert solution.feasible
            runs += 1
            hits += int(solution.f >= optimum.f - 1e-9 * max(1.0, abs(optimum.f)))
    return hits / runs


def test_small_instances_match_enumeration():
    instances = [(8, 2, 0), (10, 3, 1), (12, 2, 2), (9, 4, 3), (11, 5, 4)]
    assert _oracle_runs(instances, seeds=(0, 1), max_steps=1000) >= 0.8


@pytest.mark.slow
def test_small_instances_match_enumeration_full():
    rng = np.random.default_rng(2024)
    instances = [
        (int(rng.integers(8, 17)), int(rng.integers(2, 6)), seed)
        for seed in range(30)
    ]
    assert _oracle_runs(instances, seeds=range(5), max_steps=5000) >= 0.95
