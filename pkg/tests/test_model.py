# -*- coding: utf-8 -*-
"""Problem model and evaluation unit tests"""

import itertools
import json

import numpy as np
import pytest  # type: ignore

from miver.criteria import ConstantCriterion
from miver.errors import InvalidArgumentError, ProblemValidationError
from miver.model import (Group, GroupMode, Problem, Sense, brute_force_optimum, build_selection,
                         build_traffic_routing, check_feasible, default_penalty_coefficient,
                         evaluate_modified, evaluate_objective, evaluate_penalty,
                         idle_capacity_criterion, load_problem, penalty_coefficient,
                         problem_from_dict, problem_to_dict, str_to_bits, violation_scores)

REL = 1e-12


def knapsack() -> Problem:
    return Problem.create([10, 6, 4, 1], constraints=[([5, 4, 3, 1], 8)], name="knapsack")


def random_problem(rng: np.random.Generator, dim: int, with_lower_groups: bool = True) -> Problem:
    constraints = [(rng.uniform(1, 10, size=dim), float(rng.uniform(5, 20))) for _ in range(2)]
    modes = [GroupMode.AT_MOST_ONE, GroupMode.EXACTLY_ONE, GroupMode.AT_LEAST_ONE]
    if not with_lower_groups:
        modes = [GroupMode.AT_MOST_ONE]
    groups = [Group(0, 2, modes[int(rng.integers(len(modes)))]), Group(2, 2, GroupMode.AT_MOST_ONE)]
    return Problem.create(rng.uniform(-5, 10, size=dim), constraints=constraints, groups=groups)


# ----------------------------------------------------------------------
# 目标函数与罚函数
# ----------------------------------------------------------------------
def test_objective_linear():
    problem = Problem.create([3, -2, 5])
    assert evaluate_objective(problem, np.array([1, 0, 1])) == 8.0
    assert evaluate_objective(problem, np.zeros(3, dtype=np.uint8)) == 0.0


def test_objective_multiplicative_convolution():
    problem = Problem.create([4, 2], second_criterion=ConstantCriterion(0.5))
    assert evaluate_objective(problem, np.array([1, 1])) == pytest.approx(3.0, rel=REL)


def test_objective_dimension_mismatch():
    with pytest.raises(InvalidArgumentError):
        evaluate_objective(Problem.create([1, 2, 3]), np.array([1, 0]))


def test_penalty_ratio_rule():
    problem = Problem.create([1, 1], constraints=[([2, 3], 4)])
    assert evaluate_penalty(problem, np.array([1, 1]), 1.0) == pytest.approx(1.25, rel=REL)
    assert evaluate_penalty(problem, np.array([0, 1]), 1.0) == 0.0


def test_penalty_sums_violated_constraints():
    problem = Problem.create([1, 1], constraints=[([3, 0], 2), ([0, 4], 2)])
    assert evaluate_penalty(problem, np.array([1, 1]), 10.0) == pytest.approx(35.0, rel=REL)


def test_penalty_requires_positive_coefficient():
    with pytest.raises(InvalidArgumentError):
        evaluate_penalty(knapsack(), np.zeros(4), 0.0)


def test_zero_bound_boundary():
    problem = Problem.create([1, 2, 3], constraints=[([1, 1, 1], 0)])
    assert evaluate_penalty(problem, np.zeros(3), 1.0) == 0.0
    # B = 0 时违反程度为 1 + (lhs − B)
    assert evaluate_penalty(problem, np.array([1, 1, 0]), 1.0) == pytest.approx(3.0, rel=REL)


def test_group_bounds_contribute():
    problem = Problem.create(
        [1, 1, 1, 1],
        groups=[Group(0, 2, GroupMode.AT_MOST_ONE), Group(2, 2, GroupMode.EXACTLY_ONE)],
    )
    assert evaluate_penalty(problem, np.array([0, 1, 1, 0]), 1.0) == 0.0
    assert evaluate_penalty(problem, np.array([1, 1, 1, 0]), 1.0) == pytest.approx(2.0, rel=REL)
    assert evaluate_penalty(problem, np.array([0, 1, 0, 0]), 1.0) == pytest.approx(2.0, rel=REL)


def test_default_penalty_coefficient():
    assert default_penalty_coefficient(Problem.create([3, -2, 5])) == pytest.approx(10.0, rel=REL)
    assert default_penalty_coefficient(Problem.create(np.ones(100))) == pytest.approx(100.0, rel=REL)
    zero = Problem.create([0, 0, 0])
    assert default_penalty_coefficient(zero) == 0.0
    assert penalty_coefficient(zero) == 1.0


def test_evaluate_modified():
    problem = Problem.create([3, -2, 5])
    candidate = evaluate_modified(problem, np.array([1, 0, 1]), 1.0)
    assert (candidate.f, candidate.f_p, candidate.f_m) == (8.0, 0.0, 8.0)
    assert candidate.feasible

    constrained = Problem.create([3, -2, 5], constraints=[([1, 0, 1], 1.6)])
    candidate = evaluate_modified(constrained, np.array([1, 0, 1]), 10.0)
    assert candidate.f_p == pytest.approx(12.5, rel=1e-9)
    assert candidate.f_m == pytest.approx(-4.5, rel=1e-9)
    assert not candidate.feasible


def test_modified_argmax_matches_feasible_argmax():
    problem = knapsack()
    c_penalty = penalty_coefficient(problem)
    vectors = [np.array(bits, dtype=np.uint8) for bits in itertools.product((0, 1), repeat=4)]
    candidates = [evaluate_modified(problem, x, c_penalty) for x in vectors]
    best_modified = max(candidates, key=lambda c: c.f_m)
    best_feasible = max((c for c in candidates if c.feasible), key=lambda c: c.f)
    assert np.array_equal(best_modified.x, best_feasible.x)


# ----------------------------------------------------------------------
# 性质
# ----------------------------------------------------------------------
def test_penalty_zero_iff_feasible():
    rng = np.random.default_rng(7)
    for _ in range(20):
        problem = random_problem(rng, 6)
        for bits in itertools.product((0, 1), repeat=6):
            x = np.array(bits, dtype=np.uint8)
            assert (evaluate_penalty(problem, x, 1.0) == 0.0) == check_feasible(problem, x)


def test_penalty_monotone_in_lhs():
    rng = np.random.default_rng(11)
    for _ in range(20):
        problem = random_problem(rng, 6, with_lower_groups=False)
        for bits in itertools.product((0, 1), repeat=6):
            x = np.array(bits, dtype=np.uint8)
            base = evaluate_penalty(problem, x, 1.0)
            for j in np.flatnonzero(x == 0):
                flipped = x.copy()
                flipped[j] = 1
                assert evaluate_penalty(problem, flipped, 1.0) >= base


def test_modified_never_exceeds_objective():
    rng = np.random.default_rng(3)
    problem = random_problem(rng, 8)
    c_penalty = penalty_coefficient(problem)
    for bits in itertools.product((0, 1), repeat=8):
        candidate = evaluate_modified(problem, np.array(bits, dtype=np.uint8), c_penalty)
        assert candidate.f_m <= candidate.f
        assert (candidate.f_m == candidate.f) == candidate.feasible


def test_brute_force_optimum():
    best = brute_force_optimum(knapsack())
    assert best.f == 14.0
    assert best.x.tolist() == [1, 0, 1, 0]

    infeasible = Problem.create([1, 1], constraints=[([1, 1], 0)],
                                groups=[Group(0, 2, GroupMode.AT_LEAST_ONE)])
    assert brute_force_optimum(infeasible) is None

    with pytest.raises(InvalidArgumentError):
        brute_force_optimum(Problem.create(np.ones(21)))


def test_violation_scores_shape():
    problem = Problem.create([1, 1, 1, 1], constraints=[([1, 1, 1, 1], 2)], groups=[(0, 2), (2, 2)])
    scores = violation_scores(problem, np.ones((5, 4), dtype=np.uint8))
    assert scores.shape == (5, 3)


# ----------------------------------------------------------------------
# 通道负载准则与示例问题
# ----------------------------------------------------------------------
def test_idle_capacity_criterion():
    assert idle_capacity_criterion([5], np.array([[1]]), [10]) == pytest.approx(0.5, rel=REL)
    assert idle_capacity_criterion([20, 30], np.eye(2), [10, 10]) == pytest.approx(1.0, rel=REL)
    assert idle_capacity_criterion([5, 5], np.zeros((2, 2)), [10, 10]) == 0.0
    with pytest.raises(InvalidArgumentError):
        idle_capacity_criterion([5], np.array([[1]]), [0])


def test_traffic_routing_reports_monthly_cost():
    problem = build_traffic_routing(
        volumes=[2, 3], spent=[10, 20], prices=[1, 2], charged=[[1, 1], [1, 1]], days=5,
    )
    assert problem.sense is Sense.MINIMIZE
    both_on_first = np.array([1, 0, 1, 0], dtype=np.uint8)
    assert check_feasible(problem, both_on_first)
    assert not check_feasible(problem, np.zeros(4, dtype=np.uint8))
    f = evaluate_objective(problem, both_on_first)
    assert problem.report_value(f) == pytest.approx(125.0, rel=REL)


def test_traffic_routing_with_idle_capacity():
    problem = build_traffic_routing(
        volumes=[1, 1], spent=[0, 0], prices=[1, 1], charged=[[1, 1], [1, 1]], days=1,
        loads=[5, 5], capacities=[10, 10],
    )
    assert not problem.is_linear
    assert problem.second_criterion.name == "idle_capacity"


def test_build_selection_groups():
    problem = build_selection([[1, 2, 3], [4, 5, 6]], [([[1, 1, 1], [1, 1, 1]], 2)])
    assert problem.dim == 6
    assert problem.variants == 3
    assert [(g.start, g.length) for g in problem.groups] == [(0, 3), (3, 3)]


# ----------------------------------------------------------------------
# 问题文件
# ----------------------------------------------------------------------
def test_problem_from_dict_matrix_form():
    problem = problem_from_dict({
        'a': [[1, 2], [3, 4]],
        'constraints': [{'b': [[1, 1], [1, 1]], 'B': 1}],
    })
    assert problem.dim == 4
    assert [(g.start, g.length) for g in problem.groups] == [(0, 2), (2, 2)]
    assert problem.linear_coeffs.tolist() == [1.0, 2.0, 3.0, 4.0]


def test_problem_from_dict_minimize_is_negated():
    problem = problem_from_dict({'a': [1, 2], 'sense': 'minimize', 'offset': 3})
    assert problem.linear_coeffs.tolist() == [-1.0, -2.0]
    assert problem.report_value(evaluate_objective(problem, np.array([1, 1]))) == pytest.approx(6.0)


@pytest.mark.parametrize('data, field', [
    ({}, 'a'),
    ({'a': [1, 2], 'constraints': [{'b': [1], 'B': 1}]}, 'constraints[0].b'),
    ({'a': [1, 2], 'constraints': [{'b': [1, 1]}]}, 'constraints[0]'),
    ({'a': [1, 2], 'dim': 3}, 'dim'),
    ({'a': [1, 2], 'groups': [{'start': 0, 'len': 2, 'mode': 'bogus'}]}, 'groups[0].mode'),
    ({'a': [1, 2], 'sense': 'sideways'}, 'sense'),
    ({'a': [1, 2], 'criterion': 'unknown'}, 'criterion'),
    ({'a': [1, 2], 'criterion': 'idle_capacity', 'loads': ['x'], 'capacities': [1.0]}, 'loads'),
    ({'a': [1, 2], 'criterion': 'idle_capacity', 'loads': [1.0], 'capacities': 'wide'}, 'capacities'),
    ({'a': [1, 2], 'criterion': 'table', 'table': ['x']}, 'table'),
    ({'a': [1, 2], 'offset': 'abc'}, 'offset'),
    ({'a': [1, 2], 'offset': [1]}, 'offset'),
])
def test_problem_from_dict_names_offending_field(data, field):
    with pytest.raises(ProblemValidationError) as excinfo:
        problem_from_dict(data)
    assert excinfo.value.field == field


def test_overlapping_groups_rejected():
    with pytest.raises(ProblemValidationError):
        Problem.create([1, 1, 1], groups=[(0, 2), (1, 2)])


def test_problem_document_preserves_canonical_form(tmp_path):
    original = problem_from_dict({
        'a': [1, 2, 3, 4],
        'constraints': [{'b': [1, 2, 3, 4], 'B': 5}],
        'groups': [{'start': 0, 'len': 2}, {'start': 2, 'len': 2, 'mode': 'exactly_one'}],
        'sense': 'minimize',
        'criterion': 'table',
        'table': [1.0, 0.9, 0.8],
    })
    path = tmp_path / 'problem.json'
    path.write_text(json.dumps(problem_to_dict(original)), encoding='utf-8')
    loaded = load_problem(path)
    assert np.array_equal(loaded.linear_coeffs, original.linear_coeffs)
    assert loaded.groups == original.groups
    assert loaded.second_criterion.to_dict() == original.second_criterion.to_dict()


def test_load_problem_rejects_bad_json(tmp_path):
    path = tmp_path / 'broken.json'
    path.write_text('{"a": [1, 2', encoding='utf-8')
    with pytest.raises(ProblemValidationError) as excinfo:
        load_problem(path)
    assert excinfo.value.field == '<json>'


def test_str_to_bits_rejects_other_characters():
    assert str_to_bits('0110').tolist() == [0, 1, 1, 0]
    with pytest.raises(InvalidArgumentError):
        str_to_bits('01a0')
