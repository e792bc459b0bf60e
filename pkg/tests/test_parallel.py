# -*- coding: utf-8 -*-
"""Shared-memory parallel evaluation tests"""

import numpy as np
import pytest  # type: ignore
from scipy import stats  # type: ignore

from miver.bench import GeneratorSpec, generate_instance
from miver.errors import InvalidArgumentError
from miver.model import evaluate_batch, penalty_coefficient
from miver.sampler import ProbabilityVector, generate_batch, initial_probability
from miver.solver.parallel import (ParallelEvaluator, WorkerExtrema, chunk_generator, parallel_evaluate,
                                   reduce_extrema)


@pytest.fixture(scope='module')
def problem():
    return generate_instance(GeneratorSpec(dim=50, n_constraints=3, seed=21))


def uniform_for(problem):
    return ProbabilityVector.uniform(problem.dim, initial_probability(problem))


def test_single_worker_matches_serial_generation(problem):
    pv = uniform_for(problem)
    c_penalty = penalty_coefficient(problem)
    batch = parallel_evaluate(problem, pv, count=20, workers=1, seed=3, c_penalty=c_penalty, step=7, chunk_size=8)
    blocks = [
        generate_batch(pv, chunk_generator(3, 7, chunk), size)
        for chunk, size in enumerate((8, 8, 4))
    ]
    X = np.vstack(blocks)
    assert np.array_equal(batch.X, X)
    expected = evaluate_batch(problem, X, c_penalty)
    assert np.array_equal(batch.f_m, expected.f_m)


@pytest.mark.parametrize('workers, schedule', [(2, 'dynamic'), (4, 'dynamic'), (4, 'static'), (16, 'dynamic')])
def test_worker_count_gives_identical_batch(problem, workers, schedule):
    pv = uniform_for(problem)
    c_penalty = penalty_coefficient(problem)
    serial = parallel_evaluate(problem, pv, 100, workers=1, seed=9, c_penalty=c_penalty)
    threaded = parallel_evaluate(problem, pv, 100, workers=workers, seed=9, c_penalty=c_penalty,
                                 schedule=schedule)
    assert np.array_equal(serial.X, threaded.X)
    assert serial.best_index == threaded.best_index
    assert serial.worst_index == threaded.worst_index


def test_reduction_matches_full_scan(problem):
    rng = np.random.default_rng(0)
    c_penalty = penalty_coefficient(problem)
    with ParallelEvaluator(problem, c_penalty, workers=4, chunk_size=5, seed=13) as evaluator:
        for step in range(100):
            pv = ProbabilityVector(p=rng.uniform(0.05, 0.6, size=problem.dim), p0=0.3)
            batch = evaluator.evaluate(pv, step, int(rng.integers(1, 120)))
            assert batch.f_m[batch.best_index] == batch.f_m.max()
            assert batch.f_m[batch.worst_index] == batch.f_m.min()
            assert batch.best_index == int(np.argmax(batch.f_m))
            assert batch.worst_index == int(np.argmin(batch.f_m))


def test_parallel_distribution_matches_serial(problem):
    pv = uniform_for(problem)
    c_penalty = penalty_coefficient(problem)
    serial = parallel_evaluate(problem, pv, 1000, workers=1, seed=100, c_penalty=c_penalty)
    threaded = parallel_evaluate(problem, pv, 1000, workers=4, seed=100, c_penalty=c_penalty)
    assert stats.ks_2samp(serial.f_m, threaded.f_m).pvalue > 0.01
    other_seed = parallel_evaluate(problem, pv, 1000, workers=4, seed=101, c_penalty=c_penalty)
    assert stats.ks_2samp(serial.f_m, other_seed.f_m).pvalue > 0.001


def test_chunk_streams_are_independent():
    first = chunk_generator(1, 0, 0).random(5)
    assert np.array_equal(first, chunk_generator(1, 0, 0).random(5))
    assert not np.array_equal(first, chunk_generator(1, 0, 1).random(5))
    assert not np.array_equal(first, chunk_generator(1, 1, 0).random(5))


def test_worker_extrema_ties_prefer_lowest_index():
    extrema = WorkerExtrema(worker=0)
    extrema.offer(8, 1.0, 8, 1.0)
    extrema.offer(3, 1.0, 3, 1.0)
    assert (extrema.best_index, extrema.worst_index) == (3, 3)

    other = WorkerExtrema(worker=1)
    other.offer(1, 1.0, 1, 0.5)
    assert reduce_extrema([extrema, other]) == (1, 1)


def test_reduce_ignores_idle_workers():
    busy = WorkerExtrema(worker=0)
    busy.offer(4, 2.0, 5, -1.0)
    assert reduce_extrema([WorkerExtrema(worker=1), busy]) == (4, 5)
    with pytest.raises(InvalidArgumentError):
        reduce_extrema([WorkerExtrema(worker=0)])


def test_feasible_best_index(problem):
    pv = ProbabilityVector.uniform(problem.dim, 1e-6)
    batch = parallel_evaluate(problem, pv, 10, workers=2, seed=0, c_penalty=penalty_coefficient(problem))
    index = batch.feasible_best_index()
    assert index is not None
    assert batch.candidate(index).feasible


def test_evaluator_validation(problem):
    with pytest.raises(InvalidArgumentError):
        ParallelEvaluator(problem, 1.0, workers=0)
    with pytest.raises(InvalidArgumentError):
        ParallelEvaluator(problem, 1.0, chunk_size=0)
    with pytest.raises(InvalidArgumentError):
        ParallelEvaluator(problem, 1.0, schedule='guided')
    with ParallelEvaluator(problem, 1.0) as evaluator:
        with pytest.raises(InvalidArgumentError):
            evaluator.evaluate(uniform_for(problem), 0, 0)
