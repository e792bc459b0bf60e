# -*- coding: utf-8 -*-
"""Command-line tests (Django management commands)"""

import csv
import json
import os

import django

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'miverlab.settings')
django.setup()

import pytest  # type: ignore  # noqa: E402

from miver import __version__  # noqa: E402
from miver.adapt import AdaptConfig  # noqa: E402
from miver.bench import TRACE_PLOT_HEADER, GeneratorSpec, generate_instance  # noqa: E402
from miver.cli import (EXIT_INFEASIBLE, EXIT_OK, EXIT_USAGE, build_run_config, load_config_file,  # noqa: E402
                       main)
from miver.errors import InvalidArgumentError  # noqa: E402
from miver.model import dump_problem, load_problem  # noqa: E402

KNAPSACK = {
    'name': 'knapsack',
    'a': [10, 6, 4, 1],
    'constraints': [{'b': [5, 4, 3, 1], 'B': 8}],
}


@pytest.fixture
def knapsack_file(tmp_path):
    path = tmp_path / 'knapsack.json'
    path.write_text(json.dumps(KNAPSACK), encoding='utf-8')
    return str(path)


@pytest.fixture
def infeasible_file(tmp_path):
    path = tmp_path / 'infeasible.json'
    dump_problem(generate_instance(GeneratorSpec(dim=8, n_constraints=2, infeasible=True, seed=1)), path)
    return str(path)


def solve_args(problem, *extra):
    return ['solve', '--problem', problem, '--seed', '3', '--max-steps', '60', '--clock', 'logical', *extra]


# ----------------------------------------------------------------------
# solve
# ----------------------------------------------------------------------
def test_solve_writes_identical_files(knapsack_file, tmp_path):
    outputs = []
    for run in range(2):
        solution = tmp_path / f'solution-{run}.json'
        trace = tmp_path / f'trace-{run}.csv'
        code = main(solve_args(knapsack_file, '--solution', str(solution), '--trace', str(trace)))
        assert code == EXIT_OK
        outputs.append((solution.read_bytes(), trace.read_bytes()))
    assert outputs[0] == outputs[1]

    data = json.loads(outputs[0][0])
    assert data['feasible'] is True
    assert data['f'] == 14.0
    assert data['x'] == '1010'
    assert data['problem'] == knapsack_file
    assert data['effective_config']['seed'] == 3
    assert 'elapsed_seconds' not in data


def test_solve_prints_result(knapsack_file, capsys):
    assert main(solve_args(knapsack_file)) == EXIT_OK
    out = capsys.readouterr().out
    assert 'x = 1010' in out
    assert 'f = 14' in out


def test_solve_requires_problem(capsys):
    assert main(['solve', '--max-steps', '10']) == EXIT_USAGE
    assert '--problem' in capsys.readouterr().err


def test_solve_reports_offending_field(tmp_path, capsys):
    path = tmp_path / 'bad.json'
    path.write_text(json.dumps({'a': [1, 2], 'sense': 'sideways'}), encoding='utf-8')
    assert main(solve_args(str(path))) == EXIT_USAGE
    assert 'sense' in capsys.readouterr().err


@pytest.mark.parametrize('field, value', [
    ('loads', ['x', 1.0]),
    ('capacities', 'wide'),
    ('table', ['x']),
])
def test_solve_rejects_non_numeric_criterion_data(tmp_path, capsys, field, value):
    data = {'a': [1, 2], 'criterion': 'table', 'table': [1.0, 2.0]} if field == 'table' else {
        'a': [1, 2], 'criterion': 'idle_capacity', 'loads': [1.0], 'capacities': [3.0]}
    data[field] = value
    path = tmp_path / 'bad.json'
    path.write_text(json.dumps(data), encoding='utf-8')
    assert main(solve_args(str(path))) == EXIT_USAGE
    assert field in capsys.readouterr().err


def test_solve_seed_defaults_to_logical_clock(knapsack_file, tmp_path):
    outputs = []
    for run in range(2):
        solution = tmp_path / f'solution-{run}.json'
        trace = tmp_path / f'trace-{run}.csv'
        code = main(['solve', '--problem', knapsack_file, '--seed', '3', '--max-steps', '60',
                     '--solution', str(solution), '--trace', str(trace)])
        assert code == EXIT_OK
        assert json.loads(solution.read_text(encoding='utf-8'))['effective_config']['clock'] == 'logical'
        outputs.append(trace.read_bytes())
    assert outputs[0] == outputs[1]

    solution = tmp_path / 'wall.json'
    assert main(solve_args(knapsack_file, '--clock', 'wall', '--solution', str(solution))) == EXIT_OK
    assert json.loads(solution.read_text(encoding='utf-8'))['effective_config']['clock'] == 'wall'


def test_solve_missing_file(tmp_path):
    assert main(solve_args(str(tmp_path / 'missing.json'))) == EXIT_USAGE


def test_solve_rejects_invalid_parameters(knapsack_file, capsys):
    assert main(solve_args(knapsack_file, '--d', '0.5')) == EXIT_USAGE
    assert main(solve_args(knapsack_file, '--population', '1')) == EXIT_USAGE


def test_solve_infeasible_instance(infeasible_file, tmp_path):
    solution = tmp_path / 'solution.json'
    code = main(solve_args(infeasible_file, '--solution', str(solution)))
    assert code == EXIT_INFEASIBLE
    data = json.loads(solution.read_text(encoding='utf-8'))
    assert data['feasible'] is False
    assert data['best_penalty'] > 0


def test_solve_accepts_config_file(knapsack_file, tmp_path):
    config = tmp_path / 'config.json'
    config.write_text(json.dumps({'adapt': {'strategy': 'additive'}, 'population': 30}), encoding='utf-8')
    solution = tmp_path / 'solution.json'
    code = main(solve_args(knapsack_file, '--config', str(config), '--population', '40',
                           '--solution', str(solution)))
    assert code == EXIT_OK
    effective = json.loads(solution.read_text(encoding='utf-8'))['effective_config']
    assert effective['population'] == 40
    assert effective['adapt']['strategy'] == 'additive'


# ----------------------------------------------------------------------
# generate / cluster-run / bench
# ----------------------------------------------------------------------
def test_generate_command(tmp_path):
    output = tmp_path / 'problem.json'
    code = main(['generate', '--dim', '20', '--constraints', '3', '--variants', '4', '--seed', '2',
                 '-o', str(output)])
    assert code == EXIT_OK
    problem = load_problem(output)
    assert problem.dim == 20
    assert problem.n_constraints == 3
    assert problem.variants == 4


def test_generate_requires_dimension(tmp_path):
    assert main(['generate', '-o', str(tmp_path / 'p.json')]) == EXIT_USAGE
    assert main(['generate', '--dim', '5', '--margin', '2', '-o', str(tmp_path / 'p.json')]) == EXIT_USAGE


def test_cluster_run_in_process(knapsack_file, tmp_path):
    solution = tmp_path / 'cluster.json'
    code = main(['cluster-run', '--problem', knapsack_file, '--in-process', '2', '--max-steps', '2000',
                 '--quiet-period', '30', '--c-max', '20', '--solution', str(solution)])
    assert code == EXIT_OK
    data = json.loads(solution.read_text(encoding='utf-8'))
    assert data['f'] == 14.0
    assert data['source_node'] in (0, 1)
    assert len(data['nodes']) == 2
    assert data['effective_config']['cluster']['c_max'] == 20


def test_cluster_run_requires_topology(knapsack_file):
    assert main(['cluster-run', '--problem', knapsack_file, '--max-steps', '10']) == EXIT_USAGE
    assert main(['cluster-run', '--problem', knapsack_file, '--in-process', '0']) == EXIT_USAGE
    assert main(['cluster-run', '--problem', knapsack_file, '--node-id', '3',
                 '--peers', '127.0.0.1:7001', '127.0.0.1:7002']) == EXIT_USAGE
    assert main(['cluster-run', '--problem', knapsack_file, '--node-id', '0', '--peers', 'nohost']) == EXIT_USAGE
    assert main(['cluster-run', '--problem', knapsack_file, '--nodes', '0']) == EXIT_USAGE
    assert main(['cluster-run', '--problem', knapsack_file, '--nodes', '3', '--in-process', '2']) == EXIT_USAGE
    assert main(['cluster-run', '--problem', knapsack_file, '--nodes', '3', '--node-id', '0',
                 '--peers', '127.0.0.1:7001,127.0.0.1:7002']) == EXIT_USAGE
    assert main(['cluster-run', '--problem', knapsack_file, '--node-id', '0',
                 '--peers', '127.0.0.1:7001,,127.0.0.1:7002']) == EXIT_USAGE


def test_cluster_run_nodes_runs_in_process(knapsack_file, tmp_path):
    solution = tmp_path / 'cluster.json'
    code = main(['cluster-run', '--problem', knapsack_file, '--nodes', '2', '--max-steps', '2000',
                 '--quiet-period', '30', '--c-max', '20', '--solution', str(solution)])
    assert code == EXIT_OK
    data = json.loads(solution.read_text(encoding='utf-8'))
    assert data['f'] == 14.0
    assert len(data['nodes']) == 2


def test_bench_command(knapsack_file, tmp_path):
    report = tmp_path / 'report.json'
    plot = tmp_path / 'plot.csv'
    code = main(['bench', '--problem', knapsack_file, '--k', '1', '--pilot-seconds', '0.05', '--workers', '2',
                 '-o', str(report), '--trace-plot', str(plot)])
    assert code == EXIT_OK
    data = json.loads(report.read_text(encoding='utf-8'))
    assert data['problem'] == knapsack_file
    assert data['resources'] == 2
    assert len(data['serial_times']) == len(data['parallel_times']) == 1
    with open(plot, newline='', encoding='utf-8') as handle:
        rows = list(csv.reader(handle))
    assert tuple(rows[0]) == TRACE_PLOT_HEADER
    assert {row[0] for row in rows[1:]} == {'serial-0', 'parallel-0', 'target'}


def test_bench_rejects_bad_k(knapsack_file, tmp_path):
    assert main(['bench', '--problem', knapsack_file, '--k', '0', '-o', str(tmp_path / 'r.json')]) == EXIT_USAGE


def test_version(capsys):
    assert main(['--version']) == EXIT_OK
    assert __version__ in capsys.readouterr().out


# ----------------------------------------------------------------------
# 配置合并
# ----------------------------------------------------------------------
def test_build_run_config_precedence(tmp_path):
    config = tmp_path / 'config.json'
    config.write_text(json.dumps({
        'population': 30,
        'seed': 5,
        'adapt': {'d': 2.0},
        'cluster': {'c_max': 10},
        'window': 7,
    }), encoding='utf-8')
    run = build_run_config(str(config), {'population': 40, 'adapt': 'add', 'quiet_period': 3.0, 'seed': None})
    assert run.solver.population == 40
    assert run.solver.seed == 5
    assert isinstance(run.solver.adapt, AdaptConfig)
    assert run.solver.adapt.strategy == 'additive'
    assert run.solver.adapt.d == 2.0
    assert run.solver.adapt.window == 7
    assert run.cluster.c_max == 10
    assert run.cluster.quiet_period == 3.0
    assert run.to_dict()['cluster']['c_max'] == 10


def test_build_run_config_defaults():
    run = build_run_config()
    assert run.solver.population == 100
    assert run.solver.adapt.strategy == 'multiplicative'
    assert run.cluster.c_max == 500


def test_build_run_config_command_defaults(tmp_path):
    assert build_run_config(None, {}, {'clock': 'logical'}).solver.clock == 'logical'
    assert build_run_config(None, {'clock': 'wall'}, {'clock': 'logical'}).solver.clock == 'wall'
    config = tmp_path / 'config.json'
    config.write_text(json.dumps({'clock': 'wall'}), encoding='utf-8')
    assert build_run_config(str(config), {}, {'clock': 'logical'}).solver.clock == 'wall'


def test_load_config_file_errors(tmp_path):
    assert load_config_file(None) == {}
    path = tmp_path / 'list.json'
    path.write_text('[1, 2]', encoding='utf-8')
    with pytest.raises(InvalidArgumentError):
        load_config_file(str(path))
    with pytest.raises(InvalidArgumentError):
        load_config_file(str(tmp_path / 'missing.json'))
    with pytest.raises(InvalidArgumentError):
        build_run_config(None, {'population': 'many'})
