"""
Django 管理命令：求解一个问题文件
使用方法: python manage.py solve --problem p.json --seed 1 --max-steps 100 --solution out.json --trace out.csv
"""

import threading

from django.core.management.base import BaseCommand, CommandError

from miver.cli import (EXIT_INFEASIBLE, EXIT_USAGE, add_solver_arguments, build_run_config,
                       solver_options, stop_on_signals)
from miver.errors import InvalidArgumentError, ProblemValidationError
from miver.model import bits_to_str, load_problem
from miver.solver import MiverSolver, write_solution, write_trace


class Command(BaseCommand):
    help = '用变体概率法求解约束伪布尔优化问题'

    def add_arguments(self, parser):
        parser.add_argument('--problem', type=str, required=True, help='问题文件 (JSON)')
        parser.add_argument('--solution', type=str, help='结果文件 (JSON)')
        parser.add_argument('--trace', type=str, help='轨迹文件 (CSV)')
        add_solver_arguments(parser)

    def handle(self, *args, **options):
        try:
            problem = load_problem(options['problem'])
        except ProblemValidationError as exc:
            raise CommandError(f"问题文件不合法: {exc}", returncode=EXIT_USAGE)
        # 给定种子且没有指定 --clock 时轨迹按步数计时
        defaults = {'clock': 'logical'} if options.get('seed') is not None else None
        try:
            run = build_run_config(options.get('config'), solver_options(options), defaults=defaults)
        except InvalidArgumentError as exc:
            raise CommandError(f"参数不合法: {exc}", returncode=EXIT_USAGE)

        stop_event = threading.Event()
        solver = MiverSolver(problem, run.solver, stop_event=stop_event)
        with stop_on_signals(stop_event):
            solution = solver.solve()

        if options.get('solution'):
            write_solution(solution, options['solution'], extra={
                'problem': options['problem'],
                'effective_config': run.to_dict(),
            })
        if options.get('trace'):
            write_trace(solution.trace, options['trace'])

        self.stdout.write(f"x = {bits_to_str(solution.x)}")
        self.stdout.write(
            f"f = {solution.value:.10g}  f_p = {solution.f_p:.6g}  "
            f"steps = {solution.stats['steps']}  stop = {solution.stop_reason}"
        )
        if not solution.feasible:
            raise CommandError(
                f"❌ 未找到可行解，最小罚函数值 {solution.best_penalty:.6g}",
                returncode=EXIT_INFEASIBLE,
            )
        self.stdout.write(self.style.SUCCESS('✅ 找到可行解'))
