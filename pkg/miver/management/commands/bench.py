"""
Django 管理命令：测量加速比（到达目标值的时间）
使用方法: python manage.py bench --problem p.json --k 10 --pilot-seconds 60 --workers 4 -o report.json
"""

import json

from django.core.management.base import BaseCommand, CommandError

from miver.bench import RUNNERS, emit_trace_plot_data, measure_speedup, write_trace_plot_data
from miver.cli import EXIT_USAGE, build_run_config
from miver.errors import BenchmarkError, InvalidArgumentError, ProblemValidationError
from miver.model import load_problem


class Command(BaseCommand):
    help = '比较串行与并行配置到达同一目标值所需的时间'

    def add_arguments(self, parser):
        parser.add_argument('--problem', type=str, required=True, help='问题文件 (JSON)')
        parser.add_argument('--k', type=int, default=10, help='每种配置的运行次数 K')
        parser.add_argument('--pilot-seconds', dest='pilot_seconds', type=float, default=60.0,
                            help='确定目标值的试运行时长（秒）')
        parser.add_argument('--serial-config', dest='serial_config', type=str, help='串行配置文件 (JSON)')
        parser.add_argument('--parallel-config', dest='parallel_config', type=str, help='并行配置文件 (JSON)')
        parser.add_argument('--runner', choices=RUNNERS, default='solver',
                            help='solver: 多线程评估；cluster: 进程内多节点')
        parser.add_argument('--workers', type=int, help='并行配置的评估线程数（覆盖配置文件）')
        parser.add_argument('--nodes', type=int, default=4, help='cluster 方式的节点数')
        parser.add_argument('--censor-factor', dest='censor_factor', type=float,
                            help='单次运行超过 factor × 试运行时长记为删失')
        parser.add_argument('--seed', type=int, default=0, help='主种子，各次运行的种子由它派生')
        parser.add_argument('-o', '--output', type=str, required=True, help='报告文件 (JSON)')
        parser.add_argument('--trace-plot', dest='trace_plot', type=str,
                            help='把各次运行的轨迹与目标线写成 CSV')

    def handle(self, *args, **options):
        try:
            problem = load_problem(options['problem'])
        except ProblemValidationError as exc:
            raise CommandError(f"问题文件不合法: {exc}", returncode=EXIT_USAGE)
        try:
            serial = build_run_config(options.get('serial_config'), {'workers': 1})
            parallel = build_run_config(options.get('parallel_config'), {'workers': options.get('workers')})
        except InvalidArgumentError as exc:
            raise CommandError(f"参数不合法: {exc}", returncode=EXIT_USAGE)

        try:
            report = measure_speedup(
                problem,
                serial.solver,
                parallel.solver,
                k=options['k'],
                pilot_duration=options['pilot_seconds'],
                runner=options['runner'],
                nodes=options['nodes'],
                cluster_config=parallel.cluster,
                censor_factor=options.get('censor_factor'),
                master_seed=options['seed'],
            )
        except BenchmarkError as exc:
            raise CommandError(f"参数不合法: {exc}", returncode=EXIT_USAGE)

        data = report.to_dict()
        data['problem'] = options['problem']
        with open(options['output'], 'w', encoding='utf-8') as handle:
            json.dump(data, handle, indent=2, sort_keys=True)

        if options.get('trace_plot'):
            traces = {f"serial-{i}": run.trace for i, run in enumerate(report.serial_runs)}
            traces.update({f"parallel-{i}": run.trace for i, run in enumerate(report.parallel_runs)})
            if report.target_kind == 'value':
                write_trace_plot_data(emit_trace_plot_data(traces, report.target), options['trace_plot'])
            else:
                self.stderr.write("⚠️ 试运行没有可行解，目标是罚函数值，跳过轨迹图数据")

        self.stdout.write(
            f"target = {report.target:.10g} ({report.target_kind})  "
            f"speedup = {report.speedup:.3f}  efficiency = {report.efficiency:.3f}"
        )
        if report.censored:
            self.stdout.write(self.style.WARNING('⚠️ 部分运行被删失，加速比是下界估计'))
        self.stdout.write(self.style.SUCCESS(f"✅ 报告已写入 {options['output']}"))
