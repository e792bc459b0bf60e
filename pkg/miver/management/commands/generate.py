"""
Django 管理命令：生成随机实例
使用方法: python manage.py generate --dim 100 --constraints 5 --margin 0.3 --seed 1 -o problem.json [--infeasible]
"""

from django.core.management.base import BaseCommand, CommandError

from miver.bench import PROFILES, GeneratorSpec, generate_instance
from miver.cli import EXIT_USAGE
from miver.errors import BenchmarkError
from miver.model import dump_problem


class Command(BaseCommand):
    help = '生成随机的约束伪布尔优化实例'

    def add_arguments(self, parser):
        parser.add_argument('--profile', choices=sorted(PROFILES), help='预设规模')
        parser.add_argument('--dim', type=int, help='变量个数 D')
        parser.add_argument('--constraints', type=int, help='约束个数')
        parser.add_argument('--margin', type=float, help='右部占系数和的比例 (0, 1]')
        parser.add_argument('--variants', type=int, help='变体组长度 V（缺省不分组）')
        parser.add_argument('--a-range', dest='a_range', type=float, nargs=2, metavar=('LOW', 'HIGH'),
                            help='目标系数范围')
        parser.add_argument('--b-range', dest='b_range', type=float, nargs=2, metavar=('LOW', 'HIGH'),
                            help='约束系数范围')
        parser.add_argument('--seed', type=int, default=0, help='随机种子')
        parser.add_argument('--infeasible', action='store_true', help='生成没有可行解的实例')
        parser.add_argument('-o', '--output', type=str, required=True, help='输出文件 (JSON)')

    def handle(self, *args, **options):
        values = {
            'dim': options.get('dim'),
            'n_constraints': options.get('constraints'),
            'margin': options.get('margin'),
            'variants': options.get('variants'),
            'a_range': options.get('a_range'),
            'b_range': options.get('b_range'),
            'seed': options['seed'],
            'infeasible': options['infeasible'],
        }
        try:
            if options.get('profile'):
                spec = GeneratorSpec.from_profile(options['profile'], **values)
            else:
                if values['dim'] is None:
                    raise CommandError("需要 --dim 或 --profile", returncode=EXIT_USAGE)
                spec = GeneratorSpec(**{k: v for k, v in values.items() if v is not None})
        except BenchmarkError as exc:
            raise CommandError(f"参数不合法: {exc}", returncode=EXIT_USAGE)

        problem = generate_instance(spec)
        dump_problem(problem, options['output'])
        self.stdout.write(self.style.SUCCESS(
            f"✅ 已生成 {problem.name}: D={problem.dim}, 约束 {problem.n_constraints} 个 → {options['output']}"
        ))
