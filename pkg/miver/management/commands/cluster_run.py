"""
Django 管理命令：多节点多起点搜索
使用方法:
    python manage.py cluster_run --problem p.json --in-process 4 --max-time 60 --solution out.json
    python manage.py cluster_run --problem p.json --nodes 3 --node-id 0 --peers h0:7000,h1:7000,h2:7000
"""

import json
import threading

from django.core.management.base import BaseCommand, CommandError

from miver.cli import (EXIT_INFEASIBLE, EXIT_USAGE, add_solver_arguments, build_run_config,
                       solver_options, stop_on_signals)
from miver.cluster import ClusterSolution, parse_address, parse_peers, run_in_process, run_tcp_node
from miver.conf import get_setting
from miver.errors import InvalidArgumentError, ProblemValidationError
from miver.model import bits_to_str, load_problem


class Command(BaseCommand):
    help = '在多个节点上运行独立搜索并交换改进结果'

    def add_arguments(self, parser):
        parser.add_argument('--problem', type=str, required=True, help='问题文件 (JSON)')
        parser.add_argument('--solution', type=str, help='结果文件 (JSON)，仅 0 号节点写出')
        add_solver_arguments(parser)

        parser.add_argument('--in-process', dest='in_process', type=int, metavar='N',
                            help='在本进程内运行 N 个节点（队列传输）')
        parser.add_argument('--nodes', type=int, metavar='N',
                            help='节点总数：TCP 方式下必须等于 --peers 的地址数，单独使用时等同于 --in-process N')
        parser.add_argument('--node-id', dest='node_id', type=int, help='TCP 方式下本节点编号')
        parser.add_argument('--peers', nargs='+', metavar='HOST:PORT[,HOST:PORT...]',
                            help='全部节点地址（逗号或空格分隔），下标即节点编号')
        parser.add_argument('--bind', type=str, help='监听地址（缺省为本节点在 --peers 中的地址）')

        parser.add_argument('--c-max', dest='c_max', type=int, help='连续多少步没有改进后检查全局最优')
        parser.add_argument('--quiet-period', dest='quiet_period', type=float,
                            help='协调节点多久没有收到改进后停止（秒）')
        parser.add_argument('--final-timeout', dest='final_timeout', type=float, help='等待最终结果的时间（秒）')
        parser.add_argument('--compress', action='store_true', default=None, help='长向量游程编码')
        parser.add_argument('--no-send-vector', dest='send_vector', action='store_false', default=None,
                            help='改进消息不携带 X')
        parser.add_argument('--reseed', choices=['reconstruct', 'p_avg'], help='接管全局最优时的重新播种方式')
        parser.add_argument('--p0-spread', dest='p0_spread', type=float, help='各节点初始概率的相对差异')
        parser.add_argument('--node-step-mode', dest='node_step_mode', choices=['single', 'batch'],
                            help='节点每步生成一个样本 (single) 或 N 个样本 (batch)')
        parser.add_argument('--connect-timeout', dest='connect_timeout', type=float,
                            help='TCP 启动时等待其他节点上线的时间（秒）')
        parser.add_argument('--failure-window', dest='failure_window', type=float,
                            help='发送持续失败多久后转为独立搜索（秒）')

    def handle(self, *args, **options):
        try:
            problem = load_problem(options['problem'])
        except ProblemValidationError as exc:
            raise CommandError(f"问题文件不合法: {exc}", returncode=EXIT_USAGE)
        try:
            run = build_run_config(options.get('config'), solver_options(options))
        except InvalidArgumentError as exc:
            raise CommandError(f"参数不合法: {exc}", returncode=EXIT_USAGE)

        in_process = options.get('in_process')
        nodes = options.get('nodes')
        if nodes is not None and nodes < 1:
            raise CommandError(f"--nodes 至少为 1，得到 {nodes}", returncode=EXIT_USAGE)
        if in_process is None and options.get('node_id') is None:
            if nodes is None:
                raise CommandError("需要 --in-process N、--nodes N 或 --node-id 与 --peers", returncode=EXIT_USAGE)
            in_process = nodes
        elif in_process is not None and nodes is not None and nodes != in_process:
            raise CommandError(f"--nodes {nodes} 与 --in-process {in_process} 不一致", returncode=EXIT_USAGE)
        if in_process is not None and in_process < 1:
            raise CommandError(f"--in-process 至少为 1，得到 {in_process}", returncode=EXIT_USAGE)

        stop_event = threading.Event()
        with stop_on_signals(stop_event):
            if in_process is not None:
                result = run_in_process(problem, run.solver, run.cluster, in_process, stop_event=stop_event)
            else:
                result = self._run_tcp(problem, run, options, stop_event)

        if not isinstance(result, ClusterSolution):
            self.stdout.write(
                f"node {result.node_id}: f = {result.solution.value:.10g}  "
                f"stop = {result.stop_reason}"
            )
            self.stdout.write(self.style.SUCCESS('✅ 节点已退出'))
            return

        if options.get('solution'):
            data = result.to_dict()
            data['problem'] = options['problem']
            data['effective_config'] = run.to_dict()
            with open(options['solution'], 'w', encoding='utf-8') as handle:
                json.dump(data, handle, indent=2, sort_keys=True)

        self.stdout.write(f"x = {bits_to_str(result.x)}")
        self.stdout.write(
            f"f = {result.value:.10g}  f_p = {result.f_p:.6g}  "
            f"source = {result.source_node}  stop = {result.stop_reason}"
        )
        if not result.feasible:
            raise CommandError("❌ 集群未找到可行解", returncode=EXIT_INFEASIBLE)
        self.stdout.write(self.style.SUCCESS('✅ 找到可行解'))

    def _run_tcp(self, problem, run, options, stop_event):
        peers = options.get('peers') or get_setting('MIVER_CLUSTER_PEERS')
        if not peers:
            raise CommandError("TCP 方式需要 --peers 或 MIVER_CLUSTER_PEERS", returncode=EXIT_USAGE)
        try:
            addresses = parse_peers(peers)
            bind = parse_address(options['bind']) if options.get('bind') else None
        except ValueError as exc:
            raise CommandError(str(exc), returncode=EXIT_USAGE)
        nodes = options.get('nodes')
        if nodes is not None and nodes != len(addresses):
            raise CommandError(f"--nodes {nodes} 与 --peers 中的 {len(addresses)} 个地址不一致", returncode=EXIT_USAGE)
        node_id = options['node_id']
        if node_id not in addresses:
            raise CommandError(f"--node-id {node_id} 不在 --peers 范围内", returncode=EXIT_USAGE)
        return run_tcp_node(problem, run.solver, run.cluster, node_id, addresses, bind=bind,
                            stop_event=stop_event)
