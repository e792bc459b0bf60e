# -*- coding: utf-8 -*-
"""
命令行入口

所有子命令都是 Django 管理命令（solve / generate / bench / cluster_run）。`main` 负责加载
设置、接受 cluster-run 这样的连字符写法，并返回退出码：
    0 成功；1 没有找到可行解（仅 solve / cluster-run）；2 用法错误或问题文件不合法
"""

from __future__ import annotations

import contextlib
import json
import logging
import os
import signal
import sys
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional, Sequence

from . import __version__
from .adapt import AdaptConfig
from .cluster import ClusterConfig
from .errors import InvalidArgumentError
from .solver import SolverConfig

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INFEASIBLE = 1
EXIT_USAGE = 2

COMMAND_ALIASES = {'cluster-run': 'cluster_run'}

# 命令行参数名 → SolverConfig 字段
SOLVER_FLAGS = (
    'population', 'max_steps', 'max_time', 'no_improve_stop', 'target_value', 'target_penalty',
    'workers', 'chunk_size', 'schedule', 'step_mode', 'clock', 'trace_every', 'p0', 'seed',
    'feasibility_retry_steps',
)
# 命令行参数名 → AdaptConfig 字段
ADAPT_FLAGS = {
    'adapt': 'strategy',
    'd': 'd',
    'w': 'w',
    'delta_f': 'delta_f',
    'window': 'window',
    'rollback': 'rollback_mode',
    'trigger': 'trigger',
    'adaptive_p0': 'adaptive_p0',
    'literal_rollback': 'literal_rollback',
    'additive_step': 'additive_step',
    'additive_schedule': 'additive_schedule',
}
# 命令行参数名 → ClusterConfig 字段
CLUSTER_FLAGS = {
    'c_max': 'c_max',
    'quiet_period': 'quiet_period',
    'final_timeout': 'final_timeout',
    'compress': 'compress',
    'send_vector': 'send_vector',
    'reseed': 'reseed',
    'p0_spread': 'p0_spread',
    'node_step_mode': 'step_mode',
    'connect_timeout': 'connect_timeout',
    'failure_window': 'failure_window',
}
STRATEGY_ALIASES = {'mult': 'multiplicative', 'add': 'additive'}


@dataclass
class RunConfig:
    """一次运行的生效配置：配置文件的值被命令行参数覆盖"""

    solver: SolverConfig
    cluster: ClusterConfig

    def to_dict(self) -> Dict[str, Any]:
        data = self.solver.to_dict()
        data['cluster'] = self.cluster.to_dict()
        return data


def load_config_file(path: Optional[str]) -> Dict[str, Any]:
    """读取 JSON 配置文件（path 为空时返回空字典）

    Raises:
        InvalidArgumentError: 文件不可读或不是 JSON 对象
    """
    if not path:
        return {}
    try:
        data = json.loads(Path(path).read_text(encoding='utf-8'))
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidArgumentError(f"无法读取配置文件 {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise InvalidArgumentError(f"配置文件 {path} 必须是 JSON 对象")
    return data


def build_run_config(
    config_path: Optional[str] = None,
    options: Optional[Dict[str, Any]] = None,
    defaults: Optional[Dict[str, Any]] = None,
) -> RunConfig:
    """合并 MIVER_* 设置、命令默认值、配置文件和命令行参数（后者优先）

    配置文件可以是扁平结构（与命令行参数同名），也可以把自适应参数放在 "adapt"、
    集群参数放在 "cluster" 下。

    Raises:
        InvalidArgumentError: 任一参数不合法
    """
    options = options or {}
    solver = SolverConfig.from_settings().to_dict()
    adapt = solver.pop('adapt')
    cluster = ClusterConfig.from_settings().to_dict()

    _merge(defaults or {}, solver, adapt, cluster)
    file_data = load_config_file(config_path)
    adapt.update(file_data.pop('adapt', None) or {})
    cluster.update(file_data.pop('cluster', None) or {})
    _merge(file_data, solver, adapt, cluster)
    _merge({k: v for k, v in options.items() if v is not None}, solver, adapt, cluster)

    if adapt.get('strategy') in STRATEGY_ALIASES:
        adapt['strategy'] = STRATEGY_ALIASES[adapt['strategy']]
    try:
        solver['adapt'] = AdaptConfig.from_dict(adapt)
        return RunConfig(solver=SolverConfig.from_dict(solver), cluster=ClusterConfig.from_dict(cluster))
    except TypeError as exc:
        raise InvalidArgumentError(f"配置参数类型错误: {exc}") from exc


def _merge(values: Dict[str, Any], solver: Dict[str, Any], adapt: Dict[str, Any], cluster: Dict[str, Any]) -> None:
    for key, value in values.items():
        if key in SOLVER_FLAGS:
            solver[key] = value
        elif key in ADAPT_FLAGS:
            adapt[ADAPT_FLAGS[key]] = value
        elif key in CLUSTER_FLAGS:
            cluster[CLUSTER_FLAGS[key]] = value
        elif key in adapt:
            adapt[key] = value
        elif key in solver:
            solver[key] = value


def add_solver_arguments(parser) -> None:
    """solve 与 cluster_run 共用的求解参数"""
    parser.add_argument('--config', type=str, help='JSON 配置文件，命令行参数覆盖其中的值')
    parser.add_argument('--population', type=int, help='每步样本数 N')
    parser.add_argument('--max-steps', dest='max_steps', type=int, help='步数上限 M')
    parser.add_argument('--max-time', dest='max_time', type=float, help='运行时间上限（秒）')
    parser.add_argument('--no-improve-stop', dest='no_improve_stop', type=int, help='连续多少步没有改进后停止')
    parser.add_argument('--target-value', dest='target_value', type=float, help='可行目标值达到该值时停止')
    parser.add_argument('--target-penalty', dest='target_penalty', type=float, help='罚函数值降到该值时停止')
    parser.add_argument('--workers', type=int, help='并行评估线程数')
    parser.add_argument('--chunk-size', dest='chunk_size', type=int, help='工作单元大小')
    parser.add_argument('--schedule', choices=['dynamic', 'static'], help='工作单元调度方式')
    parser.add_argument('--step-mode', dest='step_mode', choices=['batch', 'single'],
                        help='batch 每步 N 个样本；single 每步一个样本')
    parser.add_argument('--clock', choices=['wall', 'logical'],
                        help='轨迹时间：wall 为秒，logical 为步数（只有 logical 的轨迹文件可以逐字节复现）')
    parser.add_argument('--trace-every', dest='trace_every', type=int, help='每隔多少步记录一次轨迹')
    parser.add_argument('--p0', type=float, help='初始概率（缺省自动计算）')
    parser.add_argument('--seed', type=int, help='随机种子')
    parser.add_argument('--feasibility-retry-steps', dest='feasibility_retry_steps', type=int,
                        help='多少步没有可行样本后降低初始概率')
    parser.add_argument('--adapt', choices=['mult', 'multiplicative', 'add', 'additive'], help='自适应方式')
    parser.add_argument('--d', type=float, help='乘法自适应系数 d (> 1)')
    parser.add_argument('--additive-step', dest='additive_step', type=float, help='加法自适应步长')
    parser.add_argument('--additive-schedule', dest='additive_schedule', choices=['harmonic', 'constant'],
                        help='加法步长随步数的变化方式')
    parser.add_argument('--w', type=float, help='部分回滚权重 w')
    parser.add_argument('--delta-f', dest='delta_f', type=float, help='回滚触发阈值 Δ_f')
    parser.add_argument('--window', type=int, help='回滚触发窗口 m')
    parser.add_argument('--trigger', choices=['window', 'counter'],
                        help='完全回滚触发方式：window 看 m 步内 f^M 的增长，counter 看连续没有改进的步数')
    parser.add_argument('--rollback', choices=['none', 'full', 'partial_each_step', 'triggered'], help='回滚方式')
    parser.add_argument('--adaptive-p0', dest='adaptive_p0', action='store_true', default=None,
                        help='完全回滚时用当前 P 的均值作为新的初始概率')
    parser.add_argument('--literal-rollback', dest='literal_rollback', action='store_true', default=None,
                        help='部分回滚只处理低于 p0 的分量')


def solver_options(options: Dict[str, Any]) -> Dict[str, Any]:
    """从命令选项中取出求解/集群参数"""
    names = set(SOLVER_FLAGS) | set(ADAPT_FLAGS) | set(CLUSTER_FLAGS)
    return {k: v for k, v in options.items() if k in names}


@contextlib.contextmanager
def stop_on_signals(stop_event: threading.Event) -> Iterator[None]:
    """SIGINT / SIGTERM 设置 stop_event，让当前运行在下一步结束并保存结果"""

    def handler(signum, _frame):
        logger.warning("🛑 收到信号 %s，保存当前最优结果后退出", signal.Signals(signum).name)
        stop_event.set()

    previous = {}
    for sig in (signal.SIGINT, signal.SIGTERM):
        try:
            previous[sig] = signal.signal(sig, handler)
        except ValueError:
            # 只能在主线程安装信号处理器
            pass
    try:
        yield
    finally:
        for sig, old in previous.items():
            signal.signal(sig, old)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """命令行入口，返回退出码"""
    args: List[str] = list(sys.argv[1:] if argv is None else argv)
    if args and args[0] in ('--version', 'version'):
        sys.stdout.write(f"miver {__version__}\n")
        return EXIT_OK
    if args:
        args[0] = COMMAND_ALIASES.get(args[0], args[0])

    os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'miverlab.settings')
    try:
        import django
        from django.core.management import ManagementUtility
    except ImportError as exc:
        raise ImportError(
            "Couldn't import Django. Are you sure it's installed and available on your PYTHONPATH environment variable?"
        ) from exc
    django.setup()

    utility = ManagementUtility(['manage.py'] + args)
    try:
        utility.execute()
    except SystemExit as exc:
        if exc.code is None:
            return EXIT_OK
        if isinstance(exc.code, int):
            return exc.code
        sys.stderr.write(f"{exc.code}\n")
        return EXIT_USAGE
    return EXIT_OK


if __name__ == '__main__':
    sys.exit(main())
