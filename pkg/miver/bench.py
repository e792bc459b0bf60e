# -*- coding: utf-8 -*-
"""
随机实例生成与加速比测量

加速比按"到达目标值的时间"测量：
1. 试运行：串行求解器运行 pilot_duration 秒，得到目标值 T（没有可行解时用最终罚函数值）
2. 串行配置运行 K 次，每次到达 ≥ T（或罚函数 ≤ T）即停止，记录耗时
3. 并行配置（多线程或进程内集群）同样运行 K 次
4. 加速比 = 串行平均耗时 / 并行平均耗时，效率 = 加速比 / 资源数

单次运行超过 censor_factor × pilot_duration 时记为删失。
"""

from __future__ import annotations

import csv
import logging
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .cluster import ClusterConfig, run_in_process
from .conf import get_setting
from .errors import BenchmarkError
from .model import Group, GroupMode, Problem
from .solver import MiverSolver, SolverConfig, TracePoint

logger = logging.getLogger(__name__)

PROFILES: Dict[str, Dict[str, Any]] = {
    'smp': {'dim': 100, 'n_constraints': 105},
    'large': {'dim': 10000, 'n_constraints': 105},
}

RUNNERS = ("solver", "cluster")
TRACE_PLOT_HEADER = ("run_id", "elapsed_seconds", "best_value", "time_to_target")
TARGET_RUN_ID = "target"
CENSORED = "censored"


@dataclass
class GeneratorSpec:
    """随机实例参数"""

    dim: int
    n_constraints: int = 1
    a_range: Tuple[float, float] = (1.0, 100.0)
    b_range: Tuple[float, float] = (1.0, 100.0)
    margin: float = 0.3
    variants: Optional[int] = None
    seed: int = 0
    infeasible: bool = False

    def __post_init__(self):
        self.a_range = tuple(self.a_range)
        self.b_range = tuple(self.b_range)
        if self.dim < 1:
            raise BenchmarkError(f"dim 至少为 1，得到 {self.dim}")
        if self.n_constraints < 0:
            raise BenchmarkError(f"n_constraints 不能为负，得到 {self.n_constraints}")
        for name, (low, high) in (('a_range', self.a_range), ('b_range', self.b_range)):
            if not low < high:
                raise BenchmarkError(f"{name} 必须满足 low < high，得到 {(low, high)}")
        if not 0 < self.margin <= 1:
            raise BenchmarkError(f"margin 必须在 (0, 1] 内，得到 {self.margin}")
        if self.variants is not None and not 1 <= self.variants <= self.dim:
            raise BenchmarkError(f"variants 必须在 [1, {self.dim}] 内，得到 {self.variants}")
        if self.infeasible and (self.n_constraints < 1 or self.b_range[0] <= 0):
            raise BenchmarkError("不可行实例需要至少一个约束且 b 的系数全部为正")

    @classmethod
    def from_profile(cls, profile: str, **overrides: Any) -> "GeneratorSpec":
        if profile not in PROFILES:
            raise BenchmarkError(f"未知配置 {profile}，可选: {', '.join(PROFILES)}")
        values = dict(PROFILES[profile])
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)


def generate_instance(spec: GeneratorSpec) -> Problem:
    """按参数生成随机实例（同一 spec 得到逐字节相同的实例）

    B_k = margin·Σ_i b_ik，所以 x = 0 总是可行的。不可行实例把第一个约束的右部置 0，
    并要求至少选中一个变量：没有变体组时加一个覆盖全部变量的"至少选一"组，否则把第一个
    变体组改为"恰好选一"。
    """
    rng = np.random.default_rng(spec.seed)
    a = rng.uniform(spec.a_range[0], spec.a_range[1], size=spec.dim)
    matrix = rng.uniform(spec.b_range[0], spec.b_range[1], size=(spec.n_constraints, spec.dim))
    bounds = spec.margin * matrix.sum(axis=1)

    groups: List[Group] = []
    if spec.variants is not None:
        groups = [
            Group(start, spec.variants)
            for start in range(0, spec.dim - spec.variants + 1, spec.variants)
        ]
    if spec.infeasible:
        bounds[0] = 0.0
        if groups:
            groups[0] = Group(groups[0].start, groups[0].length, GroupMode.EXACTLY_ONE)
        else:
            groups = [Group(0, spec.dim, GroupMode.AT_LEAST_ONE)]

    name = f"random-d{spec.dim}-c{spec.n_constraints}-s{spec.seed}"
    if spec.infeasible:
        name += "-infeasible"
    return Problem.create(
        linear_coeffs=a,
        constraints=list(zip(matrix, bounds)),
        groups=groups,
        name=name,
    )


def derive_seeds(master_seed: int, count: int) -> List[int]:
    """从主种子派生 count 个互不相关的运行种子"""
    children = np.random.SeedSequence(master_seed).spawn(count)
    return [int(child.generate_state(1)[0]) for child in children]


# ----------------------------------------------------------------------
# 到达目标的时间
# ----------------------------------------------------------------------
def time_to_target(trace: Sequence[TracePoint], target: float, penalty: bool = False) -> Optional[float]:
    """轨迹中第一次到达目标的时间；没有到达（删失）时返回 None

    penalty=True 时目标是罚函数值 ≤ target，否则是可行目标值 ≥ target。
    """
    for point in trace:
        if penalty:
            if point.best_penalty <= target:
                return point.elapsed
        elif point.best_feasible_value is not None and point.best_feasible_value >= target:
            return point.elapsed
    return None


@dataclass
class TracePlotRow:
    """长格式轨迹数据的一行；time_to_target 是所在运行到达目标的时间，没有到达时 censored=True"""
    run_id: str
    elapsed: float
    best_value: Optional[float]
    time_to_target: Optional[float] = None
    censored: bool = False


def emit_trace_plot_data(
    traces: Mapping[str, Sequence[TracePoint]],
    target: float,
    penalty: bool = False,
) -> List[TracePlotRow]:
    """把多条轨迹合并为长格式数据，外加一条表示目标值的水平线（run_id = "target"）

    每一行带有所在运行的到达目标时间，没有到达的运行标记为删失。
    结果按 (run_id, elapsed) 排序。
    """
    if not traces:
        raise BenchmarkError("至少需要一条轨迹")
    rows = []
    for run_id, trace in traces.items():
        reached = time_to_target(trace, target, penalty)
        rows.extend(
            TracePlotRow(str(run_id), point.elapsed, point.best_feasible_value, reached, reached is None)
            for point in trace
        )
    if rows:
        start = min(row.elapsed for row in rows)
        stop = max(row.elapsed for row in rows)
        rows.append(TracePlotRow(TARGET_RUN_ID, start, target))
        if stop > start:
            rows.append(TracePlotRow(TARGET_RUN_ID, stop, target))
    rows.sort(key=lambda row: (row.run_id, row.elapsed))
    return rows


def write_trace_plot_data(rows: Sequence[TracePlotRow], path: Union[str, Path]) -> None:
    with open(path, 'w', newline='', encoding='utf-8') as handle:
        writer = csv.writer(handle)
        writer.writerow(TRACE_PLOT_HEADER)
        for row in rows:
            if row.censored:
                reached = CENSORED
            else:
                reached = '' if row.time_to_target is None else repr(row.time_to_target)
            writer.writerow([
                row.run_id,
                repr(row.elapsed),
                '' if row.best_value is None else repr(row.best_value),
                reached,
            ])


# ----------------------------------------------------------------------
# 加速比
# ----------------------------------------------------------------------
@dataclass
class RunRecord:
    seed: int
    seconds: float
    censored: bool
    stop_reason: str
    value: Optional[float]
    trace: List[TracePoint] = field(default_factory=list, repr=False)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'seed': self.seed,
            'seconds': self.seconds,
            'censored': self.censored,
            'stop_reason': self.stop_reason,
            'value': self.value,
        }


@dataclass
class SpeedupReport:
    """加速比测量结果（包含全部原始耗时）"""

    k: int
    target: float
    target_kind: str
    pilot_seconds: float
    serial_runs: List[RunRecord] = field(default_factory=list)
    parallel_runs: List[RunRecord] = field(default_factory=list)
    resources: int = 1
    runner: str = "solver"

    @property
    def serial_times(self) -> List[float]:
        return [run.seconds for run in self.serial_runs]

    @property
    def parallel_times(self) -> List[float]:
        return [run.seconds for run in self.parallel_runs]

    @property
    def censored(self) -> bool:
        return any(run.censored for run in self.serial_runs + self.parallel_runs)

    @property
    def speedup(self) -> float:
        return float(np.mean(self.serial_times) / np.mean(self.parallel_times))

    @property
    def efficiency(self) -> float:
        return self.speedup / self.resources

    def to_dict(self) -> Dict[str, Any]:
        return {
            'k': self.k,
            'target': self.target,
            'target_kind': self.target_kind,
            'pilot_seconds': self.pilot_seconds,
            'runner': self.runner,
            'resources': self.resources,
            'serial_runs': [run.to_dict() for run in self.serial_runs],
            'parallel_runs': [run.to_dict() for run in self.parallel_runs],
            'serial_times': self.serial_times,
            'parallel_times': self.parallel_times,
            'speedup': self.speedup,
            'efficiency': self.efficiency,
            'censored': self.censored,
        }


def _stopping_config(config: SolverConfig, seed: int, cap: float,
                     target_value: Optional[float], target_penalty: Optional[float]) -> SolverConfig:
    return replace(
        config,
        seed=seed,
        max_steps=None,
        max_time=cap,
        no_improve_stop=None,
        target_value=target_value,
        target_penalty=target_penalty,
        clock="wall",
    )


def _timed_solver_run(problem: Problem, config: SolverConfig) -> RunRecord:
    started = time.perf_counter()
    solution = MiverSolver(problem, config).solve()
    seconds = time.perf_counter() - started
    reached = solution.stop_reason in ("target_value", "target_penalty")
    return RunRecord(
        seed=config.seed,
        seconds=seconds,
        censored=not reached,
        stop_reason=solution.stop_reason,
        value=solution.f if solution.feasible else None,
        trace=solution.trace,
    )


def _timed_cluster_run(problem: Problem, config: SolverConfig,
                       cluster_config: ClusterConfig, nodes: int) -> RunRecord:
    started = time.perf_counter()
    solution = run_in_process(problem, config, cluster_config, nodes)
    seconds = time.perf_counter() - started
    if config.target_value is not None:
        reached = solution.feasible and solution.f >= config.target_value
    else:
        reached = solution.f_p <= config.target_penalty
    return RunRecord(
        seed=config.seed,
        seconds=seconds,
        censored=not reached,
        stop_reason=solution.stop_reason,
        value=solution.f if solution.feasible else None,
        trace=solution.nodes[0].solution.trace if solution.nodes else [],
    )


def measure_speedup(
    problem: Problem,
    serial_config: SolverConfig,
    parallel_config: SolverConfig,
    k: int = 10,
    pilot_duration: float = 60.0,
    runner: str = "solver",
    nodes: int = 4,
    cluster_config: Optional[ClusterConfig] = None,
    censor_factor: Optional[float] = None,
    master_seed: int = 0,
) -> SpeedupReport:
    """按到达目标时间的方法测量并行配置相对串行配置的加速比

    Raises:
        BenchmarkError: 参数不合法
    """
    if k < 1:
        raise BenchmarkError(f"K 至少为 1，得到 {k}")
    if pilot_duration <= 0:
        raise BenchmarkError(f"pilot_duration 必须大于 0，得到 {pilot_duration}")
    if runner not in RUNNERS:
        raise BenchmarkError(f"runner 必须是 {RUNNERS} 之一，得到 {runner}")
    if censor_factor is None:
        censor_factor = float(get_setting('MIVER_BENCH_CENSOR_FACTOR'))
    cluster_config = cluster_config or ClusterConfig.from_settings()

    seeds = derive_seeds(master_seed, 2 * k + 1)
    pilot_config = replace(
        serial_config,
        seed=seeds[0],
        max_steps=None,
        max_time=pilot_duration,
        no_improve_stop=None,
        target_value=None,
        target_penalty=None,
        clock="wall",
    )
    logger.info("📊 试运行 %.1f 秒以确定目标值", pilot_duration)
    pilot = MiverSolver(problem, pilot_config).solve()
    if pilot.feasible:
        target_value, target_penalty = pilot.f, None
        report = SpeedupReport(k=k, target=pilot.f, target_kind="value", pilot_seconds=pilot_duration)
    else:
        target_value, target_penalty = None, pilot.best_penalty
        report = SpeedupReport(k=k, target=pilot.best_penalty, target_kind="penalty",
                               pilot_seconds=pilot_duration)
    report.runner = runner
    report.resources = nodes if runner == "cluster" else parallel_config.workers
    cap = censor_factor * pilot_duration

    for i in range(k):
        config = _stopping_config(serial_config, seeds[1 + i], cap, target_value, target_penalty)
        record = _timed_solver_run(problem, config)
        report.serial_runs.append(record)
        logger.info("📊 串行第 %d/%d 次: %.3f 秒%s", i + 1, k, record.seconds, " (删失)" if record.censored else "")

    for i in range(k):
        config = _stopping_config(parallel_config, seeds[1 + k + i], cap, target_value, target_penalty)
        if runner == "cluster":
            record = _timed_cluster_run(problem, config, cluster_config, nodes)
        else:
            record = _timed_solver_run(problem, config)
        report.parallel_runs.append(record)
        logger.info("📊 并行第 %d/%d 次: %.3f 秒%s", i + 1, k, record.seconds, " (删失)" if record.censored else "")

    logger.info(
        "✅ 加速比 %.3f, 效率 %.3f (资源数 %d)%s",
        report.speedup, report.efficiency, report.resources, ", 含删失运行" if report.censored else "",
    )
    return report
