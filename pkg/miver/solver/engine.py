# -*- coding: utf-8 -*-
"""
MIVER 串行主循环

每一步：
1. 检查是否需要完全回滚（停滞或长期找不到可行解）
2. 按 P 生成 N 个样本并评估（可多线程）
3. 更新可行最优解和修正目标最优值
4. 用本批最好/最差样本自适应 P（单样本模式下与本轮最优样本比较）
5. 部分回滚（按配置）
"""

from __future__ import annotations

import csv
import json
import logging
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Union

import numpy as np

from ..adapt import adapt, full_rollback, partial_rollback, partial_weight, should_rollback
from ..model import Candidate, Problem, bits_to_str, check_feasible, penalty_coefficient
from ..sampler import ProbabilityVector, initial_probability
from .config import SolverConfig
from .parallel import BatchResult, ParallelEvaluator

logger = logging.getLogger(__name__)

TRACE_HEADER = ("elapsed_seconds", "best_feasible_value", "best_modified_value", "steps")


@dataclass
class TracePoint:
    elapsed: float
    best_feasible_value: Optional[float]
    best_modified_value: float
    steps: int
    best_penalty: float = float('inf')


@dataclass
class StepReport:
    """一步的结果摘要"""
    step: int
    batch_best: float
    batch_worst: float
    feasible_count: int
    improved_modified: bool = False
    improved_feasible: bool = False
    full_rollback: bool = False


@dataclass
class SolverState:
    """运行状态"""
    best_feasible: Optional[Candidate] = None
    best_modified: Optional[Candidate] = None
    best_penalty: float = float('inf')
    steps_made: int = 0
    steps_no_result: int = 0
    steps_without_feasible: int = 0
    stagnant_steps: int = 0
    round_best: Optional[Candidate] = None
    start_history: List[float] = field(default_factory=list)
    trace: List[TracePoint] = field(default_factory=list)
    full_rollbacks: int = 0
    feasibility_retries: int = 0

    @property
    def best_modified_value(self) -> float:
        return self.best_modified.f_m if self.best_modified is not None else float('-inf')

    @property
    def best_feasible_value(self) -> Optional[float]:
        return self.best_feasible.f if self.best_feasible is not None else None


@dataclass
class Solution:
    """求解结果；没有找到可行解时 x 是修正目标最大的不可行样本"""
    x: np.ndarray
    f: float
    f_p: float
    f_m: float
    feasible: bool
    value: float
    best_penalty: float
    stop_reason: str
    trace: List[TracePoint]
    stats: Dict[str, Any]
    seed: int
    config: Dict[str, Any]
    elapsed: float = 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            'x': bits_to_str(self.x),
            'f': self.f,
            'f_p': self.f_p,
            'f_m': self.f_m,
            'feasible': self.feasible,
            'value': self.value,
            'best_penalty': self.best_penalty,
            'stop_reason': self.stop_reason,
            'seed': self.seed,
            'stats': self.stats,
            'config': self.config,
        }


# 停滞处理钩子：返回新的概率向量，或返回 None 表示执行普通的完全回滚
StagnationHandler = Callable[["MiverSolver"], Optional[ProbabilityVector]]
StepListener = Callable[["MiverSolver", StepReport], None]


class MiverSolver:
    """单机求解器

    Args:
        problem: 规范形式的问题
        config: 求解参数
        stop_event: 外部停止信号（每步检查一次）
        stagnation_handler: 触发完全回滚时调用，集群节点用它接管重新播种
        step_listener: 每步结束后调用
    """

    def __init__(
        self,
        problem: Problem,
        config: SolverConfig,
        stop_event: Optional[threading.Event] = None,
        stagnation_handler: Optional[StagnationHandler] = None,
        step_listener: Optional[StepListener] = None,
    ):
        self.problem = problem
        self.config = config
        self.stop_event = stop_event or threading.Event()
        self.stagnation_handler = stagnation_handler
        self.step_listener = step_listener
        self.c_penalty = penalty_coefficient(problem)
        self.p0 = config.p0 if config.p0 is not None else initial_probability(problem)
        self.pv = ProbabilityVector.uniform(problem.dim, self.p0)
        self.state = SolverState()
        self.evaluator = ParallelEvaluator(
            problem,
            self.c_penalty,
            workers=config.workers,
            chunk_size=config.chunk_size,
            schedule=config.schedule,
            seed=config.seed,
        )
        self._started_at: Optional[float] = None

    # ------------------------------------------------------------------
    # 时钟
    # ------------------------------------------------------------------
    def elapsed(self) -> float:
        """轨迹时间：wall 为秒，logical 为已执行步数"""
        if self.config.clock == "logical":
            return float(self.state.steps_made)
        return self.wall_elapsed()

    def wall_elapsed(self) -> float:
        if self._started_at is None:
            return 0.0
        return time.monotonic() - self._started_at

    # ------------------------------------------------------------------
    # 单步
    # ------------------------------------------------------------------
    def step(self) -> StepReport:
        """执行一步：回滚检查 → 生成评估 → 更新最优 → 自适应 → 部分回滚"""
        if self._started_at is None:
            self._started_at = time.monotonic()
        state = self.state
        adapt_config = self.config.adapt
        did_reset = self._possible_reset()

        round_best = state.round_best
        count = 1 if self.config.step_mode == "single" else self.config.population
        batch = self.evaluator.evaluate(self.pv, state.steps_made, count)
        report = StepReport(
            step=state.steps_made + 1,
            batch_best=float(batch.f_m[batch.best_index]),
            batch_worst=float(batch.f_m[batch.worst_index]),
            feasible_count=int(np.count_nonzero(batch.f_p == 0.0)),
            full_rollback=did_reset,
        )
        self._update_best(batch, report)

        state.steps_made += 1
        x_best, x_worst = self._adaptation_pair(batch, round_best)
        self.pv = adapt(self.pv, x_best, x_worst, state.steps_made, adapt_config)
        if adapt_config.partial_each_step:
            q_k = partial_weight(adapt_config.w, state.steps_no_result)
            self.pv = partial_rollback(self.pv, q_k, literal=adapt_config.literal_rollback)

        if report.improved_modified or report.improved_feasible or \
                state.steps_made % self.config.trace_every == 0:
            self._record_trace()
        logger.debug(
            "步 %d: 本批 f^M ∈ [%.6g, %.6g], 可行 %d, 最优 f^M=%.6g",
            state.steps_made, report.batch_worst, report.batch_best,
            report.feasible_count, state.best_modified_value,
        )
        if self.step_listener is not None:
            self.step_listener(self, report)
        return report

    def _update_best(self, batch: BatchResult, report: StepReport) -> None:
        state = self.state
        best = batch.best
        if state.round_best is None or best.f_m > state.round_best.f_m:
            state.round_best = best
        if best.f_m > state.best_modified_value:
            state.best_modified = best
            state.steps_no_result = 0
            report.improved_modified = True
        else:
            state.steps_no_result += 1

        min_penalty = float(batch.f_p.min())
        if min_penalty < state.best_penalty:
            state.best_penalty = min_penalty

        feasible_index = batch.feasible_best_index()
        if feasible_index is None:
            if state.best_feasible is None:
                state.steps_without_feasible += 1
        else:
            candidate = batch.candidate(feasible_index)
            if state.best_feasible is None or candidate.f > state.best_feasible.f:
                state.best_feasible = candidate
                report.improved_feasible = True

        running = state.start_history[-1] if state.start_history else float('-inf')
        state.start_history.append(max(running, best.f_m))
        if report.improved_modified or report.improved_feasible:
            state.stagnant_steps = 0
        else:
            state.stagnant_steps += 1

    def _adaptation_pair(self, batch: BatchResult, round_best: Optional[Candidate]):
        """自适应用的 (最好, 最差) 样本

        单样本模式：样本优于本轮最优时靠近样本、远离旧的最优，否则靠近最优、远离样本。
        """
        if self.config.step_mode == "batch":
            return batch.X[batch.best_index], batch.X[batch.worst_index]
        sample = batch.X[0]
        if round_best is None:
            return sample, sample
        if batch.f_m[0] > round_best.f_m:
            return sample, round_best.x
        return round_best.x, sample

    def _possible_reset(self) -> bool:
        """步开始时的完全回滚检查，返回是否执行了回滚"""
        state = self.state
        config = self.config
        if (
            state.best_feasible is None
            and state.steps_without_feasible >= config.feasibility_retry_steps
            and state.feasibility_retries < config.feasibility_retry_limit
        ):
            new_p0 = self.pv.p0 * config.feasibility_retry_factor
            state.feasibility_retries += 1
            state.steps_without_feasible = 0
            logger.info(
                "🔄 %d 步内没有可行样本，初始概率降为 %.4g (第 %d 次)",
                config.feasibility_retry_steps, new_p0, state.feasibility_retries,
            )
            self.p0 = new_p0
            self.reset_probabilities(full_rollback(self.pv, new_p0))
            return True

        adapt_config = config.adapt
        if not adapt_config.full_on_stagnation:
            return False
        if adapt_config.trigger == "counter":
            if state.stagnant_steps <= adapt_config.window:
                return False
        elif not should_rollback(state.start_history, adapt_config.window, adapt_config.delta_f):
            return False

        replacement = self.stagnation_handler(self) if self.stagnation_handler else None
        if replacement is None:
            replacement = full_rollback(self.pv, adaptive=adapt_config.adaptive_p0)
            logger.debug("🔄 完全回滚: p0=%.4g", replacement.p0)
        self.reset_probabilities(replacement)
        return True

    def reset_probabilities(self, pv: ProbabilityVector) -> None:
        """替换概率向量并清空本轮起点以来的历史"""
        self.pv = pv
        self.state.start_history = []
        self.state.round_best = None
        self.state.stagnant_steps = 0
        self.state.full_rollbacks += 1

    # ------------------------------------------------------------------
    # 运行
    # ------------------------------------------------------------------
    def stop_reason(self) -> Optional[str]:
        """检查停止条件，返回原因（未满足时为 None）"""
        state = self.state
        config = self.config
        if self.stop_event.is_set():
            return "stop_event"
        if config.max_steps is not None and state.steps_made >= config.max_steps:
            return "max_steps"
        if config.max_time is not None and self.wall_elapsed() >= config.max_time:
            return "max_time"
        if config.no_improve_stop is not None and state.steps_no_result >= config.no_improve_stop:
            return "no_improve"
        if (
            config.target_value is not None
            and state.best_feasible is not None
            and state.best_feasible.f >= config.target_value
        ):
            return "target_value"
        if config.target_penalty is not None and state.best_penalty <= config.target_penalty:
            return "target_penalty"
        return None

    def run(self) -> str:
        """循环执行直到某个停止条件满足"""
        if self._started_at is None:
            self._started_at = time.monotonic()
        try:
            while True:
                reason = self.stop_reason()
                if reason is not None:
                    return reason
                self.step()
        finally:
            self.evaluator.close()

    def solve(self) -> Solution:
        """完整求解并返回结果"""
        logger.info(
            "🚀 开始求解 %s: D=%d, N=%d, 线程=%d, p0=%.4g, seed=%d",
            self.problem.name or '<unnamed>', self.problem.dim, self.config.population,
            self.config.workers, self.p0, self.config.seed,
        )
        reason = self.run()
        solution = self.solution(reason)
        if solution.feasible:
            logger.info("✅ 求解结束 (%s): f=%.6g, %d 步", reason, solution.f, self.state.steps_made)
        else:
            logger.warning(
                "⚠️ 未找到可行解 (%s): 最小罚函数 %.6g, %d 步",
                reason, solution.best_penalty, self.state.steps_made,
            )
        return solution

    def solution(self, stop_reason: str = "") -> Solution:
        """当前状态对应的结果（信号中断时也可以调用）"""
        state = self.state
        if not state.trace or state.trace[-1].steps != state.steps_made:
            self._record_trace()
        chosen = state.best_feasible or state.best_modified
        if chosen is None:
            raise RuntimeError("求解器还没有执行任何一步")
        feasible = state.best_feasible is not None
        if feasible and not check_feasible(self.problem, chosen.x):
            logger.error("❌ 可行解复核失败: %s", bits_to_str(chosen.x))
        return Solution(
            x=chosen.x,
            f=chosen.f,
            f_p=chosen.f_p,
            f_m=chosen.f_m,
            feasible=feasible,
            value=self.problem.report_value(chosen.f),
            best_penalty=0.0 if feasible else state.best_penalty,
            stop_reason=stop_reason,
            trace=list(state.trace),
            stats={
                'steps': state.steps_made,
                'clock': self.config.clock,
                'full_rollbacks': state.full_rollbacks,
                'feasibility_retries': state.feasibility_retries,
                'final_p0': self.pv.p0,
            },
            seed=self.config.seed,
            config=self.config.to_dict(),
            elapsed=self.wall_elapsed(),
        )

    def _record_trace(self) -> None:
        state = self.state
        state.trace.append(TracePoint(
            elapsed=self.elapsed(),
            best_feasible_value=state.best_feasible_value,
            best_modified_value=state.best_modified_value,
            steps=state.steps_made,
            best_penalty=state.best_penalty,
        ))


def solve(
    problem: Problem,
    config: SolverConfig,
    stop_event: Optional[threading.Event] = None,
) -> Solution:
    """按配置求解问题"""
    return MiverSolver(problem, config, stop_event=stop_event).solve()


# ----------------------------------------------------------------------
# 输出文件
# ----------------------------------------------------------------------
def write_solution(solution: Solution, path: Union[str, Path], extra: Optional[Dict[str, Any]] = None) -> None:
    """写出结果 JSON（包含生效配置和随机种子）"""
    data = solution.to_dict()
    if extra:
        data.update(extra)
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=True), encoding='utf-8')


def write_trace(trace: List[TracePoint], path: Union[str, Path]) -> None:
    """写出轨迹 CSV"""
    with open(path, 'w', newline='', encoding='utf-8') as handle:
        writer = csv.writer(handle)
        writer.writerow(TRACE_HEADER)
        for point in trace:
            writer.writerow([
                repr(point.elapsed),
                '' if point.best_feasible_value is None else repr(point.best_feasible_value),
                repr(point.best_modified_value),
                point.steps,
            ])
