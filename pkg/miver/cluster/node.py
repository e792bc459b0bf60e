# -*- coding: utf-8 -*-
"""
集群节点

每个节点运行自己的串行求解器：缺省每步生成一个样本并立即自适应，每步部分回滚；计数器 c
记录连续没有改进局部最优值（可行最优或修正目标最优）的步数，c > c_max 时触发完全回滚。
- 局部最优值超过已知全局最优时广播改进消息，并标记 x_opt；发送失败的消息留待重试，
  持续失败超过 failure_window 后转为独立搜索
- 每步非阻塞地读取收件箱，保持全局最优值最新
- 停滞时如果其他节点报告了更好的结果，按收到的 X 重建 P（或重置为 p_avg）后继续搜索；
  否则执行普通的完全回滚
- 收到停止指令后结束；x_opt 节点把最终结果发给协调节点
"""

from __future__ import annotations

import logging
import threading
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from ..adapt import full_rollback
from ..errors import TransportError
from ..model import Problem
from ..sampler import P_MIN, ProbabilityVector, clamp, initial_probability, mean_probability
from ..solver.config import SolverConfig
from ..solver.engine import MiverSolver, Solution, StepReport
from .config import ClusterConfig
from .messages import ImprovementMessage, MessageKind
from .transport import COORDINATOR_ID, Transport

logger = logging.getLogger(__name__)

RETRY_INTERVAL = 0.5


def reconstruct_probability(
    x_best: np.ndarray,
    p_avg: Optional[float] = None,
    variants: Optional[int] = None,
) -> ProbabilityVector:
    """按收到的最优向量重建概率向量

        p_i = (C + (1 − 2C)·x_i)·p_avg / (C + (1 − 2C)·p_avg)

    p_avg 缺省时用 x 中 1 的比例估计；C = 0.5/V，不知道 V 时取 p_avg。
    新的初始值 p0 取 p_avg。
    """
    x = np.asarray(x_best, dtype=np.float64).reshape(-1)
    if p_avg is None:
        p_avg = max(float(x.mean()), P_MIN) if x.size else P_MIN
    p_avg = float(clamp(p_avg))
    c_corr = 0.5 / variants if variants else p_avg
    c_corr = min(c_corr, 0.5)
    scale = 1.0 - 2.0 * c_corr
    p = (c_corr + scale * x) * p_avg / (c_corr + scale * p_avg)
    return ProbabilityVector(p=clamp(p), p0=p_avg)


def node_seed(seed: int, node_id: int) -> int:
    """节点 0 使用主种子，其余节点从主种子派生"""
    if node_id == 0:
        return seed
    state = np.random.SeedSequence(entropy=seed, spawn_key=(node_id,)).generate_state(1)
    return int(state[0])


def node_p0(p0: float, spread: float, node_id: int, n_nodes: int) -> float:
    """节点 i 的初始概率 p0·(1 + spread·(i/(n−1) − 0.5))"""
    if n_nodes < 2 or spread == 0:
        return p0
    return float(clamp(p0 * (1.0 + spread * (node_id / (n_nodes - 1) - 0.5))))


@dataclass
class NodeState:
    """节点的局部/全局最优记录"""
    node_id: int
    is_coordinator: bool
    c_max: int
    c: int = 0
    x_opt: bool = False
    x_opt_modified: bool = False
    local_feasible: Optional[float] = None
    local_feasible_x: Optional[np.ndarray] = None
    local_modified: float = float('-inf')
    local_modified_x: Optional[np.ndarray] = None
    global_feasible: Optional[ImprovementMessage] = None
    global_modified: Optional[ImprovementMessage] = None
    p_avg_global: Optional[float] = None
    received: int = 0
    received_since_stagnation: int = 0
    adoptions: int = 0
    isolated: bool = False
    stop_received: bool = False
    broadcasts: List[Tuple[str, float]] = field(default_factory=list)
    finals: List[ImprovementMessage] = field(default_factory=list)

    @property
    def global_feasible_value(self) -> float:
        return self.global_feasible.f if self.global_feasible is not None else float('-inf')

    @property
    def global_modified_value(self) -> float:
        return self.global_modified.f if self.global_modified is not None else float('-inf')

    def broadcast_values(self, kind: MessageKind) -> List[float]:
        return [value for k, value in self.broadcasts if k == kind.value]


@dataclass
class NodeResult:
    node_id: int
    solution: Solution
    state: NodeState
    stop_reason: str


class ClusterNode:
    """运行在传输层之上的一个搜索节点"""

    def __init__(
        self,
        problem: Problem,
        solver_config: SolverConfig,
        cluster_config: ClusterConfig,
        transport: Transport,
        n_nodes: int,
    ):
        self.problem = problem
        self.cluster_config = cluster_config
        self.transport = transport
        self.node_id = transport.node_id
        self.n_nodes = n_nodes
        self.stop_event = threading.Event()
        # 每步部分回滚；连续 c_max 步以上没有局部改进时完全回滚（或接管全局最优）
        adapt = replace(
            solver_config.adapt,
            rollback_mode="triggered",
            trigger="counter",
            window=cluster_config.c_max,
        )
        base_p0 = solver_config.p0 if solver_config.p0 is not None else initial_probability(problem)
        config = replace(
            solver_config,
            adapt=adapt,
            step_mode=cluster_config.step_mode,
            seed=node_seed(solver_config.seed, self.node_id),
            p0=node_p0(base_p0, cluster_config.p0_spread, self.node_id, n_nodes),
        )
        self.solver = MiverSolver(
            problem,
            config,
            stop_event=self.stop_event,
            stagnation_handler=self._on_stagnation,
            step_listener=self._on_step,
        )
        self.state = NodeState(
            node_id=self.node_id,
            is_coordinator=self.node_id == COORDINATOR_ID,
            c_max=cluster_config.c_max,
        )
        self.report_listener: Optional[Callable[[ImprovementMessage], None]] = None
        # (节点, 消息类型) → 待发送的最新消息
        self.pending_sends: Dict[Tuple[int, str], ImprovementMessage] = {}
        self._failing_since: Optional[float] = None
        self._next_retry = 0.0

    # ------------------------------------------------------------------
    # 消息
    # ------------------------------------------------------------------
    def drain_inbox(self) -> int:
        """处理收件箱中的全部消息，返回处理条数"""
        try:
            messages = self.transport.poll()
        except TransportError as exc:
            self._degrade(exc)
            return 0
        for message in messages:
            self.handle_message(message)
        return len(messages)

    def handle_message(self, message: ImprovementMessage) -> None:
        st = self.state
        if message.sender == self.node_id:
            return
        st.received += 1
        if message.kind is MessageKind.STOP:
            logger.info("🛑 节点 %d 收到停止指令", self.node_id)
            st.stop_received = True
            self.stop_event.set()
            return
        if message.kind is MessageKind.FINAL:
            st.finals.append(message)
            return

        st.received_since_stagnation += 1
        if message.p_avg is not None:
            st.p_avg_global = message.p_avg
        if message.kind is MessageKind.IMPROVE_FEASIBLE:
            current = st.global_feasible
            if current is None or message.beats(current.f, current.sender):
                st.global_feasible = message
            if st.x_opt and st.local_feasible is not None and message.beats(st.local_feasible, self.node_id):
                st.x_opt = False
        else:
            current = st.global_modified
            if current is None or message.beats(current.f, current.sender):
                st.global_modified = message
            if st.x_opt_modified and message.beats(st.local_modified, self.node_id):
                st.x_opt_modified = False
        logger.debug(
            "📨 节点 %d 收到 %s f=%.6g (来自 %d, 发送于 %.3f)",
            self.node_id, message.kind.value, message.f, message.sender, message.ts,
        )
        if self.report_listener is not None:
            self.report_listener(message)

    def _announce(self, kind: MessageKind, value: float, x: np.ndarray) -> None:
        message = ImprovementMessage(
            kind=kind,
            sender=self.node_id,
            f=value,
            x=x.copy() if self.cluster_config.send_vector else None,
            p_avg=mean_probability(self.solver.pv),
        )
        st = self.state
        if kind is MessageKind.IMPROVE_FEASIBLE:
            st.global_feasible = message
            st.x_opt = True
        else:
            st.global_modified = message
            st.x_opt_modified = True
        st.broadcasts.append((kind.value, value))
        logger.debug("📨 节点 %d 广播 %s f=%.6g", self.node_id, kind.value, value)
        if self.report_listener is not None:
            self.report_listener(message)
        if st.isolated:
            return
        for peer in self.transport.peers:
            self.pending_sends[(peer, kind.value)] = message
        self.flush_pending(force=True)

    def flush_pending(self, force: bool = False) -> None:
        """重试待发送的消息；持续失败超过 failure_window 秒后转为独立搜索"""
        if not self.pending_sends or self.state.isolated:
            return
        now = time.monotonic()
        if not force and now < self._next_retry:
            return
        errors = []
        for key, message in list(self.pending_sends.items()):
            try:
                self.transport.send(key[0], message)
            except TransportError as exc:
                errors.append(f"{key[0]}: {exc}")
                continue
            del self.pending_sends[key]
        if not errors:
            if self._failing_since is not None:
                logger.info("🔌 节点 %d 恢复发送", self.node_id)
            self._failing_since = None
            return
        if self._failing_since is None:
            self._failing_since = now
            logger.warning("⚠️ 节点 %d 发送失败，稍后重试: %s", self.node_id, "; ".join(errors))
        self._next_retry = now + RETRY_INTERVAL
        if now - self._failing_since >= self.cluster_config.failure_window:
            self._degrade(TransportError("; ".join(errors)))

    def _degrade(self, exc: Exception) -> None:
        if not self.state.isolated:
            logger.warning("⚠️ 节点 %d 传输失败，转为独立多起点搜索: %s", self.node_id, exc)
        self.state.isolated = True
        self.pending_sends.clear()

    # ------------------------------------------------------------------
    # 求解器钩子
    # ------------------------------------------------------------------
    def _on_step(self, solver: MiverSolver, report: StepReport) -> None:
        # 在自适应和部分回滚之后调用：先读消息，再比较本步的改进
        self.drain_inbox()
        self.flush_pending()
        st = self.state
        if report.improved_feasible:
            best = solver.state.best_feasible
            st.local_feasible, st.local_feasible_x = best.f, best.x
            if best.f > st.global_feasible_value:
                self._announce(MessageKind.IMPROVE_FEASIBLE, best.f, best.x)
        if report.improved_modified:
            best = solver.state.best_modified
            st.local_modified, st.local_modified_x = best.f_m, best.x
            if best.f_m > st.global_modified_value:
                self._announce(MessageKind.IMPROVE_MODIFIED, best.f_m, best.x)
        st.c = solver.state.stagnant_steps

    def _on_stagnation(self, solver: MiverSolver) -> Optional[ProbabilityVector]:
        """c > c_max 时：接管更好的全局结果，或者返回 None 执行普通完全回滚"""
        self.drain_inbox()
        st = self.state
        st.c = 0
        received = st.received_since_stagnation
        st.received_since_stagnation = 0

        source = self._better_global()
        if source is not None:
            st.adoptions += 1
            if source.x is not None and self.cluster_config.reseed == "reconstruct":
                pv = reconstruct_probability(source.x, source.p_avg, self.problem.variants)
            elif source.p_avg is not None:
                pv = full_rollback(solver.pv, new_p0=source.p_avg)
            else:
                pv = None
            logger.info(
                "🔄 节点 %d 接管节点 %d 的 %s f=%.6g",
                self.node_id, source.sender, source.kind.value, source.f,
            )
            return pv

        if received:
            self._rebroadcast()
        return None

    def _better_global(self) -> Optional[ImprovementMessage]:
        st = self.state
        feasible = st.global_feasible
        if feasible is not None and feasible.sender != self.node_id:
            if st.local_feasible is None or feasible.f > st.local_feasible:
                return feasible
        if st.local_feasible is None and (feasible is None or feasible.sender == self.node_id):
            modified = st.global_modified
            if modified is not None and modified.sender != self.node_id and modified.f > st.local_modified:
                return modified
        return None

    def _rebroadcast(self) -> None:
        """本地结果仍优于收到的全部结果但尚未广播过时补发"""
        st = self.state
        if st.local_feasible is not None and st.local_feasible > max(
            st.broadcast_values(MessageKind.IMPROVE_FEASIBLE), default=float('-inf')
        ) and st.local_feasible > st.global_feasible_value:
            self._announce(MessageKind.IMPROVE_FEASIBLE, st.local_feasible, st.local_feasible_x)
        if st.local_modified_x is not None and st.local_modified > max(
            st.broadcast_values(MessageKind.IMPROVE_MODIFIED), default=float('-inf')
        ) and st.local_modified > st.global_modified_value:
            self._announce(MessageKind.IMPROVE_MODIFIED, st.local_modified, st.local_modified_x)

    # ------------------------------------------------------------------
    # 运行
    # ------------------------------------------------------------------
    def final_message(self) -> Optional[ImprovementMessage]:
        """本节点的最终结果消息（没有任何样本时为 None）"""
        st = self.state
        if st.local_feasible_x is not None:
            value, x = st.local_feasible, st.local_feasible_x
        elif st.local_modified_x is not None:
            value, x = st.local_modified, st.local_modified_x
        else:
            return None
        return ImprovementMessage(
            kind=MessageKind.FINAL,
            sender=self.node_id,
            f=value,
            x=x.copy(),
            p_avg=mean_probability(self.solver.pv),
        )

    def run(self) -> NodeResult:
        """运行到停止指令或本节点的停止条件"""
        logger.info(
            "🚀 节点 %d/%d 启动: p0=%.4g, seed=%d",
            self.node_id, self.n_nodes, self.solver.p0, self.solver.config.seed,
        )
        # 至少执行一步，保证有结果可以上报
        self.solver.step()
        reason = self.solver.run()
        if self.state.stop_received:
            reason = "stop_message"
        solution = self.solver.solution(reason)
        st = self.state
        holds_best = st.x_opt or (st.local_feasible is None and st.x_opt_modified)
        if not st.is_coordinator and holds_best and not st.isolated:
            message = self.final_message()
            if message is not None:
                try:
                    self.transport.send(COORDINATOR_ID, message)
                except TransportError as exc:
                    logger.warning("⚠️ 节点 %d 最终结果发送失败: %s", self.node_id, exc)
        logger.info(
            "✅ 节点 %d 结束 (%s): %d 步, 广播 %d 次, 接管 %d 次",
            self.node_id, reason, self.solver.state.steps_made, len(st.broadcasts), st.adoptions,
        )
        return NodeResult(node_id=self.node_id, solution=solution, state=st, stop_reason=reason)
