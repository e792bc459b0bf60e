# -*- coding: utf-8 -*-
"""
协调节点（0 号节点）与集群运行入口

协调节点在运行自己的搜索的同时记录最近一次改进报告的时间。超过 quiet_period 没有新的报告时
向所有节点发出停止指令，然后收集 x_opt 节点的最终结果；等不到时退回到已经收到的最好报告
（报告中带有 f 和 X，不需要额外往返）。
"""

from __future__ import annotations

import logging
import threading
import time
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from ..errors import TransportError
from ..model import Problem, bits_to_str, evaluate_modified
from ..solver.config import SolverConfig
from .config import ClusterConfig
from .messages import ImprovementMessage, MessageKind
from .node import ClusterNode, NodeResult
from .tcp import Address, TcpTransport
from .transport import COORDINATOR_ID, QueueHub

logger = logging.getLogger(__name__)


@dataclass
class ClusterSolution:
    """集群的全局结果（x 已在协调节点重新评估）"""
    x: np.ndarray
    f: float
    f_p: float
    f_m: float
    feasible: bool
    value: float
    source_node: int
    stop_reason: str
    elapsed: float
    nodes: List[NodeResult] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'x': bits_to_str(self.x),
            'f': self.f,
            'f_p': self.f_p,
            'f_m': self.f_m,
            'feasible': self.feasible,
            'value': self.value,
            'source_node': self.source_node,
            'stop_reason': self.stop_reason,
            'elapsed_seconds': self.elapsed,
            'nodes': [
                {
                    'node_id': result.node_id,
                    'steps': result.solution.stats['steps'],
                    'stop_reason': result.stop_reason,
                    'broadcasts': [[kind, value] for kind, value in result.state.broadcasts],
                    'adoptions': result.state.adoptions,
                    'x_opt': result.state.x_opt,
                }
                for result in self.nodes
            ],
        }


class Coordinator:
    """0 号节点的停止计时与结果收集"""

    def __init__(
        self,
        node: ClusterNode,
        stop_event: Optional[threading.Event] = None,
    ):
        if node.node_id != COORDINATOR_ID:
            raise ValueError(f"协调节点必须是 {COORDINATOR_ID} 号节点")
        self.node = node
        self.config: ClusterConfig = node.cluster_config
        self.external_stop = stop_event
        self.stop_reason: Optional[str] = None
        self._lock = threading.Lock()
        self._last_report = time.monotonic()
        self._started_at = self._last_report
        self._thread: Optional[threading.Thread] = None
        node.report_listener = self.note_report

    def note_report(self, message: ImprovementMessage) -> None:
        if message.kind.is_improvement:
            with self._lock:
                self._last_report = time.monotonic()

    def idle_seconds(self) -> float:
        with self._lock:
            return time.monotonic() - self._last_report

    def start(self) -> None:
        with self._lock:
            self._started_at = self._last_report = time.monotonic()
        self._thread = threading.Thread(target=self._watch, name="MiverCoordinator", daemon=True)
        self._thread.start()

    def _watch(self) -> None:
        interval = min(0.05, self.config.quiet_period / 4)
        while not self.node.stop_event.wait(interval):
            if self.external_stop is not None and self.external_stop.is_set():
                self.stop_reason = "stop_event"
                self.node.stop_event.set()
                return
            target = self.node.solver.config.target_value
            if target is not None and self.node.state.global_feasible_value >= target:
                self.stop_reason = "target_value"
                self.node.stop_event.set()
                return
            if self.idle_seconds() >= self.config.quiet_period:
                self.stop_reason = "quiet_period"
                logger.info("🛑 %.1f 秒没有新的改进报告，停止集群", self.config.quiet_period)
                self.node.stop_event.set()
                return

    def run(self) -> ClusterSolution:
        """运行协调节点自己的搜索，停止后收集全局结果"""
        self.start()
        own = self.node.run()
        self.node.stop_event.set()
        if self._thread is not None:
            self._thread.join(timeout=1.0)
        if self.stop_reason is None:
            self.stop_reason = own.stop_reason

        try:
            self.node.transport.broadcast(ImprovementMessage(kind=MessageKind.STOP, sender=COORDINATOR_ID))
        except TransportError as exc:
            logger.warning("⚠️ 停止指令未能送达全部节点: %s", exc)

        self._collect_finals()
        solution = self._select(own)
        solution.elapsed = time.monotonic() - self._started_at
        logger.info(
            "✅ 集群结束 (%s): f=%.6g, 可行=%s, 来自节点 %d",
            solution.stop_reason, solution.f, solution.feasible, solution.source_node,
        )
        return solution

    def _expected_sender(self) -> Optional[int]:
        st = self.node.state
        best = st.global_feasible or st.global_modified
        return None if best is None else best.sender

    def _collect_finals(self) -> None:
        st = self.node.state
        expected = self._expected_sender()
        if expected is None or expected == COORDINATOR_ID:
            return
        deadline = time.monotonic() + self.config.final_timeout
        while not any(m.sender == expected for m in st.finals):
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                logger.warning("⚠️ 节点 %d 没有上报最终结果，使用已收到的最好报告", expected)
                return
            message = self.node.transport.receive(timeout=remaining)
            if message is not None:
                self.node.handle_message(message)
            expected = self._expected_sender()

    def _select(self, own: NodeResult) -> ClusterSolution:
        st = self.node.state
        problem = self.node.problem
        c_penalty = self.node.solver.c_penalty
        reports = [(COORDINATOR_ID, own.solution.x)]
        for message in st.finals + [st.global_feasible, st.global_modified]:
            if message is not None and message.x is not None and message.x.size == problem.dim:
                reports.append((message.sender, message.x))

        best = None
        for sender, x in reports:
            candidate = evaluate_modified(problem, x, c_penalty)
            key = (candidate.feasible, candidate.f if candidate.feasible else candidate.f_m, -sender)
            if best is None or key > best[0]:
                best = (key, sender, candidate)
        _, sender, candidate = best
        return ClusterSolution(
            x=candidate.x,
            f=candidate.f,
            f_p=candidate.f_p,
            f_m=candidate.f_m,
            feasible=candidate.feasible,
            value=problem.report_value(candidate.f),
            source_node=sender,
            stop_reason=self.stop_reason or "",
            elapsed=0.0,
            nodes=[own],
        )


def run_in_process(
    problem: Problem,
    solver_config: SolverConfig,
    cluster_config: ClusterConfig,
    n_nodes: int,
    stop_event: Optional[threading.Event] = None,
) -> ClusterSolution:
    """在一个进程内用队列传输运行 n_nodes 个节点（0 号节点协调）"""
    hub = QueueHub(n_nodes)
    nodes = [
        ClusterNode(problem, solver_config, cluster_config, hub.transport(i), n_nodes)
        for i in range(n_nodes)
    ]
    coordinator = Coordinator(nodes[0], stop_event=stop_event)
    results: List[Optional[NodeResult]] = [None] * n_nodes

    def worker(index: int) -> None:
        try:
            results[index] = nodes[index].run()
        except Exception as exc:
            logger.error("❌ 节点 %d 异常退出: %s", index, exc, exc_info=True)

    threads = [
        threading.Thread(target=worker, args=(i,), name=f"MiverNode[{i}]", daemon=True)
        for i in range(1, n_nodes)
    ]
    logger.info("🚀 进程内集群启动: %d 个节点", n_nodes)
    for thread in threads:
        thread.start()
    try:
        solution = coordinator.run()
    finally:
        for node in nodes[1:]:
            node.stop_event.set()
        for thread in threads:
            thread.join()
    solution.nodes.extend(result for result in results[1:] if result is not None)
    return solution


def run_tcp_node(
    problem: Problem,
    solver_config: SolverConfig,
    cluster_config: ClusterConfig,
    node_id: int,
    addresses: Dict[int, Address],
    bind: Optional[Address] = None,
    stop_event: Optional[threading.Event] = None,
):
    """运行一个 TCP 节点；0 号节点返回 ClusterSolution，其余节点返回 NodeResult"""
    if node_id not in addresses:
        raise ValueError(f"节点 {node_id} 不在地址列表中")
    transport = TcpTransport(
        node_id,
        bind or addresses[node_id],
        addresses,
        compress=cluster_config.compress,
    ).start()
    try:
        if cluster_config.connect_timeout > 0:
            transport.wait_for_peers(cluster_config.connect_timeout)
        node = ClusterNode(problem, solver_config, cluster_config, transport, len(addresses))
        if node_id == COORDINATOR_ID:
            return Coordinator(node, stop_event=stop_event).run()
        if stop_event is not None:
            _link_events(stop_event, node.stop_event)
        return node.run()
    finally:
        transport.close()


def _link_events(source: threading.Event, target: threading.Event) -> None:
    """source 被设置时同时设置 target"""

    def follow() -> None:
        while not target.is_set():
            if source.wait(0.1):
                target.set()
                return

    threading.Thread(target=follow, name="MiverStopLink", daemon=True).start()


__all__ = ['ClusterSolution', 'Coordinator', 'run_in_process', 'run_tcp_node']
