# -*- coding: utf-8 -*-
"""
消息传输抽象

传输层只需要提供可靠的点对点发送和广播（对每一对发送/接收方保持顺序），不假设全局顺序。
内置两种实现：进程内队列（测试和单机多节点运行）和 TCP（见 tcp.py）。
"""

from __future__ import annotations

import logging
import queue
from abc import ABC, abstractmethod
from typing import Dict, List, Optional

from ..errors import TransportError
from .messages import ImprovementMessage

logger = logging.getLogger(__name__)

COORDINATOR_ID = 0


class Transport(ABC):
    """节点的消息收发接口

    接收侧只有一个消费者（节点主循环），接收线程把消息放进收件箱。
    """

    def __init__(self, node_id: int):
        self.node_id = node_id

    @property
    @abstractmethod
    def peers(self) -> List[int]:
        """除自己以外的节点编号"""
        pass

    @abstractmethod
    def send(self, to: int, message: ImprovementMessage) -> None:
        """发送给单个节点

        Raises:
            TransportError: 发送失败
        """
        pass

    def broadcast(self, message: ImprovementMessage) -> None:
        """发送给所有其他节点；任一发送失败时在全部尝试后抛出 TransportError"""
        failures = []
        for peer in self.peers:
            try:
                self.send(peer, message)
            except TransportError as exc:
                failures.append(f"{peer}: {exc}")
        if failures:
            raise TransportError("; ".join(failures))

    @abstractmethod
    def receive(self, timeout: Optional[float] = None) -> Optional[ImprovementMessage]:
        """取出一条消息；timeout=None 表示不等待，超时返回 None"""
        pass

    def poll(self) -> List[ImprovementMessage]:
        """非阻塞地取出收件箱中的全部消息"""
        messages = []
        while True:
            message = self.receive()
            if message is None:
                return messages
            messages.append(message)

    def close(self) -> None:
        return None


class QueueHub:
    """进程内消息中心：每个节点一个收件箱"""

    def __init__(self, n_nodes: int):
        if n_nodes < 1:
            raise ValueError(f"节点数至少为 1，得到 {n_nodes}")
        self.n_nodes = n_nodes
        self._inboxes: Dict[int, "queue.Queue[ImprovementMessage]"] = {
            node_id: queue.Queue() for node_id in range(n_nodes)
        }

    def transport(self, node_id: int) -> "QueueTransport":
        if node_id not in self._inboxes:
            raise ValueError(f"节点 {node_id} 不存在")
        return QueueTransport(self, node_id)

    def deliver(self, to: int, message: ImprovementMessage) -> None:
        inbox = self._inboxes.get(to)
        if inbox is None:
            raise TransportError(f"节点 {to} 不存在")
        inbox.put(message)

    def inbox(self, node_id: int) -> "queue.Queue[ImprovementMessage]":
        return self._inboxes[node_id]


class QueueTransport(Transport):
    """基于 queue.Queue 的进程内传输"""

    def __init__(self, hub: QueueHub, node_id: int):
        super().__init__(node_id)
        self.hub = hub

    @property
    def peers(self) -> List[int]:
        return [n for n in range(self.hub.n_nodes) if n != self.node_id]

    def send(self, to: int, message: ImprovementMessage) -> None:
        self.hub.deliver(to, message)

    def receive(self, timeout: Optional[float] = None) -> Optional[ImprovementMessage]:
        inbox = self.hub.inbox(self.node_id)
        try:
            if timeout is None:
                return inbox.get_nowait()
            return inbox.get(timeout=timeout)
        except queue.Empty:
            return None
