# -*- coding: utf-8 -*-
"""
TCP 传输

每个节点监听一个地址；对其他节点的出站连接在第一次发送时建立并复用（连接失败不缓存，下次
发送重新连接）。启动时可以用 wait_for_peers 等待其他节点上线。接收线程把读到的帧放进收件箱，
由节点主循环消费。
"""

from __future__ import annotations

import logging
import queue
import socket
import threading
import time
from typing import Dict, List, Optional, Sequence, Tuple

from ..errors import TransportError
from .messages import ImprovementMessage, read_message, write_message
from .transport import Transport

logger = logging.getLogger(__name__)

Address = Tuple[str, int]


def parse_address(text: str) -> Address:
    """'host:port' → (host, port)"""
    host, sep, port = text.strip().rpartition(':')
    if not sep or not host or ',' in host or ':' in host:
        raise ValueError(f"地址格式应为 host:port，得到 {text!r}")
    try:
        return host, int(port)
    except ValueError:
        raise ValueError(f"端口必须是整数，得到 {text!r}")


def parse_peers(items: Sequence[str]) -> Dict[int, Address]:
    """节点地址列表（下标即节点编号）→ {node_id: address}

    每一项可以是单个 host:port，也可以是逗号分隔的多个地址。
    """
    texts = [part.strip() for item in items for part in item.split(',')]
    if any(not text for text in texts):
        raise ValueError(f"地址列表中有空项: {list(items)!r}")
    return {node_id: parse_address(text) for node_id, text in enumerate(texts)}


class TcpTransport(Transport):
    """长度前缀 JSON 帧的 TCP 传输"""

    def __init__(
        self,
        node_id: int,
        bind: Address,
        addresses: Dict[int, Address],
        compress: bool = False,
        connect_timeout: float = 5.0,
    ):
        super().__init__(node_id)
        self.bind = bind
        self.addresses = dict(addresses)
        self.compress = compress
        self.connect_timeout = connect_timeout
        self._inbox: "queue.Queue[ImprovementMessage]" = queue.Queue()
        self._outbound: Dict[int, socket.socket] = {}
        self._send_locks: Dict[int, threading.Lock] = {}
        self._lock = threading.Lock()
        self._stop_event = threading.Event()
        self._listener: Optional[socket.socket] = None
        self._accept_thread: Optional[threading.Thread] = None
        self._readers: List[threading.Thread] = []

    @property
    def peers(self) -> List[int]:
        return sorted(n for n in self.addresses if n != self.node_id)

    def start(self) -> "TcpTransport":
        """开始监听"""
        listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        try:
            listener.bind(self.bind)
            listener.listen()
        except OSError as exc:
            listener.close()
            raise TransportError(f"无法监听 {self.bind[0]}:{self.bind[1]}: {exc}") from exc
        listener.settimeout(0.5)
        self._listener = listener
        self._accept_thread = threading.Thread(
            target=self._accept_loop,
            name=f"MiverTcpAccept[{self.node_id}]",
            daemon=True,
        )
        self._accept_thread.start()
        logger.info("🔌 节点 %d 监听 %s:%d", self.node_id, *self.bind)
        return self

    @property
    def address(self) -> Address:
        """实际监听地址（绑定端口 0 时由系统分配）"""
        if self._listener is None:
            return self.bind
        return self._listener.getsockname()[:2]

    def _accept_loop(self) -> None:
        while not self._stop_event.is_set():
            try:
                conn, remote = self._listener.accept()
            except socket.timeout:
                continue
            except OSError:
                break
            conn.settimeout(None)
            reader = threading.Thread(
                target=self._read_loop,
                args=(conn, remote),
                name=f"MiverTcpReader[{self.node_id}<-{remote[0]}:{remote[1]}]",
                daemon=True,
            )
            self._readers.append(reader)
            reader.start()
        logger.debug("节点 %d 停止接受连接", self.node_id)

    def _read_loop(self, conn: socket.socket, remote) -> None:
        with conn:
            while not self._stop_event.is_set():
                try:
                    message = read_message(conn)
                except TransportError as exc:
                    logger.warning("⚠️ 节点 %d 收到无效帧 (%s): %s", self.node_id, remote, exc)
                    return
                except OSError:
                    return
                if message is None:
                    return
                self._inbox.put(message)

    def _connection(self, to: int) -> socket.socket:
        with self._lock:
            sock = self._outbound.get(to)
            if sock is not None:
                return sock
            address = self.addresses.get(to)
            if address is None:
                raise TransportError(f"未知节点 {to}")
            try:
                sock = socket.create_connection(address, timeout=self.connect_timeout)
            except OSError as exc:
                raise TransportError(f"无法连接节点 {to} ({address[0]}:{address[1]}): {exc}") from exc
            sock.settimeout(None)
            self._outbound[to] = sock
            self._send_locks.setdefault(to, threading.Lock())
            return sock

    def wait_for_peers(self, timeout: float, interval: float = 0.2) -> List[int]:
        """连接全部其他节点，最多等待 timeout 秒，返回仍然连不上的节点编号"""
        deadline = time.monotonic() + timeout
        missing = self.peers
        while True:
            still_missing = []
            for peer in missing:
                try:
                    self._connection(peer)
                except TransportError:
                    still_missing.append(peer)
            missing = still_missing
            if not missing or time.monotonic() >= deadline or self._stop_event.is_set():
                break
            time.sleep(interval)
        if missing:
            logger.warning("⚠️ 节点 %d 等待 %.1f 秒后仍连不上节点 %s", self.node_id, timeout, missing)
        else:
            logger.info("🔌 节点 %d 已连接全部 %d 个节点", self.node_id, len(self.peers))
        return missing

    def send(self, to: int, message: ImprovementMessage) -> None:
        sock = self._connection(to)
        try:
            with self._send_locks[to]:
                write_message(sock, message, self.compress)
        except OSError as exc:
            with self._lock:
                self._outbound.pop(to, None)
            sock.close()
            raise TransportError(f"向节点 {to} 发送失败: {exc}") from exc

    def receive(self, timeout: Optional[float] = None) -> Optional[ImprovementMessage]:
        try:
            if timeout is None:
                return self._inbox.get_nowait()
            return self._inbox.get(timeout=timeout)
        except queue.Empty:
            return None

    def close(self) -> None:
        self._stop_event.set()
        if self._listener is not None:
            self._listener.close()
        with self._lock:
            outbound = list(self._outbound.values())
            self._outbound.clear()
        for sock in outbound:
            try:
                sock.close()
            except OSError:
                pass
        if self._accept_thread is not None and self._accept_thread.is_alive():
            self._accept_thread.join(timeout=2.0)
        logger.info("🛑 节点 %d 传输已关闭", self.node_id)
