# -*- coding: utf-8 -*-
"""
集群消息格式

线上格式：4 字节大端长度前缀 + UTF-8 JSON
    {"kind": "improve_feasible"|"improve_modified"|"stop"|"final",
     "sender": int, "f": number, "x": "0101…", "p_avg": number, "ts": number}

向量按 0/1 字符串编码；开启压缩且 D 超过 RLE_MIN_DIM 时使用 "rle:<首位>:<段长>,<段长>,…"。
ts 是发送方的 Unix 时间，只写进日志；协调节点的停止计时以自己收到报告的时刻为准。
"""

from __future__ import annotations

import json
import socket
import struct
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Optional

import numpy as np

from ..errors import TransportError
from ..model import bits_to_str, str_to_bits

FRAME = struct.Struct('!I')
MAX_FRAME_SIZE = 2 ** 31
RLE_PREFIX = "rle:"
RLE_MIN_DIM = 10_000


class MessageKind(Enum):
    IMPROVE_FEASIBLE = "improve_feasible"
    IMPROVE_MODIFIED = "improve_modified"
    STOP = "stop"
    FINAL = "final"

    @property
    def is_improvement(self) -> bool:
        return self in (MessageKind.IMPROVE_FEASIBLE, MessageKind.IMPROVE_MODIFIED)


@dataclass
class ImprovementMessage:
    """节点间消息：改进报告、停止指令或最终结果"""

    kind: MessageKind
    sender: int
    f: float = float('-inf')
    x: Optional[np.ndarray] = None
    p_avg: Optional[float] = None
    ts: float = field(default_factory=time.time)

    def __post_init__(self):
        self.kind = MessageKind(self.kind)
        if self.p_avg is not None and not 0.0 < self.p_avg < 1.0:
            raise ValueError(f"p_avg 必须在 (0, 1) 内，得到 {self.p_avg}")

    def beats(self, value: float, node_id: int) -> bool:
        """本消息是否优于 (value, node_id)：值大者优先，同值时节点号小者优先"""
        return self.f > value or (self.f == value and self.sender < node_id)

    def to_dict(self, compress: bool = False) -> Dict[str, Any]:
        data: Dict[str, Any] = {'kind': self.kind.value, 'sender': self.sender, 'ts': self.ts}
        if self.kind is not MessageKind.STOP:
            data['f'] = self.f
        if self.x is not None:
            data['x'] = encode_bits(self.x, compress)
        if self.p_avg is not None:
            data['p_avg'] = self.p_avg
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ImprovementMessage":
        try:
            x = decode_bits(data['x']) if data.get('x') is not None else None
            return cls(
                kind=MessageKind(data['kind']),
                sender=int(data['sender']),
                f=float(data.get('f', float('-inf'))),
                x=x,
                p_avg=None if data.get('p_avg') is None else float(data['p_avg']),
                ts=float(data.get('ts', 0.0)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise TransportError(f"无法解析消息 {data!r}: {exc}") from exc


def encode_bits(x: np.ndarray, compress: bool = False) -> str:
    """0/1 向量 → 字符串（长向量可选游程编码）"""
    bits = np.asarray(x, dtype=np.uint8).reshape(-1)
    if not compress or bits.size <= RLE_MIN_DIM:
        return bits_to_str(bits)
    boundaries = np.flatnonzero(np.diff(bits)) + 1
    edges = np.concatenate(([0], boundaries, [bits.size]))
    runs = np.diff(edges)
    return f"{RLE_PREFIX}{int(bits[0])}:{','.join(str(int(r)) for r in runs)}"


def decode_bits(text: str) -> np.ndarray:
    """encode_bits 的逆变换"""
    if not text.startswith(RLE_PREFIX):
        return str_to_bits(text)
    try:
        first, runs_text = text[len(RLE_PREFIX):].split(':', 1)
        runs = [int(r) for r in runs_text.split(',')] if runs_text else []
        bit = int(first)
    except ValueError as exc:
        raise TransportError(f"游程编码格式错误: {exc}") from exc
    if bit not in (0, 1) or any(r <= 0 for r in runs):
        raise TransportError("游程编码格式错误")
    values = np.arange(len(runs)) % 2
    if bit:
        values = 1 - values
    return np.repeat(values, runs).astype(np.uint8)


def encode_message(message: ImprovementMessage, compress: bool = False) -> bytes:
    """消息 → 带长度前缀的帧"""
    payload = json.dumps(message.to_dict(compress), separators=(',', ':')).encode('utf-8')
    return FRAME.pack(len(payload)) + payload


def decode_payload(payload: bytes) -> ImprovementMessage:
    try:
        data = json.loads(payload.decode('utf-8'))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise TransportError(f"消息不是合法 JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise TransportError("消息必须是 JSON 对象")
    return ImprovementMessage.from_dict(data)


def recvall(sock: socket.socket, length: int) -> bytes:
    """读满 length 字节；连接关闭时返回已读到的部分"""
    data = b''
    while len(data) < length:
        more = sock.recv(length - len(data))
        if not more:
            break
        data += more
    return data


def read_message(sock: socket.socket) -> Optional[ImprovementMessage]:
    """从套接字读取一帧；对端正常关闭时返回 None"""
    header = recvall(sock, FRAME.size)
    if not header:
        return None
    if len(header) < FRAME.size:
        raise TransportError("帧头不完整")
    (length,) = FRAME.unpack(header)
    if length > MAX_FRAME_SIZE:
        raise TransportError(f"帧长度 {length} 超出上限")
    payload = recvall(sock, length)
    if len(payload) < length:
        raise TransportError("帧内容不完整")
    return decode_payload(payload)


def write_message(sock: socket.socket, message: ImprovementMessage, compress: bool = False) -> None:
    sock.sendall(encode_message(message, compress))
