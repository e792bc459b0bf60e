# -*- coding: utf-8 -*-
"""集群运行参数"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Any, Dict

from ..conf import get_setting
from ..errors import InvalidArgumentError

RESEED_MODES = ("reconstruct", "p_avg")
NODE_STEP_MODES = ("single", "batch")


@dataclass
class ClusterConfig:
    """多节点多起点搜索参数

    Attributes:
        c_max: 连续多少步没有局部改进后检查是否接管全局最优
        quiet_period: 协调节点在这么久没有收到改进报告后发出停止指令（秒）
        final_timeout: 停止后等待最终结果的时间（秒）
        compress: 长向量使用游程编码
        send_vector: 改进消息是否携带 X（关闭时接收方只能按 p_avg 重新播种）
        reseed: reconstruct 按收到的 X 重建 P；p_avg 只把 P 重置为 p_avg
        p0_spread: 各节点初始概率的相对差异，节点 i 取 p0·(1 + spread·(i/(n−1) − 0.5))
        step_mode: 节点每步生成的样本数，single 为一个，batch 为 population 个
        connect_timeout: TCP 启动时等待其他节点上线的时间（秒）
        failure_window: 发送持续失败超过这么久后节点转为独立搜索（秒）
    """

    c_max: int = 500
    quiet_period: float = 30.0
    final_timeout: float = 5.0
    compress: bool = False
    send_vector: bool = True
    reseed: str = "reconstruct"
    p0_spread: float = 0.0
    step_mode: str = "single"
    connect_timeout: float = 30.0
    failure_window: float = 60.0

    def __post_init__(self):
        if self.c_max < 1:
            raise InvalidArgumentError(f"c_max 至少为 1，得到 {self.c_max}")
        if self.quiet_period <= 0:
            raise InvalidArgumentError(f"quiet_period 必须大于 0，得到 {self.quiet_period}")
        if self.final_timeout < 0:
            raise InvalidArgumentError(f"final_timeout 不能为负，得到 {self.final_timeout}")
        if self.reseed not in RESEED_MODES:
            raise InvalidArgumentError(f"reseed 必须是 {RESEED_MODES} 之一，得到 {self.reseed}")
        if not 0 <= self.p0_spread < 2:
            raise InvalidArgumentError(f"p0_spread 必须在 [0, 2) 内，得到 {self.p0_spread}")
        if self.step_mode not in NODE_STEP_MODES:
            raise InvalidArgumentError(f"step_mode 必须是 {NODE_STEP_MODES} 之一，得到 {self.step_mode}")
        if self.connect_timeout < 0:
            raise InvalidArgumentError(f"connect_timeout 不能为负，得到 {self.connect_timeout}")
        if self.failure_window < 0:
            raise InvalidArgumentError(f"failure_window 不能为负，得到 {self.failure_window}")

    @classmethod
    def from_settings(cls, **overrides: Any) -> "ClusterConfig":
        values: Dict[str, Any] = {
            'c_max': get_setting('MIVER_CLUSTER_C_MAX'),
            'quiet_period': get_setting('MIVER_CLUSTER_QUIET_PERIOD'),
            'compress': get_setting('MIVER_CLUSTER_COMPRESS'),
            'step_mode': get_setting('MIVER_CLUSTER_STEP_MODE'),
            'connect_timeout': get_setting('MIVER_CLUSTER_CONNECT_TIMEOUT'),
            'failure_window': get_setting('MIVER_CLUSTER_FAILURE_WINDOW'),
        }
        values.update(overrides)
        return cls(**values)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ClusterConfig":
        known = {k: v for k, v in data.items() if k in cls.__dataclass_fields__}
        return cls(**known)
