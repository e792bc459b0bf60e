# -*- coding: utf-8 -*-
"""
概率向量的自适应与回滚

- 加法自适应：p_j ± d_k
- 乘法自适应（五分支规则）：p_j 向 0 或 1 按系数 d 几何逼近，永远不会取到 0 或 1
- 部分回滚：p_j ← (p_j + q_k·p0) / (1 + q_k)，q_k = w / s_m
- 完全回滚：P 重置为 p0（可选用当前 P 的均值作为新的 p0）
- 回滚触发：最近 m 步内修正目标的最大值增长不足 Δ_f，或连续超过 m 步没有改进局部最优值

所有函数都返回新的 ProbabilityVector，不修改输入。
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass
from typing import Any, Dict, Optional, Sequence

import numpy as np

from .errors import InvalidArgumentError
from .sampler import P_MIN, ProbabilityVector, clamp

logger = logging.getLogger(__name__)

STRATEGIES = ("additive", "multiplicative")
ROLLBACK_MODES = ("none", "full", "partial_each_step", "triggered")
ADDITIVE_SCHEDULES = ("harmonic", "constant")
# window: 最近 m 步的 f^M 增长不足 Δ_f；counter: 连续超过 m 步没有改进局部最优值
TRIGGERS = ("window", "counter")


@dataclass
class AdaptConfig:
    """自适应与回滚参数"""

    strategy: str = "multiplicative"
    d: float = 1.5
    additive_step: float = 0.1
    additive_schedule: str = "harmonic"
    w: float = 0.02
    delta_f: float = 0.0
    window: int = 50
    rollback_mode: str = "triggered"
    trigger: str = "window"
    adaptive_p0: bool = False
    literal_rollback: bool = False

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise InvalidArgumentError(f"strategy 必须是 {STRATEGIES} 之一，得到 {self.strategy}")
        if self.rollback_mode not in ROLLBACK_MODES:
            raise InvalidArgumentError(
                f"rollback_mode 必须是 {ROLLBACK_MODES} 之一，得到 {self.rollback_mode}"
            )
        if self.trigger not in TRIGGERS:
            raise InvalidArgumentError(f"trigger 必须是 {TRIGGERS} 之一，得到 {self.trigger}")
        if self.additive_schedule not in ADDITIVE_SCHEDULES:
            raise InvalidArgumentError(
                f"additive_schedule 必须是 {ADDITIVE_SCHEDULES} 之一，得到 {self.additive_schedule}"
            )
        if self.strategy == "multiplicative" and self.d <= 1:
            raise InvalidArgumentError(f"乘法自适应系数 d 必须大于 1，得到 {self.d}")
        if self.additive_step <= 0:
            raise InvalidArgumentError(f"additive_step 必须大于 0，得到 {self.additive_step}")
        if self.w < 0:
            raise InvalidArgumentError(f"w 不能为负，得到 {self.w}")
        if self.delta_f < 0:
            raise InvalidArgumentError(f"delta_f 不能为负，得到 {self.delta_f}")
        if self.window < 1:
            raise InvalidArgumentError(f"window 必须至少为 1，得到 {self.window}")

    @property
    def partial_each_step(self) -> bool:
        return self.rollback_mode in ("partial_each_step", "triggered")

    @property
    def full_on_stagnation(self) -> bool:
        return self.rollback_mode in ("full", "triggered")

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "AdaptConfig":
        known = {k: v for k, v in data.items() if k in cls.__dataclass_fields__}
        return cls(**known)


def _directions(x_best: np.ndarray, x_worst: np.ndarray, dim: int):
    best = np.asarray(x_best).reshape(-1)
    worst = np.asarray(x_worst).reshape(-1)
    if best.size != dim or worst.size != dim:
        raise InvalidArgumentError(f"样本长度应为 {dim}")
    best = best.astype(bool)
    worst = worst.astype(bool)
    return best & ~worst, ~best & worst


def additive_step_size(k: int, step: float = 0.1, schedule: str = "harmonic") -> float:
    """第 k 步（从 1 开始）的加法步长 d_k"""
    if schedule == "constant":
        return step
    return step / max(k, 1)


def adapt_additive(
    pv: ProbabilityVector,
    x_best: np.ndarray,
    x_worst: np.ndarray,
    k: int,
    step: float = 0.1,
    schedule: str = "harmonic",
) -> ProbabilityVector:
    """加法自适应：最好样本为 1 且最差样本为 0 的分量加 d_k，反之减 d_k"""
    up, down = _directions(x_best, x_worst, pv.dim)
    d_k = additive_step_size(k, step, schedule)
    p = pv.p.copy()
    p[up] += d_k
    p[down] -= d_k
    return ProbabilityVector(p=clamp(p), p0=pv.p0)


def adapt_multiplicative(
    pv: ProbabilityVector,
    x_best: np.ndarray,
    x_worst: np.ndarray,
    d: float,
) -> ProbabilityVector:
    """乘法自适应

    上移：p < 0.5 时 p·d，否则 1 − (1−p)/d
    下移：p < 0.5 时 p/d，否则 1 − (1−p)·d（非正时取 P_MIN）
    其余分量不变。

    Raises:
        InvalidArgumentError: d ≤ 1
    """
    if d <= 1:
        raise InvalidArgumentError(f"乘法自适应系数 d 必须大于 1，得到 {d}")
    up, down = _directions(x_best, x_worst, pv.dim)
    p = pv.p
    low = p < 0.5
    raised = np.where(low, p * d, 1.0 - (1.0 - p) / d)
    lowered = np.where(low, p / d, 1.0 - (1.0 - p) * d)
    lowered = np.where(lowered > 0.0, lowered, P_MIN)
    new_p = np.where(up, raised, np.where(down, lowered, p))
    return ProbabilityVector(p=clamp(new_p), p0=pv.p0)


def adapt(pv: ProbabilityVector, x_best: np.ndarray, x_worst: np.ndarray,
          k: int, config: AdaptConfig) -> ProbabilityVector:
    """按配置的策略执行一次自适应"""
    if config.strategy == "additive":
        return adapt_additive(pv, x_best, x_worst, k, config.additive_step, config.additive_schedule)
    return adapt_multiplicative(pv, x_best, x_worst, config.d)


def partial_weight(w: float, steps_no_result: int) -> float:
    """部分回滚权重 q_k = w / s_m（s_m 至少为 1）"""
    return w / max(steps_no_result, 1)


def partial_rollback(pv: ProbabilityVector, q_k: float, literal: bool = False) -> ProbabilityVector:
    """部分回滚：把分量向 p0 收缩

    literal=True 时只处理 p_j < p0 的分量。
    """
    if q_k < 0:
        raise InvalidArgumentError(f"q_k 不能为负，得到 {q_k}")
    if q_k == 0:
        return pv.copy()
    pulled = (pv.p + q_k * pv.p0) / (1.0 + q_k)
    if literal:
        pulled = np.where(pv.p < pv.p0, pulled, pv.p)
    return ProbabilityVector(p=clamp(pulled), p0=pv.p0)


def full_rollback(
    pv: ProbabilityVector,
    new_p0: Optional[float] = None,
    adaptive: bool = False,
) -> ProbabilityVector:
    """完全回滚：所有分量置为同一个初始值

    adaptive=True 时新的初始值取回滚前 P 的均值；否则取 new_p0（缺省为原 p0）。
    """
    if adaptive:
        value = float(pv.p.mean())
    else:
        value = pv.p0 if new_p0 is None else float(new_p0)
    if not (0.0 < value < 1.0):
        raise InvalidArgumentError(f"新的初始概率必须在 (0, 1) 内，得到 {value}")
    return ProbabilityVector.uniform(pv.dim, value)


def should_rollback(history: Sequence[float], m: int, delta_f: float) -> bool:
    """回滚触发判断

    history 是自上次完全回滚以来每一步的修正目标最大值。最近 m 步的增长
    f_k − f_{k−m} 小于 Δ_f 时返回 True；Δ_f = 0 时表示完全没有增长。
    不足 m 步时返回 False。
    """
    if m < 1:
        raise InvalidArgumentError(f"窗口 m 必须至少为 1，得到 {m}")
    if len(history) <= m:
        return False
    gain = history[-1] - history[-1 - m]
    if delta_f > 0:
        return gain < delta_f
    return gain <= 0
