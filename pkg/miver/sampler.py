# -*- coding: utf-8 -*-
"""
概率向量与随机样本生成

P = (p_1, …, p_D)，p_j 是 x_j = 1 的概率。所有分量始终保持在 [P_MIN, 1 − P_MIN] 内。
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InvalidArgumentError
from .model import Problem

logger = logging.getLogger(__name__)

P_MIN = 1e-6
P_MAX = 1.0 - P_MIN

# 没有约束时的默认初始概率
UNCONSTRAINED_P0 = 0.5


def clamp(values):
    """把概率截断到 [P_MIN, 1 − P_MIN]"""
    return np.clip(values, P_MIN, P_MAX)


@dataclass
class ProbabilityVector:
    """概率向量 P 及其初始值 p0"""

    p: np.ndarray
    p0: float

    def __post_init__(self) -> None:
        self.p = np.asarray(self.p, dtype=np.float64)
        if self.p.ndim != 1 or self.p.size == 0:
            raise InvalidArgumentError("概率向量必须是非空一维数组")
        if not (0.0 < self.p0 < 1.0):
            raise InvalidArgumentError(f"p0 必须在 (0, 1) 内，得到 {self.p0}")
        if np.any(self.p <= 0.0) or np.any(self.p >= 1.0):
            raise InvalidArgumentError("概率分量必须严格位于 (0, 1) 内")

    @classmethod
    def uniform(cls, dim: int, p0: float) -> "ProbabilityVector":
        value = float(clamp(p0))
        return cls(p=np.full(dim, value), p0=value)

    @property
    def dim(self) -> int:
        return int(self.p.size)

    def copy(self) -> "ProbabilityVector":
        return ProbabilityVector(p=self.p.copy(), p0=self.p0)


def initial_probability(problem: Problem) -> float:
    """初始概率 p0

    每个约束行给出 B_k / Σ_i b_ik（期望左部恰好等于右部），取最紧的一行；存在变体组时不超过
    1/(V+1)。系数和非正的行跳过。
    """
    candidates = []
    for k, (row, bound) in enumerate(problem.constraints):
        total = float(row.sum())
        if total <= 0:
            logger.debug("约束 %d 的系数和为 %.3g，跳过", k, total)
            continue
        candidates.append(bound / total)
    variants = problem.variants
    if variants is not None:
        candidates.append(1.0 / (variants + 1))
    if not candidates:
        return UNCONSTRAINED_P0
    return float(clamp(min(candidates)))


def generate(pv: ProbabilityVector, rng: np.random.Generator) -> np.ndarray:
    """按 P 生成一个 0/1 向量（各分量独立）"""
    return (rng.random(pv.dim) < pv.p).astype(np.uint8)


def generate_batch(pv: ProbabilityVector, rng: np.random.Generator, count: int) -> np.ndarray:
    """一次生成 count 个向量，形状 (count, D)"""
    if count < 0:
        raise InvalidArgumentError(f"count 不能为负，得到 {count}")
    return (rng.random((count, pv.dim)) < pv.p).astype(np.uint8)


def expected_lhs(pv: ProbabilityVector, row: np.ndarray) -> float:
    """约束左部的期望 Σ b_i·p_i"""
    row = np.asarray(row, dtype=np.float64)
    if row.shape != pv.p.shape:
        raise InvalidArgumentError(f"约束行长度应为 {pv.dim}，得到 {row.shape}")
    return float(row @ pv.p)


def mean_probability(pv: ProbabilityVector, floor: Optional[float] = P_MIN) -> float:
    """P 的分量均值 p_AVG"""
    value = float(pv.p.mean())
    return max(value, floor) if floor is not None else value
