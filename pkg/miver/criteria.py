# -*- coding: utf-8 -*-
"""
第二准则插件

定义非线性第二准则 F_Q(X) 的标准接口和注册表。目标函数按乘法卷积组合：F(X) = F_M(X)·F_Q(X)。

内置准则：
- linear: 纯线性问题，F_Q ≡ 1
- idle_capacity: 通道负载准则（占用比例或空闲比例）
- table: 按选中变量个数查表
- constant: 常数因子，主要用于组合校验
"""

from abc import ABC, abstractmethod
import numbers
from typing import Any, Dict, List, Optional, Sequence, Type
import logging

import numpy as np

from .errors import InvalidArgumentError, ProblemValidationError

logger = logging.getLogger(__name__)


def idle_capacity_ratio(loads: np.ndarray, assignments: np.ndarray, capacities: np.ndarray) -> np.ndarray:
    """批量计算通道占用比例 Σ_j min{Σ_i a_i·x_ij, c_j} / Σ_j c_j

    Args:
        loads: 各流量类别的平均负载 a_i，形状 (N,)
        assignments: 分配矩阵，形状 (n, N, V) 或 (N, V)
        capacities: 各通道容量 c_j，形状 (V,)

    Returns:
        每个分配的占用比例，形状 (n,) 或标量数组
    """
    total = float(np.sum(capacities))
    if total <= 0:
        raise InvalidArgumentError("通道总容量必须大于 0")
    channel_load = np.einsum('i,...ij->...j', loads, assignments)
    used = np.minimum(channel_load, capacities).sum(axis=-1)
    return used / total


class SecondCriterion(ABC):
    """第二准则基类

    所有准则都必须继承此类并实现 `evaluate_batch`。准则实例构造后不可变，可以在多个线程间共享。
    """

    name: str = ""
    is_identity: bool = False

    @abstractmethod
    def evaluate_batch(self, X: np.ndarray) -> np.ndarray:
        """对一批 0/1 向量 (n, D) 计算 F_Q，返回形状 (n,)"""
        pass

    def validate(self, dim: int, groups: Sequence[Any]) -> None:
        """检查准则与问题结构是否匹配（由子类覆盖）"""
        return None

    @abstractmethod
    def to_dict(self) -> Dict[str, Any]:
        """转换为问题文件中的字段"""
        pass

    @classmethod
    @abstractmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SecondCriterion":
        """从问题文件字段构造"""
        pass


class LinearCriterion(SecondCriterion):
    """纯线性问题：F_Q ≡ 1"""

    name = "linear"
    is_identity = True

    def evaluate_batch(self, X: np.ndarray) -> np.ndarray:
        return np.ones(X.shape[0], dtype=np.float64)

    def to_dict(self) -> Dict[str, Any]:
        return {'criterion': self.name}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "LinearCriterion":
        return cls()


class ConstantCriterion(SecondCriterion):
    """常数因子 F_Q ≡ value"""

    name = "constant"

    def __init__(self, value: float):
        self.value = float(value)

    def evaluate_batch(self, X: np.ndarray) -> np.ndarray:
        return np.full(X.shape[0], self.value, dtype=np.float64)

    def to_dict(self) -> Dict[str, Any]:
        return {'criterion': self.name, 'value': self.value}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ConstantCriterion":
        if 'value' not in data:
            raise ProblemValidationError('value', "constant 准则需要 value 字段")
        return cls(_as_float('value', data['value']))


class TableCriterion(SecondCriterion):
    """查表准则：F_Q(X) = table[min(Σx_i, len(table)-1)]"""

    name = "table"

    def __init__(self, table: Sequence[float]):
        values = np.asarray(table, dtype=np.float64)
        if values.ndim != 1 or values.size == 0:
            raise ProblemValidationError('table', "table 必须是非空数组")
        values.setflags(write=False)
        self.table = values

    def evaluate_batch(self, X: np.ndarray) -> np.ndarray:
        counts = X.sum(axis=1).astype(np.int64)
        return self.table[np.minimum(counts, self.table.size - 1)]

    def to_dict(self) -> Dict[str, Any]:
        return {'criterion': self.name, 'table': self.table.tolist()}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "TableCriterion":
        if 'table' not in data:
            raise ProblemValidationError('table', "table 准则需要 table 字段")
        return cls(_as_float_array('table', data['table']))


class IdleCapacityCriterion(SecondCriterion):
    """通道负载准则

    变量按矩阵形式 x_ij 排列（第 i 类流量走第 j 个通道），占据前 N·V 个分量。
    原始准则（占用比例）是越小越好；规范形式为最大化，所以提供两种取向：
    - occupied: F_Q = 占用比例
    - idle: F_Q = 1 - 占用比例（默认）
    """

    name = "idle_capacity"
    ORIENTATIONS = ("idle", "occupied")

    def __init__(self, loads: Sequence[float], capacities: Sequence[float], orientation: str = "idle"):
        self.loads = np.asarray(loads, dtype=np.float64)
        self.capacities = np.asarray(capacities, dtype=np.float64)
        if self.loads.ndim != 1 or self.loads.size == 0:
            raise ProblemValidationError('loads', "loads 必须是非空数组")
        if self.capacities.ndim != 1 or self.capacities.size == 0:
            raise ProblemValidationError('capacities', "capacities 必须是非空数组")
        if np.any(self.capacities <= 0):
            raise ProblemValidationError('capacities', "所有通道容量必须大于 0")
        if orientation not in self.ORIENTATIONS:
            raise ProblemValidationError(
                'orientation', f"未知取向 {orientation}，可选: {', '.join(self.ORIENTATIONS)}"
            )
        self.orientation = orientation
        self.loads.setflags(write=False)
        self.capacities.setflags(write=False)

    @property
    def classes(self) -> int:
        return int(self.loads.size)

    @property
    def channels(self) -> int:
        return int(self.capacities.size)

    def validate(self, dim: int, groups: Sequence[Any]) -> None:
        if self.classes * self.channels > dim:
            raise ProblemValidationError(
                'loads',
                f"{self.classes} 类流量 × {self.channels} 个通道超出维数 {dim}",
            )

    def evaluate_batch(self, X: np.ndarray) -> np.ndarray:
        span = self.classes * self.channels
        assignments = X[:, :span].reshape(X.shape[0], self.classes, self.channels)
        ratio = idle_capacity_ratio(self.loads, assignments, self.capacities)
        if self.orientation == "idle":
            return 1.0 - ratio
        return ratio

    def to_dict(self) -> Dict[str, Any]:
        return {
            'criterion': self.name,
            'loads': self.loads.tolist(),
            'capacities': self.capacities.tolist(),
            'orientation': self.orientation,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "IdleCapacityCriterion":
        for key in ('loads', 'capacities'):
            if key not in data:
                raise ProblemValidationError(key, f"idle_capacity 准则需要 {key} 字段")
        return cls(
            loads=_as_float_array('loads', data['loads']),
            capacities=_as_float_array('capacities', data['capacities']),
            orientation=str(data.get('orientation', 'idle')),
        )


class CriterionRegistry:
    """准则注册表"""

    _instance = None
    _initialized = False

    def __new__(cls):
        """单例模式"""
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __init__(self):
        if not self._initialized:
            self._classes: Dict[str, Type[SecondCriterion]] = {}
            self._initialized = True
            for criterion_class in (LinearCriterion, IdleCapacityCriterion, TableCriterion, ConstantCriterion):
                self.register(criterion_class)

    def register(self, criterion_class: Type[SecondCriterion]) -> None:
        """注册一个准则类

        Raises:
            InvalidArgumentError: 如果不是 SecondCriterion 子类或没有名称
        """
        if not (isinstance(criterion_class, type) and issubclass(criterion_class, SecondCriterion)):
            raise InvalidArgumentError(f"准则必须继承 SecondCriterion，得到 {criterion_class}")
        if not criterion_class.name:
            raise InvalidArgumentError(f"准则类 {criterion_class.__name__} 缺少 name")
        if criterion_class.name in self._classes:
            logger.debug("准则 %s 已注册，将覆盖", criterion_class.name)
        self._classes[criterion_class.name] = criterion_class

    def get(self, name: str) -> Optional[Type[SecondCriterion]]:
        return self._classes.get(name)

    def list_names(self) -> List[str]:
        return list(self._classes.keys())

    def build(self, data: Dict[str, Any]) -> SecondCriterion:
        """根据问题文件字段构造准则

        `criterion` 可以是标签字符串（参数放在同一层），也可以是带 `type` 的对象。
        """
        raw = data.get('criterion', LinearCriterion.name)
        if isinstance(raw, dict):
            params = dict(raw)
            tag = params.pop('type', None)
        else:
            params = data
            tag = raw
        if not isinstance(tag, str):
            raise ProblemValidationError('criterion', "criterion 必须是字符串或带 type 的对象", tag)
        criterion_class = self.get(tag)
        if criterion_class is None:
            raise ProblemValidationError(
                'criterion', f"未知准则 {tag}，可选: {', '.join(self.list_names())}", tag
            )
        return criterion_class.from_dict(params)


def get_criterion_registry() -> CriterionRegistry:
    """获取全局准则注册表"""
    return CriterionRegistry()


def _as_float(field: str, value: Any) -> float:
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ProblemValidationError(field, "必须是数值", value)


def _as_float_array(field: str, value: Any) -> np.ndarray:
    if not isinstance(value, (list, tuple)) or not all(
        isinstance(v, numbers.Real) and not isinstance(v, bool) for v in value
    ):
        raise ProblemValidationError(field, "必须是数值数组", value)
    return np.asarray(value, dtype=np.float64)
