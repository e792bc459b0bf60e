# -*- coding: utf-8 -*-
"""
约束伪布尔问题模型

规范形式（向量下标）：
    F(X) = (Σ a_i·x_i)·F_Q(X) → max
    Σ b_ik·x_i ≤ B_k,  k = 1..N_constr
    每个变体组内至多选一个（组长度 V）

选择问题的矩阵下标 x_ij 按行展开为向量下标 i·V + j。最小化问题在读入时取反。
"""

from __future__ import annotations

import itertools
import json
import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .criteria import (IdleCapacityCriterion, LinearCriterion, SecondCriterion,
                       get_criterion_registry, idle_capacity_ratio)
from .errors import InvalidArgumentError, ProblemValidationError

logger = logging.getLogger(__name__)

# 约束左部允许的相对浮点误差
FEASIBILITY_TOL = 1e-9

# 穷举最优解的维数上限
BRUTE_FORCE_MAX_DIM = 20


class Sense(Enum):
    """优化方向"""
    MAXIMIZE = "maximize"
    MINIMIZE = "minimize"


class GroupMode(Enum):
    """变体组约束类型"""
    AT_MOST_ONE = "at_most_one"      # Σ x ≤ 1
    AT_LEAST_ONE = "at_least_one"    # Σ x ≥ 1
    EXACTLY_ONE = "exactly_one"      # Σ x = 1

    @property
    def caps_selection(self) -> bool:
        return self is not GroupMode.AT_LEAST_ONE


@dataclass(frozen=True)
class Group:
    """一个变体组：连续下标区间 [start, start+length)"""
    start: int
    length: int
    mode: GroupMode = GroupMode.AT_MOST_ONE

    @property
    def stop(self) -> int:
        return self.start + self.length

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {'start': self.start, 'len': self.length}
        if self.mode is not GroupMode.AT_MOST_ONE:
            data['mode'] = self.mode.value
        return data


@dataclass(frozen=True, eq=False)
class Problem:
    """规范形式的约束伪布尔问题（构造后不可变，可在线程间共享）

    系数已经是最大化方向；`sense` 记录输入时的原始方向，`offset` 是目标中与 X 无关的常数
    （只用于报告）。
    """

    dim: int
    linear_coeffs: np.ndarray
    constraint_matrix: np.ndarray
    bounds: np.ndarray
    groups: Tuple[Group, ...] = ()
    second_criterion: SecondCriterion = field(default_factory=LinearCriterion)
    sense: Sense = Sense.MAXIMIZE
    offset: float = 0.0
    name: str = ""

    def __post_init__(self) -> None:
        if not isinstance(self.dim, (int, np.integer)) or self.dim < 1:
            raise ProblemValidationError('dim', "dim 必须是正整数", self.dim)
        a = np.asarray(self.linear_coeffs, dtype=np.float64)
        if a.shape != (self.dim,):
            raise ProblemValidationError('a', f"长度应为 {self.dim}，得到 {a.shape}")
        matrix = np.asarray(self.constraint_matrix, dtype=np.float64)
        if matrix.size == 0:
            matrix = np.zeros((0, self.dim), dtype=np.float64)
        if matrix.ndim != 2 or matrix.shape[1] != self.dim:
            raise ProblemValidationError('constraints', f"每个约束行必须有 {self.dim} 个系数")
        bounds = np.asarray(self.bounds, dtype=np.float64).reshape(-1)
        if bounds.shape[0] != matrix.shape[0]:
            raise ProblemValidationError('constraints', "约束行数与右部个数不一致")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(matrix)) and np.all(np.isfinite(bounds))):
            raise ProblemValidationError('constraints', "系数必须是有限数值")
        self._validate_groups()
        self.second_criterion.validate(self.dim, self.groups)

        for array in (a, matrix, bounds):
            array.setflags(write=False)
        object.__setattr__(self, 'linear_coeffs', a)
        object.__setattr__(self, 'constraint_matrix', matrix)
        object.__setattr__(self, 'bounds', bounds)
        object.__setattr__(self, 'groups', tuple(self.groups))
        starts = np.array([g.start for g in self.groups], dtype=np.int64)
        stops = np.array([g.stop for g in self.groups], dtype=np.int64)
        object.__setattr__(self, '_group_starts', starts)
        object.__setattr__(self, '_group_stops', stops)
        object.__setattr__(self, '_group_upper', np.array(
            [g.mode.caps_selection for g in self.groups], dtype=bool))
        object.__setattr__(self, '_group_lower', np.array(
            [g.mode is not GroupMode.AT_MOST_ONE for g in self.groups], dtype=bool))

    def _validate_groups(self) -> None:
        covered = np.zeros(self.dim, dtype=bool)
        capping_lengths = set()
        for idx, group in enumerate(self.groups):
            if not isinstance(group, Group):
                raise ProblemValidationError(f'groups[{idx}]', "必须是 Group")
            if group.length < 1 or group.start < 0 or group.stop > self.dim:
                raise ProblemValidationError(
                    f'groups[{idx}]', f"区间 [{group.start}, {group.stop}) 超出 [0, {self.dim})"
                )
            if covered[group.start:group.stop].any():
                raise ProblemValidationError(f'groups[{idx}]', "变体组之间不能重叠")
            covered[group.start:group.stop] = True
            if group.mode.caps_selection:
                capping_lengths.add(group.length)
        if len(capping_lengths) > 1:
            raise ProblemValidationError(
                'groups', f"变体组长度必须相同，得到 {sorted(capping_lengths)}"
            )

    @property
    def n_constraints(self) -> int:
        return int(self.constraint_matrix.shape[0])

    @property
    def constraints(self) -> List[Tuple[np.ndarray, float]]:
        return [(self.constraint_matrix[k], float(self.bounds[k])) for k in range(self.n_constraints)]

    @property
    def variants(self) -> Optional[int]:
        """每个元素的变体数 V（没有限制选择的变体组时为 None）"""
        for group in self.groups:
            if group.mode.caps_selection:
                return group.length
        return None

    @property
    def is_linear(self) -> bool:
        return self.second_criterion.is_identity

    def report_value(self, f: float) -> float:
        """规范形式的目标值 → 原始方向的目标值（含常数项）"""
        value = f + self.offset
        return -value if self.sense is Sense.MINIMIZE else value

    @classmethod
    def create(
        cls,
        linear_coeffs: Sequence[float],
        constraints: Sequence[Tuple[Sequence[float], float]] = (),
        groups: Sequence[Union[Group, Tuple[int, int]]] = (),
        second_criterion: Optional[SecondCriterion] = None,
        sense: Union[Sense, str] = Sense.MAXIMIZE,
        offset: float = 0.0,
        name: str = "",
    ) -> "Problem":
        """按自然参数构造问题；最小化问题在这里取反为最大化"""
        sense = Sense(sense)
        a = np.asarray(linear_coeffs, dtype=np.float64)
        if a.ndim != 1:
            raise ProblemValidationError('a', "线性系数必须是一维数组")
        dim = int(a.size)
        rows = [np.asarray(row, dtype=np.float64) for row, _ in constraints]
        for k, row in enumerate(rows):
            if row.shape != (dim,):
                raise ProblemValidationError(f'constraints[{k}].b', f"长度应为 {dim}，得到 {row.shape}")
        matrix = np.vstack(rows) if rows else np.zeros((0, dim))
        bounds = np.array([float(bound) for _, bound in constraints], dtype=np.float64)
        normalized_groups = tuple(
            g if isinstance(g, Group) else Group(int(g[0]), int(g[1])) for g in groups
        )
        if sense is Sense.MINIMIZE:
            a = -a
            offset = -offset
        return cls(
            dim=dim,
            linear_coeffs=a,
            constraint_matrix=matrix,
            bounds=bounds,
            groups=normalized_groups,
            second_criterion=second_criterion or LinearCriterion(),
            sense=sense,
            offset=float(offset),
            name=name,
        )


@dataclass
class Candidate:
    """一个样本 X 及其目标值、罚函数值和修正目标值"""
    x: np.ndarray
    f: float
    f_p: float
    f_m: float

    @property
    def feasible(self) -> bool:
        return self.f_p == 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            'x': bits_to_str(self.x),
            'f': self.f,
            'f_p': self.f_p,
            'f_m': self.f_m,
            'feasible': self.feasible,
        }


@dataclass
class BatchEvaluation:
    """一批样本的评估结果"""
    f: np.ndarray
    f_p: np.ndarray
    f_m: np.ndarray


# ----------------------------------------------------------------------
# 评估
# ----------------------------------------------------------------------
def _as_batch(problem: Problem, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.ndim != 2 or X.shape[1] != problem.dim:
        raise InvalidArgumentError(f"向量长度应为 {problem.dim}，得到形状 {X.shape}")
    return X


def objective_batch(problem: Problem, X: np.ndarray) -> np.ndarray:
    """批量计算 F(X)；配置了第二准则时按乘法卷积组合"""
    X = _as_batch(problem, X)
    linear = X @ problem.linear_coeffs
    if problem.second_criterion.is_identity:
        return linear
    return linear * problem.second_criterion.evaluate_batch(X)


def violation_scores(problem: Problem, X: np.ndarray) -> np.ndarray:
    """每个样本、每个约束（含变体组）的违反程度 F_Pk，形状 (n, N_constr + 组数)

    B_k > 0 时违反程度为 lhs/B_k；B_k ≤ 0 时比值无意义，取 1 + (lhs − B_k)。
    变体组上限按右部 1 的比值规则计算；下限不足时取 1 + 缺口。
    """
    X = _as_batch(problem, X)
    parts = []
    if problem.n_constraints:
        bounds = problem.bounds
        lhs = X @ problem.constraint_matrix.T
        tolerance = FEASIBILITY_TOL * np.maximum(1.0, np.abs(bounds))
        violated = lhs > bounds + tolerance
        positive = bounds > 0
        safe_bounds = np.where(positive, bounds, 1.0)
        score = np.where(positive, lhs / safe_bounds, 1.0 + (lhs - bounds))
        parts.append(np.where(violated, score, 0.0))
    if problem.groups:
        cumulative = np.zeros((X.shape[0], problem.dim + 1), dtype=np.float64)
        np.cumsum(X, axis=1, out=cumulative[:, 1:])
        counts = cumulative[:, problem._group_stops] - cumulative[:, problem._group_starts]
        over = problem._group_upper & (counts > 1)
        under = problem._group_lower & (counts < 1)
        parts.append(np.where(over, counts, 0.0) + np.where(under, 1.0 + (1.0 - counts), 0.0))
    if not parts:
        return np.zeros((X.shape[0], 0), dtype=np.float64)
    return np.hstack(parts)


def penalty_batch(problem: Problem, X: np.ndarray, c_penalty: float) -> np.ndarray:
    """批量计算罚函数 f^P = C_penalty·Σ_k F_Pk"""
    if c_penalty <= 0:
        raise InvalidArgumentError(f"c_penalty 必须大于 0，得到 {c_penalty}")
    return c_penalty * violation_scores(problem, X).sum(axis=1)


def evaluate_batch(problem: Problem, X: np.ndarray, c_penalty: float) -> BatchEvaluation:
    """批量计算 f、f^P 和 f^M = f − f^P"""
    f = objective_batch(problem, X)
    f_p = penalty_batch(problem, X, c_penalty)
    return BatchEvaluation(f=f, f_p=f_p, f_m=f - f_p)


def evaluate_objective(problem: Problem, x: np.ndarray) -> float:
    """F(X) = (Σ a_i·x_i)·F_Q(X)

    Raises:
        InvalidArgumentError: 维数不匹配
    """
    _check_vector(problem, x)
    return float(objective_batch(problem, x)[0])


def evaluate_penalty(problem: Problem, x: np.ndarray, c_penalty: float) -> float:
    """f^P = C_penalty·Σ_k F_Pk(X)

    Raises:
        InvalidArgumentError: 维数不匹配或 c_penalty ≤ 0
    """
    _check_vector(problem, x)
    return float(penalty_batch(problem, x, c_penalty)[0])


def default_penalty_coefficient(problem: Problem) -> float:
    """线性目标的罚系数估计 Σ|a_i|（可能为 0，由调用方替换）"""
    return float(np.abs(problem.linear_coeffs).sum())


def penalty_coefficient(problem: Problem) -> float:
    """实际使用的罚系数：Σ|a_i|，全零目标时取 1"""
    value = default_penalty_coefficient(problem)
    return value if value > 0 else 1.0


def evaluate_modified(problem: Problem, x: np.ndarray, c_penalty: float) -> Candidate:
    """计算单个样本的 f、f^P 和 f^M"""
    _check_vector(problem, x)
    result = evaluate_batch(problem, x, c_penalty)
    return Candidate(
        x=np.asarray(x, dtype=np.uint8).copy(),
        f=float(result.f[0]),
        f_p=float(result.f_p[0]),
        f_m=float(result.f_m[0]),
    )


def idle_capacity_criterion(
    loads: Sequence[float],
    assignment: np.ndarray,
    capacities: Sequence[float],
) -> float:
    """通道占用比例 Σ_j min{Σ_i a_i·x_ij, c_j} / Σ_j c_j

    Args:
        loads: 每类流量的负载 a_i
        assignment: 0/1 矩阵，行是流量类别，列是通道
        capacities: 通道容量 c_j

    Raises:
        InvalidArgumentError: 总容量为 0 或形状不匹配
    """
    loads_arr = np.asarray(loads, dtype=np.float64)
    caps = np.asarray(capacities, dtype=np.float64)
    matrix = np.asarray(assignment, dtype=np.float64)
    if matrix.shape != (loads_arr.size, caps.size):
        raise InvalidArgumentError(
            f"分配矩阵形状应为 ({loads_arr.size}, {caps.size})，得到 {matrix.shape}"
        )
    return float(idle_capacity_ratio(loads_arr, matrix, caps))


def check_feasible(problem: Problem, x: np.ndarray) -> bool:
    """独立于罚函数的可行性检查（逐行重新计算约束）"""
    _check_vector(problem, x)
    bits = [int(v) for v in np.asarray(x).reshape(-1)]
    for row, bound in problem.constraints:
        lhs = sum(float(coef) for coef, bit in zip(row, bits) if bit)
        if lhs > bound + FEASIBILITY_TOL * max(1.0, abs(bound)):
            return False
    for group in problem.groups:
        count = sum(bits[group.start:group.stop])
        if group.mode.caps_selection and count > 1:
            return False
        if group.mode is not GroupMode.AT_MOST_ONE and count < 1:
            return False
    return True


def brute_force_optimum(problem: Problem, max_dim: int = BRUTE_FORCE_MAX_DIM) -> Optional[Candidate]:
    """穷举所有 2^D 个向量，返回可行解中 F 最大者（没有可行解时返回 None）

    相同目标值时取字典序最小的向量。
    """
    if problem.dim > max_dim:
        raise InvalidArgumentError(f"穷举只支持 D ≤ {max_dim}，得到 {problem.dim}")
    best: Optional[Candidate] = None
    chunk_bits = min(problem.dim, 14)
    tail = np.array(list(itertools.product((0, 1), repeat=chunk_bits)), dtype=np.uint8)
    head_bits = problem.dim - chunk_bits
    for head in itertools.product((0, 1), repeat=head_bits):
        X = np.hstack([np.tile(np.array(head, dtype=np.uint8), (tail.shape[0], 1)), tail])
        scores = violation_scores(problem, X).sum(axis=1)
        feasible = scores == 0
        if not feasible.any():
            continue
        f = objective_batch(problem, X)
        masked = np.where(feasible, f, -np.inf)
        idx = int(np.argmax(masked))
        if best is None or masked[idx] > best.f:
            best = Candidate(x=X[idx].copy(), f=float(masked[idx]), f_p=0.0, f_m=float(masked[idx]))
    return best


def _check_vector(problem: Problem, x: np.ndarray) -> None:
    shape = np.shape(x)
    if len(shape) != 1 or shape[0] != problem.dim:
        raise InvalidArgumentError(f"向量长度应为 {problem.dim}，得到形状 {shape}")


# ----------------------------------------------------------------------
# 位串
# ----------------------------------------------------------------------
def bits_to_str(x: np.ndarray) -> str:
    """0/1 向量 → '0101…'"""
    return ''.join('1' if v else '0' for v in np.asarray(x).reshape(-1))


def str_to_bits(text: str) -> np.ndarray:
    """'0101…' → uint8 向量"""
    if text and set(text) - {'0', '1'}:
        raise InvalidArgumentError("位串只能包含 0 和 1")
    return np.frombuffer(text.encode('ascii'), dtype=np.uint8) - ord('0')


# ----------------------------------------------------------------------
# 问题文件
# ----------------------------------------------------------------------
def problem_from_dict(data: Dict[str, Any]) -> Problem:
    """从问题文档构造 Problem

    同时接受向量下标（a 是一维数组）和矩阵下标（a 是 N×V 嵌套数组）。矩阵下标且没有给出
    groups 时，自动为每一行生成至多选一的变体组。

    Raises:
        ProblemValidationError: 字段缺失或不合法，异常中带有字段名
    """
    if not isinstance(data, dict):
        raise ProblemValidationError('<root>', "问题文件必须是 JSON 对象")
    if 'a' not in data:
        raise ProblemValidationError('a', "缺少线性系数")

    a_raw = np.asarray(_numeric('a', data['a']), dtype=np.float64)
    matrix_form = a_raw.ndim == 2
    if matrix_form:
        n_elements, n_variants = a_raw.shape
        a = a_raw.reshape(-1)
    elif a_raw.ndim == 1:
        n_elements, n_variants = 0, 0
        a = a_raw
    else:
        raise ProblemValidationError('a', "必须是一维或二维数组")

    dim = int(a.size)
    if 'dim' in data:
        declared = data['dim']
        if not isinstance(declared, int) or isinstance(declared, bool) or declared != dim:
            raise ProblemValidationError('dim', f"与系数个数 {dim} 不一致", declared)
    if dim < 1:
        raise ProblemValidationError('a', "至少需要一个变量")

    constraints = []
    raw_constraints = data.get('constraints', [])
    if not isinstance(raw_constraints, list):
        raise ProblemValidationError('constraints', "必须是数组")
    for k, item in enumerate(raw_constraints):
        if not isinstance(item, dict) or 'b' not in item or 'B' not in item:
            raise ProblemValidationError(f'constraints[{k}]', "必须是包含 b 和 B 的对象")
        row = np.asarray(_numeric(f'constraints[{k}].b', item['b']), dtype=np.float64).reshape(-1)
        if row.size != dim:
            raise ProblemValidationError(f'constraints[{k}].b', f"长度应为 {dim}，得到 {row.size}")
        bound = _numeric(f'constraints[{k}].B', item['B'])
        if not isinstance(bound, (int, float)):
            raise ProblemValidationError(f'constraints[{k}].B', "必须是数值", bound)
        constraints.append((row, float(bound)))

    groups: List[Group] = []
    if 'groups' in data:
        raw_groups = data['groups']
        if not isinstance(raw_groups, list):
            raise ProblemValidationError('groups', "必须是数组")
        for idx, item in enumerate(raw_groups):
            if not isinstance(item, dict) or 'start' not in item or 'len' not in item:
                raise ProblemValidationError(f'groups[{idx}]', "必须是包含 start 和 len 的对象")
            try:
                mode = GroupMode(item.get('mode', GroupMode.AT_MOST_ONE.value))
            except ValueError:
                raise ProblemValidationError(f'groups[{idx}].mode', "未知的组约束类型", item.get('mode'))
            start, length = item['start'], item['len']
            if not all(isinstance(v, int) and not isinstance(v, bool) for v in (start, length)):
                raise ProblemValidationError(f'groups[{idx}]', "start 和 len 必须是整数")
            groups.append(Group(start, length, mode))
    elif matrix_form:
        groups = [Group(i * n_variants, n_variants) for i in range(n_elements)]

    criterion = get_criterion_registry().build(data)
    offset = _numeric('offset', data.get('offset', 0.0))
    if isinstance(offset, list):
        raise ProblemValidationError('offset', "必须是数值", offset)

    try:
        sense = Sense(data.get('sense', Sense.MAXIMIZE.value))
    except ValueError:
        raise ProblemValidationError('sense', "必须是 maximize 或 minimize", data.get('sense'))

    return Problem.create(
        linear_coeffs=a,
        constraints=constraints,
        groups=groups,
        second_criterion=criterion,
        sense=sense,
        offset=float(offset),
        name=str(data.get('name', '')),
    )


def problem_to_dict(problem: Problem) -> Dict[str, Any]:
    """Problem → 问题文档（按原始方向写出，读回后得到相同的规范形式）"""
    sign = -1.0 if problem.sense is Sense.MINIMIZE else 1.0
    data: Dict[str, Any] = {
        'dim': problem.dim,
        'a': (sign * problem.linear_coeffs).tolist(),
        'constraints': [
            {'b': row.tolist(), 'B': bound} for row, bound in problem.constraints
        ],
        'groups': [g.to_dict() for g in problem.groups],
        'sense': problem.sense.value,
    }
    if problem.offset:
        data['offset'] = sign * problem.offset
    if problem.name:
        data['name'] = problem.name
    data.update(problem.second_criterion.to_dict())
    return data


def load_problem(path: Union[str, Path]) -> Problem:
    """读取问题文件

    Raises:
        ProblemValidationError: 文件不可读、不是 JSON 或字段不合法
    """
    path = Path(path)
    try:
        text = path.read_text(encoding='utf-8')
    except OSError as exc:
        raise ProblemValidationError('<file>', f"无法读取 {path}: {exc}")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProblemValidationError('<json>', f"{path} 不是合法 JSON: {exc}")
    problem = problem_from_dict(data)
    logger.info(
        "📄 读取问题 %s: D=%d, 约束 %d 个, 变体组 %d 个, 准则 %s",
        path, problem.dim, problem.n_constraints, len(problem.groups), problem.second_criterion.name,
    )
    return problem


def dump_problem(problem: Problem, path: Union[str, Path]) -> None:
    """写出问题文件"""
    Path(path).write_text(json.dumps(problem_to_dict(problem)), encoding='utf-8')


def _numeric(field_name: str, value: Any) -> Any:
    """确认嵌套数组只包含数值"""
    if isinstance(value, bool):
        raise ProblemValidationError(field_name, "必须是数值", value)
    if isinstance(value, (int, float)):
        return value
    if isinstance(value, list):
        return [_numeric(field_name, v) for v in value]
    raise ProblemValidationError(field_name, "必须是数值或数值数组", value)


# ----------------------------------------------------------------------
# 示例问题构造
# ----------------------------------------------------------------------
def build_selection(
    a_matrix: Sequence[Sequence[float]],
    constraint_matrices: Sequence[Tuple[Sequence[Sequence[float]], float]] = (),
    second_criterion: Optional[SecondCriterion] = None,
    sense: Union[Sense, str] = Sense.MAXIMIZE,
    name: str = "selection",
) -> Problem:
    """矩阵形式的选择问题：N 个元素各有 V 个变体，每个元素至多选一个变体

    Args:
        a_matrix: N×V 目标系数 a_ij
        constraint_matrices: [(N×V 系数 b_ijk, B_k), ...]
    """
    a = np.asarray(a_matrix, dtype=np.float64)
    if a.ndim != 2:
        raise InvalidArgumentError("a_matrix 必须是 N×V 矩阵")
    n_elements, n_variants = a.shape
    constraints = []
    for k, (b, bound) in enumerate(constraint_matrices):
        b = np.asarray(b, dtype=np.float64)
        if b.shape != a.shape:
            raise InvalidArgumentError(f"第 {k} 个约束的系数矩阵形状应为 {a.shape}")
        constraints.append((b.reshape(-1), bound))
    groups = [Group(i * n_variants, n_variants) for i in range(n_elements)]
    return Problem.create(
        linear_coeffs=a.reshape(-1),
        constraints=constraints,
        groups=groups,
        second_criterion=second_criterion,
        sense=sense,
        name=name,
    )


def build_traffic_routing(
    volumes: Sequence[float],
    spent: Sequence[float],
    prices: Sequence[float],
    charged: Sequence[Sequence[int]],
    days: float,
    loads: Optional[Sequence[float]] = None,
    capacities: Optional[Sequence[float]] = None,
    orientation: str = "idle",
) -> Problem:
    """流量路由费用问题

    N 类流量、V 个接口，线性计费 P_j(v) = π_j·v 时月度费用为
        Σ_ij π_j·(v_j0 + v_i*·q·x_ij·p_ij) → min
    每类流量必须且只能走一个接口。给出 loads 和 capacities 时再乘以通道负载准则。

    Args:
        volumes: 每类流量的日均流量 v_i*
        spent: 每个接口本月已用流量 v_j0
        prices: 每个接口的单价 π_j
        charged: N×V 矩阵，p_ij = 1 表示第 i 类流量走第 j 个接口要计费
        days: 本月剩余天数 q
        loads, capacities: 通道负载准则参数（可选）
        orientation: 负载准则取向 idle / occupied
    """
    v = np.asarray(volumes, dtype=np.float64)
    spent_arr = np.asarray(spent, dtype=np.float64)
    price = np.asarray(prices, dtype=np.float64)
    p = np.asarray(charged, dtype=np.float64)
    n_classes, n_channels = v.size, price.size
    if spent_arr.size != n_channels or p.shape != (n_classes, n_channels):
        raise InvalidArgumentError("spent、prices、charged 的维数与流量类别/接口数不一致")
    cost = price[np.newaxis, :] * v[:, np.newaxis] * days * p
    offset = float(n_classes * np.sum(price * spent_arr))

    criterion = None
    if loads is not None or capacities is not None:
        if loads is None or capacities is None:
            raise InvalidArgumentError("loads 和 capacities 必须同时给出")
        criterion = IdleCapacityCriterion(loads, capacities, orientation)

    groups = [Group(i * n_channels, n_channels, GroupMode.EXACTLY_ONE) for i in range(n_classes)]
    return Problem.create(
        linear_coeffs=cost.reshape(-1),
        groups=groups,
        second_criterion=criterion,
        sense=Sense.MINIMIZE,
        offset=offset,
        name="traffic-routing",
    )
