# -*- coding: utf-8 -*-
"""求解器配置"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Any, Dict, Optional

from ..adapt import AdaptConfig
from ..conf import get_setting
from ..errors import InvalidArgumentError

SCHEDULES = ("dynamic", "static")
CLOCKS = ("wall", "logical")
# batch: 每步 N 个样本，按本批最好/最差样本自适应；single: 每步一个样本
STEP_MODES = ("batch", "single")


@dataclass
class SolverConfig:
    """单机求解参数

    停止条件可以同时设置多个，先满足者生效；每步检查一次。
    step_mode="single" 时每步只生成一个样本，population 不再使用。
    """

    population: int = 100
    max_steps: Optional[int] = 5000
    max_time: Optional[float] = None
    no_improve_stop: Optional[int] = None
    target_value: Optional[float] = None
    target_penalty: Optional[float] = None
    workers: int = 1
    chunk_size: int = 8
    schedule: str = "dynamic"
    step_mode: str = "batch"
    clock: str = "wall"
    trace_every: int = 10
    feasibility_retry_steps: int = 200
    feasibility_retry_limit: int = 5
    feasibility_retry_factor: float = 0.5
    p0: Optional[float] = None
    seed: int = 0
    adapt: AdaptConfig = field(default_factory=AdaptConfig)

    def __post_init__(self):
        if isinstance(self.adapt, dict):
            self.adapt = AdaptConfig.from_dict(self.adapt)
        if self.population < 2:
            raise InvalidArgumentError(f"population 至少为 2，得到 {self.population}")
        if self.workers < 1:
            raise InvalidArgumentError(f"workers 至少为 1，得到 {self.workers}")
        if self.chunk_size < 1:
            raise InvalidArgumentError(f"chunk_size 至少为 1，得到 {self.chunk_size}")
        if self.schedule not in SCHEDULES:
            raise InvalidArgumentError(f"schedule 必须是 {SCHEDULES} 之一，得到 {self.schedule}")
        if self.step_mode not in STEP_MODES:
            raise InvalidArgumentError(f"step_mode 必须是 {STEP_MODES} 之一，得到 {self.step_mode}")
        if self.clock not in CLOCKS:
            raise InvalidArgumentError(f"clock 必须是 {CLOCKS} 之一，得到 {self.clock}")
        if self.trace_every < 1:
            raise InvalidArgumentError(f"trace_every 至少为 1，得到 {self.trace_every}")
        if self.max_steps is not None and self.max_steps < 1:
            raise InvalidArgumentError(f"max_steps 至少为 1，得到 {self.max_steps}")
        if self.max_time is not None and self.max_time <= 0:
            raise InvalidArgumentError(f"max_time 必须大于 0，得到 {self.max_time}")
        if self.no_improve_stop is not None and self.no_improve_stop < 1:
            raise InvalidArgumentError(f"no_improve_stop 至少为 1，得到 {self.no_improve_stop}")
        if not 0 < self.feasibility_retry_factor < 1:
            raise InvalidArgumentError(
                f"feasibility_retry_factor 必须在 (0, 1) 内，得到 {self.feasibility_retry_factor}"
            )
        if self.p0 is not None and not 0 < self.p0 < 1:
            raise InvalidArgumentError(f"p0 必须在 (0, 1) 内，得到 {self.p0}")
        if self.seed < 0:
            raise InvalidArgumentError(f"seed 不能为负，得到 {self.seed}")
        if all(v is None for v in (self.max_steps, self.max_time, self.no_improve_stop,
                                   self.target_value, self.target_penalty)):
            raise InvalidArgumentError("至少需要设置一个停止条件")

    @classmethod
    def from_settings(cls, **overrides: Any) -> "SolverConfig":
        """以 MIVER_* 设置为默认值构造配置"""
        adapt = AdaptConfig(
            strategy=get_setting('MIVER_ADAPT_STRATEGY'),
            d=get_setting('MIVER_ADAPT_D'),
            w=get_setting('MIVER_ADAPT_W'),
            delta_f=get_setting('MIVER_ADAPT_DELTA_F'),
            window=get_setting('MIVER_ADAPT_WINDOW'),
            rollback_mode=get_setting('MIVER_ROLLBACK'),
            adaptive_p0=get_setting('MIVER_ADAPTIVE_P0'),
        )
        values: Dict[str, Any] = {
            'population': get_setting('MIVER_POPULATION'),
            'max_steps': get_setting('MIVER_MAX_STEPS'),
            'workers': get_setting('MIVER_WORKERS'),
            'chunk_size': get_setting('MIVER_CHUNK_SIZE'),
            'schedule': get_setting('MIVER_SCHEDULE'),
            'trace_every': get_setting('MIVER_TRACE_EVERY'),
            'feasibility_retry_steps': get_setting('MIVER_FEASIBILITY_RETRY_STEPS'),
            'adapt': adapt,
        }
        values.update(overrides)
        return cls(**values)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SolverConfig":
        known = {k: v for k, v in data.items() if k in cls.__dataclass_fields__}
        return cls(**known)
