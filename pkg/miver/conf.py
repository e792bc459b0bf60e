# -*- coding: utf-8 -*-
"""
配置访问

领域代码通过这里读取 `MIVER_*` 设置。Django 未配置时（例如直接导入模块做计算）回退到内置默认值。
"""

from typing import Any

try:  # pragma: no cover - 运行环境均应安装 Django
    from django.conf import settings  # type: ignore
    from django.core.exceptions import ImproperlyConfigured  # type: ignore
except ModuleNotFoundError:  # pragma: no cover
    from types import SimpleNamespace

    settings = SimpleNamespace()  # type: ignore

    class ImproperlyConfigured(Exception):  # type: ignore
        pass


DEFAULTS = {
    'MIVER_POPULATION': 100,
    'MIVER_MAX_STEPS': 5000,
    'MIVER_WORKERS': 1,
    'MIVER_CHUNK_SIZE': 8,
    'MIVER_SCHEDULE': 'dynamic',
    'MIVER_TRACE_EVERY': 10,
    'MIVER_FEASIBILITY_RETRY_STEPS': 200,
    'MIVER_ADAPT_STRATEGY': 'multiplicative',
    'MIVER_ADAPT_D': 1.5,
    'MIVER_ADAPT_W': 0.02,
    'MIVER_ADAPT_DELTA_F': 0.0,
    'MIVER_ADAPT_WINDOW': 50,
    'MIVER_ROLLBACK': 'triggered',
    'MIVER_ADAPTIVE_P0': False,
    'MIVER_CLUSTER_C_MAX': 500,
    'MIVER_CLUSTER_QUIET_PERIOD': 30.0,
    'MIVER_CLUSTER_COMPRESS': False,
    'MIVER_CLUSTER_STEP_MODE': 'single',
    'MIVER_CLUSTER_CONNECT_TIMEOUT': 30.0,
    'MIVER_CLUSTER_FAILURE_WINDOW': 60.0,
    'MIVER_CLUSTER_PEERS': [],
    'MIVER_BENCH_CENSOR_FACTOR': 100.0,
}


def get_setting(name: str) -> Any:
    """读取设置，未配置 Django 时返回内置默认值"""
    default = DEFAULTS.get(name)
    try:
        return getattr(settings, name, default)
    except ImproperlyConfigured:
        return default
