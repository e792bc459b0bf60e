# -*- coding: utf-8 -*-
"""求解器错误类型"""

from typing import Optional


class MiverError(Exception):
    """求解器相关错误"""
    pass


class InvalidArgumentError(MiverError, ValueError):
    """参数非法（维数不匹配、系数越界等）"""
    pass


class ProblemValidationError(MiverError, ValueError):
    """问题描述文件或问题结构不合法"""

    def __init__(self, field: str, message: str, value: Optional[object] = None):
        self.field = field
        self.value = value
        super().__init__(f"{field}: {message}")


class TransportError(MiverError):
    """节点间通信失败"""
    pass


class BenchmarkError(MiverError):
    """基准测试协议使用错误"""
    pass
