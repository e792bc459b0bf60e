# -*- coding: utf-8 -*-
"""
MIVER 变概率随机搜索

带罚函数约束处理的伪布尔优化工具包：串行/共享内存并行求解、多节点多起点搜索以及并行效率基准。
"""

__version__ = "1.0.0"
