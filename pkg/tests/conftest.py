# -*- coding: utf-8 -*-
"""测试公共设置：项目根目录加入 sys.path，slow 标记的测试默认跳过"""

import os
import sys

import pytest  # type: ignore

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: 耗时较长的验收测试，设置 MIVER_RUN_SLOW=1 时运行")


def pytest_collection_modifyitems(config, items):
    if os.environ.get('MIVER_RUN_SLOW', '').lower() in ('1', 'true', 'yes'):
        return
    skip_slow = pytest.mark.skip(reason="设置 MIVER_RUN_SLOW=1 运行")
    for item in items:
        if 'slow' in item.keywords:
            item.add_marker(skip_slow)
