import os

import pytest

RUN_SLOW = os.getenv("QLM_RUN_SLOW", "0") == "1"

collect_ignore = ["smoke_api.py"]


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: high-precision runs (set QLM_RUN_SLOW=1)")


def pytest_collection_modifyitems(config, items):
    if RUN_SLOW:
        return
    skip = pytest.mark.skip(reason="slow; set QLM_RUN_SLOW=1")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)
