import os
import sys

import pytest
from hypothesis import settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile("default", deadline=None, max_examples=100)
settings.load_profile("default")


def pytest_collection_modifyitems(config, items):
    if os.environ.get("HAPPYRUNS_SLOW") == "1":
        return
    skip = pytest.mark.skip(reason="long scan; set HAPPYRUNS_SLOW=1 to run")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)
