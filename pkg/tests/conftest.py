import math
import os
import sys

import pytest
from hypothesis import settings

from tpstokes import Params

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


@pytest.fixture(params=[2, 3], ids=["n2", "n3"])
def params(request):
    return Params(n=request.param, T=2 * math.pi)


@pytest.fixture
def p2():
    return Params(n=2)


@pytest.fixture
def p3():
    return Params(n=3)
