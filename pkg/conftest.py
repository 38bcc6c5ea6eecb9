import os

import pytest

from affine_twist.settings import get_settings

ROOT = os.path.dirname(os.path.abspath(__file__))


@pytest.fixture
def settings():
    return get_settings(os.path.join(ROOT, "affine_twist.cfg"))
