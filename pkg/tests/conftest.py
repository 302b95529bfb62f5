import os

import pytest

from hyperres.acceptance import AcceptanceContext


def _threads():
    return min(4, os.cpu_count() or 1)


@pytest.fixture(scope="session")
def ctx():
    """Shared acceptance context; expensive grids are computed once."""
    return AcceptanceContext(threads=_threads())
