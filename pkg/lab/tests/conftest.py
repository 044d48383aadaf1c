import pytest

from app.config import reset_settings
from app.engine.half_plane_map import HalfPlaneMap
from app.engine.streams import RngStream
from app.models import PeelEvent


@pytest.fixture(autouse=True)
def fresh_settings():
    reset_settings()
    yield
    reset_settings()


@pytest.fixture
def triangle() -> HalfPlaneMap:
    """Map after a single alpha step: one face (0, 1, 2)"""
    hmap = HalfPlaneMap()
    hmap.apply_step(0, PeelEvent.alpha_step(), RngStream(0))
    return hmap
