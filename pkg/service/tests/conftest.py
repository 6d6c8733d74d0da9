import io

import pytest
from PIL import Image

from clipservice.config import ServiceConfig
from clipservice.model import build_encoder


@pytest.fixture(scope="session")
def make_png():
    def _make(color=(200, 30, 30), size=(40, 40)):
        buf = io.BytesIO()
        Image.new("RGB", size, color).save(buf, format="PNG")
        return buf.getvalue()

    return _make


@pytest.fixture(scope="session")
def tiny_config():
    return ServiceConfig(model="random:tiny", max_batch=8, max_image_bytes=10_000)


@pytest.fixture(scope="session")
def tiny_encoder(tiny_config):
    return build_encoder(tiny_config)
