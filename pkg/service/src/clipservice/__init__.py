"""CLIP embedding microservice speaking the /v1/embed wire protocol."""

from .app import create_app
from .config import DEFAULT_MODEL, ServiceConfig, load_config
from .model import ClipEncoder, build_encoder

__version__ = "0.1.0"

__all__ = [
    "ClipEncoder",
    "DEFAULT_MODEL",
    "ServiceConfig",
    "build_encoder",
    "create_app",
    "load_config",
]
