"""Service configuration from defaults, environment variables, and flags."""

from __future__ import annotations

import os
from dataclasses import dataclass

DEFAULT_MODEL = "openai/clip-vit-large-patch14"
ENV_PREFIX = "CLIPSVC_"


@dataclass(frozen=True)
class ServiceConfig:
    model: str = DEFAULT_MODEL
    host: str = "127.0.0.1"
    port: int = 8400
    max_batch: int = 64
    max_image_bytes: int = 8 * 1024 * 1024
    device: str = "cpu"
    seed: int = 0

    def __post_init__(self):
        if self.max_batch < 1:
            raise ValueError(f"max_batch must be >= 1, got {self.max_batch}")
        if self.max_image_bytes < 1:
            raise ValueError(f"max_image_bytes must be >= 1, got {self.max_image_bytes}")
        if not 0 <= self.port <= 65535:
            raise ValueError(f"port out of range: {self.port}")
        if not self.model:
            raise ValueError("model must be non-empty")


def env_overrides(env: os._Environ | dict | None = None) -> dict:
    """Read CLIPSVC_* variables into ServiceConfig keyword overrides."""
    env = os.environ if env is None else env
    out: dict = {}
    for key, cast in (
        ("model", str),
        ("host", str),
        ("port", int),
        ("max_batch", int),
        ("max_image_bytes", int),
        ("device", str),
        ("seed", int),
    ):
        raw = env.get(ENV_PREFIX + key.upper())
        if raw is not None:
            try:
                out[key] = cast(raw)
            except ValueError:
                raise ValueError(f"{ENV_PREFIX + key.upper()}={raw!r} is not a valid {cast.__name__}")
    return out


def load_config(flag_overrides: dict | None = None, env: dict | None = None) -> ServiceConfig:
    """Merge with precedence: flags > environment > defaults."""
    merged = env_overrides(env)
    for key, value in (flag_overrides or {}).items():
        if value is not None:
            merged[key] = value
    return ServiceConfig(**merged)
