"""Embedding backends: synthetic differentiable encoder, remote client, persistent cache."""

from .base import Capabilities, EncoderBackend
from .cache import CachedBackend, EmbeddingCache, cached_embed, fnv1a64
from .remote import RemoteEncoder
from .synthetic import (
    RelaxedSuffix,
    SyntheticEncoder,
    SyntheticEncoderConfig,
    synthetic_embed,
    synthetic_embed_relaxed,
)

__all__ = [
    "Capabilities",
    "EncoderBackend",
    "SyntheticEncoder",
    "SyntheticEncoderConfig",
    "RelaxedSuffix",
    "synthetic_embed",
    "synthetic_embed_relaxed",
    "RemoteEncoder",
    "EmbeddingCache",
    "CachedBackend",
    "cached_embed",
    "fnv1a64",
]
