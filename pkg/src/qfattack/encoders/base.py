"""Abstract embedding backend contract."""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass

from ..embedding import Embedding


@dataclass(frozen=True)
class Capabilities:
    supports_gradients: bool = False
    supports_images: bool = False


class EncoderBackend(ABC):
    """A deterministic map from text (and optionally images) to embeddings.

    ``id`` must uniquely identify backend, model, and configuration; it
    namespaces the persistent cache. ``embed_text`` must return bit-identical
    vectors for identical inputs within one backend id.
    """

    @property
    @abstractmethod
    def id(self) -> str: ...

    @property
    @abstractmethod
    def dim(self) -> int: ...

    @property
    @abstractmethod
    def capabilities(self) -> Capabilities: ...

    @abstractmethod
    def embed_text(self, text: str) -> Embedding: ...

    def embed_texts(self, texts: list[str]) -> list[Embedding]:
        """Batch variant; backends with a native batch path should override."""
        return [self.embed_text(t) for t in texts]

    def embed_images(self, payloads: list[bytes]) -> list[Embedding]:
        raise NotImplementedError(f"backend {self.id} does not embed images")
