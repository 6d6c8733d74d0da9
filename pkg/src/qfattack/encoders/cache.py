"""Persistent embedding cache: one JSON file per (backend, modality, input) key."""

from __future__ import annotations

import json
import logging
import os
import threading
from pathlib import Path

from ..embedding import Embedding
from .base import Capabilities, EncoderBackend

logger = logging.getLogger("qfattack.cache")

DEFAULT_CACHE_DIR = "qf-cache"
CACHE_DIR_ENV_VAR = "QF_CACHE_DIR"

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = (1 << 64) - 1


def fnv1a64(data: bytes) -> int:
    h = _FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * _FNV_PRIME) & _MASK64
    return h


def cache_key(backend_id: str, modality: str, input_str: str) -> str:
    """16-hex-digit FNV-1a key over backend id, modality byte, and input bytes."""
    payload = backend_id.encode("utf-8") + b"\x00" + modality[:1].encode("ascii") + input_str.encode("utf-8")
    return f"{fnv1a64(payload):016x}"


class EmbeddingCache:
    """File-backed embedding store.

    Collisions are resolved by storing the full input in each entry and
    verifying it on read; corrupt entries are evicted and recomputed. If the
    directory cannot be written the cache degrades to a pass-through with a
    single warning.
    """

    def __init__(self, directory: str | os.PathLike, enabled: bool = True):
        self.directory = Path(directory)
        self.enabled = enabled
        self._write_lock = threading.Lock()
        self._writable: bool | None = None

    @classmethod
    def from_env(cls, flag_dir: str | None = None, enabled: bool = True) -> "EmbeddingCache":
        """Resolve the cache directory: explicit flag wins over $QF_CACHE_DIR over the default."""
        directory = flag_dir or os.environ.get(CACHE_DIR_ENV_VAR) or DEFAULT_CACHE_DIR
        return cls(directory, enabled=enabled)

    def _path(self, key: str) -> Path:
        return self.directory / f"{key}.json"

    def _ensure_writable(self) -> bool:
        if self._writable is None:
            try:
                self.directory.mkdir(parents=True, exist_ok=True)
                probe = self.directory / ".write-probe"
                probe.write_text("")
                probe.unlink()
                self._writable = True
            except OSError as exc:
                logger.warning("cache directory %s not writable (%s); caching disabled", self.directory, exc)
                self._writable = False
        return self._writable

    def get(self, backend_id: str, modality: str, input_str: str) -> Embedding | None:
        if not self.enabled:
            return None
        path = self._path(cache_key(backend_id, modality, input_str))
        try:
            raw = path.read_text(encoding="utf-8")
        except FileNotFoundError:
            return None
        except OSError as exc:
            logger.warning("cache read failed for %s (%s)", path, exc)
            return None
        try:
            entry = json.loads(raw)
            if entry["backend_id"] != backend_id or entry["modality"] != modality or entry["input"] != input_str:
                return None  # FNV collision; recompute without touching the other entry's file
            values = entry["values"]
            if entry["dim"] != len(values):
                raise ValueError("dim field does not match stored vector length")
            return Embedding(values)
        except (KeyError, TypeError, ValueError) as exc:
            logger.warning("evicting corrupt cache entry %s (%s)", path, exc)
            try:
                path.unlink()
            except OSError:
                pass
            return None

    def put(self, backend_id: str, modality: str, input_str: str, emb: Embedding) -> None:
        if not self.enabled or not self._ensure_writable():
            return
        key = cache_key(backend_id, modality, input_str)
        entry = {
            "backend_id": backend_id,
            "modality": modality,
            "input": input_str,
            "dim": emb.dim,
            "values": list(emb.values),
        }
        path = self._path(key)
        tmp = path.with_suffix(".tmp")
        with self._write_lock:
            try:
                tmp.write_text(json.dumps(entry), encoding="utf-8")
                os.replace(tmp, path)
            except OSError as exc:
                logger.warning("cache write failed for %s (%s)", path, exc)


class CachedBackend(EncoderBackend):
    """Wraps a backend with the persistent cache; identity and results are unchanged."""

    def __init__(self, inner: EncoderBackend, cache: EmbeddingCache):
        self.inner = inner
        self.cache = cache

    @property
    def id(self) -> str:
        return self.inner.id

    @property
    def dim(self) -> int:
        return self.inner.dim

    @property
    def capabilities(self) -> Capabilities:
        return self.inner.capabilities

    def embed_text(self, text: str) -> Embedding:
        hit = self.cache.get(self.inner.id, "text", text)
        if hit is not None:
            return hit
        emb = self.inner.embed_text(text)
        self.cache.put(self.inner.id, "text", text, emb)
        return emb

    def embed_texts(self, texts: list[str]) -> list[Embedding]:
        out: list[Embedding | None] = []
        misses: list[str] = []
        miss_slots: list[int] = []
        for i, text in enumerate(texts):
            hit = self.cache.get(self.inner.id, "text", text)
            out.append(hit)
            if hit is None:
                misses.append(text)
                miss_slots.append(i)
        if misses:
            computed = self.inner.embed_texts(misses)
            for slot, text, emb in zip(miss_slots, misses, computed):
                self.cache.put(self.inner.id, "text", text, emb)
                out[slot] = emb
        return out  # type: ignore[return-value]

    def embed_images(self, payloads: list[bytes]) -> list[Embedding]:
        import base64

        out: list[Embedding] = []
        for payload in payloads:
            b64 = base64.b64encode(payload).decode("ascii")
            hit = self.cache.get(self.inner.id, "image", b64)
            if hit is None:
                hit = self.inner.embed_images([payload])[0]
                self.cache.put(self.inner.id, "image", b64, hit)
            out.append(hit)
        return out

    def embed_relaxed(self, prefix, suffix):
        # Gradient path is never cached; defer to the wrapped backend.
        return self.inner.embed_relaxed(prefix, suffix)  # type: ignore[attr-defined]

    def embed_relaxed_raw(self, prefix, weights, charset, insert_position):
        return self.inner.embed_relaxed_raw(prefix, weights, charset, insert_position)  # type: ignore[attr-defined]


def cached_embed(backend: EncoderBackend, text: str, cache: EmbeddingCache | None = None) -> Embedding:
    """Embed through the persistent cache (default location unless one is supplied)."""
    if cache is None:
        cache = EmbeddingCache.from_env()
    return CachedBackend(backend, cache).embed_text(text)
