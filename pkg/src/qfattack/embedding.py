"""Dense embedding vectors and the cosine primitives built on them.

All reductions run in a fixed left-to-right index order so results are
bit-identical across runs and worker counts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import DegenerateVectorError, DimensionError, EmptyMaskError


@dataclass(frozen=True)
class Embedding:
    """A fixed-length vector of 64-bit floats produced by an encoder."""

    values: tuple[float, ...]

    def __init__(self, values: Iterable[float]):
        vals = tuple(float(v) for v in values)
        if len(vals) < 1:
            raise DimensionError("embedding must have at least one dimension")
        for v in vals:
            if not math.isfinite(v):
                raise ValueError(f"embedding contains non-finite value {v!r}")
        object.__setattr__(self, "values", vals)

    @property
    def dim(self) -> int:
        return len(self.values)

    def norm(self) -> float:
        return math.sqrt(_dot(self.values, self.values))


@dataclass(frozen=True)
class DimensionMask:
    """Binary selector over embedding dimensions (the steerable-key-dimension mask)."""

    bits: tuple[int, ...]

    def __init__(self, bits: Iterable[int]):
        bs = tuple(int(b) for b in bits)
        if len(bs) < 1:
            raise DimensionError("mask must have at least one dimension")
        if any(b not in (0, 1) for b in bs):
            raise ValueError("mask bits must be 0 or 1")
        object.__setattr__(self, "bits", bs)

    @property
    def dim(self) -> int:
        return len(self.bits)

    @property
    def selected(self) -> int:
        return sum(self.bits)

    @classmethod
    def ones(cls, dim: int) -> "DimensionMask":
        return cls((1,) * dim)


def _dot(a: Sequence[float], b: Sequence[float]) -> float:
    # Canonical left-to-right summation; do not replace with vectorized dot.
    acc = 0.0
    for x, y in zip(a, b):
        acc += x * y
    return acc


def _clamp_unit(x: float) -> float:
    if x > 1.0:
        return 1.0
    if x < -1.0:
        return -1.0
    return x


def _require_same_dim(a: Embedding, b: Embedding) -> None:
    if a.dim != b.dim:
        raise DimensionError(f"embedding dims differ: {a.dim} vs {b.dim}")


def cosine(a: Embedding, b: Embedding) -> float:
    """Cosine similarity of two embeddings, clamped to [-1, 1].

    Raises DimensionError on dim mismatch and DegenerateVectorError if either
    vector has zero norm.
    """
    _require_same_dim(a, b)
    na = a.norm()
    nb = b.norm()
    if na == 0.0 or nb == 0.0:
        raise DegenerateVectorError("cosine undefined for zero-norm vector")
    return _clamp_unit(_dot(a.values, b.values) / (na * nb))


def masked_cosine(a: Embedding, b: Embedding, mask: DimensionMask) -> float:
    """Cosine similarity restricted to the dimensions selected by ``mask``.

    Equivalent to ``cosine(a * mask, b * mask)``. Raises EmptyMaskError for an
    all-zero mask and DegenerateVectorError if a masked sub-vector vanishes.
    """
    _require_same_dim(a, b)
    if mask.dim != a.dim:
        raise DimensionError(f"mask dim {mask.dim} does not match embedding dim {a.dim}")
    if mask.selected == 0:
        raise EmptyMaskError("mask selects no dimensions")
    ma = tuple(v * bit for v, bit in zip(a.values, mask.bits))
    mb = tuple(v * bit for v, bit in zip(b.values, mask.bits))
    na = math.sqrt(_dot(ma, ma))
    nb = math.sqrt(_dot(mb, mb))
    if na == 0.0 or nb == 0.0:
        raise DegenerateVectorError("masked sub-vector has zero norm")
    return _clamp_unit(_dot(ma, mb) / (na * nb))


def normalize(v: Embedding) -> Embedding:
    """Return ``v`` scaled to unit norm. Raises DegenerateVectorError on the zero vector."""
    n = v.norm()
    if n == 0.0:
        raise DegenerateVectorError("cannot normalize zero vector")
    return Embedding(x / n for x in v.values)
