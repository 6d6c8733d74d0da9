"""Deterministic synthetic text encoder with an exact differentiable relaxation.

The encoder maps each character to a fixed pseudo-random vector (splitmix64
keyed by seed, codepoint, and dimension index) and sums them with a geometric
positional decay before normalizing. Order matters, appended suffixes have a
diminishing but nonzero influence, and every value is reproducible from the
config alone, which makes the encoder a desk-scale stand-in for a real text
encoder when verifying attack optimizers.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..embedding import Embedding, normalize
from ..errors import DegenerateVectorError, EmptyInputError, SimplexError
from ..perturbation import Charset
from ..rng import mix64
from .base import Capabilities, EncoderBackend

_CP_SALT = 0x9E3779B97F4A7C15
_DIM_SALT = 0xBF58476D1CE4E5B9
_MASK64 = (1 << 64) - 1

# Pullback: maps dLoss/dOutputEmbedding to dLoss/dWeights of the relaxed suffix.
Pullback = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class SyntheticEncoderConfig:
    seed: int
    dim: int = 64
    decay: float = 0.95

    def __post_init__(self):
        if self.dim < 2:
            raise ValueError("dim must be >= 2")
        if not (0.0 < self.decay <= 1.0):
            raise ValueError("decay must be in (0, 1]")


@dataclass(frozen=True)
class RelaxedSuffix:
    """Row-stochastic soft suffix: one probability row over the charset per slot."""

    weights: np.ndarray
    charset: Charset
    insert_position: int

    def __init__(self, weights: np.ndarray, charset: Charset, insert_position: int):
        w = np.array(weights, dtype=np.float64)
        if w.ndim != 2 or w.shape[1] != len(charset):
            raise ValueError(f"weights must be (L, {len(charset)}), got {w.shape}")
        if w.shape[0] < 1:
            raise ValueError("relaxed suffix needs at least one slot")
        if insert_position < 0:
            raise ValueError("insert_position must be >= 0")
        _check_simplex(w, tol=1e-9)
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "charset", charset)
        object.__setattr__(self, "insert_position", int(insert_position))

    @property
    def length(self) -> int:
        return self.weights.shape[0]

    @classmethod
    def uniform(cls, charset: Charset, length: int, insert_position: int) -> "RelaxedSuffix":
        w = np.full((length, len(charset)), 1.0 / len(charset))
        return cls(w, charset, insert_position)

    @classmethod
    def one_hot(cls, suffix: str, charset: Charset, insert_position: int) -> "RelaxedSuffix":
        w = np.zeros((len(suffix), len(charset)))
        for slot, ch in enumerate(suffix):
            w[slot, charset.chars.index(ch)] = 1.0
        return cls(w, charset, insert_position)

    def discretized(self) -> str:
        """Argmax per row; ties resolved toward the lowest codepoint."""
        out = []
        for row in self.weights:
            peak = row.max()
            candidates = [self.charset.chars[i] for i in np.flatnonzero(row == peak)]
            out.append(min(candidates))
        return "".join(out)


def _check_simplex(w: np.ndarray, tol: float) -> None:
    if np.any(w < 0.0):
        raise SimplexError("relaxed suffix weights must be nonnegative")
    sums = w.sum(axis=1)
    worst = float(np.max(np.abs(sums - 1.0)))
    if worst > tol:
        raise SimplexError(f"relaxed suffix row sum off simplex by {worst:.3e} (tol {tol:.0e})")


class SyntheticEncoder(EncoderBackend):
    """Seeded character-sum encoder; the only backend exposing analytic gradients."""

    def __init__(self, config: SyntheticEncoderConfig):
        self.config = config
        self._charvecs: dict[int, np.ndarray] = {}
        self._charmats: dict[str, np.ndarray] = {}
        self._powers = np.ones(1)

    @property
    def id(self) -> str:
        c = self.config
        return f"synthetic:seed={c.seed};dim={c.dim};decay={c.decay!r}"

    @property
    def dim(self) -> int:
        return self.config.dim

    @property
    def capabilities(self) -> Capabilities:
        return Capabilities(supports_gradients=True, supports_images=False)

    def charvec(self, ch: str) -> np.ndarray:
        """Fixed pseudo-random vector in [-1, 1)^dim for one character."""
        cp = ord(ch)
        vec = self._charvecs.get(cp)
        if vec is None:
            seed = self.config.seed
            base = seed ^ ((cp * _CP_SALT) & _MASK64)
            vec = np.empty(self.config.dim)
            for j in range(self.config.dim):
                u = mix64(base ^ ((j * _DIM_SALT) & _MASK64)) >> 11
                vec[j] = 2.0 * (u / float(1 << 53)) - 1.0
            vec.setflags(write=False)
            self._charvecs[cp] = vec
        return vec

    def charset_matrix(self, charset: Charset) -> np.ndarray:
        """(|charset|, dim) matrix of character vectors, row order = charset order."""
        key = charset.as_string()
        mat = self._charmats.get(key)
        if mat is None:
            mat = np.stack([self.charvec(c) for c in charset.chars])
            mat.setflags(write=False)
            self._charmats[key] = mat
        return mat

    def decay_powers(self, n: int) -> np.ndarray:
        """[decay^0 .. decay^(n-1)], extended on demand via cumulative products."""
        if n > len(self._powers):
            vals = list(self._powers)
            while len(vals) < n:
                vals.append(vals[-1] * self.config.decay)
            arr = np.array(vals)
            arr.setflags(write=False)
            self._powers = arr
        return self._powers[:n]

    def _accumulate(self, text: str) -> np.ndarray:
        mat = np.stack([self.charvec(c) for c in text])
        return self.decay_powers(len(text)) @ mat

    def embed_text(self, text: str) -> Embedding:
        if not text:
            raise EmptyInputError("cannot embed empty text")
        return normalize(Embedding(self._accumulate(text)))

    def embed_relaxed(self, prefix: str, suffix: RelaxedSuffix) -> tuple[Embedding, Pullback]:
        """Embed prefix plus a soft suffix; also return the gradient pullback.

        The pullback maps an upstream gradient with respect to the returned
        (normalized) embedding to the gradient with respect to the suffix
        weights, exactly through the normalization.
        """
        _check_simplex(suffix.weights, tol=1e-6)
        return self.embed_relaxed_raw(prefix, suffix.weights, suffix.charset, suffix.insert_position)

    def embed_relaxed_raw(
        self, prefix: str, weights: np.ndarray, charset: Charset, insert_position: int
    ) -> tuple[Embedding, Pullback]:
        """Unvalidated numeric core of ``embed_relaxed``.

        Accepts arbitrary weight matrices (including off-simplex points), which
        finite-difference verification needs.
        """
        if not prefix:
            raise EmptyInputError("cannot embed empty prefix")
        length = weights.shape[0]
        mat = self.charset_matrix(charset)
        powers = self.decay_powers(insert_position + length)
        slot_scales = powers[insert_position : insert_position + length]
        e = self._accumulate(prefix) + slot_scales @ (weights @ mat)
        sq = float(np.dot(e, e))
        if sq == 0.0:
            raise DegenerateVectorError("relaxed embedding collapsed to zero vector")
        n = float(np.sqrt(sq))
        y = e / n

        def pullback(grad_output: np.ndarray) -> np.ndarray:
            g = np.asarray(grad_output, dtype=np.float64)
            d_e = (g - np.dot(g, y) * y) / n
            return np.outer(slot_scales, mat @ d_e)

        return Embedding(y), pullback


def synthetic_embed(text: str, cfg: SyntheticEncoderConfig) -> Embedding:
    return _encoder_for(cfg).embed_text(text)


def synthetic_embed_relaxed(
    prefix: str, suffix: RelaxedSuffix, cfg: SyntheticEncoderConfig
) -> tuple[Embedding, Pullback]:
    return _encoder_for(cfg).embed_relaxed(prefix, suffix)


_ENCODERS: dict[SyntheticEncoderConfig, SyntheticEncoder] = {}


def _encoder_for(cfg: SyntheticEncoderConfig) -> SyntheticEncoder:
    enc = _ENCODERS.get(cfg)
    if enc is None:
        enc = _ENCODERS[cfg] = SyntheticEncoder(cfg)
    return enc
