"""Attack objectives and steerable-key-dimension extraction.

The untargeted objective is the cosine similarity between the embeddings of
the original and the perturbed prompt; attacks minimize it. The targeted
objective restricts the cosine to dimensions where sign-votes across a set of
sentence-pair difference vectors agree beyond a threshold.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .embedding import DimensionMask, Embedding, cosine, masked_cosine
from .encoders.base import EncoderBackend
from .errors import DimensionError, EmptyInputError, EmptyMaskError
from .perturbation import Prompt

logger = logging.getLogger("qfattack.objectives")

DEFAULT_VOTE_EPSILON = 0.9
DEFAULT_PAIR_COUNT = 10


@dataclass(frozen=True)
class SentencePair:
    """A sentence containing the adversary's target phrase and the same sentence without it."""

    with_target: Prompt
    without_target: Prompt

    def __post_init__(self):
        if self.with_target.text == self.without_target.text:
            raise ValueError("sentence pair must differ between with_target and without_target")


@dataclass(frozen=True)
class KeyDimConfig:
    epsilon: float = DEFAULT_VOTE_EPSILON
    pairs: tuple[SentencePair, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if not (0.0 < self.epsilon < 1.0):
            raise ValueError("epsilon must be in (0, 1)")
        if not self.pairs:
            raise ValueError("at least one sentence pair is required")


class CosineObjective:
    """Minimization objective cos(base embedding, candidate embedding), optionally masked.

    Holds the base embedding so repeated candidate evaluations only embed the
    candidate. ``loss_batch`` funnels through the backend's batch path, and
    ``value_and_grad_embedding`` supplies the analytic gradient with respect
    to a candidate embedding for gradient-based attacks.
    """

    def __init__(self, backend: EncoderBackend, base: Prompt, mask: DimensionMask | None = None):
        self.backend = backend
        self.base = base
        self.mask = mask
        self.base_embedding = backend.embed_text(base.text)
        if mask is not None:
            if mask.dim != self.base_embedding.dim:
                raise DimensionError(
                    f"mask dim {mask.dim} does not match backend dim {self.base_embedding.dim}"
                )
            if mask.selected == 0:
                raise EmptyMaskError("targeted objective requires a mask with at least one set bit")

    def loss(self, candidate_text: str) -> float:
        return self.loss_of_embedding(self.backend.embed_text(candidate_text))

    def loss_batch(self, candidate_texts: list[str]) -> list[float]:
        embs = self.backend.embed_texts(candidate_texts)
        return [self.loss_of_embedding(e) for e in embs]

    def loss_of_embedding(self, candidate: Embedding) -> float:
        if self.mask is None:
            return cosine(self.base_embedding, candidate)
        return masked_cosine(self.base_embedding, candidate, self.mask)

    def value_and_grad_embedding(self, candidate: np.ndarray) -> tuple[float, np.ndarray]:
        """Loss and dLoss/dCandidate at a raw candidate vector (pre-clamp value)."""
        a = np.asarray(self.base_embedding.values)
        y = np.asarray(candidate, dtype=np.float64)
        if self.mask is not None:
            m = np.asarray(self.mask.bits, dtype=np.float64)
            am, ym = a * m, y * m
        else:
            m = None
            am, ym = a, y
        na = float(np.linalg.norm(am))
        ny = float(np.linalg.norm(ym))
        if na == 0.0 or ny == 0.0:
            raise EmptyMaskError("masked vector collapsed to zero norm")
        value = float(np.dot(am, ym) / (na * ny))
        grad = (am / na - value * ym / ny) / ny
        if m is not None:
            grad = grad * m
        return value, grad


def untargeted_loss(base: Prompt, candidate: Prompt, backend: EncoderBackend) -> float:
    """Untargeted objective: cosine between base and candidate embeddings."""
    return CosineObjective(backend, base).loss(candidate.text)


def targeted_loss(base: Prompt, candidate: Prompt, mask: DimensionMask, backend: EncoderBackend) -> float:
    """Targeted objective: cosine restricted to the steerable key dimensions."""
    return CosineObjective(backend, base, mask=mask).loss(candidate.text)


def difference_vectors(pairs: list[SentencePair], backend: EncoderBackend) -> list[Embedding]:
    """Per-pair embedding differences τ(with_target) − τ(without_target), order preserved."""
    if not pairs:
        raise EmptyInputError("no sentence pairs given")
    texts = [p.with_target.text for p in pairs] + [p.without_target.text for p in pairs]
    embs = backend.embed_texts(texts)
    n = len(pairs)
    out = []
    for i in range(n):
        a, b = embs[i], embs[n + i]
        out.append(Embedding(x - y for x, y in zip(a.values, b.values)))
    return out


def extract_key_dims(diffs: list[Embedding], epsilon: float, *, strict: bool = True) -> DimensionMask:
    """Majority vote over difference-vector signs.

    Dimension j is selected when |sum_i sign(d_ij)| exceeds epsilon * n, with
    sign(0) counting as no vote. ``strict`` selects the comparison operator
    (default strict >; set False for >=).
    """
    if not diffs:
        raise EmptyInputError("no difference vectors given")
    dim = diffs[0].dim
    for d in diffs:
        if d.dim != dim:
            raise DimensionError("difference vectors disagree on dim")
    if not (0.0 < epsilon < 1.0):
        raise ValueError("epsilon must be in (0, 1)")
    n = len(diffs)
    threshold = epsilon * n
    bits = []
    for j in range(dim):
        vote = 0
        for d in diffs:
            v = d.values[j]
            vote += (v > 0.0) - (v < 0.0)
        passed = abs(vote) > threshold if strict else abs(vote) >= threshold
        bits.append(1 if passed else 0)
    mask = DimensionMask(bits)
    if mask.selected == 0:
        logger.warning("key-dimension vote selected no dimensions (epsilon=%s, n=%d)", epsilon, n)
    return mask


def load_sentence_pairs(path: str | Path) -> list[SentencePair]:
    """Parse a JSON Lines file of {"with_target", "without_target"} objects."""
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                pair = SentencePair(Prompt(obj["with_target"]), Prompt(obj["without_target"]))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise ValueError(f"{path}: bad sentence pair on line {lineno}: {exc}") from exc
            pairs.append(pair)
    if not pairs:
        raise EmptyInputError(f"{path}: no sentence pairs found")
    return pairs


def write_mask_file(path: str | Path, mask: DimensionMask, epsilon: float, n: int, extra: dict | None = None) -> None:
    payload = {
        "dim": mask.dim,
        "bits": list(mask.bits),
        "epsilon": epsilon,
        "n": n,
        "selected": mask.selected,
    }
    if extra:
        payload.update(extra)
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def load_mask_file(path: str | Path) -> DimensionMask:
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    try:
        bits = obj["bits"]
        dim = int(obj["dim"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"{path}: malformed mask file: {exc}") from exc
    mask = DimensionMask(bits)
    if mask.dim != dim:
        raise ValueError(f"{path}: mask dim field {dim} does not match {mask.dim} bits")
    return mask
