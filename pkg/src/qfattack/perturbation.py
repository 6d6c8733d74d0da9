"""Character sets, prompts, suffix perturbations, and the Random baseline draw."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .rng import SplitMix64

DEFAULT_PERTURBATION_LENGTH = 5

# Printable ASCII without whitespace: '!' (0x21) through '~' (0x7E), 94 characters.
DEFAULT_CHARSET_STRING = "".join(chr(c) for c in range(0x21, 0x7F))


@dataclass(frozen=True)
class Charset:
    """Ordered candidate characters a perturbation may be built from."""

    chars: tuple[str, ...]

    def __init__(self, chars: Iterable[str]):
        cs = tuple(chars)
        if not cs:
            raise ValueError("charset must be nonempty")
        if any(len(c) != 1 for c in cs):
            raise ValueError("charset entries must be single characters")
        if len(set(cs)) != len(cs):
            raise ValueError("charset contains duplicate characters")
        object.__setattr__(self, "chars", cs)

    @classmethod
    def default(cls) -> "Charset":
        return cls(DEFAULT_CHARSET_STRING)

    @classmethod
    def from_spec(cls, spec: str) -> "Charset":
        """Build from a CLI-style spec: the literal word "default" or a string of characters."""
        if spec == "default":
            return cls.default()
        return cls(spec)

    def __len__(self) -> int:
        return len(self.chars)

    def __contains__(self, ch: str) -> bool:
        return ch in self.chars

    def as_string(self) -> str:
        return "".join(self.chars)


@dataclass(frozen=True)
class Prompt:
    """A nonempty piece of text fed to a text encoder."""

    text: str

    def __post_init__(self):
        if not self.text:
            raise ValueError("prompt must be nonempty")
        if self.text != self.text.strip():
            raise ValueError("prompt must not have leading or trailing whitespace")


@dataclass(frozen=True)
class Perturbation:
    """An ordered character suffix of fixed length appended to a base prompt."""

    chars: str

    def __post_init__(self):
        if not self.chars:
            raise ValueError("perturbation must be nonempty")

    def __len__(self) -> int:
        return len(self.chars)

    def check_against(self, charset: Charset, length: int) -> None:
        if len(self.chars) != length:
            raise ValueError(f"perturbation length {len(self.chars)} != configured {length}")
        for ch in self.chars:
            if ch not in charset:
                raise ValueError(f"perturbation character {ch!r} outside charset")


def assemble(base: Prompt, pert: Perturbation) -> Prompt:
    """Append the perturbation to the base prompt with a single separating space."""
    return Prompt(base.text + " " + pert.chars)


def assemble_text(base_text: str, suffix: str) -> str:
    """Raw-text variant of ``assemble`` used while a suffix is still being grown."""
    return base_text + " " + suffix


def random_perturbation(rng_seed: int, charset: Charset, length: int) -> Perturbation:
    """Draw ``length`` characters i.i.d. uniformly from ``charset``.

    Deterministic per seed: characters come from a splitmix64 stream seeded by
    ``rng_seed``, each 64-bit draw mapped to an index by multiply-shift.
    """
    if length < 1:
        raise ValueError("perturbation length must be >= 1")
    stream = SplitMix64(rng_seed)
    picks = [charset.chars[stream.next_index(len(charset))] for _ in range(length)]
    return Perturbation("".join(picks))
