"""Bundled evaluation corpus: 20 scene prompts and example sentence pairs."""

from __future__ import annotations

from importlib import resources
from pathlib import Path

from .objectives import SentencePair, load_sentence_pairs
from .perturbation import Prompt


def _data(name: str):
    return resources.files("qfattack").joinpath("data", name)


def load_prompts(path: str | Path | None = None) -> list[Prompt]:
    """Read one prompt per line; blank lines and ``#`` comments are skipped."""
    if path is None:
        text = _data("prompts.txt").read_text(encoding="utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    prompts = []
    for line in text.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            prompts.append(Prompt(line))
    return prompts


def load_bundled_pairs() -> list[SentencePair]:
    """Sentence pairs differing only by the bundled target phrase."""
    with resources.as_file(_data("pairs_sailboat.jsonl")) as path:
        return load_sentence_pairs(path)
