"""Scoring and aggregation: cosine scores per (prompt, image), grouped stats.

Scores use the plain cosine between text and image embeddings. Aggregates
report mean and population standard deviation per (setting, condition) cell,
written to JSON and CSV with identical rows.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .embedding import Embedding, cosine
from .encoders.cache import fnv1a64
from .errors import DimensionError, EmptyInputError

EVAL_TEMPLATE = "This is a photo of"

SETTINGS = ("untargeted", "targeted")
CONDITIONS = ("no_attack", "random", "greedy", "genetic", "pgd", "brute")


def targeted_eval_text(phrase: str) -> str:
    """Template used to score targeted runs against the target phrase."""
    return f"{EVAL_TEMPLATE} {phrase}"


def clip_score(text_embedding: Embedding, image_embedding: Embedding) -> float:
    return cosine(text_embedding, image_embedding)


def prompt_id_for(text: str) -> str:
    """Stable content-derived identifier, usable across runs and machines."""
    return f"p{fnv1a64(text.encode('utf-8')):016x}"


@dataclass(frozen=True)
class ScoreRecord:
    prompt_id: str
    image_id: str
    score: float
    condition: str
    setting: str

    def __post_init__(self):
        if self.condition not in CONDITIONS:
            raise ValueError(f"unknown condition {self.condition!r}; expected one of {CONDITIONS}")
        if self.setting not in SETTINGS:
            raise ValueError(f"unknown setting {self.setting!r}; expected one of {SETTINGS}")
        if not math.isfinite(self.score):
            raise ValueError("score must be finite")

    def to_dict(self) -> dict:
        return {
            "prompt_id": self.prompt_id,
            "image_id": self.image_id,
            "score": self.score,
            "condition": self.condition,
            "setting": self.setting,
        }


@dataclass(frozen=True)
class AggregateReport:
    mean: float
    std: float
    count: int

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("count must be >= 1")
        if self.std < 0.0:
            raise ValueError("std must be >= 0")


def aggregate(scores: Sequence[float]) -> AggregateReport:
    """Mean and population standard deviation (denominator n, not n-1)."""
    if not scores:
        raise EmptyInputError("cannot aggregate zero scores")
    n = len(scores)
    mean = sum(scores) / n
    var = sum((s - mean) ** 2 for s in scores) / n
    return AggregateReport(mean=mean, std=math.sqrt(var), count=n)


def aggregate_records(records: Iterable[ScoreRecord]) -> dict[tuple[str, str], AggregateReport]:
    """Group by (setting, condition) and aggregate each cell."""
    cells: dict[tuple[str, str], list[float]] = {}
    for rec in records:
        cells.setdefault((rec.setting, rec.condition), []).append(rec.score)
    return {key: aggregate(vals) for key, vals in sorted(cells.items())}


@dataclass(frozen=True)
class ImageEmbedding:
    """One stored image embedding.

    ``condition`` and ``prompt_id`` are optional pairing tags: when present,
    the image only scores against records for that condition or prompt.
    Untagged images pair with everything.
    """

    image_id: str
    embedding: Embedding
    condition: str | None = None
    prompt_id: str | None = None


def load_image_embeddings(path: str | Path) -> list[ImageEmbedding]:
    """Read image embeddings from JSONL: {"image_id", "dim", "values"} per line.

    Optional per-row keys "condition" and "prompt_id" restrict pairing.
    """
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            try:
                image_id = obj["image_id"]
                dim = obj["dim"]
                values = obj["values"]
            except KeyError as exc:
                raise ValueError(f"{path}:{lineno}: missing key {exc}") from exc
            if not isinstance(image_id, str) or not image_id:
                raise ValueError(f"{path}:{lineno}: image_id must be a non-empty string")
            if len(values) != dim:
                raise ValueError(f"{path}:{lineno}: dim is {dim} but values has {len(values)} entries")
            out.append(
                ImageEmbedding(
                    image_id=image_id,
                    embedding=Embedding(values),
                    condition=obj.get("condition"),
                    prompt_id=obj.get("prompt_id"),
                )
            )
    if not out:
        raise EmptyInputError(f"{path}: no image embeddings found")
    return out


def write_image_embeddings(path: str | Path, images: Iterable[ImageEmbedding]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for img in images:
            row = {"image_id": img.image_id, "dim": img.embedding.dim, "values": list(img.embedding.values)}
            if img.condition is not None:
                row["condition"] = img.condition
            if img.prompt_id is not None:
                row["prompt_id"] = img.prompt_id
            fh.write(json.dumps(row) + "\n")


def score_against_images(
    text_embedding: Embedding,
    images: Sequence[ImageEmbedding],
    *,
    prompt_id: str,
    condition: str,
    setting: str,
) -> list[ScoreRecord]:
    """One record per image; dimension mismatches name both sides."""
    records = []
    for img in images:
        if text_embedding.dim != img.embedding.dim:
            raise DimensionError(
                f"text embedding for prompt {prompt_id} has dim {text_embedding.dim}, "
                f"image {img.image_id} has dim {img.embedding.dim}"
            )
        records.append(
            ScoreRecord(
                prompt_id=prompt_id,
                image_id=img.image_id,
                score=clip_score(text_embedding, img.embedding),
                condition=condition,
                setting=setting,
            )
        )
    return records


def report_rows(cells: Mapping[tuple[str, str], AggregateReport]) -> list[dict]:
    rows = []
    for (setting, condition), agg in sorted(cells.items()):
        rows.append(
            {
                "setting": setting,
                "condition": condition,
                "mean": agg.mean,
                "std": agg.std,
                "count": agg.count,
            }
        )
    return rows


def write_report_json(path: str | Path, cells: Mapping[tuple[str, str], AggregateReport]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump({"report": report_rows(cells)}, fh, indent=2)
        fh.write("\n")


def write_report_csv(path: str | Path, cells: Mapping[tuple[str, str], AggregateReport]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["setting", "condition", "mean", "std", "count"])
        writer.writeheader()
        writer.writerows(report_rows(cells))


def read_report_json(path: str | Path) -> dict[tuple[str, str], AggregateReport]:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    return {
        (row["setting"], row["condition"]): AggregateReport(
            mean=row["mean"], std=row["std"], count=row["count"]
        )
        for row in data["report"]
    }


def write_records_jsonl(path: str | Path, records: Iterable[ScoreRecord]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec.to_dict()) + "\n")


def load_records_jsonl(path: str | Path) -> list[ScoreRecord]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                records.append(ScoreRecord(**obj))
            except (json.JSONDecodeError, TypeError, KeyError) as exc:
                raise ValueError(f"{path}:{lineno}: bad score record: {exc}") from exc
    return records
