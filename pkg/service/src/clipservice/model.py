"""CLIP encoder wrapper serving pooled projection embeddings.

Two model families:

- Hugging Face checkpoint ids (e.g. ``openai/clip-vit-large-patch14``),
  loaded with the model's own tokenizer and image processor;
- ``random:<arch>`` ids that build the same architectures with seeded random
  weights and a byte-level tokenizer, for fully offline runs. Determinism
  contract is identical; only the weights differ from a trained checkpoint.

Every text forward is padded to a fixed (chunk, max_tokens) shape so an
input's embedding does not depend on what else shares its request, and images
are encoded one at a time for the same reason.
"""

from __future__ import annotations

import io
import threading
from typing import Callable

import torch
from PIL import Image

MAX_TOKENS = 77
TEXT_CHUNK = 8

# Byte-level vocabulary for random:* models: 256 byte values + bos/eos/pad.
BYTE_BOS, BYTE_EOS, BYTE_PAD = 256, 257, 258
BYTE_VOCAB = 259

RANDOM_ARCHS = {
    # ViT-L/14 geometry: 768-wide text tower projected to 768.
    "vit-l-14": {
        "text": dict(hidden_size=768, intermediate_size=3072, num_hidden_layers=12,
                     num_attention_heads=12, projection_dim=768),
        "vision": dict(hidden_size=1024, intermediate_size=4096, num_hidden_layers=24,
                       num_attention_heads=16, image_size=224, patch_size=14,
                       projection_dim=768),
    },
    # Small towers for fast tests; same code paths.
    "tiny": {
        "text": dict(hidden_size=64, intermediate_size=128, num_hidden_layers=2,
                     num_attention_heads=4, projection_dim=32),
        "vision": dict(hidden_size=64, intermediate_size=128, num_hidden_layers=2,
                       num_attention_heads=4, image_size=32, patch_size=8,
                       projection_dim=32),
    },
}


def tokenize_bytes(texts: list[str]) -> tuple[torch.Tensor, torch.Tensor]:
    """UTF-8 bytes framed by bos/eos, truncated and padded to MAX_TOKENS."""
    ids_rows, mask_rows = [], []
    for text in texts:
        ids = [BYTE_BOS] + list(text.encode("utf-8"))[: MAX_TOKENS - 2] + [BYTE_EOS]
        mask_rows.append([1] * len(ids) + [0] * (MAX_TOKENS - len(ids)))
        ids_rows.append(ids + [BYTE_PAD] * (MAX_TOKENS - len(ids)))
    return torch.tensor(ids_rows, dtype=torch.long), torch.tensor(mask_rows, dtype=torch.long)


class ClipEncoder:
    """Thread-safe text/image embedder with a lazily built vision tower."""

    def __init__(
        self,
        name: str,
        text_model,
        tokenize: Callable[[list[str]], tuple[torch.Tensor, torch.Tensor]],
        vision_builder: Callable[[], tuple[object, object]],
        device: str = "cpu",
    ):
        self.name = name
        self.device = torch.device(device)
        self._text = text_model.to(self.device).eval()
        self._tokenize = tokenize
        self._vision_builder = vision_builder
        self._vision = None
        self._image_processor = None
        self._lock = threading.Lock()
        self.dim = int(self._text.config.projection_dim)
        probe = self.embed_texts(["startup self-check"])
        if len(probe[0]) != self.dim:
            raise RuntimeError(
                f"text tower produced width {len(probe[0])}, config says {self.dim}"
            )

    def embed_texts(self, texts: list[str]) -> list[list[float]]:
        rows: list[list[float]] = []
        with self._lock:
            for start in range(0, len(texts), TEXT_CHUNK):
                part = texts[start:start + TEXT_CHUNK]
                # Pad the batch itself to a fixed shape: reduction order, and
                # therefore the exact bits, must not depend on batch size.
                padded = part + [""] * (TEXT_CHUNK - len(part))
                ids, mask = self._tokenize(padded)
                with torch.inference_mode():
                    out = self._text(
                        input_ids=ids.to(self.device), attention_mask=mask.to(self.device)
                    ).text_embeds
                rows.extend(row.tolist() for row in out[: len(part)].cpu())
        return rows

    def embed_images(self, payloads: list[bytes]) -> list[list[float]]:
        with self._lock:
            if self._vision is None:
                vision, processor = self._vision_builder()
                self._vision = vision.to(self.device).eval()
                self._image_processor = processor
            rows: list[list[float]] = []
            for i, blob in enumerate(payloads):
                try:
                    image = Image.open(io.BytesIO(blob)).convert("RGB")
                except Exception:
                    raise ValueError(f"could not decode image at inputs[{i}]")
                pixels = self._image_processor(images=[image], return_tensors="pt").pixel_values
                with torch.inference_mode():
                    out = self._vision(pixel_values=pixels.to(self.device)).image_embeds
                rows.append(out[0].cpu().tolist())
        return rows


def _build_random(model_id: str, arch: str, seed: int, device: str) -> ClipEncoder:
    from transformers import (
        CLIPImageProcessor,
        CLIPTextConfig,
        CLIPTextModelWithProjection,
        CLIPVisionConfig,
        CLIPVisionModelWithProjection,
    )

    if arch not in RANDOM_ARCHS:
        known = ", ".join(sorted(RANDOM_ARCHS))
        raise ValueError(f"unknown random architecture {arch!r} (known: {known})")
    geometry = RANDOM_ARCHS[arch]
    text_config = CLIPTextConfig(
        vocab_size=BYTE_VOCAB,
        max_position_embeddings=MAX_TOKENS,
        # Defaults point into a 49k vocab; pin them inside the byte vocab.
        bos_token_id=BYTE_BOS,
        eos_token_id=BYTE_EOS,
        pad_token_id=BYTE_PAD,
        **geometry["text"],
    )
    torch.manual_seed(seed)
    text_model = CLIPTextModelWithProjection(text_config)

    def vision_builder():
        vision_config = CLIPVisionConfig(**geometry["vision"])
        torch.manual_seed(seed + 1)
        vision = CLIPVisionModelWithProjection(vision_config)
        size = geometry["vision"]["image_size"]
        processor = CLIPImageProcessor(
            size={"shortest_edge": size}, crop_size={"height": size, "width": size}
        )
        return vision, processor

    return ClipEncoder(model_id, text_model, tokenize_bytes, vision_builder, device)


def _build_pretrained(model_id: str, device: str) -> ClipEncoder:
    from transformers import (
        AutoTokenizer,
        CLIPImageProcessor,
        CLIPTextModelWithProjection,
        CLIPVisionModelWithProjection,
    )

    tokenizer = AutoTokenizer.from_pretrained(model_id)
    text_model = CLIPTextModelWithProjection.from_pretrained(model_id)

    def tokenize(texts: list[str]):
        enc = tokenizer(
            texts, padding="max_length", truncation=True,
            max_length=MAX_TOKENS, return_tensors="pt",
        )
        return enc.input_ids, enc.attention_mask

    def vision_builder():
        vision = CLIPVisionModelWithProjection.from_pretrained(model_id)
        processor = CLIPImageProcessor.from_pretrained(model_id)
        return vision, processor

    return ClipEncoder(model_id, text_model, tokenize, vision_builder, device)


def build_encoder(config) -> ClipEncoder:
    """Build the encoder named by config.model (``random:<arch>`` or a checkpoint id)."""
    if config.model.startswith("random:"):
        arch = config.model.split(":", 1)[1]
        return _build_random(config.model, arch, config.seed, config.device)
    return _build_pretrained(config.model, config.device)
