"""Run the service: load the model, then serve until interrupted."""

from __future__ import annotations

import argparse
import sys

import uvicorn

from .app import create_app
from .config import DEFAULT_MODEL, load_config
from .model import build_encoder


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="clip-service",
        description="CLIP embedding service speaking POST /v1/embed and GET /healthz",
    )
    parser.add_argument("--model", help=f"checkpoint id or random:<arch> (default {DEFAULT_MODEL})")
    parser.add_argument("--host")
    parser.add_argument("--port", type=int)
    parser.add_argument("--max-batch", type=int, dest="max_batch")
    parser.add_argument("--max-image-bytes", type=int, dest="max_image_bytes")
    parser.add_argument("--device")
    parser.add_argument("--seed", type=int, help="weight seed for random:* models")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(vars(args))
        encoder = build_encoder(config)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    app = create_app(config, encoder)
    uvicorn.run(app, host=config.host, port=config.port, log_level="warning")
    return 0


if __name__ == "__main__":
    sys.exit(main())
