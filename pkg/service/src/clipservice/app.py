"""HTTP app exposing the embedding wire protocol.

POST /v1/embed  {"modality": "text"|"image", "inputs": [...]}
                -> {"dim": int, "model": str, "embeddings": [[float, ...], ...]}
GET  /healthz   -> {"status": "ok", "model": str, "dim": int}

Every error response carries {"error": str}: 400 for malformed requests,
413 for over-limit batches or images, 500 for model failures, 503 before the
model is loaded. Embeddings are returned in input order.
"""

from __future__ import annotations

import base64
import binascii

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from starlette.concurrency import run_in_threadpool

from .config import ServiceConfig
from .model import ClipEncoder


def _error(status: int, message: str) -> JSONResponse:
    return JSONResponse({"error": message}, status_code=status)


def create_app(config: ServiceConfig, encoder: ClipEncoder | None = None) -> FastAPI:
    app = FastAPI(title="clipservice", docs_url=None, redoc_url=None)
    app.state.config = config
    app.state.encoder = encoder

    @app.get("/healthz")
    def healthz():
        enc = app.state.encoder
        if enc is None:
            return _error(503, "model not loaded")
        return {"status": "ok", "model": enc.name, "dim": enc.dim}

    @app.post("/v1/embed")
    async def embed(request: Request):
        enc = app.state.encoder
        if enc is None:
            return _error(503, "model not loaded")
        try:
            payload = await request.json()
        except Exception:
            return _error(400, "request body must be JSON")
        if not isinstance(payload, dict):
            return _error(400, "request body must be a JSON object")
        modality = payload.get("modality")
        inputs = payload.get("inputs")
        if modality not in ("text", "image"):
            return _error(400, f"unknown modality: {modality!r}")
        if not isinstance(inputs, list) or not inputs:
            return _error(400, "inputs must be a non-empty list")
        if len(inputs) > config.max_batch:
            return _error(413, f"batch of {len(inputs)} exceeds limit {config.max_batch}")
        if not all(isinstance(item, str) for item in inputs):
            return _error(400, "inputs must be strings")

        if modality == "text":
            work, args = enc.embed_texts, (list(inputs),)
        else:
            blobs = []
            for i, item in enumerate(inputs):
                try:
                    blob = base64.b64decode(item, validate=True)
                except binascii.Error:
                    return _error(400, f"inputs[{i}] is not valid base64")
                if len(blob) > config.max_image_bytes:
                    return _error(
                        413, f"image at inputs[{i}] exceeds {config.max_image_bytes} bytes"
                    )
                blobs.append(blob)
            work, args = enc.embed_images, (blobs,)

        try:
            rows = await run_in_threadpool(work, *args)
        except ValueError as exc:
            return _error(400, str(exc))
        except Exception as exc:
            return _error(500, f"model failure: {exc}")
        return {"dim": enc.dim, "model": enc.name, "embeddings": rows}

    return app
