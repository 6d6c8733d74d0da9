"""HTTP client for remote embedding services speaking the /v1/embed protocol."""

from __future__ import annotations

import base64
import time

import httpx

from ..embedding import Embedding
from ..errors import ProtocolError, RemoteError, TransportError
from .base import Capabilities, EncoderBackend


class RemoteEncoder(EncoderBackend):
    """Client for a remote text/image encoder.

    The service owns tokenization and the model; this client only speaks the
    wire protocol: POST {endpoint}/v1/embed with {"modality", "inputs"} and
    GET {endpoint}/healthz. Transport failures are retried with exponential
    backoff; protocol violations and service-reported errors are surfaced as
    ProtocolError and RemoteError respectively.
    """

    def __init__(
        self,
        endpoint: str,
        *,
        retries: int = 3,
        backoff: float = 0.25,
        timeout: float = 60.0,
        client: httpx.Client | None = None,
    ):
        self.endpoint = endpoint.rstrip("/")
        self.retries = retries
        self.backoff = backoff
        self._client = client or httpx.Client(timeout=timeout)
        self._model: str | None = None
        self._dim: int | None = None

    @property
    def id(self) -> str:
        self._resolve()
        return f"remote:{self._model}@{self.endpoint}"

    @property
    def dim(self) -> int:
        self._resolve()
        assert self._dim is not None
        return self._dim

    @property
    def capabilities(self) -> Capabilities:
        return Capabilities(supports_gradients=False, supports_images=True)

    def _resolve(self) -> None:
        if self._model is not None:
            return
        payload = self._request("GET", "/healthz")
        if not isinstance(payload, dict) or "model" not in payload or "dim" not in payload:
            raise ProtocolError(f"healthz response missing model/dim: {payload!r}")
        self._model = str(payload["model"])
        self._dim = int(payload["dim"])

    def _request(self, method: str, path: str, json_body: dict | None = None) -> dict:
        url = self.endpoint + path
        last_exc: Exception | None = None
        for attempt in range(self.retries + 1):
            try:
                resp = self._client.request(method, url, json=json_body)
            except httpx.HTTPError as exc:
                last_exc = exc
                if attempt < self.retries:
                    time.sleep(self.backoff * (2**attempt))
                continue
            return self._interpret(resp)
        raise TransportError(f"{method} {url} failed after {self.retries + 1} attempts: {last_exc}")

    @staticmethod
    def _interpret(resp: httpx.Response) -> dict:
        try:
            payload = resp.json()
        except ValueError:
            raise ProtocolError(f"non-JSON response (status {resp.status_code}): {resp.text[:200]!r}")
        if resp.status_code >= 400:
            if isinstance(payload, dict) and "error" in payload:
                raise RemoteError(str(payload["error"]), status_code=resp.status_code)
            raise ProtocolError(f"error status {resp.status_code} without an error field: {payload!r}")
        if not isinstance(payload, dict):
            raise ProtocolError(f"expected JSON object, got {type(payload).__name__}")
        return payload

    def _embed(self, modality: str, inputs: list[str]) -> list[Embedding]:
        payload = self._request("POST", "/v1/embed", {"modality": modality, "inputs": inputs})
        try:
            dim = int(payload["dim"])
            model = str(payload["model"])
            rows = payload["embeddings"]
        except (KeyError, TypeError, ValueError):
            raise ProtocolError(f"embed response missing dim/model/embeddings: {payload!r}")
        if not isinstance(rows, list) or len(rows) != len(inputs):
            raise ProtocolError(f"expected {len(inputs)} embeddings, got {len(rows) if isinstance(rows, list) else rows!r}")
        out = []
        for row in rows:
            if not isinstance(row, list) or len(row) != dim:
                raise ProtocolError(f"embedding row length does not match dim={dim}")
            out.append(Embedding(row))
        if self._model is None:
            self._model = model
            self._dim = dim
        elif model != self._model or dim != self._dim:
            raise ProtocolError(
                f"service identity changed mid-session: {self._model}/{self._dim} -> {model}/{dim}"
            )
        return out

    def embed_text(self, text: str) -> Embedding:
        return self._embed("text", [text])[0]

    def embed_texts(self, texts: list[str]) -> list[Embedding]:
        if not texts:
            return []
        return self._embed("text", texts)

    def embed_images(self, payloads: list[bytes]) -> list[Embedding]:
        if not payloads:
            return []
        inputs = [base64.b64encode(p).decode("ascii") for p in payloads]
        return self._embed("image", inputs)

    def healthcheck(self) -> dict:
        return self._request("GET", "/healthz")

    def close(self) -> None:
        self._client.close()
