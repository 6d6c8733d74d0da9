"""Run manifests: everything needed to reproduce a CLI invocation.

A manifest records the argv, the fully resolved configuration, the backend
identity, sha256 digests of input files, the tool version, and a timestamp.
Two runs of the same command differ only in the timestamp.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Mapping, Sequence


def sha256_file(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


@dataclass(frozen=True)
class RunManifest:
    argv: tuple[str, ...]
    config: dict
    backend_id: str
    input_hashes: dict[str, str]
    version: str
    timestamp: str = field(
        default_factory=lambda: datetime.now(timezone.utc).isoformat(timespec="seconds")
    )

    def to_dict(self) -> dict:
        return {
            "argv": list(self.argv),
            "config": self.config,
            "backend_id": self.backend_id,
            "input_hashes": dict(sorted(self.input_hashes.items())),
            "version": self.version,
            "timestamp": self.timestamp,
        }

    def write(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def build_manifest(
    argv: Sequence[str],
    config: Mapping,
    backend_id: str,
    input_paths: Sequence[str | Path],
    version: str,
) -> RunManifest:
    hashes = {str(p): sha256_file(p) for p in input_paths}
    return RunManifest(
        argv=tuple(argv),
        config=dict(config),
        backend_id=backend_id,
        input_hashes=hashes,
        version=version,
    )
