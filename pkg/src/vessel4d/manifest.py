"""Reproducibility manifests: config snapshot, input/output hashes, timings."""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

TOOL_NAME = "vessel4d"
TOOL_VERSION = "0.1.0"


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class RunManifest:
    """One manifest per CLI run; timings vary, hashed artifacts must not."""

    command: str
    config: dict = field(default_factory=dict)
    inputs: dict = field(default_factory=dict)  # path -> sha256
    outputs: dict = field(default_factory=dict)  # path -> sha256
    timings_s: dict = field(default_factory=dict)  # stage -> seconds
    tool: str = TOOL_NAME
    version: str = TOOL_VERSION

    def add_input(self, path) -> None:
        self.inputs[str(path)] = sha256_file(path)

    def add_output(self, path) -> None:
        self.outputs[str(path)] = sha256_file(path)

    def write(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        payload = {
            "tool": self.tool,
            "version": self.version,
            "command": self.command,
            "config": self.config,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "timings_s": self.timings_s,
        }
        path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")
        return path


class StageTimer:
    """Records wall-clock stage durations into a manifest."""

    def __init__(self, manifest: RunManifest, stage: str):
        self.manifest = manifest
        self.stage = stage

    def __enter__(self):
        self._start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.manifest.timings_s[self.stage] = time.perf_counter() - self._start
        return False
