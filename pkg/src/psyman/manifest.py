"""Reproducibility envelope: every command output gets a JSON manifest.

A manifest records the command name, the fully resolved flag values, the
seed, a 64-bit FNV-1a digest of every input file, and the toolkit version.
Replaying a command whose manifest matches an existing one reproduces the
outputs byte for byte, so manifests double as cache keys and provenance.
File-path flag values are recorded by basename only; the digests, not the
directory layout, identify the inputs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from ._version import VERSION

__all__ = ["FNV_OFFSET", "FNV_PRIME", "fnv1a64", "fnv1a64_file", "RunManifest"]

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
_MASK = (1 << 64) - 1


def fnv1a64(data: bytes) -> int:
    """64-bit FNV-1a: xor each byte into the hash, then multiply by the prime."""
    h = FNV_OFFSET
    for byte in data:
        h = ((h ^ byte) * FNV_PRIME) & _MASK
    return h


def fnv1a64_file(path: str) -> str:
    """Hex digest (16 lowercase chars) of a file's bytes."""
    with open(path, "rb") as fh:
        return f"{fnv1a64(fh.read()):016x}"


@dataclass(frozen=True)
class RunManifest:
    """Everything needed to reproduce one command invocation."""

    command: str
    seed: int
    flags: dict = field(default_factory=dict)
    input_digests: dict = field(default_factory=dict)
    version: str = VERSION

    def to_json(self) -> str:
        body = {
            "command": self.command,
            "seed": self.seed,
            "flags": self.flags,
            "input_digests": self.input_digests,
            "version": self.version,
        }
        return json.dumps(body, sort_keys=True, indent=2) + "\n"

    @staticmethod
    def from_json(text: str) -> "RunManifest":
        body = json.loads(text)
        return RunManifest(
            command=body["command"],
            seed=body["seed"],
            flags=body["flags"],
            input_digests=body["input_digests"],
            version=body["version"],
        )

    def write(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_json())
