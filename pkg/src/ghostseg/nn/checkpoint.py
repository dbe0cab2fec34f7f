"""Checkpoint persistence.

A checkpoint directory holds three files:

* ``manifest.txt`` - one tab-separated line per state entry:
  ``<path>\\tdtype=float32\\tshape=<d0>x<d1>...\\toffset=<bytes>\\tlength=<bytes>``
  (``shape=scalar`` for 0-d entries)
* ``weights.bin`` - every entry as little-endian float32, concatenated in manifest order
* ``spec.json`` - the NetworkSpec fields, the training seed and free-form metadata
"""

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import torch

from ..core.exceptions import FileOperationError
from .network import AttentionGhostUNetPP, NetworkSpec

logger = logging.getLogger("ghostseg.nn")

MANIFEST_FILE = "manifest.txt"
WEIGHTS_FILE = "weights.bin"
HEADER_FILE = "spec.json"
FORMAT_VERSION = 1


@dataclass(frozen=True)
class ManifestEntry:
    path: str
    shape: tuple[int, ...]
    offset: int
    length: int
    dtype: str = "float32"

    def to_line(self) -> str:
        shape = "x".join(str(d) for d in self.shape) if self.shape else "scalar"
        return f"{self.path}\tdtype={self.dtype}\tshape={shape}\toffset={self.offset}\tlength={self.length}"

    @classmethod
    def from_line(cls, line: str) -> "ManifestEntry":
        parts = line.rstrip("\n").split("\t")
        if len(parts) != 5:
            raise FileOperationError(f"Malformed manifest line: {line!r}")  # noqa: TRY003
        path, *fields = parts
        values = dict(item.split("=", 1) for item in fields)
        shape_text = values["shape"]
        shape = () if shape_text == "scalar" else tuple(int(d) for d in shape_text.split("x"))
        return cls(path, shape, int(values["offset"]), int(values["length"]), values["dtype"])


@dataclass
class CheckpointHeader:
    network: NetworkSpec
    seed: int
    metadata: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "format_version": FORMAT_VERSION,
            "network": self.network.to_dict(),
            "seed": self.seed,
            "metadata": self.metadata,
        }


def save_checkpoint(
    net: AttentionGhostUNetPP, directory: str | Path, seed: int, metadata: dict[str, Any] | None = None
) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)

    entries = []
    offset = 0
    try:
        with open(directory / WEIGHTS_FILE, "wb") as blob:
            for name, tensor in net.state_dict().items():
                array = tensor.detach().cpu().to(torch.float32).numpy().astype("<f4", copy=False)
                raw = np.ascontiguousarray(array).tobytes()
                blob.write(raw)
                entries.append(ManifestEntry(name, tuple(array.shape), offset, len(raw)))
                offset += len(raw)

        with open(directory / MANIFEST_FILE, "w", encoding="utf-8") as f:
            f.writelines(entry.to_line() + "\n" for entry in entries)

        header = CheckpointHeader(net.spec, seed, dict(metadata or {}))
        with open(directory / HEADER_FILE, "w", encoding="utf-8") as f:
            json.dump(header.to_dict(), f, indent=2)
    except OSError as e:
        raise FileOperationError(f"Cannot write checkpoint to {directory}: {e}") from e  # noqa: TRY003

    logger.debug("Saved checkpoint with %d entries (%d bytes) to %s", len(entries), offset, directory)
    return directory


def read_manifest(directory: str | Path) -> list[ManifestEntry]:
    path = Path(directory) / MANIFEST_FILE
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as e:
        raise FileOperationError(f"Cannot read checkpoint manifest {path}: {e}") from e  # noqa: TRY003
    return [ManifestEntry.from_line(line) for line in lines if line.strip()]


def read_header(directory: str | Path) -> CheckpointHeader:
    path = Path(directory) / HEADER_FILE
    try:
        with open(path, encoding="utf-8") as f:
            data = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise FileOperationError(f"Cannot read checkpoint header {path}: {e}") from e  # noqa: TRY003
    return CheckpointHeader(NetworkSpec.from_dict(data["network"]), int(data["seed"]), data.get("metadata", {}))


def load_state(directory: str | Path) -> dict[str, torch.Tensor]:
    """Decode the blob into float32 tensors keyed by manifest path."""
    directory = Path(directory)
    entries = read_manifest(directory)
    try:
        blob = (directory / WEIGHTS_FILE).read_bytes()
    except OSError as e:
        raise FileOperationError(f"Cannot read checkpoint weights in {directory}: {e}") from e  # noqa: TRY003

    state = {}
    for entry in entries:
        if entry.offset + entry.length > len(blob):
            raise FileOperationError(f"Entry {entry.path} runs past the end of {WEIGHTS_FILE}")  # noqa: TRY003
        expected = 4 * math.prod(entry.shape)
        if entry.length != expected:
            raise FileOperationError(  # noqa: TRY003
                f"Entry {entry.path} has length {entry.length}, expected {expected} for shape {entry.shape}"
            )
        array = np.frombuffer(blob, dtype="<f4", count=entry.length // 4, offset=entry.offset)
        state[entry.path] = torch.from_numpy(array.reshape(entry.shape).copy())
    return state


def load_checkpoint(directory: str | Path) -> tuple[AttentionGhostUNetPP, CheckpointHeader]:
    header = read_header(directory)
    net = AttentionGhostUNetPP(header.network)
    target = net.state_dict()
    state = load_state(directory)

    missing = sorted(set(target) - set(state))
    unexpected = sorted(set(state) - set(target))
    if missing or unexpected:
        raise FileOperationError(  # noqa: TRY003
            f"Checkpoint does not match its spec: missing={missing[:5]} unexpected={unexpected[:5]}"
        )
    mismatched = [name for name in target if tuple(state[name].shape) != tuple(target[name].shape)]
    if mismatched:
        raise FileOperationError(f"Checkpoint entry shapes do not match its spec: {mismatched[:5]}")  # noqa: TRY003
    net.load_state_dict({name: state[name].to(target[name].dtype) for name in target})
    return net, header
