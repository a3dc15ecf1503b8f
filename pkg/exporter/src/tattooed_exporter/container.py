"""Standalone reader/writer for the .tnsr tensor container.

The format (independently implemented here so this tool has no dependency on
the watermarking library):

    magic "TNSR0001" (8 bytes)
    header length, little-endian uint64 (8 bytes)
    UTF-8 JSON manifest: {"tensors": [{name, shape, dtype, offset,
        byte_length}, ...]}
    zero padding so the blob starts 4-byte aligned
    blob: little-endian float32 data, offsets relative to blob start,
        contiguous and ascending
"""

from __future__ import annotations

import json
import math

import numpy as np

from .errors import ContainerError

MAGIC = b"TNSR0001"


def write_tnsr(named: list[tuple[str, np.ndarray]], path) -> None:
    entries = []
    chunks = []
    offset = 0
    for name, array in named:
        data = np.ascontiguousarray(array, dtype="<f4")
        entries.append(
            {
                "name": name,
                "shape": list(data.shape),
                "dtype": "f32",
                "offset": offset,
                "byte_length": data.size * 4,
            }
        )
        chunks.append(data.tobytes())
        offset += data.size * 4
    header = json.dumps({"tensors": entries}, separators=(",", ":")).encode("utf-8")
    pad = (-(len(MAGIC) + 8 + len(header))) % 4
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(len(header).to_bytes(8, "little"))
        fh.write(header)
        fh.write(b"\x00" * pad)
        for chunk in chunks:
            fh.write(chunk)


def read_tnsr(path) -> list[tuple[str, np.ndarray]]:
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 16 or data[:8] != MAGIC:
        raise ContainerError(f"{path!s} is not a tensor container")
    header_len = int.from_bytes(data[8:16], "little")
    if 16 + header_len > len(data):
        raise ContainerError("truncated container header")
    try:
        entries = json.loads(data[16 : 16 + header_len].decode("utf-8"))["tensors"]
    except (KeyError, ValueError) as exc:
        raise ContainerError(f"malformed manifest: {exc}") from exc
    blob_start = 16 + header_len + ((-(16 + header_len)) % 4)
    named = []
    for entry in entries:
        shape = tuple(int(s) for s in entry["shape"])
        count = int(math.prod(shape)) if shape else 1
        if entry.get("dtype", "f32") != "f32":
            raise ContainerError(f"unsupported dtype in {entry['name']!r}")
        if int(entry["byte_length"]) != count * 4:
            raise ContainerError(f"byte_length mismatch in {entry['name']!r}")
        start = blob_start + int(entry["offset"])
        flat = np.frombuffer(data, dtype="<f4", count=count, offset=start)
        named.append((str(entry["name"]), flat.reshape(shape)))
    return named
