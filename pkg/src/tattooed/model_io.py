"""Tensor container file format and canonical parameter flattening.

The ``.tnsr`` container is the byte-exact interchange format every other
module builds on:

    magic "TNSR0001" (8 bytes)
    header length, little-endian uint64 (8 bytes)
    UTF-8 JSON manifest (header length bytes)
    zero padding so the blob starts 4-byte aligned
    blob: little-endian float32 tensor data, contiguous

The manifest is ``{"tensors": [{"name", "shape", "dtype", "offset",
"byte_length"}, ...]}`` with offsets relative to the blob start,
non-overlapping, ascending and 4-byte aligned.  Flattening order is manifest
order, row-major within each tensor, which fixes the vector position of every
scalar across implementations.
"""

from __future__ import annotations

import hashlib
import io
import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import FormatError
from .keying import seeded_generator

MAGIC = b"TNSR0001"
_DTYPE = "f32"
_ITEM = 4  # bytes per f32 scalar


@dataclass(frozen=True)
class TensorEntry:
    name: str
    shape: tuple[int, ...]
    offset: int
    byte_length: int
    dtype: str = _DTYPE

    @property
    def count(self) -> int:
        return int(math.prod(self.shape)) if self.shape else 1


class TensorContainer:
    """Immutable ordered set of named float32 tensors plus their raw blob."""

    def __init__(self, manifest: list[TensorEntry], blob: bytes):
        self.manifest = list(manifest)
        self.blob = bytes(blob)
        self._validate()

    def _validate(self) -> None:
        names = [e.name for e in self.manifest]
        if len(set(names)) != len(names):
            raise FormatError("duplicate tensor names in manifest")
        cursor = 0
        total = 0
        for entry in self.manifest:
            if entry.dtype != _DTYPE:
                raise FormatError(f"unsupported dtype {entry.dtype!r}")
            if entry.offset % _ITEM != 0:
                raise FormatError(f"tensor {entry.name!r} offset not 4-byte aligned")
            if entry.offset < cursor:
                raise FormatError(f"tensor {entry.name!r} overlaps previous data")
            if entry.byte_length != entry.count * _ITEM:
                raise FormatError(
                    f"tensor {entry.name!r} byte_length {entry.byte_length} "
                    f"does not match shape {entry.shape}"
                )
            cursor = entry.offset + entry.byte_length
            total += entry.count
        if total * _ITEM != len(self.blob):
            raise FormatError(
                f"blob holds {len(self.blob) // _ITEM} scalars, manifest claims {total}"
            )

    # -- access ---------------------------------------------------------

    def names(self) -> list[str]:
        return [e.name for e in self.manifest]

    def entry(self, name: str) -> TensorEntry:
        for e in self.manifest:
            if e.name == name:
                return e
        raise KeyError(name)

    def tensor(self, name: str) -> np.ndarray:
        e = self.entry(name)
        flat = np.frombuffer(
            self.blob, dtype="<f4", count=e.count, offset=e.offset
        )
        return flat.reshape(e.shape)

    def tensors(self) -> list[tuple[str, np.ndarray]]:
        return [(e.name, self.tensor(e.name)) for e in self.manifest]

    @property
    def total_params(self) -> int:
        return sum(e.count for e in self.manifest)

    # -- serialization ----------------------------------------------------

    def to_bytes(self) -> bytes:
        header = json.dumps(
            {
                "tensors": [
                    {
                        "name": e.name,
                        "shape": list(e.shape),
                        "dtype": e.dtype,
                        "offset": e.offset,
                        "byte_length": e.byte_length,
                    }
                    for e in self.manifest
                ]
            },
            separators=(",", ":"),
        ).encode("utf-8")
        pad = (-(len(MAGIC) + 8 + len(header))) % _ITEM
        out = io.BytesIO()
        out.write(MAGIC)
        out.write(len(header).to_bytes(8, "little"))
        out.write(header)
        out.write(b"\x00" * pad)
        out.write(self.blob)
        return out.getvalue()

    @classmethod
    def from_bytes(cls, data: bytes) -> "TensorContainer":
        if len(data) < 16 or data[:8] != MAGIC:
            raise FormatError("not a tensor container (bad magic)")
        header_len = int.from_bytes(data[8:16], "little")
        if 16 + header_len > len(data):
            raise FormatError("truncated container header")
        try:
            header = json.loads(data[16 : 16 + header_len].decode("utf-8"))
            raw_entries = header["tensors"]
            manifest = [
                TensorEntry(
                    name=str(d["name"]),
                    shape=tuple(int(s) for s in d["shape"]),
                    offset=int(d["offset"]),
                    byte_length=int(d["byte_length"]),
                    dtype=str(d.get("dtype", _DTYPE)),
                )
                for d in raw_entries
            ]
        except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
            raise FormatError(f"malformed container manifest: {exc}") from exc
        pad = (-(16 + header_len)) % _ITEM
        blob = data[16 + header_len + pad :]
        return cls(manifest, blob)

    def content_hash(self) -> str:
        return hashlib.sha256(self.to_bytes()).hexdigest()

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, TensorContainer)
            and self.manifest == other.manifest
            and self.blob == other.blob
        )


def container_from_tensors(named: list[tuple[str, np.ndarray]]) -> TensorContainer:
    """Pack arrays (coerced to little-endian f32, C order) into a container."""
    manifest = []
    chunks = []
    offset = 0
    for name, array in named:
        data = np.ascontiguousarray(array, dtype="<f4")
        nbytes = data.size * _ITEM
        manifest.append(
            TensorEntry(name=name, shape=tuple(data.shape), offset=offset, byte_length=nbytes)
        )
        chunks.append(data.tobytes())
        offset += nbytes
    return TensorContainer(manifest, b"".join(chunks))


def save(container: TensorContainer, path) -> None:
    with open(path, "wb") as fh:
        fh.write(container.to_bytes())


def load(path) -> TensorContainer:
    with open(path, "rb") as fh:
        return TensorContainer.from_bytes(fh.read())


@dataclass(frozen=True)
class ParameterVector:
    """Flattened model weights plus the hash of the container they came from."""

    values: np.ndarray
    provenance: str

    def __post_init__(self):
        object.__setattr__(
            self, "values", np.asarray(self.values, dtype=np.float64)
        )

    def __len__(self) -> int:
        return len(self.values)

    @classmethod
    def from_values(cls, values) -> "ParameterVector":
        """Wrap a bare vector; provenance is the hash of its f32 image."""
        arr = np.asarray(values, dtype=np.float64)
        digest = hashlib.sha256(arr.astype("<f4").tobytes()).hexdigest()
        return cls(values=arr, provenance=digest)


def flatten(container: TensorContainer) -> ParameterVector:
    """Canonical flattening: manifest order, row-major within each tensor."""
    flat = np.frombuffer(container.blob, dtype="<f4").astype(np.float64)
    return ParameterVector(values=flat, provenance=container.content_hash())


def unflatten(vector, template: TensorContainer) -> TensorContainer:
    """Rebuild a container with the template's manifest and new values."""
    values = vector.values if isinstance(vector, ParameterVector) else np.asarray(vector)
    if values.size != template.total_params:
        raise FormatError(
            f"vector has {values.size} values, manifest expects {template.total_params}"
        )
    blob = values.astype("<f4").tobytes()
    return TensorContainer(template.manifest, blob)


def synth_model(layer_sizes, init_seed: int | bytes = 0) -> TensorContainer:
    """Synthetic dense network: weights and biases ~ N(0, 1/fan_in), seeded.

    ``layer_sizes`` are the activation widths, e.g. ``[784, 256, 10]`` gives
    two weight matrices.  Tensors are named ``dense{i}.weight`` (out x in)
    and ``dense{i}.bias``.
    """
    sizes = [int(s) for s in layer_sizes]
    if len(sizes) < 2 or any(s < 1 for s in sizes):
        raise ValueError("layer_sizes needs at least two positive entries")
    rng = seeded_generator("synth", init_seed)
    named = []
    for i, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:])):
        std = 1.0 / math.sqrt(fan_in)
        named.append((f"dense{i}.weight", rng.normal(0.0, std, size=(fan_out, fan_in))))
        named.append((f"dense{i}.bias", rng.normal(0.0, std, size=(fan_out,))))
    return container_from_tensors(named)


def dense_layers(container: TensorContainer) -> list[tuple[np.ndarray, np.ndarray]]:
    """Interpret a container as [(weight, bias), ...] for a dense network.

    Expects alternating (out x in) weight and (out,) bias tensors whose
    widths chain together; raises FormatError otherwise.
    """
    entries = container.manifest
    if len(entries) < 2 or len(entries) % 2 != 0:
        raise FormatError("container is not an alternating weight/bias stack")
    layers = []
    prev_out = None
    for wi in range(0, len(entries), 2):
        w = container.tensor(entries[wi].name)
        b = container.tensor(entries[wi + 1].name)
        if w.ndim != 2 or b.ndim != 1 or w.shape[0] != b.shape[0]:
            raise FormatError(
                f"tensors {entries[wi].name!r}/{entries[wi + 1].name!r} "
                "are not a (out x in) weight with matching bias"
            )
        if prev_out is not None and w.shape[1] != prev_out:
            raise FormatError(
                f"layer {wi // 2} input width {w.shape[1]} does not chain "
                f"with previous output width {prev_out}"
            )
        prev_out = w.shape[0]
        layers.append((w, b))
    return layers


def container_from_layers(
    layers: list[tuple[np.ndarray, np.ndarray]], template: TensorContainer
) -> TensorContainer:
    """Rebuild a dense-network container, keeping the template's tensor names."""
    named = []
    for (w, b), wi in zip(layers, range(0, len(template.manifest), 2)):
        named.append((template.manifest[wi].name, w))
        named.append((template.manifest[wi + 1].name, b))
    return container_from_tensors(named)
