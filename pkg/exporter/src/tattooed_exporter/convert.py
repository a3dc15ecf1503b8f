"""Checkpoint <-> container conversion.

Supported checkpoint formats: PyTorch tensor dictionaries (.pt / .pth / .bin,
anything torch.load can open with weights_only=True) and NumPy .npz archives.
Exported tensors are coerced to float32 (recorded per tensor) and written in
sorted-key order, so marking and verification of exported models agree across
machines.  Integer and boolean tensors are refused: the watermark substrate
is float weights, and refusing keeps the f32 round-trip guarantee exact.
"""

from __future__ import annotations

import collections
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from .container import read_tnsr, write_tnsr
from .errors import CheckpointImportError, ExportError

_FLOAT_DTYPES = {torch.float16, torch.bfloat16, torch.float32, torch.float64}


@dataclass(frozen=True)
class ExportManifest:
    source_format: str
    name_mapping: list[tuple[str, str]]
    coercions: list[tuple[str, str]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "source_format": self.source_format,
            "name_mapping": [list(pair) for pair in self.name_mapping],
            "coercions": [list(pair) for pair in self.coercions],
        }


def _load_checkpoint(path) -> tuple[str, "collections.OrderedDict[str, object]"]:
    path = Path(path)
    if path.suffix == ".npz":
        archive = np.load(path)
        return "npz", collections.OrderedDict(
            (key, archive[key]) for key in archive.files
        )
    loaded = torch.load(path, map_location="cpu", weights_only=True)
    if not isinstance(loaded, dict) or not loaded:
        raise ExportError(
            f"{path.name} is not a tensor dictionary (got {type(loaded).__name__})"
        )
    return "pytorch", collections.OrderedDict(loaded)


def _as_float32(key: str, value) -> tuple[np.ndarray, str | None]:
    """Return (f32 array, original dtype if coerced)."""
    if isinstance(value, torch.Tensor):
        if value.dtype not in _FLOAT_DTYPES:
            raise ExportError(f"tensor {key!r} has unsupported dtype {value.dtype}")
        coerced = None if value.dtype == torch.float32 else str(value.dtype)
        return value.detach().to(torch.float32).cpu().numpy(), coerced
    array = np.asarray(value)
    if not np.issubdtype(array.dtype, np.floating):
        raise ExportError(f"tensor {key!r} has unsupported dtype {array.dtype}")
    coerced = None if array.dtype == np.float32 else str(array.dtype)
    return array.astype(np.float32), coerced


def export(checkpoint_path, out_path) -> ExportManifest:
    """Write the checkpoint's tensors to ``out_path`` as a .tnsr container."""
    source_format, tensors = _load_checkpoint(checkpoint_path)
    named = []
    mapping = []
    coercions = []
    for key in sorted(tensors):
        array, coerced = _as_float32(key, tensors[key])
        named.append((key, array))
        mapping.append((key, key))
        if coerced:
            coercions.append((key, coerced))
    write_tnsr(named, out_path)
    return ExportManifest(
        source_format=source_format, name_mapping=mapping, coercions=coercions
    )


def import_back(tnsr_path, template_checkpoint, out_path) -> None:
    """Write a checkpoint whose tensors hold the container's values.

    Tensor entries are matched by name against the template; everything the
    container does not cover (non-tensor metadata) is copied from the
    template unchanged.
    """
    source_format, template = _load_checkpoint(template_checkpoint)
    replacements = dict(read_tnsr(tnsr_path))
    unknown = set(replacements) - set(template)
    if unknown:
        raise CheckpointImportError(
            f"container names missing from template: {sorted(unknown)[:5]}"
        )
    out = collections.OrderedDict(template)
    for key, array in replacements.items():
        current = template[key]
        expected = tuple(
            current.shape if isinstance(current, torch.Tensor) else np.shape(current)
        )
        if tuple(array.shape) != expected:
            raise CheckpointImportError(
                f"tensor {key!r}: container shape {tuple(array.shape)} != "
                f"template shape {expected}"
            )
        if source_format == "npz":
            out[key] = array.copy()
        else:
            out[key] = torch.from_numpy(array.copy())
    if source_format == "npz":
        np.savez(out_path, **out)
    else:
        torch.save(out, out_path)
