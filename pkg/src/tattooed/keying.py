"""Deterministic randomness derived from the owner's 512-bit secret key.

All pseudo-randomness in the watermarking pipeline flows through this module
so that marking and verification, possibly run years apart on different
machines, regenerate identical spreading codes, preambles and parameter
selections.

Derivation layout
-----------------
- Three role seeds are SHA-256 digests of the key concatenated with a fixed
  ASCII label ("code", "ldpc", "select").  Distinct labels give independent
  streams; no stream ever reuses another's PRNG state.
- Every stream is a Philox counter-based generator keyed by the first
  16 bytes of ``SHA-256(seed || context)``.  Philox output for a given key is
  a pure function of the block counter, so per-bit code generation is safe to
  run out of order or in parallel.
- The spreading code for composite bit ``i`` is the bit stream of the
  generator keyed by ``(code_seed, i)``, one byte yielding eight chips,
  most-significant bit first, bit value 1 mapping to chip +1.
- The preamble values come from the same keyed family at the reserved index
  ``2**64 - 1``, which no payload bit can ever occupy.
"""

from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass

import numpy as np

from .errors import EmptyCodeError, KeyFormatError, SelectionError

KEY_BYTES = 64
SEED_BYTES = 32
PREAMBLE_LENGTH = 200

#: Stream index reserved for the preamble bit values.  Payload codes use
#: indices 0..P-1, so the maximum 64-bit counter value can never collide.
PREAMBLE_STREAM_INDEX = 2**64 - 1

_SEED_LABELS = (b"code", b"ldpc", b"select")


@dataclass(frozen=True)
class SecretKey:
    """The owner's 512-bit secret, wrapped so it never leaks through repr."""

    data: bytes

    def __post_init__(self):
        if not isinstance(self.data, bytes) or len(self.data) != KEY_BYTES:
            raise KeyFormatError(
                f"secret key must be exactly {KEY_BYTES} bytes, "
                f"got {len(self.data) if isinstance(self.data, bytes) else type(self.data)}"
            )

    def __repr__(self) -> str:  # never print key material
        return f"SecretKey(id={self.key_id()[:12]}...)"

    def key_id(self) -> str:
        """Public identifier: hex SHA-256 of the key bytes."""
        return hashlib.sha256(self.data).hexdigest()

    @classmethod
    def generate(cls) -> "SecretKey":
        return cls(os.urandom(KEY_BYTES))

    @classmethod
    def from_passphrase_seed(cls, seed: str) -> "SecretKey":
        """Derive a key deterministically from a passphrase (SHA-512)."""
        return cls(hashlib.sha512(seed.encode("utf-8")).digest())

    @classmethod
    def from_hex(cls, text: str) -> "SecretKey":
        text = text.strip()
        if len(text) != 2 * KEY_BYTES:
            raise KeyFormatError(
                f"hex key must be {2 * KEY_BYTES} characters, got {len(text)}"
            )
        try:
            return cls(bytes.fromhex(text))
        except ValueError as exc:
            raise KeyFormatError(f"invalid hex key: {exc}") from exc

    @classmethod
    def load(cls, path) -> "SecretKey":
        """Read a key file: 64 raw bytes, or 128 hex characters (auto-detected)."""
        with open(path, "rb") as fh:
            raw = fh.read()
        if len(raw) == KEY_BYTES:
            return cls(raw)
        text = raw.decode("ascii", errors="replace").strip()
        if len(text) == 2 * KEY_BYTES:
            return cls.from_hex(text)
        raise KeyFormatError(
            f"key file {path!s} is {len(raw)} bytes; expected {KEY_BYTES} raw "
            f"bytes or {2 * KEY_BYTES} hex characters"
        )

    def save(self, path, hex_encoding: bool = False) -> None:
        with open(path, "wb") as fh:
            fh.write(self.data.hex().encode("ascii") if hex_encoding else self.data)


@dataclass(frozen=True)
class SeedPair:
    """Role seeds derived from one secret key: codes, parity matrices, selection."""

    code_seed: bytes
    ldpc_seed: bytes
    select_seed: bytes

    def __post_init__(self):
        for name in ("code_seed", "ldpc_seed", "select_seed"):
            value = getattr(self, name)
            if len(value) != SEED_BYTES:
                raise KeyFormatError(f"{name} must be {SEED_BYTES} bytes")


def derive_seeds(key: SecretKey) -> SeedPair:
    """Derive the three role seeds as SHA-256(key || label).

    Deterministic: the same key always yields the same seeds, and keys
    differing in a single bit yield unrelated seeds.
    """
    if not isinstance(key, SecretKey):
        key = SecretKey(key)
    code, ldpc, select = (
        hashlib.sha256(key.data + label).digest() for label in _SEED_LABELS
    )
    return SeedPair(code_seed=code, ldpc_seed=ldpc, select_seed=select)


def _philox(material: bytes) -> np.random.Generator:
    """Counter-based generator keyed by the first 16 bytes of SHA-256(material)."""
    digest = hashlib.sha256(material).digest()
    key = np.frombuffer(digest[:16], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def seeded_generator(label: str, seed: int | bytes) -> np.random.Generator:
    """Independent deterministic stream for auxiliary randomness.

    ``label`` separates domains (e.g. "attack:prune" vs "synth") so equal
    integer seeds in different roles stay uncorrelated.
    """
    if isinstance(seed, int):
        seed = seed.to_bytes(16, "big", signed=True)
    return _philox(label.encode("ascii") + b"\x00" + seed)


def _code_stream_bytes(code_seed: bytes, bit_index: int, nbytes: int) -> np.ndarray:
    material = code_seed + b"|code|" + bit_index.to_bytes(8, "big")
    return np.frombuffer(_philox(material).bytes(nbytes), dtype=np.uint8)


def code_bits(code_seed: bytes, bit_index: int, length: int) -> np.ndarray:
    """Raw 0/1 chip bits for one composite-sequence position.

    This is the allocation-light form used by the batched correlators; the
    contract-level view is :func:`spreading_code`.
    """
    if length < 1:
        raise EmptyCodeError("spreading code length must be >= 1")
    if bit_index < 0:
        raise ValueError("bit_index must be non-negative")
    raw = _code_stream_bytes(code_seed, bit_index, (length + 7) // 8)
    return np.unpackbits(raw, count=length)


def spreading_code(code_seed: bytes, bit_index: int, length: int) -> np.ndarray:
    """Length-R sign vector (+1/-1, int8) for one watermark bit.

    Deterministic per ``(code_seed, bit_index)``; codes at different indices
    are independent streams, so their normalized cross-correlation
    concentrates around 0 with standard deviation ``1/sqrt(length)``.
    """
    bits = code_bits(code_seed, bit_index, length)
    return (bits.astype(np.int8) << 1) - 1


def fill_code_bits(
    code_seed: bytes, first_bit: int, out: np.ndarray
) -> np.ndarray:
    """Fill a (count, length) uint8 matrix with chip bits for a bit range."""
    count, length = out.shape
    for row in range(count):
        out[row] = code_bits(code_seed, first_bit + row, length)
    return out


@dataclass(frozen=True)
class CodeStream:
    """Handle describing one spreading code: (seed, bit index, length)."""

    seed: bytes
    bit_index: int
    length: int

    def chips(self) -> np.ndarray:
        return spreading_code(self.seed, self.bit_index, self.length)


def generate_preamble(code_seed: bytes) -> np.ndarray:
    """The 200 known +/-1 preamble values shared by marking and verification.

    Drawn from the code-seed family at the reserved stream index so they can
    never collide with a payload spreading code.
    """
    return spreading_code(code_seed, PREAMBLE_STREAM_INDEX, PREAMBLE_LENGTH)


def select_parameters(
    select_seed: bytes, total_params: int, ratio: float
) -> np.ndarray:
    """Choose ``floor(ratio * total_params)`` distinct indices, ascending.

    Sampling without replacement via a seeded shuffle of the index range;
    deterministic per seed.  ``ratio`` of 1.0 returns every index.
    """
    if total_params < 1:
        raise SelectionError("total_params must be >= 1")
    if not 0.0 < ratio <= 1.0:
        raise SelectionError(f"selection ratio {ratio} outside (0, 1]")
    count = int(ratio * total_params)
    if count < 1:
        raise SelectionError(
            f"ratio {ratio} of {total_params} parameters selects nothing"
        )
    if count == total_params:
        return np.arange(total_params, dtype=np.int64)
    rng = _philox(select_seed + b"|select|")
    permutation = rng.permutation(total_params)[:count]
    permutation.sort()
    return permutation.astype(np.int64)
