"""End-to-end marking and verification of parameter vectors.

Mark packs the payload bits, protects them with the rate-1/2 code, prepends
the 200-bit preamble, and spreads the composite sequence over the selected
parameters.  Verify re-derives every stream from the key, correlates,
calibrates on the preamble, decodes, and applies the accuracy-threshold
decision rule (positive iff at least 90% of payload bits are recovered,
by default).
"""

from __future__ import annotations

import datetime
import json
from dataclasses import dataclass

import numpy as np

from . import keying, ldpc, spread
from .errors import (
    AccuracyError,
    BaselineMismatchError,
    CapacityError,
    ChannelLostError,
    FormatError,
)
from .model_io import ParameterVector

PREAMBLE_LENGTH = keying.PREAMBLE_LENGTH
DECISION_THRESHOLD = 0.9
#: Minimum ratio of selected parameters to total spread bits.  Cross-code
#: interference has standard deviation gamma*sqrt(R*(P-1)) against a signal
#: of gamma*R, so R/P = 25 leaves roughly a 5-sigma per-bit margin before
#: error correction.
MIN_PROCESSING_GAIN = 25

#: The 27-point signal-strength grid used for strength/distortion sweeps.
DEFAULT_GAMMA_GRID = tuple(
    round(mantissa * 10.0**exponent, 12)
    for exponent in (-4, -3, -2)
    for mantissa in range(1, 10)
)


@dataclass(frozen=True)
class WatermarkPayload:
    """Opaque payload octets; canonical bit order is MSB-first per byte."""

    data: bytes

    def __post_init__(self):
        if not isinstance(self.data, bytes) or len(self.data) < 1:
            raise FormatError("payload must be at least one byte")

    @property
    def bit_length(self) -> int:
        return 8 * len(self.data)

    def bits(self) -> np.ndarray:
        return np.unpackbits(np.frombuffer(self.data, dtype=np.uint8))

    @classmethod
    def from_bits(cls, bits: np.ndarray) -> "WatermarkPayload":
        bits = np.asarray(bits, dtype=np.uint8)
        if bits.size % 8 != 0:
            raise FormatError("bit count must be a multiple of 8")
        return cls(np.packbits(bits).tobytes())

    @classmethod
    def from_text(cls, text: str) -> "WatermarkPayload":
        return cls(text.encode("utf-8"))


@dataclass(frozen=True)
class MarkRecord:
    """Everything the owner must retain to verify later."""

    key_id: str
    baseline_hash: str
    baseline_path: str | None
    payload: WatermarkPayload
    gamma: float
    ratio: float
    total_spread_bits: int
    created_at: str

    def __post_init__(self):
        expected = PREAMBLE_LENGTH + 2 * self.payload.bit_length
        if self.total_spread_bits != expected:
            raise FormatError(
                f"total_spread_bits {self.total_spread_bits} inconsistent with "
                f"{self.payload.bit_length}-bit payload (expected {expected})"
            )

    def to_json(self) -> str:
        return json.dumps(
            {
                "key_id": self.key_id,
                "baseline_ref": {
                    "content_hash": self.baseline_hash,
                    "path": self.baseline_path,
                },
                "payload": {
                    "data": self.payload.data.hex(),
                    "bit_length": self.payload.bit_length,
                },
                "gamma": self.gamma,
                "ratio": self.ratio,
                "total_spread_bits": self.total_spread_bits,
                "created_at": self.created_at,
            },
            indent=2,
        )

    @classmethod
    def from_json(cls, text: str) -> "MarkRecord":
        try:
            doc = json.loads(text)
            payload = WatermarkPayload(bytes.fromhex(doc["payload"]["data"]))
            if payload.bit_length != int(doc["payload"]["bit_length"]):
                raise FormatError("payload bit_length disagrees with data")
            return cls(
                key_id=str(doc["key_id"]),
                baseline_hash=str(doc["baseline_ref"]["content_hash"]),
                baseline_path=doc["baseline_ref"]["path"],
                payload=payload,
                gamma=float(doc["gamma"]),
                ratio=float(doc["ratio"]),
                total_spread_bits=int(doc["total_spread_bits"]),
                created_at=str(doc["created_at"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"malformed mark record: {exc}") from exc

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_json() + "\n")

    @classmethod
    def load(cls, path) -> "MarkRecord":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_json(fh.read())


@dataclass(frozen=True)
class VerifyReport:
    decision: int
    watermark_accuracy: float
    estimate: spread.ChannelEstimate
    extracted_payload: bytes


def watermark_accuracy(extracted: np.ndarray, original: np.ndarray) -> float:
    """Fraction of extracted bits matching the original bits."""
    extracted = np.asarray(extracted).ravel()
    original = np.asarray(original).ravel()
    if extracted.size != original.size or extracted.size == 0:
        raise AccuracyError(
            f"bit vectors of lengths {extracted.size} and {original.size}"
        )
    return float(np.mean((extracted & 1) == (original & 1)))


def _composite_signs(code_seed: bytes, codeword: np.ndarray) -> np.ndarray:
    preamble = keying.generate_preamble(code_seed)
    payload_signs = (codeword.astype(np.int8) << 1) - 1
    return np.concatenate([preamble, payload_signs])


def mark(
    weights,
    key: keying.SecretKey,
    payload: WatermarkPayload,
    gamma: float,
    ratio: float = 1.0,
    baseline_path: str | None = None,
) -> tuple[ParameterVector, MarkRecord]:
    """Embed ``payload`` into ``weights``; returns the marked vector and the
    record needed to verify it later.

    Single pass, no training loop.  Raises CapacityError when the selection
    is smaller than 25x the total spread bits.
    """
    if not isinstance(weights, ParameterVector):
        weights = ParameterVector.from_values(weights)
    seeds = keying.derive_seeds(key)
    code = ldpc.build_code(seeds.ldpc_seed, payload.bit_length)
    total_bits = PREAMBLE_LENGTH + code.n
    indices = keying.select_parameters(seeds.select_seed, len(weights), ratio)
    if indices.size < MIN_PROCESSING_GAIN * total_bits:
        raise CapacityError(
            f"selection of {indices.size} parameters cannot carry "
            f"{total_bits} spread bits (needs >= {MIN_PROCESSING_GAIN * total_bits})"
        )
    codeword = ldpc.encode(code, payload.bits())
    job = spread.EmbedJob(
        bits=_composite_signs(seeds.code_seed, codeword),
        gamma=gamma,
        indices=indices,
        code_seed=seeds.code_seed,
    )
    marked = spread.embed(weights, job)
    record = MarkRecord(
        key_id=key.key_id(),
        baseline_hash=weights.provenance,
        baseline_path=baseline_path,
        payload=payload,
        gamma=float(gamma),
        ratio=float(ratio),
        total_spread_bits=total_bits,
        created_at=datetime.datetime.now(datetime.timezone.utc).isoformat(),
    )
    return marked, record


def verify(
    weights,
    record: MarkRecord,
    key: keying.SecretKey,
    baseline,
    threshold: float = DECISION_THRESHOLD,
) -> VerifyReport:
    """Decide whether ``weights`` carry the record's watermark under ``key``.

    A non-positive preamble gain (absent watermark or wrong key) yields
    decision 0 with the accuracy reported as the raw sign-match fraction.
    """
    if not isinstance(weights, ParameterVector):
        weights = ParameterVector.from_values(weights)
    if not isinstance(baseline, ParameterVector):
        baseline = ParameterVector.from_values(baseline)
    if baseline.provenance != record.baseline_hash:
        raise BaselineMismatchError(
            f"baseline hash {baseline.provenance[:12]}... does not match "
            f"record {record.baseline_hash[:12]}..."
        )
    seeds = keying.derive_seeds(key)
    code = ldpc.build_code(seeds.ldpc_seed, record.payload.bit_length)
    indices = keying.select_parameters(seeds.select_seed, len(weights), record.ratio)
    correlations = spread.extract(
        weights, baseline, indices, seeds.code_seed, record.total_spread_bits
    )
    preamble = keying.generate_preamble(seeds.code_seed)
    payload_bits = record.payload.bits()
    try:
        estimate = spread.estimate_channel(
            correlations[:PREAMBLE_LENGTH], preamble
        )
    except ChannelLostError as lost:
        hard = (correlations[PREAMBLE_LENGTH:] > 0).astype(np.uint8)
        accuracy = watermark_accuracy(hard[: code.k], payload_bits)
        estimate = spread.ChannelEstimate(
            gain=lost.gain, sigma=float("inf"), snr_db=float("-inf")
        )
        return VerifyReport(
            decision=0,
            watermark_accuracy=accuracy,
            estimate=estimate,
            extracted_payload=np.packbits(hard[: code.k]).tobytes(),
        )
    soft = ldpc.SoftWord(
        values=correlations[PREAMBLE_LENGTH:] / estimate.gain,
        snr_db=estimate.snr_db,
    )
    decoded = ldpc.decode(code, soft)
    accuracy = watermark_accuracy(decoded, payload_bits)
    return VerifyReport(
        decision=int(accuracy >= threshold),
        watermark_accuracy=accuracy,
        estimate=estimate,
        extracted_payload=np.packbits(decoded).tobytes(),
    )


@dataclass(frozen=True)
class GammaSweepPoint:
    gamma: float
    accuracy: float
    distortion: float  # relative L2 weight change ||delta W|| / ||W||


def gamma_sweep(
    weights,
    key: keying.SecretKey,
    payload: WatermarkPayload,
    grid=None,
    ratio: float = 1.0,
) -> list[GammaSweepPoint]:
    """Mark+verify a copy of ``weights`` at each strength in ``grid``.

    Reports recovery accuracy and the relative L2 weight distortion; defaults
    to the 27-point grid spanning 1e-4 through 9e-2.
    """
    if grid is None:
        grid = DEFAULT_GAMMA_GRID
    grid = [float(g) for g in grid]
    if not grid or any(g <= 0 for g in grid):
        raise ValueError("gamma grid must be non-empty and positive")
    if not isinstance(weights, ParameterVector):
        weights = ParameterVector.from_values(weights)
    norm = float(np.linalg.norm(weights.values))
    points = []
    for gamma in grid:
        marked, record = mark(weights, key, payload, gamma=gamma, ratio=ratio)
        report = verify(marked, record, key, weights)
        distortion = float(
            np.linalg.norm(marked.values - weights.values) / norm
        )
        points.append(
            GammaSweepPoint(
                gamma=gamma,
                accuracy=report.watermark_accuracy,
                distortion=distortion,
            )
        )
    return points
