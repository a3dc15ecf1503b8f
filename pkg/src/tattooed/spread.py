"""Direct-sequence spreading over model parameters.

Embedding adds ``gamma * chip * bit`` for every (bit, selected parameter)
pair; extraction correlates each bit's chips against the difference between
the inspected and baseline weights; the preamble correlations calibrate gain
and noise for the decoder.

Numerics: the per-parameter chip sum is accumulated in exact integer
arithmetic before the single multiply by gamma, and each bit's correlation
is an independently ordered float64 sum over ascending parameter index, so
repeated runs (and parallel per-bit execution) give identical results.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit, prange

from . import keying
from .errors import ChannelLostError, EmbedError, ExtractError
from .model_io import ParameterVector

SIGMA_FLOOR = 1e-3
SNR_CAP_DB = 60.0
_CHUNK_BYTES = 64 << 20  # bit-matrix chunk budget


@dataclass(frozen=True)
class EmbedJob:
    """One embedding request: composite bits, strength, target indices, seed."""

    bits: np.ndarray       # +/-1 signs, length P
    gamma: float
    indices: np.ndarray    # ascending parameter indices, length R
    code_seed: bytes

    def __post_init__(self):
        bits = np.asarray(self.bits, dtype=np.int8)
        if bits.size == 0:
            raise EmbedError("no bits to embed")
        if not np.all(np.abs(bits) == 1):
            raise EmbedError("bits must be +/-1 signs")
        object.__setattr__(self, "bits", bits)
        object.__setattr__(
            self, "indices", np.asarray(self.indices, dtype=np.int64)
        )
        if self.indices.size == 0:
            raise EmbedError("empty parameter selection")
        if not np.all(np.diff(self.indices) > 0):
            raise EmbedError("selection indices must be strictly ascending")
        if not self.gamma > 0.0:
            raise EmbedError(f"signal strength must be positive, got {self.gamma}")


@dataclass(frozen=True)
class ChannelEstimate:
    """Preamble-derived calibration: gain ~ gamma*R, normalized noise, SNR."""

    gain: float
    sigma: float
    snr_db: float


@njit(parallel=True, cache=True)
def _accumulate_chips(bit_rows, signs, out):
    # out[r] += sum_i signs[i] * (2*bit_rows[i, r] - 1), exact in int64
    count, width = bit_rows.shape
    blocks = 64
    step = (width + blocks - 1) // blocks
    for blk in prange(blocks):
        lo = blk * step
        hi = min(width, lo + step)
        for i in range(count):
            s = signs[i]
            for r in range(lo, hi):
                out[r] += s * (2 * np.int64(bit_rows[i, r]) - 1)


@njit(parallel=True, cache=True)
def _correlate_chips(bit_rows, delta, out):
    # out[i] = sum_r (2*bit_rows[i, r] - 1) * delta[r], float64 in index order
    count, width = bit_rows.shape
    for i in prange(count):
        acc = 0.0
        for r in range(width):
            acc += (2.0 * bit_rows[i, r] - 1.0) * delta[r]
        out[i] = acc


def _bit_chunks(code_seed: bytes, total_bits: int, width: int):
    rows = max(1, min(256, _CHUNK_BYTES // max(width, 1)))
    buffer = np.empty((rows, width), dtype=np.uint8)
    for first in range(0, total_bits, rows):
        count = min(rows, total_bits - first)
        block = buffer[:count]
        keying.fill_code_bits(code_seed, first, block)
        yield first, block


def _values_of(weights) -> np.ndarray:
    if isinstance(weights, ParameterVector):
        return weights.values
    return np.asarray(weights, dtype=np.float64)


def embed(weights, job: EmbedJob):
    """Return a copy of ``weights`` with the watermark signal added.

    Non-selected positions are bit-identical to the input; the input itself
    is never mutated.  Accepts a ParameterVector or a plain vector and
    returns the same kind.
    """
    values = _values_of(weights)
    if job.indices.max() >= values.size or job.indices.min() < 0:
        raise EmbedError(
            f"selection index out of range for {values.size} parameters"
        )
    chip_sum = np.zeros(job.indices.size, dtype=np.int64)
    signs = job.bits.astype(np.int64)
    for first, block in _bit_chunks(job.code_seed, job.bits.size, job.indices.size):
        _accumulate_chips(block, signs[first : first + block.shape[0]], chip_sum)
    out = values.copy()
    out[job.indices] += job.gamma * chip_sum.astype(np.float64)
    if isinstance(weights, ParameterVector):
        return ParameterVector.from_values(out)
    return out


def extract(
    marked,
    baseline,
    indices: np.ndarray,
    code_seed: bytes,
    total_bits: int,
) -> np.ndarray:
    """Per-bit correlations ``y_i = c_i . (marked - baseline)`` on the selection.

    With an unattacked marked model this is ``gamma * (R * b_i + cross
    terms)``; the cross terms shrink relative to the signal as R grows.
    """
    marked_values = _values_of(marked)
    baseline_values = _values_of(baseline)
    if marked_values.shape != baseline_values.shape:
        raise ExtractError(
            f"marked/baseline length mismatch: {marked_values.shape} vs "
            f"{baseline_values.shape}"
        )
    indices = np.asarray(indices, dtype=np.int64)
    if indices.size == 0 or indices.max() >= marked_values.size or indices.min() < 0:
        raise ExtractError("selection indices out of range")
    if not np.all(np.diff(indices) > 0):
        raise ExtractError("selection indices must be strictly ascending")
    delta = (marked_values - baseline_values)[indices]
    correlations = np.empty(total_bits, dtype=np.float64)
    block_out = np.empty(256, dtype=np.float64)
    for first, block in _bit_chunks(code_seed, total_bits, indices.size):
        out = block_out[: block.shape[0]]
        _correlate_chips(block, delta, out)
        correlations[first : first + block.shape[0]] = out
    return correlations


def estimate_channel(y_preamble: np.ndarray, preamble: np.ndarray) -> ChannelEstimate:
    """Gain, noise and SNR from the 200 preamble correlations.

    gain   = mean(y_i * p_i)
    sigma  = population std of (y_i * p_i) / gain
    snr_db = -20 log10(max(sigma, 1e-3))

    Raises ChannelLostError when the gain is non-positive, which signals an
    absent watermark or a wrong key; verification treats that as a negative
    decision rather than a failure.
    """
    y = np.asarray(y_preamble, dtype=np.float64)
    p = np.asarray(preamble, dtype=np.float64)
    if y.shape != p.shape or y.ndim != 1:
        raise ExtractError(
            f"preamble correlation shape {y.shape} != preamble shape {p.shape}"
        )
    aligned = y * p
    gain = float(aligned.mean())
    if gain <= 0.0:
        raise ChannelLostError(gain)
    sigma = float((aligned / gain).std())  # population convention (divide by N)
    snr_db = -20.0 * math.log10(max(sigma, SIGMA_FLOOR))
    return ChannelEstimate(gain=gain, sigma=sigma, snr_db=snr_db)
