"""Rate-1/2 low-density parity-check code: seeded construction, systematic
encoding over GF(2), and log-domain sum-product decoding.

Construction is a Gallager-style random regular ensemble: every column of H
has weight exactly 3 and every row weight exactly 6, built by a seeded
shuffle of check-node stubs, followed by best-effort 4-cycle reduction.
Bit-packed Gaussian elimination brings a copy of H to ``[A | I]`` form
(recording the column permutation) to derive the systematic generator
``G = [I | A^T]``; the stored parity-check matrix is the original H under
the same column permutation, so it keeps its column weight while satisfying
``G H^T = 0``.  Construction retries with fresh sub-seeds until H has full
row rank (budget 64 attempts).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.sparse import csr_matrix

from .errors import CodeConstructionError, EncodeError
from .keying import _philox

COLUMN_WEIGHT = 3
ROW_WEIGHT = 6
MAX_BP_ITERATIONS = 50
SNR_CAP_DB = 60.0  # keeps sigma >= 1e-3 so channel LLRs stay finite
_RANK_ATTEMPTS = 64
_LLR_CLIP = 80.0
_TANH_CLIP = 35.0


@dataclass(frozen=True)
class SoftWord:
    """Gain-normalized correlator outputs (nominally +/-1 + noise) plus SNR."""

    values: np.ndarray
    snr_db: float


@dataclass(frozen=True, eq=False)
class LdpcCode:
    """A built (n, k) code; immutable and safe to share across threads."""

    n: int
    k: int
    seed: bytes
    column_rows: np.ndarray       # (n, 3) check indices per codeword column
    _parity_block: np.ndarray     # (m, k/8) packed rows of A, parity = A @ msg
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def m(self) -> int:
        return self.n - self.k

    @property
    def rate(self) -> float:
        return self.k / self.n

    @property
    def parity_check(self) -> csr_matrix:
        """H as a sparse (m x n) binary matrix."""
        if "H" not in self._cache:
            cols = np.repeat(np.arange(self.n), COLUMN_WEIGHT)
            rows = self.column_rows.reshape(-1)
            data = np.ones(rows.size, dtype=np.uint8)
            self._cache["H"] = csr_matrix(
                (data, (rows, cols)), shape=(self.m, self.n), dtype=np.uint8
            )
        return self._cache["H"]

    @property
    def generator(self) -> np.ndarray:
        """Dense systematic G = [I_k | A^T], shape (k, n), dtype uint8."""
        if "G" not in self._cache:
            a = np.unpackbits(self._parity_block, axis=1, count=self.k)
            self._cache["G"] = np.hstack(
                [np.eye(self.k, dtype=np.uint8), a.T.astype(np.uint8)]
            )
        return self._cache["G"]


def _stub_rng(ldpc_seed: bytes, attempt: int, stage: bytes) -> np.random.Generator:
    return _philox(ldpc_seed + b"|ldpc|" + stage + attempt.to_bytes(4, "big"))


def _regular_columns(ldpc_seed: bytes, k: int, attempt: int) -> np.ndarray | None:
    """Assign 3 distinct check rows to each of 2k columns, rows used 6x each."""
    n, m = 2 * k, k
    rng = _stub_rng(ldpc_seed, attempt, b"construct|")
    stubs = np.repeat(np.arange(m, dtype=np.int64), ROW_WEIGHT)
    rng.shuffle(stubs)
    cols = stubs.reshape(n, COLUMN_WEIGHT)
    for _ in range(200):
        dup = _duplicate_mask(cols)
        bad = np.nonzero(dup)[0]
        if bad.size == 0:
            cols.sort(axis=1)
            return cols
        for c in bad:
            j = int(rng.integers(0, n))
            a = int(rng.integers(0, COLUMN_WEIGHT))
            b = int(rng.integers(0, COLUMN_WEIGHT))
            cols[c, a], cols[j, b] = cols[j, b], cols[c, a]
    return None


def _duplicate_mask(cols: np.ndarray) -> np.ndarray:
    return (
        (cols[:, 0] == cols[:, 1])
        | (cols[:, 1] == cols[:, 2])
        | (cols[:, 0] == cols[:, 2])
    )


def _reduce_4cycles(cols: np.ndarray, ldpc_seed: bytes, attempt: int) -> np.ndarray:
    """Best-effort removal of column pairs sharing two checks (girth-4 loops)."""
    n = cols.shape[0]
    rng = _stub_rng(ldpc_seed, attempt, b"girth|")
    for _ in range(12):
        seen: dict[tuple[int, int], int] = {}
        conflicts = []
        for c in range(n):
            r0, r1, r2 = cols[c]
            for pair in ((r0, r1), (r0, r2), (r1, r2)):
                if pair in seen:
                    conflicts.append(c)
                    break
                seen[pair] = c
        if not conflicts:
            break
        for c in conflicts:
            j = int(rng.integers(0, n))
            a = int(rng.integers(0, COLUMN_WEIGHT))
            b = int(rng.integers(0, COLUMN_WEIGHT))
            cols[c, a], cols[j, b] = cols[j, b], cols[c, a]
        # swaps may reintroduce duplicate rows inside a column; repair them
        for _ in range(200):
            bad = np.nonzero(_duplicate_mask(cols))[0]
            if bad.size == 0:
                break
            for c in bad:
                j = int(rng.integers(0, n))
                a = int(rng.integers(0, COLUMN_WEIGHT))
                b = int(rng.integers(0, COLUMN_WEIGHT))
                cols[c, a], cols[j, b] = cols[j, b], cols[c, a]
        cols.sort(axis=1)
    return cols


def _packed_rref(cols: np.ndarray, m: int, n: int):
    """Reduced row echelon form over GF(2) on bit-packed rows.

    Returns (pivot_columns, packed_rows, full_rank).  Row XORs run on packed
    uint8 so the k=8192 case stays in seconds.
    """
    row_bytes = (n + 7) // 8
    h = np.zeros((m, row_bytes), dtype=np.uint8)
    col_idx = np.repeat(np.arange(cols.shape[0]), COLUMN_WEIGHT)
    row_idx = cols.reshape(-1)
    np.bitwise_or.at(
        h, (row_idx, col_idx // 8), (1 << (7 - (col_idx % 8))).astype(np.uint8)
    )
    pivots = []
    rank = 0
    for c in range(n):
        if rank >= m:
            break
        byte, mask = c // 8, np.uint8(1 << (7 - (c % 8)))
        hits = np.nonzero(h[rank:, byte] & mask)[0]
        if hits.size == 0:
            continue
        p = rank + hits[0]
        if p != rank:
            h[[rank, p]] = h[[p, rank]]
        sel = (h[:, byte] & mask) != 0
        sel[rank] = False
        h[sel] ^= h[rank]
        pivots.append(c)
        rank += 1
    return np.asarray(pivots, dtype=np.int64), h, rank == m


@lru_cache(maxsize=16)
def build_code(ldpc_seed: bytes, k: int) -> LdpcCode:
    """Construct the seeded (2k, k) code; deterministic per (seed, k).

    Raises CodeConstructionError if no full-rank parity-check matrix is found
    within the retry budget.
    """
    if k < 8:
        raise ValueError("message length k must be >= 8")
    n, m = 2 * k, k
    for attempt in range(_RANK_ATTEMPTS):
        cols = _regular_columns(ldpc_seed, k, attempt)
        if cols is None:
            continue
        cols = _reduce_4cycles(cols, ldpc_seed, attempt)
        if _duplicate_mask(cols).any():
            continue
        pivots, rref, full_rank = _packed_rref(cols.copy(), m, n)
        if not full_rank:
            continue
        in_pivots = np.zeros(n, dtype=bool)
        in_pivots[pivots] = True
        non_pivots = np.nonzero(~in_pivots)[0]
        # A: RREF rows restricted to the message (non-pivot) columns
        a_bits = (rref[:, non_pivots // 8] >> (7 - (non_pivots % 8))) & 1
        parity_block = np.packbits(a_bits, axis=1)
        # stored H: original columns reordered to [message | parity]
        order = np.concatenate([non_pivots, pivots])
        column_rows = cols[order]
        return LdpcCode(
            n=n, k=k, seed=ldpc_seed,
            column_rows=column_rows, _parity_block=parity_block,
        )
    raise CodeConstructionError(
        f"no full-rank parity-check matrix for k={k} in {_RANK_ATTEMPTS} attempts"
    )


def encode(code: LdpcCode, message: np.ndarray) -> np.ndarray:
    """Systematic encoding: codeword = [message | A @ message] over GF(2)."""
    message = np.asarray(message)
    if message.shape != (code.k,):
        raise EncodeError(f"message length {message.shape} != k={code.k}")
    bits = (message & 1).astype(np.uint8)
    packed = np.packbits(bits)
    parity = (
        np.bitwise_count(code._parity_block & packed[None, :]).sum(axis=1) & 1
    ).astype(np.uint8)
    return np.concatenate([bits, parity])


def syndrome(code: LdpcCode, word: np.ndarray) -> np.ndarray:
    """H @ word over GF(2); all zeros iff the word is a codeword."""
    bits = (np.asarray(word) & 1).astype(np.int64)
    checks = np.bincount(
        code.column_rows.reshape(-1),
        weights=np.repeat(bits, COLUMN_WEIGHT),
        minlength=code.m,
    )
    return (checks.astype(np.int64) & 1).astype(np.uint8)


def decode(code: LdpcCode, soft: SoftWord, max_iterations: int = MAX_BP_ITERATIONS) -> np.ndarray:
    """Sum-product decoding of a soft word; returns the k message bits.

    Channel LLR for position i is ``2 * values[i] / sigma**2`` with
    ``sigma = 10**(-snr_db/20)`` after capping the SNR at 60 dB.  Iteration
    stops early once every parity check is satisfied; if the cap is reached
    the hard decision of the final beliefs is returned (never raises).
    """
    values = np.asarray(soft.values, dtype=np.float64)
    if values.shape != (code.n,):
        raise EncodeError(f"soft word length {values.shape} != n={code.n}")
    sigma = 10.0 ** (-min(float(soft.snr_db), SNR_CAP_DB) / 20.0)
    llr = np.clip(2.0 * values / (sigma * sigma), -_LLR_CLIP, _LLR_CLIP)

    var_idx = np.repeat(np.arange(code.n), COLUMN_WEIGHT)
    check_idx = code.column_rows.reshape(-1)
    # internal messages use the log(P0/P1) convention; flip sign at the edges
    channel = -llr
    msg_v2c = channel[var_idx].copy()
    posterior = channel
    for _ in range(max_iterations):
        t = np.tanh(np.clip(msg_v2c, -_TANH_CLIP, _TANH_CLIP) / 2.0)
        magnitude = np.maximum(np.abs(t), 1e-300)
        log_mag = np.log(magnitude)
        negative = t < 0.0
        sum_log = np.bincount(check_idx, weights=log_mag, minlength=code.m)
        neg_parity = (
            np.bincount(check_idx, weights=negative, minlength=code.m).astype(np.int64) & 1
        )
        ext_mag = np.minimum(np.exp(sum_log[check_idx] - log_mag), 1.0 - 1e-15)
        ext_neg = (neg_parity[check_idx] != 0) ^ negative
        msg_c2v = 2.0 * np.arctanh(ext_mag)
        np.negative(msg_c2v, where=ext_neg, out=msg_c2v)
        posterior = channel + np.bincount(var_idx, weights=msg_c2v, minlength=code.n)
        msg_v2c = posterior[var_idx] - msg_c2v
        hard = posterior < 0.0  # log(P0/P1) < 0 means bit 1
        if not syndrome(code, hard).any():
            break
    return (posterior < 0.0).astype(np.uint8)[: code.k]


def write_parity_adjacency(code: LdpcCode, fh) -> None:
    """Debug dump of H, one line per check row: its column indices."""
    rows: list[list[int]] = [[] for _ in range(code.m)]
    for col in range(code.n):
        for row in code.column_rows[col]:
            rows[int(row)].append(col)
    for cols in rows:
        fh.write(" ".join(str(c) for c in sorted(cols)) + "\n")
