import hashlib

import numpy as np
import pytest
from hypothesis import given, strategies as st

from tattooed import (
    CodeStream,
    EmptyCodeError,
    KeyFormatError,
    SecretKey,
    SelectionError,
    derive_seeds,
    generate_preamble,
    select_parameters,
    spreading_code,
)
from tattooed.keying import PREAMBLE_STREAM_INDEX

ZERO_KEY = SecretKey(b"\x00" * 64)

# frozen at first implementation: SHA-256(64 zero bytes || label)
ZERO_KEY_SEEDS = {
    "code": "ff9652f5bfb1ef9daca2f1258d7652af38507f96c996f7ec6ba1876d2088bd07",
    "ldpc": "d75292eb2f3e9305829b4ff3a3be55a09d8f696b426e63c6a179c4a478ac4418",
    "select": "1a30ad43f2f25cff9e7aa3531b364a83a8c3280dea1617da3c7081a4fe76f6f0",
}


class TestSecretKey:
    def test_rejects_wrong_length(self):
        with pytest.raises(KeyFormatError):
            SecretKey(b"\x00" * 63)
        with pytest.raises(KeyFormatError):
            SecretKey(b"\x00" * 65)

    def test_repr_never_leaks_key_bytes(self):
        key = SecretKey(b"\xab" * 64)
        assert "abab" not in repr(key)

    def test_raw_file_round_trip(self, tmp_path):
        key = SecretKey(bytes(range(64)))
        path = tmp_path / "owner.key"
        key.save(path)
        assert path.read_bytes() == bytes(range(64))
        assert SecretKey.load(path) == key

    def test_hex_file_round_trip_with_newline(self, tmp_path):
        key = SecretKey(bytes(range(64)))
        path = tmp_path / "owner.key"
        key.save(path, hex_encoding=True)
        path.write_bytes(path.read_bytes() + b"\n")
        assert SecretKey.load(path) == key

    def test_load_rejects_other_lengths(self, tmp_path):
        path = tmp_path / "bad.key"
        path.write_bytes(b"\x00" * 60)
        with pytest.raises(KeyFormatError):
            SecretKey.load(path)


class TestDeriveSeeds:
    def test_deterministic(self):
        assert derive_seeds(ZERO_KEY) == derive_seeds(ZERO_KEY)

    def test_matches_hash_construction(self):
        # independent oracle: the seeds are plain SHA-256(key || label)
        key = SecretKey(bytes(range(64)))
        seeds = derive_seeds(key)
        assert seeds.code_seed == hashlib.sha256(key.data + b"code").digest()
        assert seeds.ldpc_seed == hashlib.sha256(key.data + b"ldpc").digest()
        assert seeds.select_seed == hashlib.sha256(key.data + b"select").digest()

    def test_zero_key_regression_vector(self):
        seeds = derive_seeds(ZERO_KEY)
        assert seeds.code_seed.hex() == ZERO_KEY_SEEDS["code"]
        assert seeds.ldpc_seed.hex() == ZERO_KEY_SEEDS["ldpc"]
        assert seeds.select_seed.hex() == ZERO_KEY_SEEDS["select"]

    def test_one_bit_flip_changes_all_seeds(self):
        flipped = SecretKey(b"\x01" + b"\x00" * 63)
        a, b = derive_seeds(ZERO_KEY), derive_seeds(flipped)
        assert a.code_seed != b.code_seed
        assert a.ldpc_seed != b.ldpc_seed
        assert a.select_seed != b.select_seed

    def test_roles_never_share_a_seed(self):
        seeds = derive_seeds(ZERO_KEY)
        assert len({seeds.code_seed, seeds.ldpc_seed, seeds.select_seed}) == 3


class TestSpreadingCode:
    SEED = derive_seeds(ZERO_KEY).code_seed

    def test_deterministic(self):
        a = spreading_code(self.SEED, 0, 8)
        b = spreading_code(self.SEED, 0, 8)
        assert np.array_equal(a, b)

    def test_zero_key_chip_regression(self):
        chips = spreading_code(self.SEED, 0, 16)
        assert chips.tolist() == [1, -1, -1, -1, 1, -1, 1, 1, 1, 1, -1, -1, 1, 1, 1, 1]

    def test_empty_code_rejected(self):
        with pytest.raises(EmptyCodeError):
            spreading_code(self.SEED, 0, 0)

    @given(bit_index=st.integers(0, 2**32), length=st.integers(1, 300))
    def test_values_are_signs(self, bit_index, length):
        chips = spreading_code(self.SEED, bit_index, length)
        assert chips.shape == (length,)
        assert set(np.unique(chips)) <= {-1, 1}

    def test_cross_correlation_between_bits(self):
        r = 10**5
        c0 = spreading_code(self.SEED, 0, r).astype(np.float64)
        c1 = spreading_code(self.SEED, 1, r).astype(np.float64)
        assert abs(c0 @ c1) / r < 0.02

    def test_positive_chip_count_binomial(self):
        r = 10**5
        for bit_index in range(5):
            chips = spreading_code(self.SEED, bit_index, r)
            positives = int((chips == 1).sum())
            assert abs(positives - r / 2) <= 4 * np.sqrt(r)

    def test_balance_over_many_codes(self):
        # |sum(c)| / R < 0.04 for every one of 100 codes at R = 10^4
        r = 10**4
        for bit_index in range(100):
            chips = spreading_code(self.SEED, bit_index, r).astype(np.int64)
            assert abs(int(chips.sum())) / r < 0.04

    def test_quasi_orthogonality_sampled_pairs(self):
        r = 10**4
        codes = [
            spreading_code(self.SEED, i, r).astype(np.float64) for i in range(30)
        ]
        bound = 5.0 / np.sqrt(r)
        violations = sum(
            abs(codes[i] @ codes[j]) / r >= bound
            for i in range(30)
            for j in range(i + 1, 30)
        )
        assert violations / (30 * 29 / 2) < 0.01

    def test_code_stream_handle(self):
        stream = CodeStream(seed=self.SEED, bit_index=3, length=32)
        assert np.array_equal(stream.chips(), spreading_code(self.SEED, 3, 32))


class TestPreamble:
    def test_identical_for_same_key(self):
        seeds = derive_seeds(ZERO_KEY)
        assert np.array_equal(
            generate_preamble(seeds.code_seed), generate_preamble(seeds.code_seed)
        )

    def test_length_is_always_200(self):
        for fill in range(5):
            seeds = derive_seeds(SecretKey(bytes([fill]) * 64))
            assert generate_preamble(seeds.code_seed).shape == (200,)

    def test_reserved_index_clear_of_payload_codes(self):
        assert PREAMBLE_STREAM_INDEX == 2**64 - 1

    def test_two_keys_differ_in_many_positions(self):
        # expected Hamming distance 100, std ~7; 60 is a >5-sigma floor
        for fill in range(1, 21):
            a = generate_preamble(derive_seeds(ZERO_KEY).code_seed)
            b = generate_preamble(
                derive_seeds(SecretKey(bytes([fill]) * 64)).code_seed
            )
            assert int((a != b).sum()) >= 60


class TestSelectParameters:
    SEED = derive_seeds(ZERO_KEY).select_seed

    def test_full_ratio_returns_every_index(self):
        assert np.array_equal(
            select_parameters(self.SEED, 1000, 1.0), np.arange(1000)
        )

    def test_reference_eighth_ratio_count(self):
        indices = select_parameters(self.SEED, 198656, 0.125)
        assert indices.size == 24832

    def test_indices_ascending_unique_in_range(self):
        indices = select_parameters(self.SEED, 5000, 0.3)
        assert np.all(np.diff(indices) > 0)
        assert indices[0] >= 0 and indices[-1] < 5000

    def test_deterministic(self):
        a = select_parameters(self.SEED, 5000, 0.3)
        b = select_parameters(self.SEED, 5000, 0.3)
        assert np.array_equal(a, b)

    @pytest.mark.parametrize("ratio", [0.0, -0.1, 1.0001])
    def test_ratio_out_of_range(self, ratio):
        with pytest.raises(SelectionError):
            select_parameters(self.SEED, 100, ratio)

    def test_empty_selection_rejected(self):
        with pytest.raises(SelectionError):
            select_parameters(self.SEED, 10, 0.05)

    def test_overlap_fraction_tracks_ratio(self):
        # two independent selections intersect in ~ratio of their size
        other = derive_seeds(SecretKey(b"\x07" * 64)).select_seed
        total, ratio = 20000, 0.25
        a = set(select_parameters(self.SEED, total, ratio).tolist())
        b = set(select_parameters(other, total, ratio).tolist())
        overlap = len(a & b) / len(a)
        assert abs(overlap - ratio) < 0.02
