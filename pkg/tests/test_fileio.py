"""Bit blocks, seed streams, and the on-disk binary formats."""

import numpy as np
import pytest

from siqrng.bits import BitBlock
from siqrng.fileio import (
    FormatError,
    read_bit_file,
    read_click_file,
    write_bit_file,
    write_click_file,
)
from siqrng.photonic_sim import ClickStream
from siqrng.seeds import SeedExhaustedError, SeedSource


class TestBitBlock:
    def test_round_trip(self, rng):
        bits = rng.integers(0, 2, 1003, dtype=np.uint8)
        block = BitBlock.from01(bits)
        assert len(block) == 1003
        assert np.array_equal(block.to01(), bits)

    def test_lsb_first_packing(self):
        block = BitBlock.from01([1, 0, 0, 0, 0, 0, 0, 0, 1])
        assert block.data.tolist() == [1, 1]
        assert block.to_int() == 1 + (1 << 8)

    def test_indexing_and_slicing(self, rng):
        bits = rng.integers(0, 2, 77, dtype=np.uint8)
        block = BitBlock.from01(bits)
        assert [block[i] for i in range(77)] == bits.tolist()
        assert np.array_equal(block.slice(10, 40).to01(), bits[10:40])

    def test_xor_and_concat(self, rng):
        a = BitBlock.from01(rng.integers(0, 2, 50))
        b = BitBlock.from01(rng.integers(0, 2, 50))
        assert np.array_equal((a ^ b).to01(), a.to01() ^ b.to01())
        joined = BitBlock.concat([a, b])
        assert np.array_equal(joined.to01(), np.concatenate([a.to01(), b.to01()]))

    def test_pad_bits_must_be_zero(self):
        with pytest.raises(ValueError):
            BitBlock.from_bytes(b"\xff", 3)

    def test_non_bit_values_rejected(self):
        with pytest.raises(ValueError):
            BitBlock.from01([0, 2, 1])


class TestSeedSource:
    def test_finite_stream_consumption(self):
        seed = SeedSource.from_bits(BitBlock.from01([1, 0, 1, 1, 0]))
        assert seed.take(3) == 0b101
        assert seed.take_bit() == 1
        assert seed.bits_consumed == 4
        with pytest.raises(SeedExhaustedError):
            seed.take(2)

    def test_msb_first_integer_assembly(self):
        seed = SeedSource.from_bits(BitBlock.from01([1, 1, 1, 1, 0, 0, 1, 1, 0]))
        assert seed.take(9) == 0b111100110

    def test_rng_backed_stream_counts(self, rng):
        seed = SeedSource.from_rng(rng)
        seed.take_bits(1000)
        seed.take(64)
        assert seed.bits_consumed == 1064

    def test_rng_backed_stream_is_deterministic(self):
        takes = []
        for _ in range(2):
            seed = SeedSource.from_rng(np.random.default_rng(5))
            takes.append([seed.take(31) for _ in range(10)])
        assert takes[0] == takes[1]


class TestBitFile(object):
    def test_round_trip(self, tmp_path, rng):
        block = BitBlock.from01(rng.integers(0, 2, 12345, dtype=np.uint8))
        path = tmp_path / "bits.siq"
        write_bit_file(path, block)
        assert read_bit_file(path) == block

    def test_header_layout(self, tmp_path):
        path = tmp_path / "bits.siq"
        write_bit_file(path, BitBlock.from01([1, 1, 0]))
        raw = path.read_bytes()
        assert raw[:4] == b"SIQ1"
        assert raw[4] == 1
        assert int.from_bytes(raw[5:13], "little") == 3
        assert raw[13:] == b"\x03"

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "bad.siq"
        path.write_bytes(b"XXXX" + bytes(20))
        with pytest.raises(FormatError):
            read_bit_file(path)

    def test_truncated_payload_rejected(self, tmp_path):
        path = tmp_path / "short.siq"
        path.write_bytes(b"SIQ1" + bytes([1]) + (100).to_bytes(8, "little") + b"\x00")
        with pytest.raises(FormatError):
            read_bit_file(path)


class TestClickFile:
    def test_round_trip(self, tmp_path, rng):
        stream = ClickStream(
            basis=rng.integers(0, 2, 999).astype(np.uint8),
            pattern=rng.integers(0, 4, 999).astype(np.uint8),
        )
        path = tmp_path / "clicks.siqc"
        write_click_file(path, stream)
        assert read_click_file(path) == stream

    def test_one_byte_per_pulse(self, tmp_path):
        stream = ClickStream(
            basis=np.array([0, 1, 0], dtype=np.uint8),
            pattern=np.array([3, 2, 0], dtype=np.uint8),
        )
        path = tmp_path / "clicks.siqc"
        write_click_file(path, stream)
        raw = path.read_bytes()
        assert raw[:4] == b"SIQC"
        # pattern in bits 0-1, basis in bit 2
        assert list(raw[13:]) == [3, 2 | 4, 0]

    def test_reserved_bits_rejected(self, tmp_path):
        path = tmp_path / "clicks.siqc"
        path.write_bytes(b"SIQC" + bytes([1]) + (1).to_bytes(8, "little") + bytes([0x80]))
        with pytest.raises(FormatError):
            read_click_file(path)

    def test_count_mismatch_rejected(self, tmp_path):
        path = tmp_path / "clicks.siqc"
        path.write_bytes(b"SIQC" + bytes([1]) + (5).to_bytes(8, "little") + bytes(3))
        with pytest.raises(FormatError):
            read_click_file(path)
