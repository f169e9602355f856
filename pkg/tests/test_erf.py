"""ERF codec: bit-exact round trips, stream partitioning, timestamp math."""

from __future__ import annotations

import io
import random
import struct
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from masts.erf import (ErfTimestamp, TraceRecord, decode_record, encode_record,
                       read_records, write_records)
from masts.errors import (FrameTooLarge, MalformedLength, TruncatedRecord,
                          UnsupportedType)

from helpers import record


def random_record(rng: random.Random) -> TraceRecord:
    frame_len = rng.randint(0, 200)
    frame = rng.randbytes(frame_len)
    return TraceRecord(
        ts=ErfTimestamp(rng.getrandbits(64)),
        flags=rng.getrandbits(8),
        lctr=rng.getrandbits(16),
        wlen=rng.randint(frame_len, 0xFFFF),
        frame=frame,
    )


class TestDecode:
    def test_zero_fraction_header(self):
        raw = struct.pack("<QBB", 0x0000_0001_0000_0000, 2, 0) \
            + struct.pack(">HHH", 18, 0, 60) + b"\x00\x00"
        rec = decode_record(io.BytesIO(raw))
        assert rec.ts.sec == 1
        assert rec.ts.frac == 0
        assert rec.wlen == 60
        assert rec.frame == b""

    def test_rlen_below_minimum(self):
        raw = struct.pack("<QBB", 0, 2, 0) + struct.pack(">HHH", 10, 0, 60)
        with pytest.raises(MalformedLength):
            decode_record(io.BytesIO(raw))

    def test_unsupported_type(self):
        raw = struct.pack("<QBB", 0, 5, 0) + struct.pack(">HHH", 18, 0, 0)
        with pytest.raises(UnsupportedType):
            decode_record(io.BytesIO(raw))

    def test_truncated_header(self):
        with pytest.raises(TruncatedRecord):
            decode_record(io.BytesIO(b"\x00" * 7))

    def test_truncated_body(self):
        raw = struct.pack("<QBB", 0, 2, 0) + struct.pack(">HHH", 30, 0, 12) + b"\x00" * 4
        with pytest.raises(TruncatedRecord):
            decode_record(io.BytesIO(raw))

    def test_clean_eof(self):
        assert decode_record(io.BytesIO(b"")) is None

    def test_advances_exactly_rlen(self):
        rec = record(b"\xAB" * 40)
        stream = io.BytesIO(encode_record(rec) + b"tail")
        decode_record(stream)
        assert stream.tell() == rec.rlen


class TestEncode:
    def test_minimal_record_is_18_bytes(self):
        assert len(encode_record(record(b""))) == 18

    def test_frame_54_gives_72_with_rlen_field(self):
        data = encode_record(record(b"\x01" * 54))
        assert len(data) == 18 + 54 == 72
        assert struct.unpack(">H", data[10:12])[0] == 72

    def test_frame_too_large(self):
        with pytest.raises(FrameTooLarge):
            encode_record(record(b"\x00" * 65518, wlen=0xFFFF))


class TestRoundTrip:
    def test_thousand_random_records(self):
        rng = random.Random(1234)
        for _ in range(1000):
            rec = random_record(rng)
            assert decode_record(io.BytesIO(encode_record(rec))) == rec

    @given(st.integers(0, 2**64 - 1), st.integers(0, 255), st.integers(0, 0xFFFF),
           st.binary(max_size=64))
    def test_any_valid_record(self, ts_raw, flags, lctr, frame):
        rec = TraceRecord(ts=ErfTimestamp(ts_raw), flags=flags, lctr=lctr,
                          wlen=min(len(frame) + 7, 0xFFFF), frame=frame)
        assert decode_record(io.BytesIO(encode_record(rec))) == rec

    def test_stream_partition_sums_to_file_length(self, tmp_path):
        rng = random.Random(99)
        records = [random_record(rng) for _ in range(200)]
        path = tmp_path / "t.erf"
        write_records(path, records)
        # Independent check: walk rlen fields manually.
        data = path.read_bytes()
        offset = 0
        seen = 0
        while offset < len(data):
            rlen = struct.unpack_from(">H", data, offset + 10)[0]
            offset += rlen
            seen += 1
        assert offset == len(data) == sum(r.rlen for r in records)
        assert seen == len(records)

    def test_golden_file_reencodes_byte_identical(self, tmp_path):
        rng = random.Random(4321)
        path = tmp_path / "golden.erf"
        write_records(path, (random_record(rng) for _ in range(64)))
        original = path.read_bytes()
        reencoded = b"".join(encode_record(r) for r in read_records(path))
        assert reencoded == original


class TestTimestamp:
    def test_zero_fraction(self):
        assert ErfTimestamp.from_parts(5, 0).to_micros() == (5, 0)

    def test_exact_half_second(self):
        assert ErfTimestamp.from_parts(1, 0x8000_0000).to_micros() == (1, 500_000)

    def test_max_fraction_carries(self):
        # Exact arithmetic: 0xFFFFFFFF/2^32 s rounds up to the next second.
        frac = 0xFFFF_FFFF
        exact = Fraction(frac, 1 << 32) * 1_000_000
        assert exact > Fraction(999_999_5, 10)  # rounds to 10^6
        assert ErfTimestamp.from_parts(1, frac).to_micros() == (2, 0)

    @given(st.integers(0, 2**63 - 1))
    def test_micro_error_within_half_microsecond(self, raw):
        ts = ErfTimestamp(raw)
        sec, usec = ts.to_micros()
        exact = ts.to_fraction()
        approx = Fraction(sec) + Fraction(usec, 1_000_000)
        assert abs(approx - exact) <= Fraction(1, 2_000_000)

    @given(st.integers(0, 2**64 - 1))
    def test_parts_round_trip(self, raw):
        ts = ErfTimestamp(raw)
        assert ErfTimestamp.from_parts(ts.sec, ts.frac).raw == raw

    @given(st.integers(0, 2**31 - 1), st.integers(0, 999_999))
    def test_micros_round_trip(self, sec, usec):
        ts = ErfTimestamp.from_micros(sec, usec)
        assert ts.to_micros() == (sec, usec)

    def test_ordering_matches_raw(self):
        assert ErfTimestamp(1) < ErfTimestamp(2) < ErfTimestamp(1 << 40)
