"""pcap codec and the ERF<->pcap conversion contract."""

from __future__ import annotations

import io
import random
import struct
from fractions import Fraction

import pytest

from masts.convert import (ConversionStats, convert_erf_to_pcap,
                           convert_pcap_to_erf, erf_record_to_pcap,
                           erf_to_pcap_records, pcap_record_to_erf)
from masts.erf import ErfTimestamp, TraceRecord, write_records
from masts.errors import MalformedLength, TruncatedRecord, UnsupportedType
from masts.pcap import (PcapHeader, PcapRecord, decode_global_header, read_pcap,
                        write_pcap)

from helpers import record
from test_erf import random_record


class TestPcapFile:
    def test_empty_file_is_header_only(self, tmp_path):
        path = tmp_path / "empty.pcap"
        write_pcap(path, [], PcapHeader(snaplen=96))
        data = path.read_bytes()
        assert len(data) == 24
        magic, major, minor, zone, sigfigs, snaplen, network = \
            struct.unpack("<IHHiIII", data)
        assert (magic, major, minor) == (0xA1B2C3D4, 2, 4)
        assert (zone, sigfigs) == (0, 0)
        assert snaplen == 96
        assert network == 1
        assert list(read_pcap(path)) == []

    def test_record_round_trip(self, tmp_path):
        records = [PcapRecord(ts_sec=10, ts_usec=999_999, orig_len=1500,
                              frame=b"\x55" * 54),
                   PcapRecord(ts_sec=11, ts_usec=0, orig_len=54, frame=b"\x66" * 54)]
        path = tmp_path / "t.pcap"
        write_pcap(path, records)
        assert list(read_pcap(path)) == records

    def test_rejects_foreign_magic(self):
        data = struct.pack("<IHHiIII", 0xD4C3B2A1, 2, 4, 0, 0, 65535, 1)
        with pytest.raises(UnsupportedType):
            decode_global_header(io.BytesIO(data))

    def test_rejects_bad_usec(self, tmp_path):
        head = struct.pack("<IHHiIII", 0xA1B2C3D4, 2, 4, 0, 0, 65535, 1)
        rec = struct.pack("<IIII", 1, 1_000_000, 0, 0)
        with pytest.raises(MalformedLength):
            list(read_pcap(io.BytesIO(head + rec)))

    def test_truncated_frame(self):
        head = struct.pack("<IHHiIII", 0xA1B2C3D4, 2, 4, 0, 0, 65535, 1)
        rec = struct.pack("<IIII", 1, 0, 10, 10) + b"\x00" * 4
        with pytest.raises(TruncatedRecord):
            list(read_pcap(io.BytesIO(head + rec)))

    def test_invariant_incl_le_orig(self):
        with pytest.raises(ValueError):
            PcapRecord(ts_sec=0, ts_usec=0, orig_len=4, frame=b"\x00" * 5)


class TestConversion:
    def test_field_mapping_stripped_record(self):
        rec = record(b"\xAA" * 54, seconds=3.25, wlen=1500)
        out = erf_record_to_pcap(rec)
        assert out.incl_len == 54
        assert out.orig_len == 1500
        assert (out.ts_sec, out.ts_usec) == (3, 250_000)

    def test_exact_half_second(self):
        rec = record(b"", seconds=1.5, wlen=0)
        out = erf_record_to_pcap(rec)
        assert (out.ts_sec, out.ts_usec) == (1, 500_000)

    def test_empty_conversion_is_valid_pcap(self, tmp_path):
        erf = tmp_path / "in.erf"
        erf.write_bytes(b"")
        out = tmp_path / "out.pcap"
        stats = convert_erf_to_pcap(erf, out)
        assert stats.records == 0
        assert list(read_pcap(out)) == []

    def test_preserves_count_order_wlen_and_timestamp_bound(self, tmp_path):
        rng = random.Random(7)
        raw = 1 << 40
        records = []
        for _ in range(1000):
            raw += rng.randint(0, 1 << 34)
            rec = random_record(rng)
            records.append(TraceRecord(ts=ErfTimestamp(raw), flags=rec.flags,
                                       lctr=rec.lctr, wlen=rec.wlen, frame=rec.frame))
        erf_path = tmp_path / "in.erf"
        write_records(erf_path, records)
        pcap_path = tmp_path / "out.pcap"
        stats = convert_erf_to_pcap(erf_path, pcap_path)
        out = list(read_pcap(pcap_path))

        assert stats.records == len(out) == len(records)
        assert [p.orig_len for p in out] == [r.wlen for r in records]
        assert [p.frame for p in out] == [r.frame for r in records]
        half_us = Fraction(1, 2_000_000)
        for erf_rec, pcap_rec in zip(records, out):
            exact = erf_rec.ts.to_fraction()
            approx = Fraction(pcap_rec.ts_sec) + Fraction(pcap_rec.ts_usec, 1_000_000)
            assert abs(approx - exact) <= half_us
        # Monotonic input stays monotonic after precision reduction.
        micro = [(p.ts_sec, p.ts_usec) for p in out]
        assert micro == sorted(micro)

    def test_loss_counters_surface_in_stats(self):
        records = [record(b"", lctr=0), record(b"", lctr=5), record(b"", lctr=2)]
        stats = ConversionStats()
        list(erf_to_pcap_records(records, stats))
        assert stats.total_lost == 7

    def test_rx_error_records_are_kept(self):
        rec = record(b"\x01" * 20, flags=0x10)
        stats = ConversionStats()
        out = list(erf_to_pcap_records([rec], stats))
        assert len(out) == 1
        assert stats.rx_error_records == 1

    def test_pcap_to_erf_round_trip_counts(self, tmp_path):
        rng = random.Random(11)
        records = [random_record(rng) for _ in range(100)]
        erf1 = tmp_path / "a.erf"
        write_records(erf1, records)
        pcap = tmp_path / "a.pcap"
        convert_erf_to_pcap(erf1, pcap)
        erf2 = tmp_path / "b.erf"
        stats = convert_pcap_to_erf(pcap, erf2)
        assert stats.records == 100

    def test_pcap_record_to_erf_mapping(self):
        prec = PcapRecord(ts_sec=7, ts_usec=125_000, orig_len=900, frame=b"\x01" * 60)
        rec = pcap_record_to_erf(prec)
        assert rec.wlen == 900
        assert rec.frame == prec.frame
        assert rec.lctr == 0
        assert rec.ts.to_micros() == (7, 125_000)
