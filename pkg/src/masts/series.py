"""Bytes-per-interval time series over a record stream.

The most reduced data product: one byte tally per fixed-width bin, summing
wire lengths.  Bin arithmetic runs on the 64-bit fixed-point timestamps with
exact rational math so millisecond bins never drift.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from datetime import datetime
from fractions import Fraction
from typing import IO, Iterable

from .erf import ErfTimestamp, TraceRecord
from .timefmt import iso_utc

SERIES_CSV_FIELDS = ("bin_start", "bytes")


def _as_fraction(bin_width: float | int | str | Fraction) -> Fraction:
    # Route floats through their decimal string so 0.001 means 1/1000.
    if isinstance(bin_width, float):
        bin_width = str(bin_width)
    width = Fraction(bin_width)
    if width <= 0:
        raise ValueError("bin width must be positive")
    return width


@dataclass
class TimeSeries:
    """Dense byte counts from ``t0`` in ``bin_width``-second steps."""

    bin_width: Fraction
    t0: ErfTimestamp | None = None
    bins: list[int] = field(default_factory=list)

    def bin_start(self, index: int) -> datetime:
        if self.t0 is None:
            raise ValueError("empty series has no bins")
        raw = self.t0.raw + (index * self.bin_width.numerator * (1 << 32)
                             ) // self.bin_width.denominator
        return ErfTimestamp(raw).to_datetime()

    @property
    def total(self) -> int:
        return sum(self.bins)


def timeseries(records: Iterable[TraceRecord],
               bin_width: float | int | str | Fraction = Fraction(1, 1000),
               t0: ErfTimestamp | None = None) -> TimeSeries:
    """Bin a timestamp-ordered record stream; empty input gives an empty series.

    ``t0`` anchors the first bin; it defaults to the first record's timestamp.
    A record lands in bin floor((ts - t0) / bin_width) and contributes its
    wire length.
    """
    width = _as_fraction(bin_width)
    series = TimeSeries(bin_width=width, t0=t0)
    # Bin index = (ts_raw - t0_raw) * den // (num * 2^32), all integers.
    divisor = width.numerator * (1 << 32)
    for rec in records:
        if series.t0 is None:
            series.t0 = rec.ts
        index = (rec.ts.raw - series.t0.raw) * width.denominator // divisor
        if index < 0:
            raise ValueError("record before the series start")
        if index >= len(series.bins):
            series.bins.extend([0] * (index + 1 - len(series.bins)))
        series.bins[index] += rec.wlen
    return series


def pad_bins(series: TimeSeries, count: int) -> TimeSeries:
    """Extend with zero bins so the series spans ``count`` bins."""
    if count > len(series.bins):
        series.bins.extend([0] * (count - len(series.bins)))
    return series


def write_series_csv(series: TimeSeries, out: IO[str]) -> int:
    """CSV export ``bin_start,bytes``; returns the row count."""
    writer = csv.writer(out)
    writer.writerow(SERIES_CSV_FIELDS)
    for index, count in enumerate(series.bins):
        writer.writerow([iso_utc(series.bin_start(index)), count])
    return len(series.bins)
