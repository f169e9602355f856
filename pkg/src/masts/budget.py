"""Storage-budget arithmetic for the tiered data products.

Each tier stores a progressively more reduced product of the same traffic:
everything, headers only, compressed headers, flow summaries, and sampled
flow summaries.  Given a tier's mean arrival rate, ``time_to_fill`` says how
long a store of a given capacity lasts: exactly, and as the one-significant-
figure label the estimates are quoted in.

Units are decimal throughout: 1 TB = 10^12 bytes, 1 Gb/s = 10^9 bits/s.
The reduction ratios are corpus-measured constants (from a 500 GB reference
trace), carried for projection only; synthetic corpora will not reproduce
them.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

from .errors import ZeroRate

SECONDS_PER_DAY = 86400
DAYS_PER_WEEK = 7
DAYS_PER_YEAR = Fraction(36525, 100)
DAYS_PER_MONTH = DAYS_PER_YEAR / 12


@dataclass(frozen=True)
class TierSpec:
    """One storage tier: rates in bits/s, measured reduction, lifetime class."""

    name: str
    max_rate_bps: int
    mean_rate_bps: int
    reduction_ratio: float
    retention_class: str

    def __post_init__(self) -> None:
        if self.mean_rate_bps > self.max_rate_bps:
            raise ValueError("mean rate above max rate")
        if not 0 < self.reduction_ratio <= 1:
            raise ValueError("reduction ratio must be in (0, 1]")


# The five standard tiers with their approximate arrival rates, assuming the
# link runs at a mean of 10% of its 10 Gb/s maximum.  Compressed headers use
# the midpoint of the measured 4.5-6.1% range.
STANDARD_TIERS: tuple[TierSpec, ...] = (
    TierSpec("full", 10_000_000_000, 1_000_000_000, 1.0, "day"),
    TierSpec("headers", 1_000_000_000, 100_000_000, 0.14, "week"),
    TierSpec("compressed_headers", 500_000_000, 50_000_000, 0.053, "weeks"),
    TierSpec("netflow", 100_000_000, 10_000_000, 0.012, "months"),
    TierSpec("sampled_netflow", 700_000, 70_000, 0.000071, "unbounded"),
)

DEFAULT_CAPACITY_BYTES = 10 * 10**12  # 10 TB

_CAPACITY_RE = re.compile(r"^\s*(\d+(?:\.\d+)?)\s*([KMGTP]?B?)\s*$", re.IGNORECASE)
_CAPACITY_MULT = {"": 1, "B": 1, "KB": 10**3, "MB": 10**6, "GB": 10**9,
                  "TB": 10**12, "PB": 10**15}


def parse_capacity(text: str) -> int:
    """Parse '10TB', '500 GB', or a bare byte count (decimal units)."""
    m = _CAPACITY_RE.match(text)
    if not m:
        raise ValueError(f"cannot parse capacity {text!r}")
    number, unit = m.groups()
    unit = unit.upper()
    if unit in ("K", "M", "G", "T", "P"):
        unit += "B"
    return int(Fraction(number) * _CAPACITY_MULT[unit])


def time_to_fill(tier: TierSpec, capacity_bytes: int) -> Fraction:
    """Seconds until ``capacity_bytes`` fills at the tier's mean rate, exact."""
    if tier.mean_rate_bps <= 0:
        raise ZeroRate(f"tier {tier.name} has no positive mean rate")
    return Fraction(capacity_bytes * 8, tier.mean_rate_bps)


def _truncate_one_significant(value: Fraction) -> int:
    """3.04 -> 3, 2.65 -> 2, 36.2 -> 30: first digit, rest zeroed."""
    whole = int(value)
    if whole < 1:
        return 1
    text = str(whole)
    return int(text[0]) * 10 ** (len(text) - 1)


def approximate_duration(seconds: Fraction) -> str:
    """Single-significant-figure label in days/weeks/months/years.

    Picks the largest unit the duration reaches at least one of, then keeps
    the leading digit (estimates are quoted conservatively, so 36 years reads
    "30 years", not "40 years").  Anything under a day rounds up to "1 day".
    """
    days = seconds / SECONDS_PER_DAY
    if days < 1:
        return "1 day"
    for unit, size in (("year", DAYS_PER_YEAR), ("month", DAYS_PER_MONTH),
                       ("week", Fraction(DAYS_PER_WEEK))):
        quantity = days / size
        if quantity >= 1:
            figure = _truncate_one_significant(quantity)
            return f"{figure} {unit}{'s' if figure != 1 else ''}"
    figure = _truncate_one_significant(days)
    return f"{figure} day{'s' if figure != 1 else ''}"


@dataclass(frozen=True)
class BudgetRow:
    tier: TierSpec
    seconds: Fraction
    label: str

    @property
    def days(self) -> float:
        return float(self.seconds / SECONDS_PER_DAY)

    @property
    def years(self) -> float:
        return float(self.seconds / SECONDS_PER_DAY / DAYS_PER_YEAR)


def budget_report(capacity_bytes: int = DEFAULT_CAPACITY_BYTES,
                  tiers: tuple[TierSpec, ...] = STANDARD_TIERS) -> list[BudgetRow]:
    """Fill-time table for every tier at the given capacity."""
    return [BudgetRow(tier=tier, seconds=time_to_fill(tier, capacity_bytes),
                      label=approximate_duration(time_to_fill(tier, capacity_bytes)))
            for tier in tiers]
