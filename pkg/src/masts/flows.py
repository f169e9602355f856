"""Netflow-style flow aggregation with active/inactive timeouts and sampling.

A flow is the set of packets sharing a 5-tuple; a flow record accumulates
packet/byte tallies, the first/last timestamps and an OR of TCP flags.  Flows
retire when idle longer than the inactive timeout or alive longer than the
active timeout; a final flush drains the table.  Wire lengths (not captured
lengths) feed the byte tallies.
"""

from __future__ import annotations

import csv
import random
from collections import OrderedDict, deque
from dataclasses import dataclass
from typing import IO, Iterable, Iterator, TypeVar

from .erf import ErfTimestamp
from .errors import BadN
from .headers import HeaderSummary, ipv4_to_str
from .timefmt import iso_utc

DEFAULT_ACTIVE_TIMEOUT = 1800.0
DEFAULT_INACTIVE_TIMEOUT = 15.0

FLOW_CSV_FIELDS = ("src", "dst", "sport", "dport", "proto", "packets", "bytes",
                   "t_first", "t_last", "flags")

T = TypeVar("T")


@dataclass(frozen=True)
class FlowKey:
    """5-tuple identity; ports are zero for protocols that have none."""

    src_ip: int
    dst_ip: int
    src_port: int
    dst_port: int
    protocol: int

    @classmethod
    def from_headers(cls, s: HeaderSummary) -> "FlowKey | None":
        if not s.is_ip:
            return None
        return cls(src_ip=s.src_ip, dst_ip=s.dst_ip,
                   src_port=s.src_port or 0, dst_port=s.dst_port or 0,
                   protocol=s.protocol or 0)


@dataclass
class FlowRecord:
    key: FlowKey
    packets: int
    bytes: int
    t_first: ErfTimestamp
    t_last: ErfTimestamp
    tcp_flags_or: int = 0

    def as_csv_row(self) -> list:
        return [ipv4_to_str(self.key.src_ip), ipv4_to_str(self.key.dst_ip),
                self.key.src_port, self.key.dst_port, self.key.protocol,
                self.packets, self.bytes,
                iso_utc(self.t_first.to_datetime()),
                iso_utc(self.t_last.to_datetime()), self.tcp_flags_or]


class FlowTable:
    """Single-writer flow cache keyed by 5-tuple.

    ``update`` expects non-decreasing timestamps and returns the flows the
    packet's arrival time expired.  Expiry scans are O(expired), not O(table):
    idleness is tracked by LRU order, age by creation order.
    """

    def __init__(self, active_timeout: float = DEFAULT_ACTIVE_TIMEOUT,
                 inactive_timeout: float = DEFAULT_INACTIVE_TIMEOUT) -> None:
        if active_timeout <= 0 or inactive_timeout <= 0:
            raise ValueError("timeouts must be positive")
        self._active_raw = int(active_timeout * (1 << 32))
        self._inactive_raw = int(inactive_timeout * (1 << 32))
        self._flows: OrderedDict[FlowKey, FlowRecord] = OrderedDict()
        self._by_creation: deque[tuple[int, FlowKey]] = deque()
        self.skipped_non_ip = 0

    def __len__(self) -> int:
        return len(self._flows)

    def update(self, hdr: HeaderSummary, ts: ErfTimestamp,
               wire_len: int) -> list[FlowRecord]:
        """Account one packet; returns flows that expired as of ``ts``."""
        expired = self._expire(ts.raw)
        key = FlowKey.from_headers(hdr)
        if key is None:
            self.skipped_non_ip += 1
            return expired
        flow = self._flows.get(key)
        if flow is None:
            flow = FlowRecord(key=key, packets=1, bytes=wire_len,
                              t_first=ts, t_last=ts,
                              tcp_flags_or=hdr.tcp_flags or 0)
            self._flows[key] = flow
            self._by_creation.append((ts.raw, key))
        else:
            flow.packets += 1
            flow.bytes += wire_len
            flow.t_last = ts
            flow.tcp_flags_or |= hdr.tcp_flags or 0
            self._flows.move_to_end(key)
        return expired

    def _expire(self, now_raw: int) -> list[FlowRecord]:
        expired: list[FlowRecord] = []
        # Idle flows sit at the front of the LRU order.
        while self._flows:
            key, flow = next(iter(self._flows.items()))
            if now_raw - flow.t_last.raw > self._inactive_raw:
                expired.append(self._flows.pop(key))
            else:
                break
        # Aged flows sit at the front of the creation order; entries whose
        # flow was already expired (or replaced) are skipped.
        while self._by_creation:
            created_raw, key = self._by_creation[0]
            if now_raw - created_raw <= self._active_raw:
                break
            self._by_creation.popleft()
            flow = self._flows.get(key)
            if flow is not None and flow.t_first.raw == created_raw:
                expired.append(self._flows.pop(key))
        return expired

    def flush(self) -> list[FlowRecord]:
        """Drain every remaining flow, in creation order."""
        drained = list(self._flows.values())
        drained.sort(key=lambda f: f.t_first.raw)
        self._flows.clear()
        self._by_creation.clear()
        return drained


def sample_1_in_n(stream: Iterable[T], n: int, seed: int = 0,
                  mode: str = "random") -> Iterator[T]:
    """Keep a 1-in-n subset of ``stream``, deterministically per seed.

    ``random`` keeps each item independently with probability 1/n, avoiding
    aliasing against periodic traffic; ``stride`` keeps every n-th item for
    comparison runs.  n = 1 is the identity.
    """
    if n < 1:
        raise BadN(f"n must be >= 1, got {n}")
    if mode not in ("random", "stride"):
        raise BadN(f"unknown sampling mode {mode!r}")
    if n == 1:
        yield from stream
        return
    if mode == "stride":
        for i, item in enumerate(stream):
            if i % n == 0:
                yield item
        return
    rng = random.Random(seed)
    keep_p = 1.0 / n
    for item in stream:
        if rng.random() < keep_p:
            yield item


def write_flow_csv(flows: Iterable[FlowRecord], out: IO[str]) -> int:
    """Newline-delimited flow export; returns the row count."""
    writer = csv.writer(out)
    writer.writerow(FLOW_CSV_FIELDS)
    count = 0
    for flow in flows:
        writer.writerow(flow.as_csv_row())
        count += 1
    return count
