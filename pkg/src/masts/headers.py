"""Ethernet/IPv4/TCP/UDP/ICMP header parsing and snap-length computation.

The parser fills in as much as the frame allows and stops cleanly at the
first unsupported or truncated layer; it never throws halfway through a
frame that starts with a complete Ethernet header.  The snap length is the
byte count a capture may legally keep: layer-2 plus network plus transport
headers, nothing past them.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import TYPE_CHECKING

from .errors import FrameTooShort

if TYPE_CHECKING:
    from .erf import TraceRecord

ETH_HEADER_LEN = 14
VLAN_TAG_LEN = 4

ETHERTYPE_IPV4 = 0x0800
ETHERTYPE_VLAN = 0x8100

PROTO_ICMP = 1
PROTO_TCP = 6
PROTO_UDP = 17

# Transport header bytes retained for protocols with a fixed-size header.
ICMP_HEADER_LEN = 8
UDP_HEADER_LEN = 8


@dataclass(frozen=True)
class HeaderSummary:
    """Parsed layer 2/3/4 fields of one frame.

    ``ip_header_len``/``l4_header_len`` are 0 for layers that are absent;
    ``truncated_layer`` names the layer where parsing stopped short, or is
    None for a clean parse.  ``snap_len`` never exceeds the frame length.
    """

    ethertype: int
    l2_header_len: int
    snap_len: int
    src_ip: int | None = None
    dst_ip: int | None = None
    protocol: int | None = None
    src_port: int | None = None
    dst_port: int | None = None
    ip_header_len: int = 0
    l4_header_len: int = 0
    tcp_flags: int | None = None
    truncated_layer: str | None = None

    @property
    def is_ip(self) -> bool:
        return self.src_ip is not None


def ipv4_to_str(addr: int) -> str:
    return ".".join(str((addr >> shift) & 0xFF) for shift in (24, 16, 8, 0))


def str_to_ipv4(text: str) -> int:
    parts = text.split(".")
    if len(parts) != 4:
        raise ValueError(f"not a dotted-quad IPv4 address: {text!r}")
    value = 0
    for part in parts:
        octet = int(part)
        if not 0 <= octet <= 255:
            raise ValueError(f"octet out of range in {text!r}")
        value = (value << 8) | octet
    return value


def ipv4_checksum(header: bytes) -> int:
    """RFC 791 header checksum over ``header`` (checksum field zeroed)."""
    if len(header) % 2:
        header += b"\x00"
    total = sum(struct.unpack(f">{len(header) // 2}H", header))
    while total >> 16:
        total = (total & 0xFFFF) + (total >> 16)
    return ~total & 0xFFFF


def ipv4_checksum_ok(header: bytes) -> bool:
    """True when the one's-complement sum over the header comes out 0xFFFF."""
    if len(header) % 2:
        header += b"\x00"
    total = sum(struct.unpack(f">{len(header) // 2}H", header))
    while total >> 16:
        total = (total & 0xFFFF) + (total >> 16)
    return total == 0xFFFF


def parse_headers(frame: bytes) -> HeaderSummary:
    """Parse one Ethernet frame as far as it goes.

    Raises FrameTooShort below the 14-byte Ethernet minimum; anything else
    (unknown ethertype, non-v4 IP, truncated or impossible declared lengths)
    comes back as a partial summary with ``truncated_layer`` set where
    applicable.
    """
    n = len(frame)
    if n < ETH_HEADER_LEN:
        raise FrameTooShort(f"{n} bytes, Ethernet needs {ETH_HEADER_LEN}")

    ethertype = struct.unpack_from(">H", frame, 12)[0]
    l2 = ETH_HEADER_LEN
    if ethertype == ETHERTYPE_VLAN:
        # One 802.1Q tag is treated as 4 extra bytes of L2 header.
        if n < ETH_HEADER_LEN + VLAN_TAG_LEN:
            return HeaderSummary(ethertype=ethertype, l2_header_len=n, snap_len=n,
                                 truncated_layer="vlan")
        ethertype = struct.unpack_from(">H", frame, 16)[0]
        l2 = ETH_HEADER_LEN + VLAN_TAG_LEN

    if ethertype != ETHERTYPE_IPV4:
        return HeaderSummary(ethertype=ethertype, l2_header_len=l2, snap_len=l2)

    if n < l2 + 1:
        return HeaderSummary(ethertype=ethertype, l2_header_len=l2, snap_len=n,
                             truncated_layer="ipv4")
    ver_ihl = frame[l2]
    ihl = (ver_ihl & 0x0F) * 4
    if (ver_ihl >> 4) != 4 or ihl < 20:
        # Declared IPv4 but the header is not a usable v4 header; keep L2 only.
        return HeaderSummary(ethertype=ethertype, l2_header_len=l2, snap_len=l2,
                             truncated_layer="ipv4")

    src_ip = dst_ip = protocol = None
    if n >= l2 + 20:
        protocol = frame[l2 + 9]
        src_ip = struct.unpack_from(">I", frame, l2 + 12)[0]
        dst_ip = struct.unpack_from(">I", frame, l2 + 16)[0]
    if n < l2 + ihl:
        return HeaderSummary(ethertype=ethertype, l2_header_len=l2, snap_len=n,
                             src_ip=src_ip, dst_ip=dst_ip, protocol=protocol,
                             ip_header_len=ihl, truncated_layer="ipv4")

    l4_off = l2 + ihl
    avail = n - l4_off
    common = dict(ethertype=ethertype, l2_header_len=l2, src_ip=src_ip, dst_ip=dst_ip,
                  protocol=protocol, ip_header_len=ihl)

    if protocol == PROTO_TCP:
        src_port = dst_port = None
        if avail >= 4:
            src_port, dst_port = struct.unpack_from(">HH", frame, l4_off)
        if avail < 13:
            # Data offset byte missing: the TCP header length is unknowable.
            return HeaderSummary(snap_len=n, src_port=src_port, dst_port=dst_port,
                                 truncated_layer="tcp", **common)
        doff = (frame[l4_off + 12] >> 4) * 4
        if doff < 20:
            return HeaderSummary(snap_len=l4_off, src_port=src_port, dst_port=dst_port,
                                 truncated_layer="tcp", **common)
        tcp_flags = frame[l4_off + 13] if avail >= 14 else None
        truncated = "tcp" if avail < doff else None
        return HeaderSummary(snap_len=min(l4_off + doff, n), src_port=src_port,
                             dst_port=dst_port, l4_header_len=doff,
                             tcp_flags=tcp_flags, truncated_layer=truncated, **common)

    if protocol == PROTO_UDP:
        src_port = dst_port = None
        if avail >= 4:
            src_port, dst_port = struct.unpack_from(">HH", frame, l4_off)
        truncated = "udp" if avail < UDP_HEADER_LEN else None
        return HeaderSummary(snap_len=min(l4_off + UDP_HEADER_LEN, n),
                             src_port=src_port, dst_port=dst_port,
                             l4_header_len=UDP_HEADER_LEN,
                             truncated_layer=truncated, **common)

    if protocol == PROTO_ICMP:
        truncated = "icmp" if avail < ICMP_HEADER_LEN else None
        return HeaderSummary(snap_len=min(l4_off + ICMP_HEADER_LEN, n),
                             l4_header_len=ICMP_HEADER_LEN,
                             truncated_layer=truncated, **common)

    # Some other IP protocol: network-layer header only.
    return HeaderSummary(snap_len=l4_off, **common)


def snap_length(summary: HeaderSummary) -> int:
    """Legal retain length for the frame ``summary`` was parsed from.

    L2 plus IP plus transport header for TCP/UDP/ICMP, L2 plus IP header for
    other IP protocols, bare L2 for everything else.  Unlike
    ``summary.snap_len`` this is the rule's value, not capped by how many
    bytes the frame actually had.
    """
    if not summary.is_ip:
        return summary.l2_header_len
    return summary.l2_header_len + summary.ip_header_len + summary.l4_header_len


def strip_payload(rec: "TraceRecord") -> "TraceRecord":
    """Truncate the record's frame to its snap length.

    Idempotent, never grows a frame, and leaves ``wlen`` alone so the wire
    size survives.  A removed tail sets the record's truncated flag.  Frames
    where a layer was already cut short keep whatever header bytes exist.
    """
    snap = parse_headers(rec.frame).snap_len
    if len(rec.frame) <= snap:
        return rec
    return rec.with_frame(rec.frame[:snap], mark_truncated=True)
