"""Hand-rolled packet/record builders used as independent test oracles.

These construct frames byte by byte, on purpose not sharing code with the
package's synthetic source, so field arithmetic is checked from two sides.
"""

from __future__ import annotations

import struct

from masts.erf import ErfTimestamp, TraceRecord


def eth_header(ethertype: int, src_mac: bytes = b"\x02\x00\x00\x00\x00\x01",
               dst_mac: bytes = b"\x02\x00\x00\x00\x00\x02") -> bytes:
    return dst_mac + src_mac + struct.pack(">H", ethertype)


def ipv4_header(src: int, dst: int, protocol: int, total_len: int,
                ihl_words: int = 5, checksum: int | None = None) -> bytes:
    header = bytearray(ihl_words * 4)
    header[0] = 0x40 | ihl_words
    struct.pack_into(">H", header, 2, total_len)
    header[8] = 64
    header[9] = protocol
    struct.pack_into(">I", header, 12, src)
    struct.pack_into(">I", header, 16, dst)
    if checksum is None:
        checksum = _checksum(bytes(header))
    struct.pack_into(">H", header, 10, checksum)
    return bytes(header)


def _checksum(header: bytes) -> int:
    total = sum(struct.unpack(f">{len(header) // 2}H", header))
    while total >> 16:
        total = (total & 0xFFFF) + (total >> 16)
    return ~total & 0xFFFF


def tcp_header(sport: int = 12345, dport: int = 80, doff_words: int = 5,
               flags: int = 0x18) -> bytes:
    header = bytearray(doff_words * 4)
    struct.pack_into(">HH", header, 0, sport, dport)
    header[12] = doff_words << 4
    header[13] = flags
    struct.pack_into(">H", header, 14, 0xFFFF)
    return bytes(header)


def udp_header(sport: int = 12345, dport: int = 53, length: int = 8) -> bytes:
    return struct.pack(">HHHH", sport, dport, length, 0)


def tcp_frame(src: int = 0x0A000001, dst: int = 0x0A000002, payload: bytes = b"",
              ihl_words: int = 5, doff_words: int = 5, sport: int = 12345,
              dport: int = 80) -> bytes:
    ip_len = ihl_words * 4 + doff_words * 4 + len(payload)
    return (eth_header(0x0800)
            + ipv4_header(src, dst, 6, ip_len, ihl_words)
            + tcp_header(sport, dport, doff_words)
            + payload)


def udp_frame(src: int = 0x0A000001, dst: int = 0x0A000002,
              payload: bytes = b"", sport: int = 12345, dport: int = 53) -> bytes:
    ip_len = 20 + 8 + len(payload)
    return (eth_header(0x0800)
            + ipv4_header(src, dst, 17, ip_len)
            + udp_header(sport, dport, 8 + len(payload))
            + payload)


def icmp_frame(src: int = 0x0A000001, dst: int = 0x0A000002,
               payload: bytes = b"") -> bytes:
    icmp = struct.pack(">BBHI", 8, 0, 0, 1)
    ip_len = 20 + len(icmp) + len(payload)
    return eth_header(0x0800) + ipv4_header(src, dst, 1, ip_len) + icmp + payload


def arp_frame() -> bytes:
    return eth_header(0x0806) + bytes(28)


def record(frame: bytes, seconds: float = 1.0, wlen: int | None = None,
           lctr: int = 0, flags: int = 0) -> TraceRecord:
    return TraceRecord(ts=ErfTimestamp.from_seconds(seconds), flags=flags,
                       lctr=lctr, wlen=wlen if wlen is not None else len(frame),
                       frame=frame)
