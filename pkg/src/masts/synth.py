"""Deterministic synthetic packet source, the desk-scale stand-in for a tap.

Generates Ethernet/IPv4 frames carrying TCP or UDP over a fixed flow set,
with monotonic timestamps at a configured mean rate.  Payloads are filled
with a recognizable sentinel pattern so leak checks downstream can assert
that no payload byte survives the capture pipeline.
"""

from __future__ import annotations

import random
import struct
from dataclasses import dataclass

from .erf import ErfTimestamp, TraceRecord
from .errors import BadConfig
from .headers import PROTO_TCP, PROTO_UDP, ipv4_checksum

PAYLOAD_SENTINEL = b"!PAYLOAD!"

ETH_IP_TCP_MIN = 54  # 14 + 20 + 20
MAX_WIRE = 65517     # keeps rlen within its 16-bit field

_DEF_SIZES = ((64, 0.5), (576, 0.3), (1500, 0.2))


@dataclass(frozen=True)
class SynthConfig:
    """Knobs for the generator; identical configs yield identical streams."""

    packets: int = 10_000
    mean_rate_pps: float = 1000.0
    sizes: tuple[tuple[int, float], ...] = _DEF_SIZES  # (wire bytes, weight)
    address_pool: int = 32
    flow_count: int = 64
    seed: int = 0
    start_time: float = 1_200_000_000.0
    spacing: str = "poisson"  # or "constant"
    payload_pattern: bytes = PAYLOAD_SENTINEL

    def validate(self) -> None:
        if self.packets < 0:
            raise BadConfig("packets must be non-negative")
        if self.mean_rate_pps < 0:
            raise BadConfig("mean rate must be non-negative")
        if self.address_pool < 2:
            raise BadConfig("address pool needs at least two addresses")
        if self.flow_count < 1:
            raise BadConfig("need at least one flow")
        if not self.sizes:
            raise BadConfig("empty size distribution")
        for size, weight in self.sizes:
            if size < ETH_IP_TCP_MIN or size > MAX_WIRE:
                raise BadConfig(f"wire size {size} outside [{ETH_IP_TCP_MIN}, {MAX_WIRE}]")
            if weight <= 0:
                raise BadConfig("size weights must be positive")
        if self.spacing not in ("poisson", "constant"):
            raise BadConfig(f"unknown spacing {self.spacing!r}")
        if not self.payload_pattern:
            raise BadConfig("payload pattern must be non-empty")


@dataclass(frozen=True)
class _Flow:
    src_mac: bytes
    dst_mac: bytes
    src_ip: int
    dst_ip: int
    protocol: int
    src_port: int
    dst_port: int
    seq: int


def _build_frame(flow: _Flow, wire_size: int, pattern: bytes) -> bytes:
    """Full on-the-wire frame bytes for one packet of ``flow``.

    The IPv4 checksum is valid; TCP/UDP checksums are left zero, matching the
    pipeline's documented stance on transport checksums.
    """
    eth = flow.dst_mac + flow.src_mac + b"\x08\x00"
    total_len = wire_size - 14
    ip_wo_cksum = struct.pack(">BBHHHBBH4s4s", 0x45, 0, total_len,
                              flow.seq & 0xFFFF, 0x4000, 64, flow.protocol, 0,
                              flow.src_ip.to_bytes(4, "big"),
                              flow.dst_ip.to_bytes(4, "big"))
    cksum = ipv4_checksum(ip_wo_cksum)
    ip = ip_wo_cksum[:10] + cksum.to_bytes(2, "big") + ip_wo_cksum[12:]
    if flow.protocol == PROTO_TCP:
        l4 = struct.pack(">HHIIBBHHH", flow.src_port, flow.dst_port, flow.seq,
                         0, 0x50, 0x18, 0xFFFF, 0, 0)
    else:
        l4 = struct.pack(">HHHH", flow.src_port, flow.dst_port, total_len - 20, 0)
    payload_len = wire_size - len(eth) - len(ip) - len(l4)
    payload = (pattern * (payload_len // len(pattern) + 1))[:payload_len]
    return eth + ip + l4 + payload


def synth_source(config: SynthConfig):
    """Yield ``config.packets`` records; same config, same byte stream.

    A zero rate produces an empty stream regardless of the packet budget
    (nothing ever arrives within any horizon).
    """
    config.validate()
    if config.mean_rate_pps == 0 or config.packets == 0:
        return
    rng = random.Random(config.seed)
    pool = [rng.getrandbits(32) for _ in range(config.address_pool)]
    flows = []
    for i in range(config.flow_count):
        src, dst = rng.sample(pool, 2)
        flows.append(_Flow(
            src_mac=rng.getrandbits(48).to_bytes(6, "big"),
            dst_mac=rng.getrandbits(48).to_bytes(6, "big"),
            src_ip=src, dst_ip=dst,
            protocol=rng.choice((PROTO_TCP, PROTO_UDP)),
            src_port=rng.randint(1024, 65535),
            dst_port=rng.choice((80, 443, 53, 8080, rng.randint(1024, 65535))),
            seq=i,
        ))
    sizes = [s for s, _ in config.sizes]
    weights = [w for _, w in config.sizes]
    # Template per (flow, size): header bytes never vary within a flow.
    templates: dict[tuple[int, int], bytes] = {}

    raw_ts = int(config.start_time * (1 << 32))
    constant_step = int((1 << 32) / config.mean_rate_pps)
    for _ in range(config.packets):
        if config.spacing == "poisson":
            raw_ts += int(rng.expovariate(config.mean_rate_pps) * (1 << 32))
        else:
            raw_ts += constant_step
        flow_idx = rng.randrange(config.flow_count)
        wire_size = rng.choices(sizes, weights)[0]
        key = (flow_idx, wire_size)
        frame = templates.get(key)
        if frame is None:
            frame = _build_frame(flows[flow_idx], wire_size, config.payload_pattern)
            templates[key] = frame
        yield TraceRecord(ts=ErfTimestamp(raw_ts), flags=0, lctr=0,
                          wlen=wire_size, frame=frame)
