"""Keyed prefix-preserving IPv4 anonymization (the Crypto-PAn construction).

For a fixed key the mapping is a bijection on the 32-bit address space, and
two addresses share a k-bit anonymized prefix exactly when they share a k-bit
real prefix.  Bit i of the output is bit i of the input XORed with one bit of
a pseudorandom function of the (i-1)-bit prefix; here the PRF is AES-128 and
the block input is the prefix padded out to 128 bits with a key-derived
constant.

Key material is 256 bits: the first 128 key AES, the second 128 are encrypted
under that key to form the padding block.  The key must reach the process via
an operator-controlled file (one line of 64 hex characters), never a command
line, and is never written into any output artifact.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes

from .erf import TraceRecord
from .errors import BadKeyLength
from .headers import ipv4_checksum, parse_headers

KEY_LEN = 32  # bytes: 128-bit cipher key + 128-bit pad seed

_BLOCK = 16
_CACHE_SIZE = 1 << 17


class CryptoPan:
    """Prefix-preserving IPv4 address transform, immutable after construction.

    Equal keys give functionally identical instances; the mapping is
    deterministic and safe for unlimited concurrent use.
    """

    def __init__(self, key: bytes) -> None:
        if len(key) != KEY_LEN:
            raise BadKeyLength(f"key must be {KEY_LEN} bytes (256 bits), got {len(key)}")
        self._cipher = Cipher(algorithms.AES(key[:16]), modes.ECB())
        pad = self._cipher.encryptor().update(key[16:32])
        self._pad32 = int.from_bytes(pad[:4], "big")
        self._pad_tail = pad[4:]
        # Address pools repeat heavily in real traffic; memoize the mapping.
        self.anonymize = lru_cache(maxsize=_CACHE_SIZE)(self._anonymize)

    def _anonymize(self, addr: int) -> int:
        if not 0 <= addr < 1 << 32:
            raise ValueError(f"address out of 32-bit range: {addr:#x}")
        pad32 = self._pad32
        tail = self._pad_tail
        # Flip bit n depends on the n-bit prefix (n = 0 uses the bare pad);
        # build all 32 PRF inputs and run one ECB pass over them.
        blocks = bytearray()
        for n in range(32):
            if n == 0:
                top = pad32
            else:
                keep = 32 - n
                top = ((addr >> keep) << keep) | (pad32 & ((1 << keep) - 1))
            blocks += top.to_bytes(4, "big")
            blocks += tail
        out = self._cipher.encryptor().update(bytes(blocks))
        flips = 0
        for n in range(32):
            flips = (flips << 1) | (out[n * _BLOCK] >> 7)
        return addr ^ flips


def load_key(path: str | Path) -> bytes:
    """Read a 64-hex-character key file (one line)."""
    text = Path(path).read_text().strip()
    try:
        key = bytes.fromhex(text)
    except ValueError as exc:
        raise BadKeyLength(f"key file {path} is not hex") from exc
    if len(key) != KEY_LEN:
        raise BadKeyLength(f"key must be {KEY_LEN} bytes (256 bits), got {len(key)}")
    return key


def common_prefix_len(x: int, y: int) -> int:
    """Number of leading bits the two 32-bit addresses agree on."""
    diff = (x ^ y) & 0xFFFF_FFFF
    return 32 - diff.bit_length()


@dataclass
class RecordAnonymizer:
    """Applies the address transform in place to trace records.

    Non-IPv4 records pass through unchanged and are tallied in ``skipped``
    for the pipeline metadata.  The IPv4 header checksum is recomputed so the
    record stays a valid packet; transport checksums cover payload bytes that
    no longer exist after stripping and are left as-is (documented invalid).
    """

    cryptopan: CryptoPan
    skipped: int = 0

    def anonymize_record(self, rec: TraceRecord) -> TraceRecord:
        frame = anonymize_frame(self.cryptopan, rec.frame)
        if frame is None:
            self.skipped += 1
            return rec
        return rec.with_frame(frame)


def anonymize_frame(cpan: CryptoPan, frame: bytes) -> bytes | None:
    """Rewrite src/dst IPv4 addresses of one frame, or None if it has none.

    Only the two address fields and the IPv4 header checksum change; the
    checksum is only recomputed when the full declared header is present
    (a cut-short header is not a valid packet either way).
    """
    try:
        summary = parse_headers(frame)
    except Exception:
        return None
    if not summary.is_ip:
        return None
    l2 = summary.l2_header_len
    out = bytearray(frame)
    out[l2 + 12:l2 + 16] = cpan.anonymize(summary.src_ip).to_bytes(4, "big")
    out[l2 + 16:l2 + 20] = cpan.anonymize(summary.dst_ip).to_bytes(4, "big")
    ihl = summary.ip_header_len
    if len(frame) >= l2 + ihl and summary.truncated_layer != "ipv4":
        out[l2 + 10:l2 + 12] = b"\x00\x00"
        checksum = ipv4_checksum(bytes(out[l2:l2 + ihl]))
        out[l2 + 10:l2 + 12] = checksum.to_bytes(2, "big")
    return bytes(out)
