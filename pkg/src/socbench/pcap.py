"""Bit-exact classic pcap reading/writing and capture-level transformations.

Only the classic format is supported: magic 0xa1b2c3d4 (microsecond) or
0xa1b23c4d (nanosecond), either endianness. A decoded Capture remembers the
byte order and global-header fields of the file it came from, so
write_capture(read_capture(data)) == data holds byte-for-byte.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, replace
from enum import Enum
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import (
    EmptyCapture,
    MalformedHeader,
    MixedLinkType,
    NonPositiveSpeed,
    TruncatedPacket,
)

MAGIC_MICRO = 0xA1B2C3D4
MAGIC_NANO = 0xA1B23C4D

GLOBAL_HEADER_LEN = 24
RECORD_HEADER_LEN = 16

LINKTYPE_ETHERNET = 1


class TsResolution(Enum):
    """Sub-second timestamp units of a capture."""

    MICRO = 1_000_000
    NANO = 1_000_000_000

    @property
    def units_per_second(self) -> int:
        return self.value

    @property
    def magic(self) -> int:
        return MAGIC_MICRO if self is TsResolution.MICRO else MAGIC_NANO


@dataclass(frozen=True)
class PacketRecord:
    """One captured frame: timestamp, lengths, and raw bytes."""

    ts_sec: int
    ts_frac: int
    captured_len: int
    original_len: int
    data: bytes

    def __post_init__(self) -> None:
        if self.captured_len != len(self.data):
            raise ValueError("captured_len must equal len(data)")
        if self.captured_len > self.original_len:
            raise ValueError("captured_len must not exceed original_len")
        for name in ("ts_sec", "ts_frac", "captured_len", "original_len"):
            v = getattr(self, name)
            if not 0 <= v < 2**32:
                raise ValueError(f"{name} out of range for pcap: {v}")


@dataclass(frozen=True)
class Capture:
    """Decoded pcap content plus the header fields needed to re-emit it.

    All values are immutable; transformations return new Capture objects.
    """

    link_type: int
    ts_resolution: TsResolution
    packets: tuple[PacketRecord, ...]
    byte_order: str = "<"
    version: tuple[int, int] = (2, 4)
    thiszone: int = 0
    sigfigs: int = 0
    snaplen: int = 65535

    def __post_init__(self) -> None:
        object.__setattr__(self, "packets", tuple(self.packets))
        if self.byte_order not in ("<", ">"):
            raise ValueError("byte_order must be '<' or '>'")
        limit = self.ts_resolution.units_per_second
        for i, p in enumerate(self.packets):
            if p.ts_frac >= limit:
                raise ValueError(
                    f"packet {i}: ts_frac {p.ts_frac} exceeds "
                    f"{self.ts_resolution.name.lower()} resolution"
                )

    @property
    def monotonic(self) -> bool:
        """True iff timestamps are nondecreasing in stored order."""
        units = [self.timestamp_units(i) for i in range(len(self.packets))]
        return all(a <= b for a, b in zip(units, units[1:]))

    def timestamp_units(self, index: int) -> int:
        p = self.packets[index]
        return p.ts_sec * self.ts_resolution.units_per_second + p.ts_frac

    @property
    def duration_seconds(self) -> float:
        """Seconds between first and last packet (0 for <2 packets)."""
        if len(self.packets) < 2:
            return 0.0
        span = self.timestamp_units(len(self.packets) - 1) - self.timestamp_units(0)
        return span / self.ts_resolution.units_per_second


def read_capture(data: bytes) -> Capture:
    """Decode classic pcap bytes, preserving order, endianness and resolution."""
    if len(data) < GLOBAL_HEADER_LEN:
        raise MalformedHeader("input shorter than the 24-byte global header")
    magic_le = struct.unpack_from("<I", data, 0)[0]
    magic_be = struct.unpack_from(">I", data, 0)[0]
    if magic_le == MAGIC_MICRO:
        order, resolution = "<", TsResolution.MICRO
    elif magic_le == MAGIC_NANO:
        order, resolution = "<", TsResolution.NANO
    elif magic_be == MAGIC_MICRO:
        order, resolution = ">", TsResolution.MICRO
    elif magic_be == MAGIC_NANO:
        order, resolution = ">", TsResolution.NANO
    else:
        raise MalformedHeader(f"unrecognized magic 0x{magic_be:08x}")

    vmajor, vminor, thiszone, sigfigs, snaplen, link_type = struct.unpack_from(
        order + "HHiIII", data, 4
    )
    if vmajor != 2:
        raise MalformedHeader(f"unsupported pcap version {vmajor}.{vminor}")

    limit = resolution.units_per_second
    packets: list[PacketRecord] = []
    offset = GLOBAL_HEADER_LEN
    while offset < len(data):
        if offset + RECORD_HEADER_LEN > len(data):
            raise TruncatedPacket(
                f"record header truncated at byte {offset} (packet {len(packets)})"
            )
        ts_sec, ts_frac, incl_len, orig_len = struct.unpack_from(
            order + "IIII", data, offset
        )
        offset += RECORD_HEADER_LEN
        if offset + incl_len > len(data):
            raise TruncatedPacket(
                f"packet {len(packets)}: {incl_len} bytes declared, "
                f"{len(data) - offset} available"
            )
        if ts_frac >= limit:
            raise MalformedHeader(
                f"packet {len(packets)}: ts_frac {ts_frac} invalid for "
                f"{resolution.name.lower()} resolution"
            )
        payload = data[offset:offset + incl_len]
        offset += incl_len
        packets.append(
            PacketRecord(
                ts_sec=ts_sec,
                ts_frac=ts_frac,
                captured_len=incl_len,
                original_len=orig_len,
                data=payload,
            )
        )

    return Capture(
        link_type=link_type,
        ts_resolution=resolution,
        packets=tuple(packets),
        byte_order=order,
        version=(vmajor, vminor),
        thiszone=thiszone,
        sigfigs=sigfigs,
        snaplen=snaplen,
    )


def write_capture(capture: Capture) -> bytes:
    """Emit classic pcap bytes; inverse of read_capture field-for-field."""
    order = capture.byte_order
    out = bytearray()
    out += struct.pack(
        order + "IHHiIII",
        capture.ts_resolution.magic,
        capture.version[0],
        capture.version[1],
        capture.thiszone,
        capture.sigfigs,
        capture.snaplen,
        capture.link_type,
    )
    for p in capture.packets:
        out += struct.pack(
            order + "IIII", p.ts_sec, p.ts_frac, p.captured_len, p.original_len
        )
        out += p.data
    return bytes(out)


def _round_half_up(value: Fraction) -> int:
    # round-half-up quantization used for all timestamp arithmetic
    num, den = (value + Fraction(1, 2)).as_integer_ratio()
    return num // den


def transform_time(capture: Capture, offset: float, speed: float) -> Capture:
    """Rebase timestamps to scenario-relative time and scale playback speed.

    Output timestamp of packet i is ``offset + (t_i - t_0) / speed`` seconds,
    computed in exact rational arithmetic and rounded half-up to the capture's
    resolution. Speed 2.0 halves the duration.
    """
    if not capture.packets:
        raise EmptyCapture("transform_time requires at least one packet")
    speed_f = Fraction(speed)
    if speed_f <= 0:
        raise NonPositiveSpeed(f"speed must be > 0, got {speed}")
    offset_f = Fraction(offset)
    if offset_f < 0:
        raise ValueError(f"offset must be >= 0, got {offset}")

    res = capture.ts_resolution.units_per_second
    t0 = capture.timestamp_units(0)
    rebased = []
    for i, p in enumerate(capture.packets):
        units = _round_half_up(offset_f * res + Fraction(capture.timestamp_units(i) - t0) / speed_f)
        sec, frac = divmod(units, res)
        rebased.append(replace(p, ts_sec=sec, ts_frac=frac))
    return replace(capture, packets=tuple(rebased))


def _to_resolution(capture: Capture, resolution: TsResolution) -> Capture:
    if capture.ts_resolution is resolution:
        return capture
    if resolution is not TsResolution.NANO:
        raise ValueError("captures are only up-converted to nanoseconds")
    scaled = tuple(replace(p, ts_frac=p.ts_frac * 1000) for p in capture.packets)
    return replace(capture, ts_resolution=resolution, packets=scaled)


def merge(captures: Sequence[Capture]) -> Capture:
    """Merge captures into one, sorted by timestamp.

    Ties are broken by (input list index, packet index), so packets of
    earlier-listed captures come first. Resolution is up-converted to the
    finest present.
    """
    if not captures:
        raise ValueError("merge requires at least one capture")
    link_types = {c.link_type for c in captures}
    if len(link_types) > 1:
        raise MixedLinkType(f"cannot merge link types {sorted(link_types)}")

    resolution = (
        TsResolution.NANO
        if any(c.ts_resolution is TsResolution.NANO for c in captures)
        else TsResolution.MICRO
    )
    normalized = [_to_resolution(c, resolution) for c in captures]

    keyed = [
        (cap.timestamp_units(pkt_index), cap_index, pkt_index, packet)
        for cap_index, cap in enumerate(normalized)
        for pkt_index, packet in enumerate(cap.packets)
    ]
    keyed.sort(key=lambda item: item[:3])

    first = normalized[0]
    return Capture(
        link_type=first.link_type,
        ts_resolution=resolution,
        packets=tuple(item[3] for item in keyed),
        byte_order=first.byte_order,
        version=first.version,
        thiszone=first.thiszone,
        sigfigs=first.sigfigs,
        snaplen=max(c.snaplen for c in captures),
    )
