"""Builders for synthetic Ethernet/IPv4 frames with valid checksums.

Used by the bundled demo traces and handy for constructing test traffic.
Checksums are filled in with the same RFC 1071 routine the rewriter uses.
"""

from __future__ import annotations

import ipaddress
import struct

from .pcap import Capture, PacketRecord, TsResolution, LINKTYPE_ETHERNET
from .rewrite import internet_checksum, PROTO_TCP, PROTO_UDP

PROTO_ICMP = 1


def _mac(value: str) -> bytes:
    return bytes(int(part, 16) for part in value.split(":"))


def _ip(value: str) -> bytes:
    return ipaddress.IPv4Address(value).packed


def ethernet(payload: bytes, *, src_mac: str, dst_mac: str, ethertype: int) -> bytes:
    return _mac(dst_mac) + _mac(src_mac) + struct.pack("!H", ethertype) + payload


def ipv4(
    payload: bytes,
    *,
    src: str,
    dst: str,
    proto: int,
    ttl: int = 64,
    identification: int = 0,
    flags_fragment: int = 0x4000,
) -> bytes:
    total_length = 20 + len(payload)
    header = bytearray(
        struct.pack(
            "!BBHHHBBH4s4s",
            0x45,
            0,
            total_length,
            identification,
            flags_fragment,
            ttl,
            proto,
            0,
            _ip(src),
            _ip(dst),
        )
    )
    struct.pack_into("!H", header, 10, internet_checksum(bytes(header)))
    return bytes(header) + payload


def _l4_checksum(src: str, dst: str, proto: int, segment: bytes) -> int:
    pseudo = _ip(src) + _ip(dst) + struct.pack("!BBH", 0, proto, len(segment))
    return internet_checksum(pseudo + segment)


def tcp(
    payload: bytes,
    *,
    src: str,
    dst: str,
    sport: int,
    dport: int,
    seq: int = 0,
    ack: int = 0,
    flags: int = 0x18,
    window: int = 64240,
) -> bytes:
    header = bytearray(
        struct.pack("!HHIIBBHHH", sport, dport, seq, ack, 5 << 4, flags, window, 0, 0)
    )
    segment = bytes(header) + payload
    checksum = _l4_checksum(src, dst, PROTO_TCP, segment)
    struct.pack_into("!H", header, 16, checksum)
    return bytes(header) + payload


def udp(payload: bytes, *, src: str, dst: str, sport: int, dport: int) -> bytes:
    length = 8 + len(payload)
    header = bytearray(struct.pack("!HHHH", sport, dport, length, 0))
    checksum = _l4_checksum(src, dst, PROTO_UDP, bytes(header) + payload)
    if checksum == 0:
        checksum = 0xFFFF
    struct.pack_into("!H", header, 6, checksum)
    return bytes(header) + payload


def icmp_echo(payload: bytes = b"", *, identifier: int = 1, sequence: int = 0) -> bytes:
    header = bytearray(struct.pack("!BBHHH", 8, 0, 0, identifier, sequence))
    struct.pack_into("!H", header, 2, internet_checksum(bytes(header) + payload))
    return bytes(header) + payload


def tcp_frame(
    payload: bytes = b"",
    *,
    src: str,
    dst: str,
    sport: int,
    dport: int,
    src_mac: str = "02:00:00:00:00:01",
    dst_mac: str = "02:00:00:00:00:02",
    seq: int = 0,
    ack: int = 0,
    flags: int = 0x18,
    identification: int = 0,
) -> bytes:
    segment = tcp(
        payload, src=src, dst=dst, sport=sport, dport=dport, seq=seq, ack=ack, flags=flags
    )
    packet = ipv4(
        segment, src=src, dst=dst, proto=PROTO_TCP, identification=identification
    )
    return ethernet(packet, src_mac=src_mac, dst_mac=dst_mac, ethertype=0x0800)


def udp_frame(
    payload: bytes = b"",
    *,
    src: str,
    dst: str,
    sport: int,
    dport: int,
    src_mac: str = "02:00:00:00:00:01",
    dst_mac: str = "02:00:00:00:00:02",
    identification: int = 0,
) -> bytes:
    segment = udp(payload, src=src, dst=dst, sport=sport, dport=dport)
    packet = ipv4(
        segment, src=src, dst=dst, proto=PROTO_UDP, identification=identification
    )
    return ethernet(packet, src_mac=src_mac, dst_mac=dst_mac, ethertype=0x0800)


def icmp_frame(
    payload: bytes = b"",
    *,
    src: str,
    dst: str,
    identifier: int = 1,
    sequence: int = 0,
    src_mac: str = "02:00:00:00:00:01",
    dst_mac: str = "02:00:00:00:00:02",
    identification: int = 0,
) -> bytes:
    packet = ipv4(
        icmp_echo(payload, identifier=identifier, sequence=sequence),
        src=src,
        dst=dst,
        proto=PROTO_ICMP,
        identification=identification,
    )
    return ethernet(packet, src_mac=src_mac, dst_mac=dst_mac, ethertype=0x0800)


def arp_frame(
    *,
    sender_ip: str,
    target_ip: str,
    sender_mac: str = "02:00:00:00:00:01",
    target_mac: str = "00:00:00:00:00:00",
    opcode: int = 1,
) -> bytes:
    payload = (
        struct.pack("!HHBBH", 1, 0x0800, 6, 4, opcode)
        + _mac(sender_mac)
        + _ip(sender_ip)
        + _mac(target_mac)
        + _ip(target_ip)
    )
    return ethernet(
        payload,
        src_mac=sender_mac,
        dst_mac="ff:ff:ff:ff:ff:ff" if opcode == 1 else target_mac,
        ethertype=0x0806,
    )


def capture_of(
    frames_with_times: list[tuple[float, bytes]],
    *,
    resolution: TsResolution = TsResolution.MICRO,
) -> Capture:
    """Wrap (seconds, frame bytes) pairs into an Ethernet capture."""
    units = resolution.units_per_second
    packets = []
    for when, frame in frames_with_times:
        total = round(when * units)
        sec, frac = divmod(total, units)
        packets.append(
            PacketRecord(
                ts_sec=sec,
                ts_frac=frac,
                captured_len=len(frame),
                original_len=len(frame),
                data=frame,
            )
        )
    return Capture(
        link_type=LINKTYPE_ETHERNET, ts_resolution=resolution, packets=tuple(packets)
    )
