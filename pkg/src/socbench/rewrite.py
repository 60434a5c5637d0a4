"""Prefix-preserving IPv4 address rewriting with checksum repair.

Parses just enough of Ethernet/ARP/IPv4/TCP/UDP headers to relocate
addresses into a target network and fix the affected checksums. Every byte
outside rewritten address fields and recomputed checksum fields is left
untouched.
"""

from __future__ import annotations

import ipaddress
import struct
from dataclasses import dataclass, field, replace

from .errors import OverlappingMap, ReadOnlyCapture
from .pcap import Capture, PacketRecord, LINKTYPE_ETHERNET

ETHERTYPE_IPV4 = 0x0800
ETHERTYPE_ARP = 0x0806
ETHERTYPE_IPV6 = 0x86DD

PROTO_TCP = 6
PROTO_UDP = 17

_ETH_HEADER = 14


def internet_checksum(data: bytes) -> int:
    """RFC 1071 ones'-complement checksum over 16-bit big-endian words."""
    if len(data) % 2:
        data += b"\x00"
    total = 0
    for i in range(0, len(data), 2):
        total += (data[i] << 8) | data[i + 1]
    while total > 0xFFFF:
        total = (total & 0xFFFF) + (total >> 16)
    return ~total & 0xFFFF


@dataclass(frozen=True)
class AddressMap:
    """Pairs of equal-length IPv4 prefixes; host bits are preserved.

    Source prefixes must be pairwise disjoint so every address maps to at
    most one target.
    """

    entries: tuple[tuple[ipaddress.IPv4Network, ipaddress.IPv4Network], ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "entries", tuple(self.entries))
        for source, target in self.entries:
            if source.prefixlen != target.prefixlen:
                raise OverlappingMap(
                    f"prefix lengths differ: {source} -> {target}"
                )
        nets = [source for source, _ in self.entries]
        for i, a in enumerate(nets):
            for b in nets[i + 1:]:
                if a.overlaps(b):
                    raise OverlappingMap(f"source prefixes overlap: {a} and {b}")

    @classmethod
    def from_pairs(cls, pairs) -> "AddressMap":
        """Build from ('10.0.0.0/24', '192.0.2.0/24') string pairs.

        A bare address is treated as a /32.
        """
        entries = []
        for source, target in pairs:
            src = ipaddress.ip_network(_as_cidr(source), strict=True)
            dst = ipaddress.ip_network(_as_cidr(target), strict=True)
            entries.append((src, dst))
        return cls(entries=tuple(entries))

    def to_pairs(self) -> list[dict[str, str]]:
        return [{"from": str(s), "to": str(t)} for s, t in self.entries]

    def translate_int(self, addr: int) -> tuple[int, int] | None:
        """Map a 32-bit address; returns (new address, entry index) or None."""
        for index, (source, target) in enumerate(self.entries):
            if (addr & int(source.netmask)) == int(source.network_address):
                host = addr & int(source.hostmask)
                return int(target.network_address) | host, index
        return None

    def translate(self, address: str) -> str:
        """Map a dotted-quad address; unmatched addresses pass through."""
        mapped = self.translate_int(int(ipaddress.IPv4Address(address)))
        if mapped is None:
            return address
        return str(ipaddress.IPv4Address(mapped[0]))

    def inverse(self) -> "AddressMap":
        return AddressMap(entries=tuple((t, s) for s, t in self.entries))

    def __len__(self) -> int:
        return len(self.entries)


def _as_cidr(value: str) -> str:
    return value if "/" in value else value + "/32"


@dataclass
class RewriteSummary:
    """Counters describing what a rewrite pass touched or skipped."""

    packets_total: int = 0
    packets_modified: int = 0
    per_entry: dict[int, int] = field(default_factory=dict)
    arp_rewritten: int = 0
    ipv6_passthrough: int = 0
    non_ip_passthrough: int = 0
    fragments_l4_skipped: int = 0
    truncated_l4_skipped: int = 0

    def count_entry(self, index: int) -> None:
        self.per_entry[index] = self.per_entry.get(index, 0) + 1


@dataclass(frozen=True)
class ChecksumViolation:
    packet_index: int
    layer: str
    expected: int
    found: int


def _ipv4_view(data: bytes, ip_off: int):
    """Validated (ihl, total_length, proto, frag) of an IPv4 header, else None."""
    if len(data) < ip_off + 20:
        return None
    vihl = data[ip_off]
    if vihl >> 4 != 4:
        return None
    ihl = (vihl & 0x0F) * 4
    if ihl < 20 or len(data) < ip_off + ihl:
        return None
    total_length = struct.unpack_from("!H", data, ip_off + 2)[0]
    proto = data[ip_off + 9]
    frag_field = struct.unpack_from("!H", data, ip_off + 6)[0]
    more_fragments = bool(frag_field & 0x2000)
    frag_offset = frag_field & 0x1FFF
    return ihl, total_length, proto, more_fragments, frag_offset


def _l4_segment(data: bytes, ip_off: int, ihl: int, total_length: int):
    """The transport segment as bounded by the IP total length, else None.

    Ethernet padding can extend past total_length and truncation can cut it
    short; the checksum is only defined over the exact segment.
    """
    l4_off = ip_off + ihl
    l4_len = total_length - ihl
    if l4_len < 0 or ip_off + total_length > len(data):
        return None
    return l4_off, l4_len


def _pseudo_header(data: bytes, ip_off: int, proto: int, l4_len: int) -> bytes:
    return data[ip_off + 12:ip_off + 20] + struct.pack("!BBH", 0, proto, l4_len)


def _recompute_l4(
    buf: bytearray, ip_off: int, ihl: int, total_length: int, proto: int
) -> bool:
    """Recompute the TCP/UDP checksum in place; False when not computable."""
    seg = _l4_segment(buf, ip_off, ihl, total_length)
    if seg is None:
        return False
    l4_off, l4_len = seg
    if proto == PROTO_TCP:
        cksum_off = l4_off + 16
        min_header = 20
    else:
        cksum_off = l4_off + 6
        min_header = 8
    if l4_len < min_header:
        return False
    if proto == PROTO_UDP and struct.unpack_from("!H", buf, cksum_off)[0] == 0:
        return True  # checksum disabled stays disabled
    struct.pack_into("!H", buf, cksum_off, 0)
    value = internet_checksum(
        _pseudo_header(buf, ip_off, proto, l4_len) + bytes(buf[l4_off:l4_off + l4_len])
    )
    if proto == PROTO_UDP and value == 0:
        value = 0xFFFF  # RFC 768: transmitted checksum 0 means "disabled"
    struct.pack_into("!H", buf, cksum_off, value)
    return True


def rewrite_addresses(
    capture: Capture, address_map: AddressMap
) -> tuple[Capture, RewriteSummary]:
    """Rewrite IPv4 and ARP addresses matching the map; repair checksums.

    IPv4 header checksums are recomputed from scratch; TCP/UDP checksums are
    recomputed including the pseudo-header. Fragmented or truncated segments
    keep only the IPv4 header checksum current. IPv6 passes through
    unmodified and is counted in the summary.
    """
    if capture.link_type != LINKTYPE_ETHERNET:
        raise ReadOnlyCapture(
            f"rewriting requires Ethernet (linktype 1), got {capture.link_type}"
        )
    summary = RewriteSummary(packets_total=len(capture.packets))
    out: list[PacketRecord] = []
    for packet in capture.packets:
        data = packet.data
        if len(data) < _ETH_HEADER:
            summary.non_ip_passthrough += 1
            out.append(packet)
            continue
        ethertype = struct.unpack_from("!H", data, 12)[0]
        if ethertype == ETHERTYPE_IPV4:
            rewritten = _rewrite_ipv4(data, address_map, summary)
        elif ethertype == ETHERTYPE_ARP:
            rewritten = _rewrite_arp(data, address_map, summary)
        else:
            if ethertype == ETHERTYPE_IPV6:
                summary.ipv6_passthrough += 1
            else:
                summary.non_ip_passthrough += 1
            rewritten = None
        if rewritten is None:
            out.append(packet)
        else:
            summary.packets_modified += 1
            out.append(replace(packet, data=bytes(rewritten)))
    return replace(capture, packets=tuple(out)), summary


def _rewrite_ipv4(data: bytes, address_map: AddressMap, summary: RewriteSummary):
    view = _ipv4_view(data, _ETH_HEADER)
    if view is None:
        summary.non_ip_passthrough += 1
        return None
    ihl, total_length, proto, more_fragments, frag_offset = view
    ip_off = _ETH_HEADER

    changed = False
    buf = bytearray(data)
    for off in (ip_off + 12, ip_off + 16):
        addr = struct.unpack_from("!I", buf, off)[0]
        mapped = address_map.translate_int(addr)
        if mapped is not None:
            struct.pack_into("!I", buf, off, mapped[0])
            summary.count_entry(mapped[1])
            changed = True
    if not changed:
        return None

    struct.pack_into("!H", buf, ip_off + 10, 0)
    struct.pack_into(
        "!H", buf, ip_off + 10, internet_checksum(bytes(buf[ip_off:ip_off + ihl]))
    )

    if proto in (PROTO_TCP, PROTO_UDP):
        if frag_offset != 0 or more_fragments:
            # L4 header absent or checksum spans the reassembled datagram
            summary.fragments_l4_skipped += 1
        elif not _recompute_l4(buf, ip_off, ihl, total_length, proto):
            summary.truncated_l4_skipped += 1
    return buf


def _rewrite_arp(data: bytes, address_map: AddressMap, summary: RewriteSummary):
    arp_off = _ETH_HEADER
    if len(data) < arp_off + 28:
        summary.non_ip_passthrough += 1
        return None
    htype, ptype, hlen, plen = struct.unpack_from("!HHBB", data, arp_off)
    if (htype, ptype, hlen, plen) != (1, ETHERTYPE_IPV4, 6, 4):
        summary.non_ip_passthrough += 1
        return None
    changed = False
    buf = bytearray(data)
    for off in (arp_off + 14, arp_off + 24):  # sender / target protocol address
        addr = struct.unpack_from("!I", buf, off)[0]
        mapped = address_map.translate_int(addr)
        if mapped is not None:
            struct.pack_into("!I", buf, off, mapped[0])
            summary.count_entry(mapped[1])
            changed = True
    if not changed:
        return None
    summary.arp_rewritten += 1
    return buf


def collect_addresses(capture: Capture) -> set[str]:
    """All IPv4 addresses appearing as src/dst (or ARP sender/target)."""
    seen: set[str] = set()
    if capture.link_type != LINKTYPE_ETHERNET:
        return seen
    for packet in capture.packets:
        data = packet.data
        if len(data) < _ETH_HEADER + 8:
            continue
        ethertype = struct.unpack_from("!H", data, 12)[0]
        if ethertype == ETHERTYPE_IPV4 and _ipv4_view(data, _ETH_HEADER):
            for off in (_ETH_HEADER + 12, _ETH_HEADER + 16):
                addr = struct.unpack_from("!I", data, off)[0]
                seen.add(str(ipaddress.IPv4Address(addr)))
        elif ethertype == ETHERTYPE_ARP and len(data) >= _ETH_HEADER + 28:
            htype, ptype, hlen, plen = struct.unpack_from("!HHBB", data, _ETH_HEADER)
            if (htype, ptype, hlen, plen) == (1, ETHERTYPE_IPV4, 6, 4):
                for off in (_ETH_HEADER + 14, _ETH_HEADER + 24):
                    addr = struct.unpack_from("!I", data, off)[0]
                    seen.add(str(ipaddress.IPv4Address(addr)))
    return seen


def verify_checksums(capture: Capture) -> list[ChecksumViolation]:
    """Report every IPv4/TCP/UDP checksum mismatch in an Ethernet capture.

    UDP checksum 0 (disabled) is never a violation. Fragmented or truncated
    transport segments are skipped because their checksum is not computable
    from the frame alone.
    """
    violations: list[ChecksumViolation] = []
    if capture.link_type != LINKTYPE_ETHERNET:
        return violations
    for index, packet in enumerate(capture.packets):
        data = packet.data
        if len(data) < _ETH_HEADER + 20:
            continue
        if struct.unpack_from("!H", data, 12)[0] != ETHERTYPE_IPV4:
            continue
        view = _ipv4_view(data, _ETH_HEADER)
        if view is None:
            continue
        ihl, total_length, proto, more_fragments, frag_offset = view
        ip_off = _ETH_HEADER

        header = bytearray(data[ip_off:ip_off + ihl])
        found_ip = struct.unpack_from("!H", header, 10)[0]
        struct.pack_into("!H", header, 10, 0)
        expected_ip = internet_checksum(bytes(header))
        if expected_ip != found_ip:
            violations.append(ChecksumViolation(index, "ipv4", expected_ip, found_ip))

        if proto not in (PROTO_TCP, PROTO_UDP) or frag_offset != 0 or more_fragments:
            continue
        seg = _l4_segment(data, ip_off, ihl, total_length)
        if seg is None:
            continue
        l4_off, l4_len = seg
        layer = "tcp" if proto == PROTO_TCP else "udp"
        cksum_off = l4_off + (16 if proto == PROTO_TCP else 6)
        min_header = 20 if proto == PROTO_TCP else 8
        if l4_len < min_header:
            continue
        found_l4 = struct.unpack_from("!H", data, cksum_off)[0]
        if proto == PROTO_UDP and found_l4 == 0:
            continue
        seg_buf = bytearray(data[l4_off:l4_off + l4_len])
        struct.pack_into("!H", seg_buf, cksum_off - l4_off, 0)
        expected_l4 = internet_checksum(
            _pseudo_header(data, ip_off, proto, l4_len) + bytes(seg_buf)
        )
        if proto == PROTO_UDP and expected_l4 == 0:
            expected_l4 = 0xFFFF
        if expected_l4 != found_l4:
            violations.append(ChecksumViolation(index, layer, expected_l4, found_l4))
    return violations
