import struct

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_ipv4_corpus
from oracles import checksum_oracle, ipv4_packet_checksums_ok
from socbench.errors import OverlappingMap, ReadOnlyCapture
from socbench.frames import arp_frame, capture_of, tcp_frame, udp_frame
from socbench.pcap import Capture, PacketRecord, TsResolution, write_capture
from socbench.rewrite import (
    AddressMap,
    collect_addresses,
    internet_checksum,
    rewrite_addresses,
    verify_checksums,
)


class TestAddressMap:
    def test_prefix_preserving_translation(self):
        amap = AddressMap.from_pairs([("10.0.0.0/24", "192.0.2.0/24")])
        assert amap.translate("10.0.0.7") == "192.0.2.7"
        assert amap.translate("10.0.1.7") == "10.0.1.7"  # outside prefix

    def test_single_address_is_slash32(self):
        amap = AddressMap.from_pairs([("10.0.0.7", "203.0.113.9")])
        assert amap.translate("10.0.0.7") == "203.0.113.9"
        assert amap.translate("10.0.0.8") == "10.0.0.8"

    def test_host_bits_preserved_across_lengths(self):
        amap = AddressMap.from_pairs([("10.32.0.0/11", "172.32.0.0/11")])
        assert amap.translate("10.63.255.1") == "172.63.255.1"

    def test_overlapping_sources_rejected(self):
        with pytest.raises(OverlappingMap):
            AddressMap.from_pairs([("10.0.0.0/24", "192.0.2.0/24"),
                                   ("10.0.0.128/25", "198.51.100.0/25")])

    def test_unequal_prefix_lengths_rejected(self):
        with pytest.raises(OverlappingMap):
            AddressMap.from_pairs([("10.0.0.0/24", "192.0.2.0/25")])

    def test_inverse_round_trip(self):
        amap = AddressMap.from_pairs([("10.0.0.0/24", "192.0.2.0/24")])
        assert amap.inverse().translate("192.0.2.7") == "10.0.0.7"


class TestChecksum:
    def test_matches_independent_oracle(self):
        for blob in (b"", b"\x01", b"\x45\x00\x00\x28", bytes(range(199))):
            assert internet_checksum(blob) == checksum_oracle(blob)

    def test_covering_sum_is_zero(self):
        frame = tcp_frame(b"data", src="10.0.0.1", dst="10.0.0.2", sport=1, dport=2)
        ihl = (frame[14] & 0xF) * 4
        assert checksum_oracle(frame[14:14 + ihl]) == 0


class TestRewrite:
    def test_empty_map_is_identity(self, mixed_corpus_capture):
        out, summary = rewrite_addresses(mixed_corpus_capture, AddressMap())
        assert write_capture(out) == write_capture(mixed_corpus_capture)
        assert summary.packets_modified == 0

    def test_single_tcp_packet_rewrite(self):
        frame = tcp_frame(b"payload", src="10.0.0.7", dst="172.16.0.1",
                          sport=1234, dport=80)
        capture = capture_of([(0.0, frame)])
        amap = AddressMap.from_pairs([("10.0.0.0/24", "192.0.2.0/24")])
        out, summary = rewrite_addresses(capture, amap)
        data = out.packets[0].data
        assert data[26:30] == bytes([192, 0, 2, 7])
        assert data[30:34] == bytes([172, 16, 0, 1])
        assert summary.packets_modified == 1
        assert summary.per_entry == {0: 1}
        assert ipv4_packet_checksums_ok(data)
        assert verify_checksums(out) == []

    def test_untouched_bytes_identical(self):
        frame = tcp_frame(b"payload", src="10.0.0.7", dst="172.16.0.1",
                          sport=1234, dport=80)
        capture = capture_of([(0.0, frame)])
        amap = AddressMap.from_pairs([("10.0.0.0/24", "192.0.2.0/24")])
        out, _ = rewrite_addresses(capture, amap)
        before = bytearray(frame)
        after = bytearray(out.packets[0].data)
        ihl = (frame[14] & 0xF) * 4
        changed = set(range(24, 26)) | set(range(26, 30))  # ip checksum + src
        l4 = 14 + ihl
        changed |= set(range(l4 + 16, l4 + 18))  # tcp checksum
        for i, (a, b) in enumerate(zip(before, after)):
            if a != b:
                assert i in changed, f"unexpected byte change at offset {i}"

    def test_both_addresses_rewritten(self):
        frame = udp_frame(b"x", src="10.0.0.1", dst="10.0.0.2", sport=5, dport=6)
        amap = AddressMap.from_pairs([("10.0.0.0/24", "198.51.100.0/24")])
        out, summary = rewrite_addresses(capture_of([(0, frame)]), amap)
        data = out.packets[0].data
        assert data[26:30] == bytes([198, 51, 100, 1])
        assert data[30:34] == bytes([198, 51, 100, 2])
        assert summary.per_entry == {0: 2}
        assert verify_checksums(out) == []

    def test_bijective_inverse_restores_bytes(self, mixed_corpus_capture):
        amap = AddressMap.from_pairs([
            ("10.0.0.0/16", "192.168.0.0/16"),
            ("172.16.0.0/16", "10.99.0.0/16"),
        ])
        forward, _ = rewrite_addresses(mixed_corpus_capture, amap)
        back, _ = rewrite_addresses(forward, amap.inverse())
        assert write_capture(back) == write_capture(mixed_corpus_capture)

    def test_arp_rewritten(self):
        frame = arp_frame(sender_ip="10.0.0.7", target_ip="10.0.0.9")
        amap = AddressMap.from_pairs([("10.0.0.0/24", "192.0.2.0/24")])
        out, summary = rewrite_addresses(capture_of([(0, frame)]), amap)
        data = out.packets[0].data
        assert data[28:32] == bytes([192, 0, 2, 7])
        assert data[38:42] == bytes([192, 0, 2, 9])
        assert summary.arp_rewritten == 1

    def test_ipv6_passthrough_counted(self):
        frame = (b"\x02" * 6 + b"\x02" * 6 + b"\x86\xdd" + b"\x60" + bytes(39))
        capture = capture_of([(0, frame)])
        out, summary = rewrite_addresses(
            capture, AddressMap.from_pairs([("10.0.0.0/8", "11.0.0.0/8")])
        )
        assert out.packets[0].data == frame
        assert summary.ipv6_passthrough == 1

    def test_fragment_skips_l4(self):
        frame = bytearray(tcp_frame(b"fragdata", src="10.0.0.1", dst="10.0.0.2",
                                    sport=1, dport=2))
        struct.pack_into("!H", frame, 20, 0x00B9)  # fragment offset 185*8
        ihl = (frame[14] & 0xF) * 4
        struct.pack_into("!H", frame, 24, 0)
        struct.pack_into("!H", frame, 24, internet_checksum(bytes(frame[14:14 + ihl])))
        amap = AddressMap.from_pairs([("10.0.0.0/24", "192.0.2.0/24")])
        out, summary = rewrite_addresses(capture_of([(0, bytes(frame))]), amap)
        assert summary.fragments_l4_skipped == 1
        ip_header = out.packets[0].data[14:14 + ihl]
        assert checksum_oracle(ip_header) == 0  # ip checksum still repaired

    def test_non_ethernet_rejected(self):
        capture = Capture(link_type=101, ts_resolution=TsResolution.MICRO,
                          packets=(PacketRecord(0, 0, 4, 4, b"abcd"),))
        with pytest.raises(ReadOnlyCapture):
            rewrite_addresses(capture, AddressMap())

    def test_rewrite_preserves_count_and_lengths(self, mixed_corpus_capture):
        amap = AddressMap.from_pairs([("10.0.0.0/16", "192.168.0.0/16")])
        out, _ = rewrite_addresses(mixed_corpus_capture, amap)
        assert len(out.packets) == len(mixed_corpus_capture.packets)
        for before, after in zip(mixed_corpus_capture.packets, out.packets):
            assert len(after.data) == len(before.data)
            assert after.captured_len == before.captured_len
            assert after.original_len == before.original_len
            assert (after.ts_sec, after.ts_frac) == (before.ts_sec, before.ts_frac)


class TestVerifyChecksums:
    def test_valid_corpus_clean(self, mixed_corpus_capture):
        assert verify_checksums(mixed_corpus_capture) == []

    def test_flipped_ip_checksum_detected(self):
        frame = bytearray(tcp_frame(b"x", src="10.0.0.1", dst="10.0.0.2",
                                    sport=1, dport=2))
        stored = struct.unpack_from("!H", frame, 24)[0]
        struct.pack_into("!H", frame, 24, stored ^ 1)
        violations = verify_checksums(capture_of([(0, bytes(frame))]))
        assert len(violations) == 1
        violation = violations[0]
        assert violation.layer == "ipv4"
        assert violation.packet_index == 0
        assert violation.found == stored ^ 1
        assert violation.expected == stored

    def test_corrupt_tcp_detected(self):
        frame = bytearray(tcp_frame(b"x", src="10.0.0.1", dst="10.0.0.2",
                                    sport=1, dport=2))
        ihl = (frame[14] & 0xF) * 4
        off = 14 + ihl + 16
        struct.pack_into("!H", frame, off, struct.unpack_from("!H", frame, off)[0] ^ 0xFF)
        violations = verify_checksums(capture_of([(0, bytes(frame))]))
        assert [v.layer for v in violations] == ["tcp"]

    def test_udp_zero_checksum_not_flagged(self):
        frame = bytearray(udp_frame(b"x", src="10.0.0.1", dst="10.0.0.2",
                                    sport=1, dport=2))
        ihl = (frame[14] & 0xF) * 4
        struct.pack_into("!H", frame, 14 + ihl + 6, 0)  # disable checksum
        assert verify_checksums(capture_of([(0, bytes(frame))])) == []


class TestCollectAddresses:
    def test_ipv4_and_arp_addresses_found(self):
        frames = [
            (0.0, tcp_frame(b"", src="10.0.0.1", dst="10.0.0.2", sport=1, dport=2)),
            (1.0, arp_frame(sender_ip="10.0.0.3", target_ip="10.0.0.4")),
        ]
        assert collect_addresses(capture_of(frames)) == {
            "10.0.0.1", "10.0.0.2", "10.0.0.3", "10.0.0.4"
        }


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31))
def test_rewrite_inverse_property(seed):
    capture = capture_of(random_ipv4_corpus(20, seed=seed))
    amap = AddressMap.from_pairs([
        ("10.0.0.0/16", "203.0.0.0/16"), ("172.16.0.0/12", "100.64.0.0/12"),
    ])
    forward, _ = rewrite_addresses(capture, amap)
    assert verify_checksums(forward) == []
    back, _ = rewrite_addresses(forward, amap.inverse())
    assert write_capture(back) == write_capture(capture)
